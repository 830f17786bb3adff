//! Feature-collection input: LineString roads and Point junctions.

use std::collections::HashSet;

use serde_json::{json, Map, Value};

use super::{NetworkError, RawJunction, RawRoad};
use crate::geometry::{project_aeqd, Point};
use crate::io::{DocumentHeader, SchemaKind};

/// Coordinate frame of a raw document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Longitude/latitude degrees (the feature-collection default).
    LonLat,
    /// Meters in a local planar frame.
    Planar,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedRaw {
    pub roads: Vec<RawRoad>,
    pub junctions: Vec<RawJunction>,
    pub warnings: Vec<String>,
}

const ROAD_PROPS: [&str; 3] = ["id", "lanes", "max_speed"];
const JUNCTION_PROPS: [&str; 3] = ["id", "in_roads", "out_roads"];

fn schema(feature: impl Into<String>, message: impl Into<String>) -> NetworkError {
    NetworkError::Schema {
        feature: feature.into(),
        message: message.into(),
    }
}

/// Parses a raw network document.
///
/// Longitude/latitude input is projected to an azimuthal-equidistant frame
/// centered on the bounding-box center of all coordinates.
pub fn parse_raw(document: &[u8]) -> Result<ParsedRaw, NetworkError> {
    let root: Value = serde_json::from_slice(document).map_err(|e| NetworkError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = root
        .as_object()
        .ok_or_else(|| schema("<document>", "top level must be an object"))?;
    if let Some(header) = root.get("header") {
        let header: DocumentHeader = serde_json::from_value(header.clone())
            .map_err(|e| schema("<header>", e.to_string()))?;
        header
            .check(SchemaKind::RawNetwork)
            .map_err(|e| schema("<header>", e.to_string()))?;
    }
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(schema("<document>", "`type` must be \"FeatureCollection\""));
    }
    let frame = match root.get("frame").and_then(Value::as_str) {
        None | Some("lonlat") => Frame::LonLat,
        Some("planar") => Frame::Planar,
        Some(other) => return Err(schema("<document>", format!("unknown frame `{other}`"))),
    };
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("<document>", "missing `features` array"))?;

    let mut out = ParsedRaw::default();
    if features.is_empty() {
        out.warnings.push("feature collection is empty".to_string());
    }
    let mut road_coords: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut junction_coords: Vec<[f64; 2]> = Vec::new();

    for (index, feature) in features.iter().enumerate() {
        let fallback = format!("#{index}");
        let props = feature
            .get("properties")
            .and_then(Value::as_object)
            .ok_or_else(|| schema(&fallback, "missing `properties` object"))?;
        let id = match props.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(schema(&fallback, "missing required property `id`")),
        };
        let geometry = feature
            .get("geometry")
            .and_then(Value::as_object)
            .ok_or_else(|| schema(&id, "missing `geometry`"))?;
        let coordinates = geometry
            .get("coordinates")
            .ok_or_else(|| schema(&id, "missing geometry coordinates"))?;
        match geometry.get("type").and_then(Value::as_str) {
            Some("LineString") => {
                warn_unknown(&id, props, &ROAD_PROPS, &mut out.warnings);
                let coords = coordinates
                    .as_array()
                    .ok_or_else(|| schema(&id, "LineString coordinates must be an array"))?
                    .iter()
                    .map(|c| position(&id, c))
                    .collect::<Result<Vec<_>, _>>()?;
                let lane_count = props
                    .get("lanes")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| schema(&id, "missing required property `lanes`"))?;
                let max_speed = props
                    .get("max_speed")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| schema(&id, "missing required property `max_speed`"))?;
                if lane_count < 1 || lane_count > u32::MAX as u64 {
                    return Err(schema(&id, "`lanes` must be a positive integer"));
                }
                if !(max_speed > 0.0 && max_speed.is_finite()) {
                    return Err(schema(&id, "`max_speed` must be positive"));
                }
                if coords.len() < 2 {
                    return Err(schema(&id, "polyline needs at least two points"));
                }
                if coords.windows(2).any(|w| w[0] == w[1]) {
                    return Err(schema(&id, "polyline has repeated consecutive points"));
                }
                road_coords.push(coords);
                out.roads.push(RawRoad {
                    id,
                    polyline: Vec::new(),
                    lane_count: lane_count as u32,
                    max_speed,
                });
            }
            Some("Point") => {
                warn_unknown(&id, props, &JUNCTION_PROPS, &mut out.warnings);
                junction_coords.push(position(&id, coordinates)?);
                out.junctions.push(RawJunction {
                    in_roads: road_list(&id, props, "in_roads")?,
                    out_roads: road_list(&id, props, "out_roads")?,
                    id,
                    position: Point::new(0.0, 0.0),
                });
            }
            other => {
                return Err(schema(
                    &id,
                    format!("unsupported geometry type {other:?}"),
                ))
            }
        }
    }

    let project: Box<dyn Fn([f64; 2]) -> Point> = match frame {
        Frame::Planar => Box::new(|c| Point::new(c[0], c[1])),
        Frame::LonLat => {
            let all = road_coords.iter().flatten().chain(junction_coords.iter());
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for c in all {
                for k in 0..2 {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
            let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
            Box::new(move |c| project_aeqd(c[0], c[1], center[0], center[1]))
        }
    };
    for (road, coords) in out.roads.iter_mut().zip(&road_coords) {
        road.polyline = coords.iter().map(|&c| project(c)).collect();
    }
    for (junction, c) in out.junctions.iter_mut().zip(&junction_coords) {
        junction.position = project(*c);
    }

    let mut seen = HashSet::new();
    for id in out.roads.iter().map(|r| &r.id).chain(out.junctions.iter().map(|j| &j.id)) {
        if !seen.insert(id.clone()) {
            return Err(schema(id, "duplicate feature id"));
        }
    }
    let road_ids: HashSet<&str> = out.roads.iter().map(|r| r.id.as_str()).collect();
    for j in &out.junctions {
        for r in j.in_roads.iter().chain(&j.out_roads) {
            if !road_ids.contains(r.as_str()) {
                return Err(schema(&j.id, format!("references missing road `{r}`")));
            }
        }
    }
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(out)
}

fn position(id: &str, value: &Value) -> Result<[f64; 2], NetworkError> {
    let arr = value
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| schema(id, "coordinate must be an array of at least two numbers"))?;
    match (arr[0].as_f64(), arr[1].as_f64()) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok([x, y]),
        _ => Err(schema(id, "coordinate components must be finite numbers")),
    }
}

fn road_list(id: &str, props: &Map<String, Value>, key: &str) -> Result<Vec<String>, NetworkError> {
    props
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| schema(id, format!("missing required property `{key}`")))?
        .iter()
        .map(|v| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(schema(id, format!("`{key}` entries must be road ids"))),
        })
        .collect()
}

fn warn_unknown(id: &str, props: &Map<String, Value>, known: &[&str], warnings: &mut Vec<String>) {
    for key in props.keys() {
        if !known.contains(&key.as_str()) {
            warnings.push(format!("feature `{id}`: ignoring unknown property `{key}`"));
        }
    }
}

/// Serializes raw roads and junctions as a planar feature collection.
pub fn write_raw(roads: &[RawRoad], junctions: &[RawJunction]) -> String {
    let mut features: Vec<Value> = roads
        .iter()
        .map(|r| {
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": r.polyline.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                },
                "properties": {"id": r.id, "lanes": r.lane_count, "max_speed": r.max_speed},
            })
        })
        .collect();
    features.extend(junctions.iter().map(|j| {
        json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [j.position.x, j.position.y]},
            "properties": {"id": j.id, "in_roads": j.in_roads, "out_roads": j.out_roads},
        })
    }));
    let doc = json!({
        "header": DocumentHeader::new(SchemaKind::RawNetwork),
        "type": "FeatureCollection",
        "frame": "planar",
        "features": features,
    });
    serde_json::to_string_pretty(&doc).expect("raw network serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(features: Value) -> Vec<u8> {
        serde_json::to_vec(&json!({"type": "FeatureCollection", "frame": "planar", "features": features}))
            .unwrap()
    }

    fn road(id: &str, coords: Value, lanes: u64) -> Value {
        json!({"type": "Feature", "geometry": {"type": "LineString", "coordinates": coords},
               "properties": {"id": id, "lanes": lanes, "max_speed": 13.9}})
    }

    #[test]
    fn two_lane_road_maps_directly() {
        let parsed = parse_raw(&doc(json!([road("a", json!([[0, 0], [100, 0]]), 2)]))).unwrap();
        assert_eq!(parsed.roads.len(), 1);
        assert_eq!(parsed.roads[0].lane_count, 2);
        assert_eq!(parsed.roads[0].polyline, vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]);
        assert!(parsed.junctions.is_empty());
    }

    #[test]
    fn empty_collection_warns() {
        let parsed = parse_raw(&doc(json!([]))).unwrap();
        assert!(parsed.roads.is_empty() && parsed.junctions.is_empty());
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn dangling_junction_reference_is_schema_error() {
        let j = json!({"type": "Feature", "geometry": {"type": "Point", "coordinates": [0, 0]},
                       "properties": {"id": "j1", "in_roads": ["nope"], "out_roads": []}});
        let err = parse_raw(&doc(json!([j]))).unwrap_err();
        match err {
            NetworkError::Schema { feature, .. } => assert_eq!(feature, "j1"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_property_names_feature() {
        let f = json!({"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[0, 0], [1, 0]]},
                       "properties": {"id": "r7", "lanes": 1}});
        let err = parse_raw(&doc(json!([f]))).unwrap_err().to_string();
        assert!(err.contains("r7") && err.contains("max_speed"), "{err}");
    }

    #[test]
    fn malformed_document_reports_line() {
        let err = parse_raw(b"{\n  \"type\": \"FeatureCollection\",\n  \"features\": [,]\n}").unwrap_err();
        match err {
            NetworkError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_properties_warn() {
        let mut f = road("a", json!([[0, 0], [10, 0]]), 1);
        f["properties"]["highway"] = json!("primary");
        let parsed = parse_raw(&doc(json!([f]))).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("highway"));
    }

    #[test]
    fn lonlat_is_projected_to_meters() {
        let body = json!({"type": "FeatureCollection", "features": [
            road("a", json!([[0.0, 0.0], [0.001, 0.0]]), 1)
        ]});
        let parsed = parse_raw(&serde_json::to_vec(&body).unwrap()).unwrap();
        let len = crate::geometry::polyline_length(&parsed.roads[0].polyline);
        assert!((len - 111.19).abs() < 0.1, "{len}");
    }

    #[test]
    fn write_then_parse_is_identity() {
        let roads = vec![RawRoad {
            id: "r".into(),
            polyline: vec![Point::new(0.1, 0.2), Point::new(100.0 / 3.0, 7.0)],
            lane_count: 3,
            max_speed: 16.67,
        }];
        let junctions = vec![RawJunction {
            id: "j".into(),
            in_roads: vec!["r".into()],
            out_roads: vec![],
            position: Point::new(100.0 / 3.0, 7.0),
        }];
        let parsed = parse_raw(write_raw(&roads, &junctions).as_bytes()).unwrap();
        assert_eq!(parsed.roads, roads);
        assert_eq!(parsed.junctions, junctions);
    }
}
