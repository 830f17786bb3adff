//! On-disk schemas.
//!
//! Every document is a JSON object `{"header": {...}, "data": ...}`; the
//! vehicle record stream is line-delimited JSON with the header on its first
//! line. Headers carry the schema name and an exact version; loads reject
//! anything else before looking at the payload.

mod records;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{ODMatrix, Trip, Zone};
use crate::metrics::Report;
use crate::network::{validate_network, RoadNetwork};

pub use records::{read_records, RecordLoad, RecordWriter, RoadSpeedFile, RoadWindow, VehicleRecord};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    RawNetwork,
    Network,
    Zones,
    OdMatrix,
    Trips,
    VehicleRecords,
    RoadSpeeds,
    Report,
    RunManifest,
    BenchTable,
}

impl SchemaKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::RawNetwork => "raw_network",
            SchemaKind::Network => "network",
            SchemaKind::Zones => "zones",
            SchemaKind::OdMatrix => "od_matrix",
            SchemaKind::Trips => "trips",
            SchemaKind::VehicleRecords => "vehicle_records",
            SchemaKind::RoadSpeeds => "road_speeds",
            SchemaKind::Report => "report",
            SchemaKind::RunManifest => "run_manifest",
            SchemaKind::BenchTable => "bench_table",
        }
    }

    pub fn version(self) -> u32 {
        SCHEMA_VERSION
    }

    pub const ALL: [SchemaKind; 10] = [
        SchemaKind::RawNetwork,
        SchemaKind::Network,
        SchemaKind::Zones,
        SchemaKind::OdMatrix,
        SchemaKind::Trips,
        SchemaKind::VehicleRecords,
        SchemaKind::RoadSpeeds,
        SchemaKind::Report,
        SchemaKind::RunManifest,
        SchemaKind::BenchTable,
    ];
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("expected a `{expected}` document, found `{found}`")]
    SchemaName { expected: String, found: String },
    #[error("`{schema}` version {found} is not supported (expected {expected})")]
    Version {
        schema: String,
        expected: u32,
        found: u32,
    },
    #[error("schema violation in {entity}: {message}")]
    Schema { entity: String, message: String },
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn violation(entity: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema {
        entity: entity.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentHeader {
    pub schema_name: String,
    pub schema_version: u32,
    pub producer: String,
}

impl DocumentHeader {
    pub fn new(kind: SchemaKind) -> Self {
        Self {
            schema_name: kind.name().to_string(),
            schema_version: kind.version(),
            producer: producer(),
        }
    }

    pub fn check(&self, kind: SchemaKind) -> Result<(), IoError> {
        if self.schema_name != kind.name() {
            return Err(IoError::SchemaName {
                expected: kind.name().to_string(),
                found: self.schema_name.clone(),
            });
        }
        if self.schema_version != kind.version() {
            return Err(IoError::Version {
                schema: kind.name().to_string(),
                expected: kind.version(),
                found: self.schema_version,
            });
        }
        Ok(())
    }
}

pub fn producer() -> String {
    format!("trafficsim {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Serialize)]
struct DocumentOut<'a, T> {
    header: DocumentHeader,
    data: &'a T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn<T> {
    #[allow(dead_code)]
    header: DocumentHeader,
    data: T,
}

#[derive(Deserialize)]
struct HeaderOnly {
    header: DocumentHeader,
}

/// Serializes a payload with its header. Output always ends with a newline.
pub fn to_document<T: Serialize>(kind: SchemaKind, data: &T) -> String {
    let doc = DocumentOut {
        header: DocumentHeader::new(kind),
        data,
    };
    serde_json::to_string_pretty(&doc).expect("documents serialize") + "\n"
}

/// Parses a document, checking the header before the payload.
pub fn from_document<T: DeserializeOwned>(kind: SchemaKind, text: &str) -> Result<T, IoError> {
    let head: HeaderOnly = serde_json::from_str(text)?;
    head.header.check(kind)?;
    let doc: DocumentIn<T> = serde_json::from_str(text)?;
    Ok(doc.data)
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

// -- compiled network ------------------------------------------------------

pub fn network_to_string(net: &RoadNetwork) -> String {
    to_document(SchemaKind::Network, net)
}

pub fn network_from_str(text: &str) -> Result<RoadNetwork, IoError> {
    let net: RoadNetwork = from_document(SchemaKind::Network, text)?;
    if let Some(issue) = validate_network(&net).into_iter().next() {
        return Err(violation(issue.entity, issue.detail));
    }
    Ok(net)
}

pub fn save_network(path: &Path, net: &RoadNetwork) -> Result<(), IoError> {
    write_text(path, &network_to_string(net))
}

pub fn load_network(path: &Path) -> Result<RoadNetwork, IoError> {
    network_from_str(&read_text(path)?)
}

// -- zones -----------------------------------------------------------------

pub fn zones_to_string(zones: &[Zone]) -> String {
    to_document(SchemaKind::Zones, &zones)
}

pub fn zones_from_str(text: &str) -> Result<Vec<Zone>, IoError> {
    let zones: Vec<Zone> = from_document(SchemaKind::Zones, text)?;
    check_zones(&zones)?;
    Ok(zones)
}

fn check_zones(zones: &[Zone]) -> Result<(), IoError> {
    let mut ids = std::collections::HashSet::new();
    for z in zones {
        let entity = format!("zone {}", z.id);
        if !ids.insert(z.id) {
            return Err(violation(entity, "duplicate zone id"));
        }
        if !(z.mass >= 0.0) || !z.mass.is_finite() {
            return Err(violation(entity, "mass must be a finite non-negative number"));
        }
    }
    Ok(())
}

pub fn save_zones(path: &Path, zones: &[Zone]) -> Result<(), IoError> {
    write_text(path, &zones_to_string(zones))
}

pub fn load_zones(path: &Path) -> Result<Vec<Zone>, IoError> {
    zones_from_str(&read_text(path)?)
}

// -- OD matrix -------------------------------------------------------------

pub fn od_to_string(od: &ODMatrix) -> String {
    to_document(SchemaKind::OdMatrix, od)
}

pub fn od_from_str(text: &str) -> Result<ODMatrix, IoError> {
    let od: ODMatrix = from_document(SchemaKind::OdMatrix, text)?;
    check_zones(&od.zones)?;
    let n = od.zones.len();
    if od.counts.len() != n * n {
        return Err(violation(
            "counts",
            format!("expected {} entries for {n} zones, found {}", n * n, od.counts.len()),
        ));
    }
    if let Some(k) = od.counts.iter().position(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(violation(format!("counts[{}][{}]", k / n, k % n), "must be finite and non-negative"));
    }
    Ok(od)
}

pub fn save_od(path: &Path, od: &ODMatrix) -> Result<(), IoError> {
    write_text(path, &od_to_string(od))
}

pub fn load_od(path: &Path) -> Result<ODMatrix, IoError> {
    od_from_str(&read_text(path)?)
}

// -- trips -----------------------------------------------------------------

pub fn trips_to_string(trips: &[Trip]) -> String {
    to_document(SchemaKind::Trips, &trips)
}

pub fn trips_from_str(text: &str) -> Result<Vec<Trip>, IoError> {
    let trips: Vec<Trip> = from_document(SchemaKind::Trips, text)?;
    let mut ids = std::collections::HashSet::new();
    for t in &trips {
        let entity = format!("trip {}", t.id);
        if !ids.insert(t.id) {
            return Err(violation(entity, "duplicate trip id"));
        }
        if !(t.departure >= 0.0) || !(t.origin_s >= 0.0) {
            return Err(violation(entity, "departure and origin_s must be non-negative"));
        }
    }
    Ok(trips)
}

pub fn save_trips(path: &Path, trips: &[Trip]) -> Result<(), IoError> {
    write_text(path, &trips_to_string(trips))
}

pub fn load_trips(path: &Path) -> Result<Vec<Trip>, IoError> {
    trips_from_str(&read_text(path)?)
}

/// Checks trips against the lanes of a network.
pub fn check_trips_against(trips: &[Trip], net: &RoadNetwork) -> Result<(), IoError> {
    for t in trips {
        let entity = format!("trip {}", t.id);
        let origin = net
            .lane(t.origin_lane)
            .filter(|l| !l.is_connector())
            .ok_or_else(|| violation(&entity, format!("origin lane {} is not a road lane", t.origin_lane)))?;
        if t.origin_s > origin.length {
            return Err(violation(&entity, "origin_s exceeds the origin lane length"));
        }
        if net.lane(t.dest_lane).filter(|l| !l.is_connector()).is_none() {
            return Err(violation(&entity, format!("destination lane {} is not a road lane", t.dest_lane)));
        }
    }
    Ok(())
}

// -- road speeds -----------------------------------------------------------

pub fn road_speeds_to_string(file: &RoadSpeedFile) -> String {
    to_document(SchemaKind::RoadSpeeds, file)
}

pub fn road_speeds_from_str(text: &str) -> Result<RoadSpeedFile, IoError> {
    from_document(SchemaKind::RoadSpeeds, text)
}

pub fn load_road_speeds(path: &Path) -> Result<RoadSpeedFile, IoError> {
    road_speeds_from_str(&read_text(path)?)
}

// -- report ----------------------------------------------------------------

pub fn report_to_string(report: &Report) -> String {
    to_document(SchemaKind::Report, report)
}

pub fn report_from_str(text: &str) -> Result<Report, IoError> {
    from_document(SchemaKind::Report, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_grid;

    #[test]
    fn network_round_trips() {
        let net = generate_grid(4, 4, 200.0, 2, 16.67).unwrap();
        let back = network_from_str(&network_to_string(&net)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn future_version_is_rejected() {
        let net = generate_grid(2, 2, 200.0, 1, 16.67).unwrap();
        let text = network_to_string(&net).replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
        match network_from_str(&text) {
            Err(IoError::Version { found: 2, expected: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = trips_to_string(&[]);
        assert!(matches!(network_from_str(&text), Err(IoError::SchemaName { .. })));
    }

    #[test]
    fn invalid_network_names_entity() {
        let mut net = generate_grid(2, 2, 200.0, 1, 16.67).unwrap();
        net.lanes[3].successors.push(9999);
        match network_from_str(&network_to_string(&net)) {
            Err(IoError::Schema { entity, .. }) => assert_eq!(entity, "lane 3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn od_shape_is_checked() {
        let od = ODMatrix {
            zones: vec![],
            counts: vec![1.0],
        };
        assert!(matches!(od_from_str(&od_to_string(&od)), Err(IoError::Schema { .. })));
    }
}
