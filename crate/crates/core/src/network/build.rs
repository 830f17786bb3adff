//! Compiles raw roads and junctions into a lane-level [`RoadNetwork`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{
    Junction, Lane, LaneId, LaneKind, NetworkError, Phase, RawJunction, RawRoad, Restriction,
    Road, RoadNetwork, SignalProgram, Turn,
};
use crate::geometry::{
    end_direction, offset_polyline, polyline_length, start_direction, trim_polyline,
    turn_angle_deg, Point,
};

pub const DEFAULT_GREEN_TIME: f64 = 30.0;
pub const DEFAULT_CLEARANCE_TIME: f64 = 3.0;

/// Junctions with at least this many incoming roads get a signal program.
const MIN_SIGNALIZED_APPROACHES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub lane_width: f64,
    pub snap_radius: f64,
    /// Detach junction-referenced endpoints that fail to snap instead of failing.
    pub allow_boundaries: bool,
    /// Road polylines are cut back by this many meters at junction ends, which
    /// leaves room for connector lanes.
    pub junction_setback: f64,
    /// Create U-turn connectors even where other movements exist.
    pub allow_u_turns: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            snap_radius: 5.0,
            allow_boundaries: false,
            junction_setback: 10.0,
            allow_u_turns: false,
        }
    }
}

fn build_err(entity: &str, message: impl Into<String>) -> NetworkError {
    NetworkError::Build {
        entity: entity.to_string(),
        message: message.into(),
    }
}

/// Compiles raw roads and junctions into a lane-level network.
///
/// Lane ids are assigned in input order: all road lanes first (leftmost lane
/// of each road first), then connectors junction by junction.
pub fn build_network(
    roads: &[RawRoad],
    junctions: &[RawJunction],
    options: &BuildOptions,
) -> Result<RoadNetwork, NetworkError> {
    let road_index: HashMap<&str, usize> =
        roads.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    if road_index.len() != roads.len() {
        return Err(NetworkError::Precondition("duplicate road ids".into()));
    }
    for r in roads {
        if r.polyline.len() < 2 || r.lane_count == 0 || !(r.max_speed > 0.0) {
            return Err(build_err(&r.id, "invalid raw road"));
        }
    }

    // Attach road ends to junctions.
    let mut start_at: Vec<Option<usize>> = vec![None; roads.len()];
    let mut end_at: Vec<Option<usize>> = vec![None; roads.len()];
    for (ji, j) in junctions.iter().enumerate() {
        for (list, is_in) in [(&j.in_roads, true), (&j.out_roads, false)] {
            for rid in list {
                let ri = *road_index
                    .get(rid.as_str())
                    .ok_or_else(|| build_err(&j.id, format!("references missing road `{rid}`")))?;
                let road = &roads[ri];
                let endpoint = if is_in {
                    road.polyline[road.polyline.len() - 1]
                } else {
                    road.polyline[0]
                };
                if endpoint.distance(j.position) > options.snap_radius {
                    if options.allow_boundaries {
                        log::warn!("road `{rid}` does not snap to junction `{}`; treated as boundary", j.id);
                        continue;
                    }
                    return Err(build_err(
                        rid,
                        format!("endpoint is farther than {} m from junction `{}`", options.snap_radius, j.id),
                    ));
                }
                let slot = if is_in { &mut end_at[ri] } else { &mut start_at[ri] };
                if slot.is_some() {
                    return Err(build_err(rid, "endpoint attached to more than one junction"));
                }
                *slot = Some(ji);
            }
        }
    }

    // Road lanes.
    let mut lanes: Vec<Lane> = Vec::new();
    let mut road_map = BTreeMap::new();
    let mut road_lanes: Vec<Vec<LaneId>> = Vec::with_capacity(roads.len());
    for (ri, r) in roads.iter().enumerate() {
        let total = polyline_length(&r.polyline);
        let cut = |attached: bool| if attached { options.junction_setback.min(total / 3.0) } else { 0.0 };
        let center = trim_polyline(&r.polyline, cut(start_at[ri].is_some()), cut(end_at[ri].is_some()));
        let n = r.lane_count as usize;
        let first = lanes.len() as LaneId;
        let ids: Vec<LaneId> = (0..n as LaneId).map(|k| first + k).collect();
        for k in 0..n {
            let offset = (k as f64 + 0.5 - n as f64 / 2.0) * options.lane_width;
            let centerline = offset_polyline(&center, offset);
            let length = polyline_length(&centerline);
            if !(length > 0.0) {
                return Err(build_err(&r.id, "degenerate lane geometry"));
            }
            lanes.push(Lane {
                id: ids[k],
                parent: r.id.clone(),
                kind: LaneKind::Road,
                centerline,
                length,
                max_speed: r.max_speed,
                predecessors: Vec::new(),
                successors: Vec::new(),
                restriction: Restriction::Open,
                left: (k > 0).then(|| ids[k - 1]),
                right: (k + 1 < n).then(|| ids[k + 1]),
                turn: None,
            });
        }
        road_map.insert(
            r.id.clone(),
            Road {
                lanes: ids.clone(),
                max_speed: r.max_speed,
                from_junction: start_at[ri].map(|j| junctions[j].id.clone()),
                to_junction: end_at[ri].map(|j| junctions[j].id.clone()),
            },
        );
        road_lanes.push(ids);
    }

    // Connectors and signals.
    let mut junction_map = BTreeMap::new();
    for (ji, j) in junctions.iter().enumerate() {
        let incoming: Vec<usize> = j
            .in_roads
            .iter()
            .map(|id| road_index[id.as_str()])
            .filter(|&ri| end_at[ri] == Some(ji))
            .collect();
        let outgoing: Vec<usize> = j
            .out_roads
            .iter()
            .map(|id| road_index[id.as_str()])
            .filter(|&ri| start_at[ri] == Some(ji))
            .collect();

        let mut pairs: BTreeSet<(LaneId, LaneId)> = BTreeSet::new();
        let mut movements: Vec<(LaneId, LaneId, Turn)> = Vec::new();
        for &ri in &incoming {
            let in_lanes = &road_lanes[ri];
            let in_dir = end_direction(&lanes[in_lanes[0] as usize].centerline);
            let targets: Vec<(usize, Turn)> = outgoing
                .iter()
                .map(|&ro| {
                    let out_dir = start_direction(&lanes[road_lanes[ro][0] as usize].centerline);
                    (ro, Turn::classify(turn_angle_deg(in_dir, out_dir)))
                })
                .collect();
            let mut add = |i: usize, ro: usize, out_k: usize, turn: Turn| {
                let pair = (in_lanes[i], road_lanes[ro][out_k]);
                if pairs.insert(pair) {
                    movements.push((pair.0, pair.1, turn));
                }
            };
            let n = in_lanes.len();
            let aligned = |i: usize, ro: usize| i.min(road_lanes[ro].len() - 1);
            for &(ro, turn) in &targets {
                match turn {
                    Turn::Straight => (0..n).for_each(|i| add(i, ro, aligned(i, ro), turn)),
                    Turn::Right => add(n - 1, ro, road_lanes[ro].len() - 1, turn),
                    Turn::Left => add(0, ro, 0, turn),
                    Turn::UTurn if options.allow_u_turns => add(0, ro, 0, turn),
                    Turn::UTurn => {}
                }
            }
            // Lanes left without any movement take every non-U-turn target by
            // index alignment; a dead end falls back to U-turns.
            let uncovered = |pairs: &BTreeSet<(LaneId, LaneId)>, i: usize| {
                !pairs.iter().any(|&(from, _)| from == in_lanes[i])
            };
            for allow_u in [false, true] {
                for i in 0..n {
                    if !uncovered(&pairs, i) {
                        continue;
                    }
                    for &(ro, turn) in &targets {
                        if (turn == Turn::UTurn) == allow_u {
                            let pair = (in_lanes[i], road_lanes[ro][aligned(i, ro)]);
                            if pairs.insert(pair) {
                                movements.push((pair.0, pair.1, turn));
                            }
                        }
                    }
                }
            }
        }
        if movements.is_empty() {
            return Err(build_err(&j.id, "junction has no feasible connector"));
        }

        let mut connectors = Vec::with_capacity(movements.len());
        let mut turn_of: HashMap<LaneId, (usize, Turn)> = HashMap::new();
        for (from, to, turn) in movements {
            let id = lanes.len() as LaneId;
            let a = *lanes[from as usize].centerline.last().unwrap();
            let b = lanes[to as usize].centerline[0];
            let length = a.distance(b);
            if length < 1e-6 {
                return Err(build_err(&j.id, format!("degenerate connector between lanes {from} and {to}")));
            }
            let max_speed = lanes[from as usize].max_speed.min(lanes[to as usize].max_speed);
            lanes[from as usize].successors.push(id);
            lanes[to as usize].predecessors.push(id);
            lanes.push(Lane {
                id,
                parent: j.id.clone(),
                kind: LaneKind::Connector,
                centerline: vec![a, b],
                length,
                max_speed,
                predecessors: vec![from],
                successors: vec![to],
                restriction: Restriction::Open,
                left: None,
                right: None,
                turn: Some(turn),
            });
            let in_road = incoming
                .iter()
                .position(|&ri| road_lanes[ri].contains(&from))
                .expect("connector starts on an incoming road");
            turn_of.insert(id, (in_road, turn));
            connectors.push(id);
        }

        let signal = (incoming.len() >= MIN_SIGNALIZED_APPROACHES).then(|| {
            let approach_dirs: Vec<Point> = incoming
                .iter()
                .map(|&ri| end_direction(&lanes[road_lanes[ri][0] as usize].centerline))
                .collect();
            default_program(&j.id, &approach_dirs, &connectors, &turn_of)
        });

        junction_map.insert(
            j.id.clone(),
            Junction {
                position: j.position,
                in_roads: incoming.iter().map(|&ri| roads[ri].id.clone()).collect(),
                out_roads: outgoing.iter().map(|&ri| roads[ri].id.clone()).collect(),
                connectors,
                signal,
            },
        );
    }

    Ok(RoadNetwork {
        lanes,
        roads: road_map,
        junctions: junction_map,
        zone_hint: None,
    })
}

/// Groups opposing approaches and emits one phase per group serving every
/// movement of its approaches, so no lane is split across phases.
fn default_program(
    junction: &str,
    approach_dirs: &[Point],
    connectors: &[LaneId],
    turn_of: &HashMap<LaneId, (usize, Turn)>,
) -> SignalProgram {
    let n = approach_dirs.len();
    let mut partner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if partner[i].is_some() {
            continue;
        }
        let best = (i + 1..n)
            .filter(|&k| partner[k].is_none())
            .map(|k| (k, turn_angle_deg(approach_dirs[i], approach_dirs[k]).abs()))
            .filter(|&(_, a)| a >= 150.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        if let Some((k, _)) = best {
            partner[i] = Some(k);
            partner[k] = Some(i);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match partner[i] {
            Some(k) if k < i => {}
            Some(k) => groups.push(vec![i, k]),
            None => groups.push(vec![i]),
        }
    }

    let duration = DEFAULT_GREEN_TIME + DEFAULT_CLEARANCE_TIME;
    let mut phases = Vec::new();
    for group in groups {
        let green: Vec<LaneId> = connectors
            .iter()
            .copied()
            .filter(|c| group.contains(&turn_of[c].0))
            .collect();
        if !green.is_empty() {
            phases.push(Phase { duration, green });
        }
    }
    SignalProgram {
        junction: junction.to_string(),
        phases,
        offset: 0.0,
        clearance: DEFAULT_CLEARANCE_TIME,
    }
}
