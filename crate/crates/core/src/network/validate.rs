use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{LaneId, LaneKind, RoadNetwork};
use crate::geometry::polyline_length;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    IdMismatch,
    DanglingReference,
    AsymmetricTopology,
    AsymmetricAdjacency,
    LengthMismatch,
    InvalidValue,
    ConnectorShape,
    SignalCoverage,
}

/// One violated invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub entity: String,
    pub kind: IssueKind,
    pub detail: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:?}): {}", self.entity, self.kind, self.detail)
    }
}

/// Checks every lane, road, junction and signal invariant. An empty result
/// means the network is well-formed.
pub fn validate_network(net: &RoadNetwork) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut push = |entity: String, kind: IssueKind, detail: String| {
        issues.push(Issue { entity, kind, detail })
    };
    let exists = |id: LaneId| (id as usize) < net.lanes.len();

    for (i, lane) in net.lanes.iter().enumerate() {
        let name = format!("lane {}", lane.id);
        if lane.id as usize != i {
            push(name.clone(), IssueKind::IdMismatch, format!("stored at index {i}"));
        }
        if lane.centerline.len() < 2 {
            push(name.clone(), IssueKind::InvalidValue, "centerline needs two points".into());
        } else if (polyline_length(&lane.centerline) - lane.length).abs() > 1e-6 {
            push(name.clone(), IssueKind::LengthMismatch, "length differs from centerline".into());
        }
        if !(lane.length > 0.0) || !(lane.max_speed > 0.0) {
            push(name.clone(), IssueKind::InvalidValue, "length and max_speed must be positive".into());
        }
        for &s in &lane.successors {
            if !exists(s) {
                push(name.clone(), IssueKind::DanglingReference, format!("successor {s} missing"));
            } else if !net.lanes[s as usize].predecessors.contains(&lane.id) {
                push(name.clone(), IssueKind::AsymmetricTopology, format!("successor {s} does not list it"));
            }
        }
        for &p in &lane.predecessors {
            if !exists(p) {
                push(name.clone(), IssueKind::DanglingReference, format!("predecessor {p} missing"));
            } else if !net.lanes[p as usize].successors.contains(&lane.id) {
                push(name.clone(), IssueKind::AsymmetricTopology, format!("predecessor {p} does not list it"));
            }
        }
        for (side, neighbor) in [("left", lane.left), ("right", lane.right)] {
            let Some(n) = neighbor else { continue };
            if !exists(n) {
                push(name.clone(), IssueKind::DanglingReference, format!("{side} neighbor {n} missing"));
                continue;
            }
            let other = &net.lanes[n as usize];
            let back = if side == "left" { other.right } else { other.left };
            if back != Some(lane.id) || other.parent != lane.parent || other.kind != LaneKind::Road {
                push(name.clone(), IssueKind::AsymmetricAdjacency, format!("{side} neighbor {n} is not reciprocal"));
            }
        }
        match lane.kind {
            LaneKind::Connector => {
                let road_end = |ids: &[LaneId]| {
                    ids.len() == 1 && exists(ids[0]) && net.lanes[ids[0] as usize].kind == LaneKind::Road
                };
                if !road_end(&lane.predecessors) || !road_end(&lane.successors) {
                    push(name.clone(), IssueKind::ConnectorShape, "needs one road predecessor and one road successor".into());
                }
                if lane.left.is_some() || lane.right.is_some() {
                    push(name.clone(), IssueKind::AsymmetricAdjacency, "connectors have no lateral neighbors".into());
                }
                if !net.junctions.contains_key(&lane.parent) {
                    push(name, IssueKind::DanglingReference, format!("junction `{}` missing", lane.parent));
                }
            }
            LaneKind::Road => {
                if !net.roads.get(&lane.parent).is_some_and(|r| r.lanes.contains(&lane.id)) {
                    push(name, IssueKind::DanglingReference, format!("road `{}` does not own it", lane.parent));
                }
            }
        }
    }

    for (id, road) in &net.roads {
        let name = format!("road {id}");
        if road.lanes.is_empty() {
            push(name.clone(), IssueKind::InvalidValue, "road has no lanes".into());
        }
        for &l in &road.lanes {
            if !exists(l) || net.lanes[l as usize].parent != *id || net.lanes[l as usize].kind != LaneKind::Road {
                push(name.clone(), IssueKind::DanglingReference, format!("lane {l} is not a lane of this road"));
            }
        }
        for j in road.from_junction.iter().chain(&road.to_junction) {
            if !net.junctions.contains_key(j) {
                push(name.clone(), IssueKind::DanglingReference, format!("junction `{j}` missing"));
            }
        }
    }

    for (id, junction) in &net.junctions {
        let name = format!("junction {id}");
        for r in junction.in_roads.iter().chain(&junction.out_roads) {
            if !net.roads.contains_key(r) {
                push(name.clone(), IssueKind::DanglingReference, format!("road `{r}` missing"));
            }
        }
        for &c in &junction.connectors {
            if !exists(c) || net.lanes[c as usize].kind != LaneKind::Connector || net.lanes[c as usize].parent != *id {
                push(name.clone(), IssueKind::DanglingReference, format!("connector {c} does not belong here"));
            }
        }
        let Some(program) = &junction.signal else { continue };
        if program.phases.is_empty() {
            push(name.clone(), IssueKind::SignalCoverage, "signal program has no phases".into());
        }
        let own: HashSet<LaneId> = junction.connectors.iter().copied().collect();
        let mut covered = HashSet::new();
        for (k, phase) in program.phases.iter().enumerate() {
            if !(phase.duration > program.clearance) || !(program.clearance >= 0.0) {
                push(name.clone(), IssueKind::InvalidValue, format!("phase {k} is not longer than its clearance"));
            }
            for c in &phase.green {
                if !own.contains(c) {
                    push(name.clone(), IssueKind::DanglingReference, format!("phase {k} greens foreign lane {c}"));
                }
                covered.insert(*c);
            }
        }
        for c in &junction.connectors {
            if !covered.contains(c) {
                push(name.clone(), IssueKind::SignalCoverage, format!("connector {c} is never green"));
            }
        }
    }
    issues
}
