//! Lane-level road networks.
//!
//! Raw road descriptions (one polyline per road plus junction membership) are
//! compiled into a lane graph: every road expands into parallel lanes, and each
//! junction receives connector lanes joining incoming to outgoing lanes, plus a
//! default fixed-time signal program.

mod build;
mod grid;
mod raw;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

pub use build::{build_network, BuildOptions, DEFAULT_CLEARANCE_TIME, DEFAULT_GREEN_TIME};
pub use grid::generate_grid;
pub use raw::{parse_raw, write_raw, Frame, ParsedRaw};
pub use validate::{validate_network, Issue, IssueKind};

pub type LaneId = u32;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in feature `{feature}`: {message}")]
    Schema { feature: String, message: String },
    #[error("build error for `{entity}`: {message}")]
    Build { entity: String, message: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// First-level road description.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRoad {
    pub id: String,
    pub polyline: Vec<Point>,
    pub lane_count: u32,
    pub max_speed: f64,
}

/// First-level junction description.
#[derive(Debug, Clone, PartialEq)]
pub struct RawJunction {
    pub id: String,
    pub in_roads: Vec<String>,
    pub out_roads: Vec<String>,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneKind {
    Road,
    Connector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    #[default]
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Straight,
    Right,
    Left,
    UTurn,
}

impl Turn {
    /// Classifies a clockwise-positive turn angle in degrees.
    pub fn classify(angle_deg: f64) -> Turn {
        if angle_deg.abs() < 30.0 {
            Turn::Straight
        } else if (30.0..150.0).contains(&angle_deg) {
            Turn::Right
        } else if angle_deg > -150.0 && angle_deg <= -30.0 {
            Turn::Left
        } else {
            Turn::UTurn
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    pub id: LaneId,
    /// Road id for road lanes, junction id for connectors.
    pub parent: String,
    pub kind: LaneKind,
    pub centerline: Vec<Point>,
    pub length: f64,
    pub max_speed: f64,
    pub predecessors: Vec<LaneId>,
    pub successors: Vec<LaneId>,
    pub restriction: Restriction,
    /// Lateral neighbor on the left (road lanes only).
    pub left: Option<LaneId>,
    /// Lateral neighbor on the right (road lanes only).
    pub right: Option<LaneId>,
    /// Movement served by a connector.
    pub turn: Option<Turn>,
}

impl Lane {
    pub fn is_open(&self) -> bool {
        self.restriction == Restriction::Open
    }

    pub fn is_connector(&self) -> bool {
        self.kind == LaneKind::Connector
    }

    /// Free-flow traversal time used as the routing weight.
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.max_speed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Road {
    /// Lane ids ordered leftmost first.
    pub lanes: Vec<LaneId>,
    pub max_speed: f64,
    pub from_junction: Option<String>,
    pub to_junction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    /// Seconds, including the trailing all-red clearance.
    pub duration: f64,
    /// Connector lanes that are green during this phase, ascending.
    pub green: Vec<LaneId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalProgram {
    pub junction: String,
    pub phases: Vec<Phase>,
    pub offset: f64,
    /// All-red seconds at the end of every phase.
    pub clearance: f64,
}

impl SignalProgram {
    pub fn cycle_length(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Junction {
    pub position: Point,
    pub in_roads: Vec<String>,
    pub out_roads: Vec<String>,
    pub connectors: Vec<LaneId>,
    /// `None` for unsignalized junctions, whose connectors are always green.
    pub signal: Option<SignalProgram>,
}

/// Compiled lane-level network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadNetwork {
    /// Indexed by lane id.
    pub lanes: Vec<Lane>,
    pub roads: BTreeMap<String, Road>,
    pub junctions: BTreeMap<String, Junction>,
    pub zone_hint: Option<BTreeMap<LaneId, u32>>,
}

impl RoadNetwork {
    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.lanes.get(id as usize)
    }

    pub fn road_lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.iter().filter(|l| l.kind == LaneKind::Road)
    }

    /// Road that owns a road lane.
    pub fn road_of(&self, lane: LaneId) -> Option<&Road> {
        let l = self.lane(lane)?;
        match l.kind {
            LaneKind::Road => self.roads.get(&l.parent),
            LaneKind::Connector => None,
        }
    }

    /// Whether lane `to` can be reached from `from` by lane changes alone,
    /// crossing only open lanes (the start lane itself may be closed).
    pub fn laterally_reachable(&self, from: LaneId, to: LaneId) -> bool {
        if from == to {
            return true;
        }
        for step in [|l: &Lane| l.left, |l: &Lane| l.right] {
            let mut cur = from;
            while let Some(next) = self.lane(cur).and_then(step) {
                if !self.lanes[next as usize].is_open() {
                    break;
                }
                if next == to {
                    return true;
                }
                cur = next;
            }
        }
        false
    }

    /// Index of a road lane within its road (0 = leftmost).
    pub fn lane_position(&self, lane: LaneId) -> Option<usize> {
        self.road_of(lane)?.lanes.iter().position(|&l| l == lane)
    }
}
