//! Travel demand: zone-level OD matrices from rule-based models, and their
//! conversion into individual timed trips.

mod models;
mod trips;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::network::LaneId;

pub use models::{gravity_od, radiation_od};
pub use trips::{od_to_trips, uniform_random_trips, ConversionOptions};

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("need at least two zones with positive mass")]
    TooFewMassiveZones,
    #[error("zones {0} and {1} have coincident centroids")]
    DegenerateDistance(u32, u32),
    #[error("zone {0} has no lanes")]
    EmptyZone(u32),
    #[error("zone {zone} lists lane {lane}, which is not a road lane of the network")]
    UnknownLane { zone: u32, lane: LaneId },
    #[error("invalid departure profile: {0}")]
    InvalidProfile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub id: u32,
    pub centroid: Point,
    /// Population or attraction weight.
    pub mass: f64,
    /// Road lanes inside the zone.
    pub lanes: Vec<LaneId>,
}

/// Zone-by-zone trip counts, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ODMatrix {
    pub zones: Vec<Zone>,
    pub counts: Vec<f64>,
}

impl ODMatrix {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.zones.len() + j]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.zones.len();
        &self.counts[i * n..(i + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trip {
    pub id: u64,
    pub origin_lane: LaneId,
    pub origin_s: f64,
    pub dest_lane: LaneId,
    pub departure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Uniform,
    Peaked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepartureProfile {
    pub kind: ProfileKind,
    pub window: (f64, f64),
    /// `(mean, stddev)` seconds, required for peaked profiles.
    pub peak: Option<(f64, f64)>,
}

impl DepartureProfile {
    pub fn uniform(start: f64, end: f64) -> Self {
        Self {
            kind: ProfileKind::Uniform,
            window: (start, end),
            peak: None,
        }
    }

    pub fn peaked(start: f64, end: f64, mean: f64, stddev: f64) -> Self {
        Self {
            kind: ProfileKind::Peaked,
            window: (start, end),
            peak: Some((mean, stddev)),
        }
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        let (t0, t1) = self.window;
        if !(t0 >= 0.0 && t0 < t1 && t1.is_finite()) {
            return Err(DemandError::InvalidProfile(format!("window [{t0}, {t1}) is empty or negative")));
        }
        match (self.kind, self.peak) {
            (ProfileKind::Uniform, _) => Ok(()),
            (ProfileKind::Peaked, Some((mean, sd))) if mean.is_finite() && sd > 0.0 => Ok(()),
            (ProfileKind::Peaked, _) => Err(DemandError::InvalidProfile(
                "peaked profile needs a finite mean and positive stddev".into(),
            )),
        }
    }
}

/// Euclidean centroid distance.
pub(crate) fn distance(a: &Zone, b: &Zone) -> f64 {
    a.centroid.distance(b.centroid)
}
