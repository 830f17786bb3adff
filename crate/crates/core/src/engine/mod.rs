//! Two-phase simulation engine.
//!
//! Each step runs three stages:
//!
//! 1. **prepare**: every lane gets an index of its vehicles, front first, and
//!    the motion state of every vehicle is frozen into a snapshot.
//! 2. **update**: each vehicle computes its own acceleration, lane-change
//!    intent and displacement from the snapshot alone. This stage runs in
//!    parallel and writes nothing shared.
//! 3. **commit**: deltas are applied sequentially in a fixed order. Lane
//!    changes, lane transitions, arrivals, injections and signals happen
//!    here, and this is where collisions are prevented.
//!
//! Randomness is keyed by `(seed, vehicle id, step)`, so output does not
//! depend on the number of worker threads.

mod commit;
mod idm;
mod index;
mod mobil;
mod router;
mod signal;
mod update;
mod world;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::VehicleRecord;
use crate::metrics::TravelTimes;
use crate::io::RoadSpeedFile;
use crate::network::LaneId;

pub use idm::{equilibrium_gap, idm_accel, IdmParams};
pub use index::{LaneIndex, Motion, Snapshot};
pub use mobil::{mandatory_change_safe, mobil_decide, LaneDecision, MobilParams, VehicleView};
pub use router::{Route, Router};
pub use signal::{max_pressure_phase, phase_pressure, Light, SignalState};
pub use world::World;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown lane {0}")]
    UnknownLane(LaneId),
    #[error("unknown road `{0}`")]
    UnknownRoad(String),
    #[error("unknown junction `{0}`")]
    UnknownJunction(String),
    #[error("junction `{0}` has no signal program")]
    Unsignalized(String),
    #[error("phase {phase} out of range for junction `{junction}` with {count} phases")]
    PhaseOutOfRange { junction: String, phase: usize, count: usize },
    #[error("unknown vehicle {0}")]
    UnknownVehicle(u64),
    #[error("no route from lane {from} to the road of lane {to}")]
    NoRoute { from: LaneId, to: LaneId },
    #[error("invalid trip {id}: {message}")]
    InvalidTrip { id: u64, message: String },
    #[error("window {window} is outside the simulated period")]
    WindowOutOfRange { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Controller {
    FixedPhase,
    MaxPressure {
        /// Seconds between decisions.
        decision_interval: f64,
        /// Seconds a phase stays green before it may be switched.
        min_green: f64,
    },
}

impl Controller {
    pub fn max_pressure() -> Self {
        Controller::MaxPressure { decision_interval: 15.0, min_green: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Step length, seconds.
    pub dt: f64,
    /// Leader sensing range along the route, meters.
    pub lookahead: f64,
    pub idm: IdmParams,
    pub mobil: MobilParams,
    pub controller: Controller,
    /// Final seconds of each green treated as amber.
    pub amber: f64,
    /// Minimum bumper gap kept by the commit stage, meters.
    pub min_gap: f64,
    pub vehicle_length: f64,
    /// Road speed aggregation window, seconds.
    pub speed_window: f64,
    pub start_time: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            lookahead: 200.0,
            idm: IdmParams::default(),
            mobil: MobilParams::default(),
            controller: Controller::FixedPhase,
            amber: 3.0,
            min_gap: 0.1,
            vehicle_length: 5.0,
            speed_window: 300.0,
            start_time: 0.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.into()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.dt) {
            return bad("dt must be positive");
        }
        if !positive(self.lookahead) || !positive(self.vehicle_length) || !positive(self.speed_window) {
            return bad("lookahead, vehicle_length and speed_window must be positive");
        }
        if !(self.amber >= 0.0) || !(self.min_gap > 0.0) || !self.start_time.is_finite() {
            return bad("amber must be non-negative and min_gap positive");
        }
        self.idm.validate()?;
        self.mobil.validate()?;
        if let Controller::MaxPressure { decision_interval, min_green } = self.controller {
            if !positive(decision_interval) || !(min_green >= 0.0) {
                return bad("max-pressure intervals must be positive");
            }
            if decision_interval <= self.amber {
                return bad("decision interval must exceed the amber time");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleStatus {
    Waiting,
    Driving,
    Finished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u64,
    pub route: Vec<LaneId>,
    pub route_index: usize,
    pub lane: LaneId,
    pub s: f64,
    pub v: f64,
    pub length: f64,
    pub status: VehicleStatus,
    pub depart_time: f64,
    pub finish_time: Option<f64>,
}

/// Read-only view returned by the control surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleInfo {
    pub id: u64,
    pub lane: LaneId,
    pub s: f64,
    pub v: f64,
    pub angle_deg: f64,
    pub status: VehicleStatus,
    pub route: Vec<LaneId>,
    pub route_index: usize,
}

/// A lane change accepted by the commit stage, with the state it was
/// judged on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneChangeEvent {
    pub vehicle: u64,
    pub from: LaneId,
    pub to: LaneId,
    pub mandatory: bool,
    /// `(bumper gap, follower speed, own speed)` of the new follower.
    pub new_follower: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub injected: usize,
    pub finished: usize,
    pub dropped: usize,
    /// Vehicles that gave up on a lane change and took another way.
    pub rerouted: usize,
    pub driving: usize,
    pub waiting: usize,
    pub lane_changes: Vec<LaneChangeEvent>,
}

/// Mean speed of one road at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadSample {
    /// Position of the road in the network's road order.
    pub road: usize,
    pub mean_speed: f64,
    pub vehicles: usize,
}

/// What the recorder sees after each step.
pub struct StepFrame<'a> {
    pub time: f64,
    /// Every driving vehicle, ordered by id.
    pub vehicles: &'a [VehicleRecord],
    /// Roads with at least one vehicle, in road order.
    pub road_speeds: &'a [RoadSample],
}

pub trait Recorder {
    fn record_step(&mut self, frame: &StepFrame<'_>) -> io::Result<()>;

    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullRecorder;

impl Recorder for NullRecorder {
    fn record_step(&mut self, _: &StepFrame<'_>) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub steps: u64,
    pub travel_times: TravelTimes,
    pub road_speeds: RoadSpeedFile,
    /// Trips dropped because no route exists.
    pub dropped: Vec<u64>,
    /// Sum of driving vehicles over all steps.
    pub vehicle_updates: u64,
    /// Set when the recorder failed; output covers the steps before it.
    pub aborted: Option<String>,
}
