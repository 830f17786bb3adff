use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;

use super::index::{LaneIndex, Motion, Snapshot};
use super::signal::SignalState;
use super::update::{update_all, UpdateContext};
use super::{
    EngineConfig, EngineError, Light, Recorder, RoadSample, Router, SimulationOutput, StepFrame, StepReport,
    VehicleInfo, VehicleState, VehicleStatus,
};
use crate::demand::Trip;
use crate::geometry::{direction_at, heading_deg};
use crate::io::{RoadSpeedFile, RoadWindow, VehicleRecord};
use crate::metrics::TravelTimes;
use crate::network::{LaneId, Restriction, RoadNetwork};

#[derive(Debug, Clone)]
pub(crate) struct PendingTrip {
    pub trip: Trip,
    /// Cached `(origin used, route)`.
    pub route: Option<(LaneId, Vec<LaneId>)>,
}

/// Complete simulation state.
#[derive(Debug, Clone)]
pub struct World {
    pub(crate) net: RoadNetwork,
    pub(crate) config: EngineConfig,
    pub(crate) seed: u64,
    pub(crate) router: Router,
    pub(crate) time: f64,
    pub(crate) steps: u64,
    pub(crate) vehicles: Vec<VehicleState>,
    pub(crate) slot_of: HashMap<u64, usize>,
    /// Slots of driving vehicles.
    pub(crate) driving: Vec<usize>,
    /// Ordered by `(departure, id)`.
    pub(crate) pending: Vec<PendingTrip>,
    pub(crate) departures: HashMap<u64, f64>,
    pub(crate) dropped: Vec<u64>,
    pub(crate) junction_ids: Vec<String>,
    pub(crate) signals: Vec<Option<SignalState>>,
    /// Junction position of every connector.
    pub(crate) junction_of: Vec<Option<usize>>,
    pub(crate) road_ids: Vec<String>,
    /// Road position of every road lane.
    pub(crate) road_of: Vec<Option<usize>>,
    /// `[window][road] = (speed sum, samples)`.
    pub(crate) speed_sums: Vec<Vec<(f64, u64)>>,
    pub(crate) samples: Vec<RoadSample>,
    pub(crate) lights: Vec<Light>,
    pub(crate) last_index: LaneIndex,
}

impl World {
    pub fn new(net: RoadNetwork, trips: &[Trip], config: EngineConfig, seed: u64) -> Result<Self, EngineError> {
        config.validate()?;
        let mut seen = HashSet::new();
        for t in trips {
            let invalid = |message: &str| EngineError::InvalidTrip { id: t.id, message: message.into() };
            if !seen.insert(t.id) {
                return Err(invalid("duplicate id"));
            }
            for lane in [t.origin_lane, t.dest_lane] {
                match net.lane(lane) {
                    Some(l) if !l.is_connector() => {}
                    _ => return Err(invalid(&format!("lane {lane} is not a road lane"))),
                }
            }
            let len = net.lanes[t.origin_lane as usize].length;
            if !(t.origin_s >= 0.0 && t.origin_s <= len) || !t.departure.is_finite() {
                return Err(invalid("origin position or departure out of range"));
            }
        }
        let mut pending: Vec<PendingTrip> = trips.iter().map(|&trip| PendingTrip { trip, route: None }).collect();
        pending.sort_by(|a, b| a.trip.departure.total_cmp(&b.trip.departure).then(a.trip.id.cmp(&b.trip.id)));

        let junction_ids: Vec<String> = net.junctions.keys().cloned().collect();
        let junction_pos: BTreeMap<&str, usize> = junction_ids.iter().enumerate().map(|(i, j)| (j.as_str(), i)).collect();
        let road_ids: Vec<String> = net.roads.keys().cloned().collect();
        let road_pos: BTreeMap<&str, usize> = road_ids.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let junction_of = net
            .lanes
            .iter()
            .map(|l| if l.is_connector() { junction_pos.get(l.parent.as_str()).copied() } else { None })
            .collect();
        let road_of = net
            .lanes
            .iter()
            .map(|l| if l.is_connector() { None } else { road_pos.get(l.parent.as_str()).copied() })
            .collect();
        let signals = net
            .junctions
            .values()
            .map(|j| j.signal.as_ref().map(|p| SignalState::at_time_zero(p, &config.controller)))
            .collect();
        let lane_count = net.lanes.len();
        Ok(Self {
            router: Router::new(&net),
            time: config.start_time,
            net,
            config,
            seed,
            steps: 0,
            vehicles: Vec::new(),
            slot_of: HashMap::new(),
            driving: Vec::new(),
            departures: trips.iter().map(|t| (t.id, t.departure)).collect(),
            pending,
            dropped: Vec::new(),
            junction_ids,
            signals,
            junction_of,
            road_ids,
            road_of,
            speed_sums: Vec::new(),
            samples: Vec::new(),
            lights: vec![Light::Green; lane_count],
            last_index: LaneIndex::build(lane_count, &Snapshot::default()),
        })
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.net
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn router(&self) -> &Router {
        &self.router
    }

    pub fn road_ids(&self) -> &[String] {
        &self.road_ids
    }

    /// Every vehicle that has entered the network, in entry order.
    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn driving_count(&self) -> usize {
        self.driving.len()
    }

    pub fn waiting_count(&self) -> usize {
        self.pending.len()
    }

    pub fn finished_count(&self) -> usize {
        self.vehicles.len() - self.driving.len()
    }

    pub fn dropped(&self) -> &[u64] {
        &self.dropped
    }

    /// Index built by the most recent step.
    pub fn last_index(&self) -> &LaneIndex {
        &self.last_index
    }

    /// Builds the lane index and motion snapshot of the current state.
    pub fn prepare(&self) -> (LaneIndex, Snapshot) {
        let mut motions = vec![None; self.vehicles.len()];
        for &slot in &self.driving {
            let v = &self.vehicles[slot];
            motions[slot] = Some(Motion { id: v.id, lane: v.lane, s: v.s, v: v.v, length: v.length });
        }
        let snapshot = Snapshot { motions };
        (LaneIndex::build(self.net.lanes.len(), &snapshot), snapshot)
    }

    /// Light shown by a lane; road lanes are always green.
    pub fn light(&self, lane: LaneId) -> Light {
        let Some(j) = self.junction_of.get(lane as usize).copied().flatten() else {
            return Light::Green;
        };
        match (&self.signals[j], &self.net.junctions[&self.junction_ids[j]].signal) {
            (Some(state), Some(program)) => state.light(program, lane, self.config.amber),
            _ => Light::Green,
        }
    }

    pub fn signal_state(&self, junction: &str) -> Result<Option<&SignalState>, EngineError> {
        let j = self.junction_index(junction)?;
        Ok(self.signals[j].as_ref())
    }

    fn junction_index(&self, junction: &str) -> Result<usize, EngineError> {
        self.junction_ids
            .binary_search_by(|j| j.as_str().cmp(junction))
            .map_err(|_| EngineError::UnknownJunction(junction.into()))
    }

    /// Advances the world by one step.
    pub fn step(&mut self) -> StepReport {
        let (index, snapshot) = self.prepare();
        self.lights = (0..self.net.lanes.len() as LaneId).map(|l| self.light(l)).collect();
        let deltas = {
            let ctx = UpdateContext {
                net: &self.net,
                config: &self.config,
                lights: &self.lights,
                index: &index,
                snapshot: &snapshot,
                vehicles: &self.vehicles,
                seed: self.seed,
                step: self.steps,
            };
            update_all(&ctx, &self.driving)
        };
        let report = self.commit(&index, deltas);
        self.last_index = index;
        report
    }

    /// Runs `steps` steps, feeding every step to `recorder`.
    pub fn run(&mut self, steps: u64, recorder: &mut dyn Recorder) -> SimulationOutput {
        let mut updates = 0;
        let mut aborted = None;
        let mut records = Vec::new();
        let mut done = 0;
        for _ in 0..steps {
            updates += self.driving.len() as u64;
            self.step();
            done += 1;
            self.fill_records(&mut records);
            let frame = StepFrame { time: self.time, vehicles: &records, road_speeds: &self.samples };
            if let Err(e) = recorder.record_step(&frame) {
                aborted = Some(format!("recorder failed after step {}: {e}", self.steps));
                break;
            }
        }
        if let Err(e) = recorder.finish() {
            aborted.get_or_insert(format!("recorder failed to finish: {e}"));
        }
        let mut out = self.output();
        out.steps = done;
        out.vehicle_updates = updates;
        out.aborted = aborted;
        out
    }

    /// Records of every driving vehicle, ordered by id.
    pub fn records(&self) -> Vec<VehicleRecord> {
        let mut out = Vec::new();
        self.fill_records(&mut out);
        out
    }

    fn fill_records(&self, out: &mut Vec<VehicleRecord>) {
        out.clear();
        out.extend(self.driving.iter().map(|&slot| {
            let v = &self.vehicles[slot];
            VehicleRecord { t: self.time, id: v.id, lane: v.lane, s: v.s, v: v.v, angle_deg: self.angle(v.lane, v.s) }
        }));
        out.sort_by_key(|r| r.id);
    }

    fn angle(&self, lane: LaneId, s: f64) -> f64 {
        heading_deg(direction_at(&self.net.lanes[lane as usize].centerline, s))
    }

    /// Per-road samples of the most recent step.
    pub fn road_samples(&self) -> &[RoadSample] {
        &self.samples
    }

    pub fn travel_times(&self) -> TravelTimes {
        let mut out = TravelTimes::default();
        let mut finished: Vec<(u64, f64)> = Vec::new();
        for v in &self.vehicles {
            match v.finish_time {
                Some(t) => finished.push((v.id, t - v.depart_time)),
                None => {
                    out.unfinished += 1;
                    out.censored.push((v.id, self.time - v.depart_time));
                }
            }
        }
        for p in &self.pending {
            if p.trip.departure <= self.time {
                out.unserved += 1;
                out.censored.push((p.trip.id, self.time - p.trip.departure));
            }
        }
        finished.sort_by_key(|f| f.0);
        out.censored.sort_by_key(|c| c.0);
        out.finished = finished;
        out
    }

    /// Time-windowed mean speed per road; windows without vehicles report
    /// the road's free-flow speed.
    pub fn road_speed_file(&self) -> RoadSpeedFile {
        let start = self.config.start_time;
        let w = self.config.speed_window;
        let windows = if self.steps == 0 { 0 } else { ((self.time - start) / w - 1e-9).ceil().max(1.0) as usize };
        let mut rows = Vec::with_capacity(windows * self.road_ids.len());
        for (r, road) in self.road_ids.iter().enumerate() {
            for k in 0..windows {
                rows.push(RoadWindow {
                    road: road.clone(),
                    window_start: start + k as f64 * w,
                    window_end: (start + (k + 1) as f64 * w).min(self.time),
                    mean_speed: self.window_speed(r, k),
                });
            }
        }
        RoadSpeedFile { dt: self.config.dt, start_time: start, end_time: self.time, window: w, rows }
    }

    fn window_speed(&self, road: usize, window: usize) -> f64 {
        match self.speed_sums.get(window).map(|w| w[road]) {
            Some((sum, n)) if n > 0 => sum / n as f64,
            _ => self.net.roads[&self.road_ids[road]].max_speed,
        }
    }

    pub fn output(&self) -> SimulationOutput {
        SimulationOutput {
            steps: self.steps,
            travel_times: self.travel_times(),
            road_speeds: self.road_speed_file(),
            dropped: self.dropped.clone(),
            vehicle_updates: 0,
            aborted: None,
        }
    }

    // Control surface. Call only between steps.

    pub fn set_lane_max_speed(&mut self, lane: LaneId, speed: f64) -> Result<(), EngineError> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(EngineError::InvalidConfig(format!("lane speed {speed} must be positive")));
        }
        self.net.lanes.get_mut(lane as usize).ok_or(EngineError::UnknownLane(lane))?.max_speed = speed;
        self.router = Router::new(&self.net);
        Ok(())
    }

    /// Closing a lane bars new entries. Vehicles whose remaining route uses
    /// the lane are rerouted where possible; occupants stay put.
    pub fn set_lane_restriction(&mut self, lane: LaneId, restriction: Restriction) -> Result<(), EngineError> {
        self.net.lanes.get_mut(lane as usize).ok_or(EngineError::UnknownLane(lane))?.restriction = restriction;
        self.router = Router::new(&self.net);
        for p in &mut self.pending {
            p.route = None;
        }
        if restriction == Restriction::Closed {
            for &slot in &self.driving {
                let v = &self.vehicles[slot];
                if !v.route[v.route_index + 1..].contains(&lane) {
                    continue;
                }
                let dest = *v.route.last().expect("route is non-empty");
                let here = v.lane;
                let rerouted = if self.net.lanes[here as usize].is_connector() {
                    let next = self.net.lanes[here as usize].successors[0];
                    self.router.route(next, dest).map(|r| [vec![here], r].concat())
                } else {
                    self.router.route(here, dest)
                };
                match rerouted {
                    Ok(tail) => {
                        let v = &mut self.vehicles[slot];
                        v.route.truncate(v.route_index);
                        v.route.extend(tail);
                    }
                    Err(_) => warn!("vehicle {} keeps its route through closed lane {lane}", v.id),
                }
            }
        }
        Ok(())
    }

    pub fn set_signal_phase(&mut self, junction: &str, phase: usize) -> Result<(), EngineError> {
        let j = self.junction_index(junction)?;
        let program = self.net.junctions[junction]
            .signal
            .as_ref()
            .ok_or_else(|| EngineError::Unsignalized(junction.into()))?;
        if phase >= program.phases.len() {
            return Err(EngineError::PhaseOutOfRange {
                junction: junction.into(),
                phase,
                count: program.phases.len(),
            });
        }
        self.signals[j] = Some(SignalState::start(program, &self.config.controller, phase));
        Ok(())
    }

    pub fn get_vehicle(&self, id: u64) -> Result<VehicleInfo, EngineError> {
        if let Some(&slot) = self.slot_of.get(&id) {
            let v = &self.vehicles[slot];
            return Ok(VehicleInfo {
                id,
                lane: v.lane,
                s: v.s,
                v: v.v,
                angle_deg: self.angle(v.lane, v.s),
                status: v.status,
                route: v.route.clone(),
                route_index: v.route_index,
            });
        }
        let p = self.pending.iter().find(|p| p.trip.id == id).ok_or(EngineError::UnknownVehicle(id))?;
        Ok(VehicleInfo {
            id,
            lane: p.trip.origin_lane,
            s: p.trip.origin_s,
            v: 0.0,
            angle_deg: self.angle(p.trip.origin_lane, p.trip.origin_s),
            status: VehicleStatus::Waiting,
            route: Vec::new(),
            route_index: 0,
        })
    }

    /// Mean speed on `road` over aggregation window `window`.
    pub fn get_road_speed(&self, road: &str, window: usize) -> Result<f64, EngineError> {
        let r = self
            .road_ids
            .binary_search_by(|x| x.as_str().cmp(road))
            .map_err(|_| EngineError::UnknownRoad(road.into()))?;
        let elapsed = self.time - self.config.start_time;
        if window as f64 * self.config.speed_window > elapsed.max(0.0) && window > 0 {
            return Err(EngineError::WindowOutOfRange { window });
        }
        Ok(self.window_speed(r, window))
    }

    /// Places a driving vehicle directly, without gap checks.
    pub fn insert_vehicle(&mut self, id: u64, route: Vec<LaneId>, route_index: usize, s: f64, v: f64) -> Result<(), EngineError> {
        let invalid = |message: &str| EngineError::InvalidTrip { id, message: message.into() };
        if self.slot_of.contains_key(&id) || self.departures.contains_key(&id) {
            return Err(invalid("duplicate id"));
        }
        let lane = *route.get(route_index).ok_or_else(|| invalid("route index out of range"))?;
        let len = self.net.lane(lane).ok_or(EngineError::UnknownLane(lane))?.length;
        if !(0.0..=len).contains(&s) || !(v >= 0.0) {
            return Err(invalid("position or speed out of range"));
        }
        self.departures.insert(id, self.time);
        self.add_vehicle(VehicleState {
            id,
            route,
            route_index,
            lane,
            s,
            v,
            length: self.config.vehicle_length,
            status: VehicleStatus::Driving,
            depart_time: self.time,
            finish_time: None,
        });
        Ok(())
    }

    pub(crate) fn add_vehicle(&mut self, state: VehicleState) {
        let slot = self.vehicles.len();
        self.slot_of.insert(state.id, slot);
        self.vehicles.push(state);
        self.driving.push(slot);
    }

    pub(crate) fn record_drop(&mut self, id: u64, err: &EngineError) {
        warn!("dropping trip {id}: {err}");
        self.dropped.push(id);
    }
}
