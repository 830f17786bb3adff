//! Sequential commit stage. Lanes are processed in id order and vehicles
//! front first, so the result is independent of how the update stage was
//! scheduled.

use super::mobil::accel_behind;
use super::update::{exit_of, Kinematics, VehicleDelta};
use super::world::World;
use super::{LaneChangeEvent, LaneIndex, RoadSample, StepReport, VehicleState, VehicleStatus, VehicleView};
use crate::network::LaneId;

/// Where a vehicle ended up after its move.
enum Placement {
    Stayed,
    Finished,
}

impl World {
    pub(crate) fn commit(&mut self, index: &LaneIndex, deltas: Vec<VehicleDelta>) -> StepReport {
        let lane_count = self.net.lanes.len();
        let mut kinematics: Vec<Option<Kinematics>> = vec![None; self.vehicles.len()];
        for d in &deltas {
            kinematics[d.slot] = Some(d.stay);
        }
        let mut lists: Vec<Vec<usize>> = (0..lane_count as LaneId).map(|l| index.lane(l).to_vec()).collect();
        let mut report = StepReport::default();

        self.apply_lane_changes(&deltas, &mut lists, &mut kinematics, &mut report);

        let mut tail_rear: Vec<f64> = lists
            .iter()
            .map(|l| l.last().map_or(f64::INFINITY, |&slot| self.vehicles[slot].s - self.vehicles[slot].length))
            .collect();
        let dt = self.config.dt;
        let mut finished = Vec::new();
        for list in &lists {
            let mut limit = f64::INFINITY;
            for &slot in list {
                let kin = kinematics[slot].expect("every driving vehicle has a delta");
                let (front, placement) = self.move_vehicle(slot, kin, limit, &mut tail_rear);
                match placement {
                    Placement::Stayed => limit = front - self.vehicles[slot].length - self.config.min_gap,
                    Placement::Finished => {
                        limit = f64::INFINITY;
                        finished.push(slot);
                    }
                }
            }
        }

        let time_before = self.time;
        for &slot in &finished {
            let v = &mut self.vehicles[slot];
            v.status = VehicleStatus::Finished;
            v.finish_time = Some(time_before + dt);
        }
        self.driving.retain(|&slot| self.vehicles[slot].status == VehicleStatus::Driving);
        report.finished = finished.len();
        for k in 0..self.driving.len() {
            let slot = self.driving[k];
            if self.stuck_in_wrong_lane(slot) {
                report.rerouted += usize::from(self.reroute_from_own_lane(slot));
            }
        }

        self.time += dt;
        self.steps += 1;
        self.inject(&mut report);
        self.advance_signals(index);
        self.sample_speeds(time_before);

        report.time = self.time;
        report.driving = self.driving.len();
        report.waiting = self.pending.len();
        report
    }

    fn apply_lane_changes(
        &mut self,
        deltas: &[VehicleDelta],
        lists: &mut [Vec<usize>],
        kinematics: &mut [Option<Kinematics>],
        report: &mut StepReport,
    ) {
        let mut proposals: Vec<&VehicleDelta> = deltas.iter().filter(|d| d.change.is_some()).collect();
        proposals.sort_by_key(|d| self.vehicles[d.slot].id);
        let min_gap = self.config.min_gap;
        for d in proposals {
            let change = d.change.expect("filtered");
            let slot = d.slot;
            let (from, s, v, length) = {
                let me = &self.vehicles[slot];
                (me.lane, me.s, me.v, me.length)
            };
            let to = change.target;
            let s_to = s * self.net.lanes[to as usize].length / self.net.lanes[from as usize].length;
            let list = &lists[to as usize];
            let k = list.partition_point(|&o| self.vehicles[o].s > s_to);
            let leader_ok = k
                .checked_sub(1)
                .is_none_or(|i| self.vehicles[list[i]].s - self.vehicles[list[i]].length - s_to >= min_gap);
            let follower = list.get(k).map(|&f| &self.vehicles[f]);
            let follower_gap = follower.map(|f| (s_to - length - f.s, f.v, f.length));
            let safe = follower_gap.is_none_or(|(gap, fv, flen)| {
                let me = VehicleView { s: s_to, v, length, v_cap: 0.0 };
                let f = VehicleView { s: s_to - length - gap, v: fv, length: flen, v_cap: self.net.lanes[to as usize].max_speed };
                gap >= min_gap && accel_behind(&f, Some(&me), &self.config.idm) >= -self.config.mobil.safe_decel
            });
            if !(leader_ok && safe) {
                continue;
            }
            lists[from as usize].retain(|&o| o != slot);
            let list = &mut lists[to as usize];
            let k = list.partition_point(|&o| {
                let other = &self.vehicles[o];
                other.s > s_to || (other.s == s_to && other.id < self.vehicles[slot].id)
            });
            list.insert(k, slot);
            let me = &mut self.vehicles[slot];
            me.lane = to;
            me.s = s_to;
            let ri = me.route_index;
            me.route[ri] = to;
            realign(&self.net, me);
            kinematics[slot] = Some(change.kinematics);
            report.lane_changes.push(LaneChangeEvent {
                vehicle: me.id,
                from,
                to,
                mandatory: change.mandatory,
                new_follower: follower_gap.map(|(gap, fv, _)| (gap, fv, v)),
            });
        }
    }

    /// Moves one vehicle by its displacement, bounded by `limit` (in the
    /// frame of its current lane) and by admission into later lanes.
    /// Returns the new front position in the original lane's frame.
    fn move_vehicle(&mut self, slot: usize, kin: Kinematics, limit: f64, tail_rear: &mut [f64]) -> (f64, Placement) {
        let min_gap = self.config.min_gap;
        let dt = self.config.dt;
        let net = &self.net;
        let v = &mut self.vehicles[slot];
        let start = v.s;
        let mut target = (start + kin.disp).min(limit).max(start);
        let mut lane = v.lane;
        let mut ri = v.route_index;
        let mut offset = 0.0;
        let mut entered: Vec<(LaneId, f64)> = Vec::new();
        let placement = loop {
            let len = net.lanes[lane as usize].length;
            let pos = target - offset;
            let last = ri + 1 == v.route.len();
            if last && pos >= len {
                break Placement::Finished;
            }
            if pos <= len || last {
                break Placement::Stayed;
            }
            let next = if net.lanes[lane as usize].is_connector() {
                net.lanes[lane as usize].successors.first().copied()
            } else {
                exit_of(net, lane, v.route[ri + 1])
            };
            let cap = next.filter(|&n| net.lanes[n as usize].is_open()).map(|n| (n, tail_rear[n as usize] - min_gap));
            let Some((next, cap)) = cap.filter(|&(_, cap)| cap >= 0.0) else {
                target = offset + len;
                break Placement::Stayed;
            };
            target = offset + len + (pos - len).min(cap);
            if v.route[ri + 1] != next {
                v.route[ri + 1] = next;
                if let Some(after) = v.route.get_mut(ri + 2) {
                    *after = net.lanes[next as usize].successors[0];
                }
            }
            offset += len;
            ri += 1;
            lane = next;
            entered.push((lane, offset));
            v.lane = lane;
            v.route_index = ri;
            if !net.lanes[lane as usize].is_connector() {
                realign(net, v);
            }
        };
        for &(l, o) in &entered {
            let rear = target - o - v.length;
            tail_rear[l as usize] = tail_rear[l as usize].min(rear);
        }
        let moved = target - start;
        v.s = (target - offset).min(net.lanes[lane as usize].length);
        v.v = if moved < kin.disp { kin.v.min(moved / dt) } else { kin.v };
        (target, placement)
    }

    fn inject(&mut self, report: &mut StepReport) {
        let now = self.time;
        let due = self.pending.partition_point(|p| p.trip.departure <= now);
        if due == 0 {
            return;
        }
        let mut occupants: Vec<Vec<(f64, f64)>> = vec![Vec::new(); self.net.lanes.len()];
        for &slot in &self.driving {
            let v = &self.vehicles[slot];
            occupants[v.lane as usize].push((v.s, v.length));
        }
        let length = self.config.vehicle_length;
        let clearance = self.config.idm.min_gap + length;
        let mut taken = vec![false; due];
        for k in 0..due {
            let trip = self.pending[k].trip;
            let Some(origin) = self.usable_origin(trip.origin_lane) else {
                continue;
            };
            let route = match &self.pending[k].route {
                Some((o, r)) if *o == origin => r.clone(),
                _ => match self.router.route(origin, trip.dest_lane) {
                    Ok(r) => {
                        self.pending[k].route = Some((origin, r.clone()));
                        r
                    }
                    Err(e) => {
                        self.record_drop(trip.id, &e);
                        report.dropped += 1;
                        taken[k] = true;
                        continue;
                    }
                },
            };
            let s = trip.origin_s.min(self.net.lanes[origin as usize].length);
            let fits = occupants[origin as usize].iter().all(|&(os, olen)| {
                if os >= s {
                    os - olen - s >= clearance
                } else {
                    s - length - os >= clearance
                }
            });
            if !fits {
                continue;
            }
            occupants[origin as usize].push((s, length));
            taken[k] = true;
            report.injected += 1;
            let mut state = VehicleState {
                id: trip.id,
                route,
                route_index: 0,
                lane: origin,
                s,
                v: 0.0,
                length,
                status: VehicleStatus::Driving,
                depart_time: trip.departure,
                finish_time: None,
            };
            realign(&self.net, &mut state);
            self.add_vehicle(state);
        }
        let mut k = 0;
        self.pending.retain(|_| {
            k += 1;
            k > due || !taken[k - 1]
        });
    }

    /// Stopped at the end of a road lane that has no connector onto the
    /// next road of the route.
    fn stuck_in_wrong_lane(&self, slot: usize) -> bool {
        let v = &self.vehicles[slot];
        let lane = &self.net.lanes[v.lane as usize];
        !lane.is_connector()
            && v.v == 0.0
            && v.route_index + 1 < v.route.len()
            && v.s >= lane.length - self.config.idm.min_gap - 1.0
            && exit_of(&self.net, v.lane, v.route[v.route_index + 1]).is_none()
    }

    /// Replaces the rest of the route with the cheapest one leaving through
    /// a connector of the current lane. Returns whether a route was found.
    fn reroute_from_own_lane(&mut self, slot: usize) -> bool {
        let v = &self.vehicles[slot];
        let dest = *v.route.last().expect("route is non-empty");
        let mut best: Option<(u64, LaneId, Vec<LaneId>)> = None;
        for &c in &self.net.lanes[v.lane as usize].successors {
            if !self.net.lanes[c as usize].is_open() {
                continue;
            }
            let Ok(rest) = self.router.route(self.net.lanes[c as usize].successors[0], dest) else {
                continue;
            };
            let cost = self.router.lane_cost(c) + self.router.route_cost(&rest);
            if best.as_ref().is_none_or(|(b, bc, _)| (cost, c) < (*b, *bc)) {
                best = Some((cost, c, rest));
            }
        }
        let Some((_, c, rest)) = best else {
            return false;
        };
        let v = &mut self.vehicles[slot];
        v.route.truncate(v.route_index + 1);
        v.route.push(c);
        v.route.extend(rest);
        true
    }

    /// The trip's origin lane, or the nearest open lane of the same road
    /// when it is closed.
    fn usable_origin(&self, lane: LaneId) -> Option<LaneId> {
        if self.net.lanes[lane as usize].is_open() {
            return Some(lane);
        }
        let road = self.net.road_of(lane)?;
        let here = road.lanes.iter().position(|&l| l == lane)?;
        road.lanes
            .iter()
            .enumerate()
            .filter(|&(_, &l)| self.net.lanes[l as usize].is_open())
            .min_by_key(|&(i, _)| (i.abs_diff(here), i))
            .map(|(_, &l)| l)
    }

    fn advance_signals(&mut self, index: &LaneIndex) {
        let controller = self.config.controller;
        for (j, state) in self.signals.iter_mut().enumerate() {
            if let Some(state) = state {
                let program = self.net.junctions[&self.junction_ids[j]].signal.as_ref().expect("signalized");
                state.advance(program, &controller, self.config.dt, self.config.amber, index, &self.net.lanes);
            }
        }
    }

    /// Accumulates post-step speeds into the window containing the step.
    fn sample_speeds(&mut self, step_start: f64) {
        let roads = self.road_ids.len();
        let window = ((step_start - self.config.start_time) / self.config.speed_window + 1e-9).floor().max(0.0) as usize;
        while self.speed_sums.len() <= window {
            self.speed_sums.push(vec![(0.0, 0); roads]);
        }
        let mut step_sums = vec![(0.0, 0usize); roads];
        for &slot in &self.driving {
            let v = &self.vehicles[slot];
            if let Some(r) = self.road_of[v.lane as usize] {
                step_sums[r].0 += v.v;
                step_sums[r].1 += 1;
            }
        }
        self.samples.clear();
        for (r, &(sum, n)) in step_sums.iter().enumerate() {
            if n > 0 {
                let acc = &mut self.speed_sums[window][r];
                acc.0 += sum;
                acc.1 += n as u64;
                self.samples.push(RoadSample { road: r, mean_speed: sum / n as f64, vehicles: n });
            }
        }
    }
}

/// Rewrites the upcoming connector when the vehicle's current road lane
/// offers a different connector to the same road.
pub(crate) fn realign(net: &crate::network::RoadNetwork, v: &mut VehicleState) {
    let ri = v.route_index;
    if net.lanes[v.lane as usize].is_connector() || ri + 1 >= v.route.len() {
        return;
    }
    let planned = v.route[ri + 1];
    if let Some(exit) = exit_of(net, v.lane, planned) {
        if exit != planned {
            v.route[ri + 1] = exit;
            if let Some(after) = v.route.get_mut(ri + 2) {
                *after = net.lanes[exit as usize].successors[0];
            }
        }
    }
}
