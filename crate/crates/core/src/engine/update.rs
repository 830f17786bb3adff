//! Per-vehicle update against the frozen snapshot. Nothing here mutates
//! shared state.

use rayon::prelude::*;

use super::mobil::accel_behind;
use super::{mandatory_change_safe, mobil_decide, EngineConfig, LaneDecision, LaneIndex, Light, Snapshot, VehicleState, VehicleView};
use crate::network::{LaneId, RoadNetwork};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Kinematics {
    pub v: f64,
    pub disp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LaneChange {
    pub target: LaneId,
    pub kinematics: Kinematics,
    pub mandatory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct VehicleDelta {
    pub slot: usize,
    pub stay: Kinematics,
    pub change: Option<LaneChange>,
}

pub(crate) struct UpdateContext<'a> {
    pub net: &'a RoadNetwork,
    pub config: &'a EngineConfig,
    pub lights: &'a [Light],
    pub index: &'a LaneIndex,
    pub snapshot: &'a Snapshot,
    pub vehicles: &'a [VehicleState],
    pub seed: u64,
    pub step: u64,
}

/// Connector that takes a vehicle on road lane `lane` to the road entered by
/// the planned connector `planned`: `planned` itself when it departs from
/// `lane`, otherwise the lowest-id open alternative, preferring one that
/// ends on the same lane.
pub(crate) fn exit_of(net: &RoadNetwork, lane: LaneId, planned: LaneId) -> Option<LaneId> {
    let p = &net.lanes[planned as usize];
    if p.predecessors.first() == Some(&lane) && p.is_open() {
        return Some(planned);
    }
    let want_lane = *p.successors.first()?;
    let want_road = &net.lanes[want_lane as usize].parent;
    let candidates = net.lanes[lane as usize].successors.iter().copied().filter(|&c| {
        let c = &net.lanes[c as usize];
        c.is_open()
            && c.successors
                .first()
                .is_some_and(|&o| net.lanes[o as usize].is_open() && &net.lanes[o as usize].parent == want_road)
    });
    let mut best: Option<LaneId> = None;
    for c in candidates {
        if net.lanes[c as usize].successors[0] == want_lane {
            return Some(c);
        }
        best = Some(best.map_or(c, |b| b.min(c)));
    }
    best
}

/// Nearest obstacle ahead: a vehicle or a stop line, as a view in the frame
/// of the scanned lane.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Ahead {
    pub leader: Option<VehicleView>,
    /// Stop line position when the obstacle is one.
    pub stop_line: Option<f64>,
}

impl<'a> UpdateContext<'a> {
    fn view(&self, slot: usize, offset: f64) -> VehicleView {
        let m = self.snapshot.get(slot);
        VehicleView {
            s: m.s + offset,
            v: m.v,
            length: m.length,
            v_cap: self.net.lanes[m.lane as usize].max_speed,
        }
    }

    fn must_stop(&self, connector: LaneId, dist: f64, v: f64) -> bool {
        match self.lights[connector as usize] {
            Light::Green => false,
            Light::Red => true,
            Light::Amber => dist > v * v / (2.0 * self.config.idm.comfortable_decel),
        }
    }

    /// Scans lanes beyond the end of `lane` along the route. `in_lane` is the
    /// leader on `lane` itself, if any.
    fn scan(&self, lane: LaneId, s: f64, v: f64, in_lane: Option<usize>, route: &[LaneId], ri: usize) -> Ahead {
        if let Some(l) = in_lane {
            return Ahead { leader: Some(self.view(l, 0.0)), stop_line: None };
        }
        let lanes = &self.net.lanes;
        let mut end = lanes[lane as usize].length;
        let mut cur = lane;
        let mut k = ri;
        let stop_at = |pos: f64| Ahead {
            leader: Some(VehicleView { s: pos, v: 0.0, length: 0.0, v_cap: 0.0 }),
            stop_line: Some(pos),
        };
        while end - s < self.config.lookahead && k + 1 < route.len() {
            let next = if lanes[cur as usize].is_connector() {
                lanes[cur as usize].successors.first().copied()
            } else {
                exit_of(self.net, cur, route[k + 1])
            };
            let Some(next) = next.filter(|&n| lanes[n as usize].is_open()) else {
                return stop_at(end);
            };
            if lanes[next as usize].is_connector() && self.must_stop(next, end - s, v) {
                return stop_at(end);
            }
            if let Some(last) = self.index.last(next) {
                return Ahead { leader: Some(self.view(last, end)), stop_line: None };
            }
            end += lanes[next as usize].length;
            cur = next;
            k += 1;
        }
        Ahead::default()
    }

    fn integrate(&self, me: &VehicleView, ahead: &Ahead) -> Kinematics {
        let idm = &self.config.idm;
        let dt = self.config.dt;
        let a = accel_behind(me, ahead.leader.as_ref(), idm);
        let target = idm.desired_speed.min(me.v_cap);
        let mut v = (me.v + a * dt).max(0.0).min(me.v.max(target));
        let mut disp = if v > 0.0 {
            (me.v * dt + 0.5 * a * dt * dt).max(0.0)
        } else if a < 0.0 {
            me.v * me.v / (2.0 * -a)
        } else {
            0.0
        };
        if let Some(line) = ahead.stop_line {
            let room = (line - me.s).max(0.0);
            if disp > room {
                disp = room;
                v = v.min(disp / dt);
            }
        }
        Kinematics { v, disp }
    }

    pub fn update_vehicle(&self, slot: usize) -> VehicleDelta {
        let m = *self.snapshot.get(slot);
        let veh = &self.vehicles[slot];
        let lanes = &self.net.lanes;
        let lane = &lanes[m.lane as usize];
        let pos = self.index.position(slot).expect("driving vehicle is indexed");
        let list = self.index.lane(m.lane);
        let in_lane_leader = pos.checked_sub(1).map(|p| list[p]);
        let me = VehicleView { s: m.s, v: m.v, length: m.length, v_cap: lane.max_speed };
        let ahead = self.scan(m.lane, m.s, m.v, in_lane_leader, &veh.route, veh.route_index);
        let stay = self.integrate(&me, &ahead);
        let change = if lane.is_connector() {
            None
        } else {
            self.consider_change(slot, &me, &ahead, list.get(pos + 1).copied())
        };
        VehicleDelta { slot, stay, change }
    }

    fn consider_change(
        &self,
        slot: usize,
        me: &VehicleView,
        ahead: &Ahead,
        cur_follower: Option<usize>,
    ) -> Option<LaneChange> {
        let veh = &self.vehicles[slot];
        let m = self.snapshot.get(slot);
        let net = self.net;
        let lane = &net.lanes[m.lane as usize];
        let road = &net.roads[&lane.parent];
        let ri = veh.route_index;
        let planned = veh.route.get(ri + 1).copied();
        let compatible = |l: LaneId| net.lanes[l as usize].is_open() && planned.is_none_or(|c| exit_of(net, l, c).is_some());

        // Vehicle's view of the target lane, in the current lane's frame.
        let target_side = |target: LaneId| {
            let t = &net.lanes[target as usize];
            let s_t = m.s * t.length / lane.length;
            let shift = m.s - s_t;
            let (lead, follow) = self.index.neighbors_at(target, s_t, self.snapshot);
            let mut ahead_t = self.scan(target, s_t, m.v, lead, &veh.route, ri);
            if let Some(l) = ahead_t.leader.as_mut() {
                l.s += shift;
            }
            if let Some(line) = ahead_t.stop_line.as_mut() {
                *line += shift;
            }
            let follower = follow.map(|f| self.view(f, shift));
            (ahead_t, follower, VehicleView { v_cap: t.max_speed, ..*me })
        };

        if !compatible(m.lane) {
            let here = road.lanes.iter().position(|&l| l == m.lane)?;
            let goal = road
                .lanes
                .iter()
                .enumerate()
                .filter(|&(_, &l)| compatible(l))
                .min_by_key(|&(i, _)| (i.abs_diff(here), i))?
                .0;
            let target = if goal < here { lane.left? } else { lane.right? };
            if !net.lanes[target as usize].is_open() {
                return None;
            }
            let (ahead_t, follower, me_t) = target_side(target);
            if !mandatory_change_safe(&me_t, ahead_t.leader.as_ref(), follower.as_ref(), &self.config.mobil, &self.config.idm) {
                return None;
            }
            return Some(LaneChange { target, kinematics: self.integrate(&me_t, &ahead_t), mandatory: true });
        }

        let draw = rng::uniform(self.seed, m.id, self.step);
        let cur_leader_view = ahead.leader;
        let cur_follower_view = cur_follower.map(|f| self.view(f, 0.0));
        for target in [lane.left, lane.right].into_iter().flatten() {
            if !compatible(target) {
                continue;
            }
            let (ahead_t, follower, me_t) = target_side(target);
            let decision = mobil_decide(
                &me_t,
                cur_leader_view.as_ref(),
                cur_follower_view.as_ref(),
                ahead_t.leader.as_ref(),
                follower.as_ref(),
                &self.config.mobil,
                &self.config.idm,
                draw,
            );
            if decision == LaneDecision::Change {
                return Some(LaneChange { target, kinematics: self.integrate(&me_t, &ahead_t), mandatory: false });
            }
        }
        None
    }
}

pub(crate) fn update_all(ctx: &UpdateContext<'_>, driving: &[usize]) -> Vec<VehicleDelta> {
    driving.par_iter().map(|&slot| ctx.update_vehicle(slot)).collect()
}
