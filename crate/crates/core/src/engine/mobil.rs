use serde::{Deserialize, Serialize};

use super::{idm_accel, EngineError, IdmParams};

/// Gaps below this are treated as this, keeping IDM finite.
pub(crate) const MIN_IDM_GAP: f64 = 0.01;

/// Randomized MOBIL parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilParams {
    pub politeness: f64,
    /// Minimum net advantage for a change, m/s².
    pub threshold: f64,
    /// Largest deceleration a change may impose on the new follower, m/s².
    pub safe_decel: f64,
    /// Probability that a vehicle considers changing in a given step.
    pub eval_prob: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        Self {
            politeness: 0.2,
            threshold: 0.1,
            safe_decel: 4.0,
            eval_prob: 0.9,
        }
    }
}

impl MobilParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let ok = (0.0..=1.0).contains(&self.politeness)
            && self.threshold > 0.0
            && self.safe_decel > 0.0
            && self.eval_prob > 0.0
            && self.eval_prob <= 1.0;
        if !ok {
            return Err(EngineError::InvalidConfig(
                "MOBIL needs politeness in [0,1], positive threshold and safe_decel, eval_prob in (0,1]".into(),
            ));
        }
        Ok(())
    }
}

/// A vehicle as seen by lane-change logic. `s` is the front position in a
/// frame shared by all views passed to one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleView {
    pub s: f64,
    pub v: f64,
    pub length: f64,
    /// Speed cap of the lane the vehicle drives on.
    pub v_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneDecision {
    Stay,
    Change,
}

fn bumper_gap(follower: &VehicleView, leader: &VehicleView) -> f64 {
    leader.s - leader.length - follower.s
}

/// Acceleration of `me` behind `leader`, if any.
pub(crate) fn accel_behind(me: &VehicleView, leader: Option<&VehicleView>, idm: &IdmParams) -> f64 {
    match leader {
        None => idm_accel(me.v, 0.0, f64::INFINITY, idm, me.v_cap),
        Some(l) => idm_accel(me.v, me.v - l.v, bumper_gap(me, l).max(MIN_IDM_GAP), idm, me.v_cap),
    }
}

fn fits(me: &VehicleView, leader: Option<&VehicleView>, follower: Option<&VehicleView>) -> bool {
    leader.is_none_or(|l| bumper_gap(me, l) > 0.0) && follower.is_none_or(|f| bumper_gap(f, me) > 0.0)
}

fn safe_for_follower(me: &VehicleView, follower: Option<&VehicleView>, idm: &IdmParams, safe_decel: f64) -> bool {
    follower.is_none_or(|f| accel_behind(f, Some(me), idm) >= -safe_decel)
}

/// Randomized MOBIL decision.
///
/// `draw` is a uniform sample in `[0, 1)`; the vehicle only evaluates a
/// change when `draw < eval_prob`.
#[allow(clippy::too_many_arguments)]
pub fn mobil_decide(
    me: &VehicleView,
    cur_leader: Option<&VehicleView>,
    cur_follower: Option<&VehicleView>,
    tgt_leader: Option<&VehicleView>,
    tgt_follower: Option<&VehicleView>,
    p: &MobilParams,
    idm: &IdmParams,
    draw: f64,
) -> LaneDecision {
    if draw >= p.eval_prob {
        return LaneDecision::Stay;
    }
    if !fits(me, tgt_leader, tgt_follower) || !safe_for_follower(me, tgt_follower, idm, p.safe_decel) {
        return LaneDecision::Stay;
    }
    let own = accel_behind(me, tgt_leader, idm) - accel_behind(me, cur_leader, idm);
    let new_follower = tgt_follower
        .map(|f| accel_behind(f, Some(me), idm) - accel_behind(f, tgt_leader, idm))
        .unwrap_or(0.0);
    let old_follower = cur_follower
        .map(|f| accel_behind(f, cur_leader, idm) - accel_behind(f, Some(me), idm))
        .unwrap_or(0.0);
    if own + p.politeness * (new_follower + old_follower) > p.threshold {
        LaneDecision::Change
    } else {
        LaneDecision::Stay
    }
}

/// Change required by the route: only the physical fit and the safety
/// criterion apply.
pub fn mandatory_change_safe(
    me: &VehicleView,
    tgt_leader: Option<&VehicleView>,
    tgt_follower: Option<&VehicleView>,
    p: &MobilParams,
    idm: &IdmParams,
) -> bool {
    fits(me, tgt_leader, tgt_follower) && safe_for_follower(me, tgt_follower, idm, p.safe_decel)
}
