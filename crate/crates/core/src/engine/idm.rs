use serde::{Deserialize, Serialize};

use super::EngineError;

/// Intelligent Driver Model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdmParams {
    /// Desired speed, m/s. Lane caps apply on top.
    pub desired_speed: f64,
    /// Safe time headway, s.
    pub time_headway: f64,
    pub max_accel: f64,
    /// Comfortable deceleration, m/s², positive.
    pub comfortable_decel: f64,
    pub exponent: f64,
    /// Jam gap, m.
    pub min_gap: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed: 30.0,
            time_headway: 1.5,
            max_accel: 2.0,
            comfortable_decel: 2.0,
            exponent: 4.0,
            min_gap: 2.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let all_positive = [
            self.desired_speed,
            self.time_headway,
            self.max_accel,
            self.comfortable_decel,
            self.exponent,
            self.min_gap,
        ]
        .iter()
        .all(|x| *x > 0.0 && x.is_finite());
        if !all_positive || self.exponent < 1.0 {
            return Err(EngineError::InvalidConfig(
                "IDM parameters must be positive with exponent >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Desired gap `s*` at speed `v` approaching at `delta_v`.
    pub fn desired_gap(&self, v: f64, delta_v: f64) -> f64 {
        let dynamic = v * self.time_headway
            + v * delta_v / (2.0 * (self.max_accel * self.comfortable_decel).sqrt());
        self.min_gap + dynamic.max(0.0)
    }
}

/// IDM acceleration. `delta_v` is own speed minus leader speed; pass
/// `f64::INFINITY` as `gap` when there is no leader.
///
/// `gap` must be positive.
pub fn idm_accel(v: f64, delta_v: f64, gap: f64, p: &IdmParams, v_cap: f64) -> f64 {
    debug_assert!(gap > 0.0, "IDM gap must be positive, got {gap}");
    let target = p.desired_speed.min(v_cap);
    let free = libm::pow(v / target, p.exponent);
    let interaction = if gap.is_infinite() {
        0.0
    } else {
        let r = p.desired_gap(v, delta_v) / gap;
        r * r
    };
    p.max_accel * (1.0 - free - interaction)
}

/// Bumper gap at which a platoon cruising at `v` is in equilibrium.
pub fn equilibrium_gap(v: f64, p: &IdmParams, v_cap: f64) -> f64 {
    let target = p.desired_speed.min(v_cap);
    p.desired_gap(v, 0.0) / (1.0 - libm::pow(v / target, p.exponent)).sqrt()
}
