//! Signal state machines: fixed-phase cycling and max-pressure selection.

use crate::network::{LaneId, SignalProgram};

use super::{Controller, LaneIndex};

/// What a connector shows to approaching vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Light {
    Green,
    /// End of green or all-red clearance: stop unless too close to stop.
    Amber,
    Red,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    pub phase: usize,
    /// Seconds since the phase started.
    pub elapsed: f64,
    /// Elapsed time at which green ends and clearance begins.
    pub green_end: f64,
    /// Phase chosen to follow the current clearance (max-pressure only).
    pub next: Option<usize>,
}

impl SignalState {
    pub fn start(program: &SignalProgram, controller: &Controller, phase: usize) -> Self {
        Self {
            phase,
            elapsed: 0.0,
            green_end: initial_green(program, controller, phase),
            next: None,
        }
    }

    /// State at time zero of a fixed program honoring its offset.
    pub fn at_time_zero(program: &SignalProgram, controller: &Controller) -> Self {
        let mut state = Self::start(program, controller, 0);
        if matches!(controller, Controller::FixedPhase) {
            let cycle = program.cycle_length();
            let mut into = (-program.offset).rem_euclid(cycle);
            while into >= program.phases[state.phase].duration {
                into -= program.phases[state.phase].duration;
                state = Self::start(program, controller, (state.phase + 1) % program.phases.len());
            }
            state.elapsed = into;
        }
        state
    }

    pub fn light(&self, program: &SignalProgram, connector: LaneId, amber: f64) -> Light {
        if !program.phases[self.phase].green.contains(&connector) {
            Light::Red
        } else if self.elapsed < self.green_end - amber {
            Light::Green
        } else {
            Light::Amber
        }
    }

    /// Advances by `dt`. Max-pressure decisions read queue counts from
    /// `index`.
    pub fn advance(&mut self, program: &SignalProgram, controller: &Controller, dt: f64, amber: f64, index: &LaneIndex, lanes: &[crate::network::Lane]) {
        self.elapsed += dt;
        match *controller {
            Controller::FixedPhase => {
                while self.elapsed >= program.phases[self.phase].duration {
                    let carry = self.elapsed - program.phases[self.phase].duration;
                    *self = Self::start(program, controller, (self.phase + 1) % program.phases.len());
                    self.elapsed = carry;
                }
            }
            Controller::MaxPressure { decision_interval, min_green } => {
                if let Some(next) = self.next {
                    if self.elapsed >= self.green_end + program.clearance {
                        let carry = self.elapsed - self.green_end - program.clearance;
                        *self = Self::start(program, controller, next);
                        self.elapsed = carry;
                    }
                } else if self.elapsed >= (self.green_end - amber).max(min_green) {
                    let best = max_pressure_phase(program, index, lanes);
                    if best == self.phase {
                        self.green_end += decision_interval;
                    } else {
                        self.next = Some(best);
                    }
                }
            }
        }
    }
}

fn initial_green(program: &SignalProgram, controller: &Controller, phase: usize) -> f64 {
    match *controller {
        Controller::FixedPhase => program.phases[phase].duration - program.clearance,
        Controller::MaxPressure { decision_interval, .. } => decision_interval,
    }
}

/// Upstream minus downstream vehicle count summed over the phase's green
/// connectors.
pub fn phase_pressure(program: &SignalProgram, phase: usize, index: &LaneIndex, lanes: &[crate::network::Lane]) -> i64 {
    program.phases[phase]
        .green
        .iter()
        .map(|&c| {
            let lane = &lanes[c as usize];
            let up: usize = lane.predecessors.iter().map(|&l| index.count(l)).sum();
            let down: usize = lane.successors.iter().map(|&l| index.count(l)).sum();
            up as i64 - down as i64
        })
        .sum()
}

/// Phase with the largest pressure; ties go to the lowest index.
pub fn max_pressure_phase(program: &SignalProgram, index: &LaneIndex, lanes: &[crate::network::Lane]) -> usize {
    let mut best = (0, i64::MIN);
    for p in 0..program.phases.len() {
        let pressure = phase_pressure(program, p, index, lanes);
        if pressure > best.1 {
            best = (p, pressure);
        }
    }
    best.0
}
