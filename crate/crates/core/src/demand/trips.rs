//! OD matrix → individual trips.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{DemandError, DepartureProfile, ODMatrix, ProfileKind, Trip};
use crate::network::{LaneId, RoadNetwork};
use crate::rng;

/// Separates demand streams from engine streams drawn under the same seed.
const DEMAND_STREAM_TAG: u64 = 0xD3A4_D000_0000_0000;
const MAX_PEAK_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionOptions {
    /// Share of trips made by car; the matrix is thinned by this factor.
    pub mode_share: f64,
}

impl Default for ConversionOptions {
    fn default() -> Self {
        Self { mode_share: 1.0 }
    }
}

fn sample_departure(profile: &DepartureProfile, rng: &mut ChaCha8Rng) -> f64 {
    let (t0, t1) = profile.window;
    match (profile.kind, profile.peak) {
        (ProfileKind::Peaked, Some((mean, sd))) => {
            let normal = Normal::new(mean, sd).expect("validated profile");
            for _ in 0..MAX_PEAK_ATTEMPTS {
                let t = normal.sample(rng);
                if t >= t0 && t < t1 {
                    return t;
                }
            }
            // peak far outside the window: degrade to uniform
            uniform_in(t0, t1, rng)
        }
        _ => uniform_in(t0, t1, rng),
    }
}

fn uniform_in(t0: f64, t1: f64, rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let t = t0 + rng.random::<f64>() * (t1 - t0);
        if t < t1 {
            return t;
        }
    }
}

/// Stochastic rounding: `floor(x)` plus one with probability `frac(x)`.
fn stochastic_round(x: f64, rng: &mut ChaCha8Rng) -> u64 {
    let base = x.floor();
    let frac = x - base;
    base as u64 + u64::from(frac > 0.0 && rng.random::<f64>() < frac)
}

/// Expands an OD matrix into trips.
///
/// Every random draw is keyed by `(seed, cell index, trip ordinal)`, so the
/// output is a pure function of the inputs. Trips are sorted by departure,
/// then id; ids follow the row-major order of the cells.
pub fn od_to_trips(
    od: &ODMatrix,
    net: &RoadNetwork,
    profile: &DepartureProfile,
    seed: u64,
    options: &ConversionOptions,
) -> Result<Vec<Trip>, DemandError> {
    profile.validate()?;
    if !(options.mode_share >= 0.0 && options.mode_share <= 1.0) {
        return Err(DemandError::InvalidArgument("mode share must lie in [0, 1]".into()));
    }
    let n = od.zones.len();
    if od.counts.len() != n * n {
        return Err(DemandError::InvalidArgument("count matrix does not match the zone set".into()));
    }
    for z in &od.zones {
        if z.lanes.is_empty() {
            return Err(DemandError::EmptyZone(z.id));
        }
        for &lane in &z.lanes {
            if net.lane(lane).is_none_or(|l| l.is_connector()) {
                return Err(DemandError::UnknownLane { zone: z.id, lane });
            }
        }
    }
    let lane_len = |l: LaneId| net.lanes[l as usize].length;

    let per_cell: Vec<Vec<(LaneId, f64, LaneId, f64)>> = (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let count = od.counts[cell] * options.mode_share;
            if !(count > 0.0) {
                return Vec::new();
            }
            let stream = DEMAND_STREAM_TAG ^ cell as u64;
            let emitted = stochastic_round(count, &mut rng::keyed(seed, stream, 0));
            let (from, to) = (&od.zones[cell / n], &od.zones[cell % n]);
            (0..emitted)
                .map(|k| {
                    let mut r = rng::keyed(seed, stream, k + 1);
                    let origin = from.lanes[r.random_range(0..from.lanes.len())];
                    let origin_s = r.random::<f64>() * 0.5 * lane_len(origin);
                    let dest = to.lanes[r.random_range(0..to.lanes.len())];
                    let departure = sample_departure(profile, &mut r);
                    (origin, origin_s, dest, departure)
                })
                .collect()
        })
        .collect();

    let mut trips: Vec<Trip> = per_cell
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(id, (origin_lane, origin_s, dest_lane, departure))| Trip {
            id: id as u64,
            origin_lane,
            origin_s,
            dest_lane,
            departure,
        })
        .collect();
    trips.sort_by(|a, b| a.departure.total_cmp(&b.departure).then(a.id.cmp(&b.id)));
    Ok(trips)
}

/// `count` trips between uniformly chosen open road lanes, departing
/// uniformly over `window`. Used for synthetic benchmark scenarios.
pub fn uniform_random_trips(
    net: &RoadNetwork,
    count: usize,
    window: (f64, f64),
    seed: u64,
) -> Result<Vec<Trip>, DemandError> {
    let profile = DepartureProfile::uniform(window.0, window.1);
    profile.validate()?;
    let lanes: Vec<LaneId> = net.road_lanes().filter(|l| l.is_open()).map(|l| l.id).collect();
    if lanes.len() < 2 {
        return Err(DemandError::InvalidArgument("network needs at least two open road lanes".into()));
    }
    let mut trips: Vec<Trip> = (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let mut r = rng::keyed(seed, DEMAND_STREAM_TAG ^ (1 << 48), id);
            let origin_lane = lanes[r.random_range(0..lanes.len())];
            let dest_lane = loop {
                let d = lanes[r.random_range(0..lanes.len())];
                if net.lanes[d as usize].parent != net.lanes[origin_lane as usize].parent {
                    break d;
                }
            };
            let origin_s = r.random::<f64>() * 0.5 * net.lanes[origin_lane as usize].length;
            Trip {
                id,
                origin_lane,
                origin_s,
                dest_lane,
                departure: sample_departure(&profile, &mut r),
            }
        })
        .collect();
    trips.sort_by(|a, b| a.departure.total_cmp(&b.departure).then(a.id.cmp(&b.id)));
    Ok(trips)
}
