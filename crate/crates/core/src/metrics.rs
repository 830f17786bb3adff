//! Evaluation metrics: OD overlap, RMSE, rank correlation, travel times.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{ODMatrix, Trip};
use crate::io::{RoadSpeedFile, RoadWindow, VehicleRecord};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric is undefined: {0}")]
    Undefined(String),
    #[error("inputs do not match: {0}")]
    Mismatch(String),
}

/// Road id → `(window_start, window_end, mean_speed)` rows, sorted by start.
pub type SpeedSeries = BTreeMap<String, Vec<(f64, f64, f64)>>;

pub fn speed_series(file: &RoadSpeedFile) -> SpeedSeries {
    let mut series = SpeedSeries::new();
    for row in &file.rows {
        series
            .entry(row.road.clone())
            .or_default()
            .push((row.window_start, row.window_end, row.mean_speed));
    }
    for rows in series.values_mut() {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Common part of commuting over raw counts.
pub fn cpc_counts(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Mismatch(format!("{} vs {} cells", a.len(), b.len())));
    }
    let common: f64 = a.iter().zip(b).map(|(x, y)| x.min(*y)).sum();
    let total: f64 = a.iter().sum::<f64>() + b.iter().sum::<f64>();
    if total == 0.0 {
        return Err(MetricsError::Undefined("CPC of two all-zero matrices".into()));
    }
    Ok(2.0 * common / total)
}

fn same_zones(a: &ODMatrix, b: &ODMatrix) -> Result<(), MetricsError> {
    let ids = |m: &ODMatrix| m.zones.iter().map(|z| z.id).collect::<Vec<_>>();
    if ids(a) != ids(b) {
        return Err(MetricsError::Mismatch("OD matrices use different zone sets".into()));
    }
    Ok(())
}

/// `2·Σ min(A, B) / (Σ A + Σ B)`, diagonal included.
pub fn cpc(a: &ODMatrix, b: &ODMatrix) -> Result<f64, MetricsError> {
    same_zones(a, b)?;
    cpc_counts(&a.counts, &b.counts)
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Mismatch(format!("{} vs {} entries", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(MetricsError::Undefined("RMSE over an empty index set".into()));
    }
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sq / a.len() as f64).sqrt())
}

pub fn rmse_od(a: &ODMatrix, b: &ODMatrix) -> Result<f64, MetricsError> {
    same_zones(a, b)?;
    rmse(&a.counts, &b.counts)
}

/// RMSE over matched `(road, window)` entries. Both series must cover the
/// same roads and windows.
pub fn rmse_speeds(a: &SpeedSeries, b: &SpeedSeries) -> Result<f64, MetricsError> {
    let (xs, ys) = matched_speeds(a, b)?;
    rmse(&xs, &ys)
}

pub fn matched_speeds(a: &SpeedSeries, b: &SpeedSeries) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    if a.len() != b.len() {
        return Err(MetricsError::Mismatch("speed series cover different roads".into()));
    }
    for ((ra, wa), (rb, wb)) in a.iter().zip(b) {
        if ra != rb || wa.len() != wb.len() {
            return Err(MetricsError::Mismatch(format!("road `{ra}` does not line up with `{rb}`")));
        }
        for (x, y) in wa.iter().zip(wb) {
            if x.0 != y.0 || x.1 != y.1 {
                return Err(MetricsError::Mismatch(format!("windows of road `{ra}` differ")));
            }
            xs.push(x.2);
            ys.push(y.2);
        }
    }
    Ok((xs, ys))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::Undefined("correlation with a constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::Mismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(MetricsError::Undefined("need at least two observations".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Trip durations of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TravelTimes {
    /// `(trip id, finish − departure)` for finished trips, by id.
    pub finished: Vec<(u64, f64)>,
    /// Trips still driving at the horizon.
    pub unfinished: usize,
    /// Trips that were due but never entered the network.
    pub unserved: usize,
    /// `(trip id, horizon − departure)` for every unfinished or unserved
    /// trip, by id.
    pub censored: Vec<(u64, f64)>,
}

/// Average travel time over finished trips.
pub fn att(t: &TravelTimes) -> Result<f64, MetricsError> {
    if t.finished.is_empty() {
        return Err(MetricsError::Undefined("no finished trips".into()));
    }
    Ok(t.finished.iter().map(|(_, d)| d).sum::<f64>() / t.finished.len() as f64)
}

/// Average travel time where unfinished trips count until the horizon.
pub fn att_penalized(t: &TravelTimes) -> Result<f64, MetricsError> {
    let n = t.finished.len() + t.censored.len();
    if n == 0 {
        return Err(MetricsError::Undefined("no trips".into()));
    }
    let sum: f64 = t.finished.iter().map(|(_, d)| d).sum::<f64>() + t.censored.iter().map(|(_, d)| d).sum::<f64>();
    Ok(sum / n as f64)
}

/// Reconstructs travel times from a record stream. A vehicle whose last
/// record precedes the horizon finished one step after that record.
pub fn travel_times_from_records(
    records: &[VehicleRecord],
    trips: &[Trip],
    dt: f64,
    horizon: f64,
) -> TravelTimes {
    let mut last_seen: HashMap<u64, f64> = HashMap::new();
    for r in records {
        let e = last_seen.entry(r.id).or_insert(r.t);
        if r.t > *e {
            *e = r.t;
        }
    }
    let mut out = TravelTimes::default();
    let mut ordered: Vec<&Trip> = trips.iter().collect();
    ordered.sort_by_key(|t| t.id);
    for trip in ordered {
        match last_seen.get(&trip.id) {
            Some(&t) if t < horizon => out.finished.push((trip.id, t + dt - trip.departure)),
            Some(_) => {
                out.unfinished += 1;
                out.censored.push((trip.id, horizon - trip.departure));
            }
            None if trip.departure <= horizon => {
                out.unserved += 1;
                out.censored.push((trip.id, horizon - trip.departure));
            }
            None => {}
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparisons {
    pub speed_rmse: Option<f64>,
    pub speed_spearman: Option<f64>,
    pub od_cpc: Option<f64>,
    pub od_rmse: Option<f64>,
}

/// Output of `analyze`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub att: Option<f64>,
    pub att_penalized: Option<f64>,
    pub finished_trips: usize,
    pub unfinished_trips: usize,
    pub unserved_trips: usize,
    pub record_count: usize,
    pub records_truncated: bool,
    pub road_speeds: Vec<RoadWindow>,
    pub comparisons: Comparisons,
}
