//! Repeated timed runs on synthetic grids.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use trafficsim::demand::uniform_random_trips;
use trafficsim::engine::World;
use trafficsim::io::{self, RecordWriter, SchemaKind};
use trafficsim::network::generate_grid;

use crate::args::BenchArgs;
use crate::commands::{engine_config, output, thread_pool};
use crate::manifest::{HashWriter, RunManifest};
use crate::{Classify, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRow {
    pub scenario: String,
    pub rows: usize,
    pub cols: usize,
    pub trips: usize,
    pub steps: u64,
    pub repeats: usize,
    pub threads: usize,
    pub mean_wall_s: f64,
    pub mean_step_s: f64,
    pub vehicle_updates: u64,
    pub vehicle_updates_per_s: f64,
    pub finished_trips: usize,
    /// SHA-256 of the record stream; identical on every repeat.
    pub record_sha256: String,
    /// Mean step time relative to the smallest scenario.
    pub step_time_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn parse(text: &str) -> Result<Self, io::IoError> {
        io::from_document(SchemaKind::BenchTable, text)
    }
}

/// `ROWSxCOLS:TRIPS`.
fn parse_scenario(s: &str) -> anyhow::Result<(usize, usize, usize)> {
    let err = || anyhow!("scenario `{s}` is not ROWSxCOLS:TRIPS");
    let (grid, trips) = s.split_once(':').ok_or_else(err)?;
    let (r, c) = grid.split_once(['x', 'X']).ok_or_else(err)?;
    Ok((r.trim().parse().map_err(|_| err())?, c.trim().parse().map_err(|_| err())?, trips.trim().parse().map_err(|_| err())?))
}

pub(crate) fn bench(a: &BenchArgs, m: &mut RunManifest) -> Result<PathBuf, CliError> {
    if a.repeats == 0 {
        return Err(CliError::Validation(anyhow!("--repeats must be at least 1")));
    }
    let pool = thread_pool(a.threads)?;
    m.seed = Some(a.seed);
    m.threads = Some(pool.current_num_threads());
    let config = engine_config(None, 1.0, Some(a.controller))?;

    let mut scenarios = a
        .scenarios
        .iter()
        .map(|s| parse_scenario(s).map(|p| (s.clone(), p)))
        .collect::<anyhow::Result<Vec<_>>>()
        .invalid()?;
    scenarios.sort_by_key(|(_, (r, c, n))| (*n, r * c));

    let mut table = BenchTable::default();
    for (name, (rows, cols, count)) in scenarios {
        let net = generate_grid(rows, cols, a.block, a.lanes, a.speed).invalid()?;
        let trips = uniform_random_trips(&net, count, (0.0, a.window), a.seed).invalid()?;
        let (mut wall, mut hash, mut last) = (0.0, None::<String>, None);
        for _ in 0..a.repeats {
            let mut world = World::new(net.clone(), &trips, config.clone(), a.seed).invalid()?;
            let mut writer = RecordWriter::new(HashWriter::default()).failed()?;
            let started = Instant::now();
            let out = pool.install(|| world.run(a.steps, &mut writer));
            wall += started.elapsed().as_secs_f64();
            if let Some(reason) = out.aborted {
                return Err(CliError::Runtime(anyhow!("{name}: {reason}")));
            }
            let digest = writer.into_inner().context("flushing record hash").failed()?.hex();
            if hash.as_ref().is_some_and(|h| *h != digest) {
                return Err(CliError::Runtime(anyhow!("{name}: record stream differs between repeats")));
            }
            hash = Some(digest);
            last = Some(out);
        }
        let out = last.expect("at least one repeat");
        let mean_wall = wall / a.repeats as f64;
        let mean_step = mean_wall / out.steps.max(1) as f64;
        table.rows.push(BenchRow {
            scenario: name,
            rows,
            cols,
            trips: count,
            steps: out.steps,
            repeats: a.repeats,
            threads: pool.current_num_threads(),
            mean_wall_s: mean_wall,
            mean_step_s: mean_step,
            vehicle_updates: out.vehicle_updates,
            vehicle_updates_per_s: out.vehicle_updates as f64 / mean_wall.max(1e-9),
            finished_trips: out.travel_times.finished.len(),
            record_sha256: hash.expect("at least one repeat"),
            step_time_ratio: 1.0,
        });
    }
    let base = table.rows[0].mean_step_s;
    for row in &mut table.rows {
        row.step_time_ratio = row.mean_step_s / base;
    }

    println!("{:<16} {:>8} {:>10} {:>12} {:>14} {:>8}  record", "scenario", "trips", "wall s", "step ms", "veh-upd/s", "ratio");
    for r in &table.rows {
        println!(
            "{:<16} {:>8} {:>10.3} {:>12.4} {:>14.0} {:>8.3}  {}",
            r.scenario,
            r.trips,
            r.mean_wall_s,
            r.mean_step_s * 1e3,
            r.vehicle_updates_per_s,
            r.step_time_ratio,
            &r.record_sha256[..16],
        );
    }
    io::write_text(&a.output, &io::to_document(SchemaKind::BenchTable, &table)).failed()?;
    output(m, &a.output)?;
    Ok(a.output.clone())
}
