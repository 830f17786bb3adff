use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use log::{info, warn};
use trafficsim::demand::{gravity_od, od_to_trips, radiation_od, ConversionOptions, DepartureProfile};
use trafficsim::engine::{Controller, EngineConfig, NullRecorder, Recorder, World};
use trafficsim::io::{self, read_records, RecordWriter};
use trafficsim::metrics::{self, Comparisons, Report};
use trafficsim::network::{build_network, generate_grid, parse_raw, validate_network, BuildOptions};

use crate::args::*;
use crate::manifest::{self, RunManifest};
use crate::{bench, Classify, CliError};

pub fn dispatch(cli: Cli, command_line: Vec<String>) -> Result<(), CliError> {
    let started = Instant::now();
    let mut m = RunManifest::new(command_line, cli.command.name(), cli.command.options());
    let primary = match &cli.command {
        Command::BuildMap(a) => build_map(a, &mut m)?,
        Command::GenGrid(a) => gen_grid(a, &mut m)?,
        Command::GenOd(a) => gen_od(a, &mut m)?,
        Command::GenDemand(a) => gen_demand(a, &mut m)?,
        Command::Simulate(a) => simulate(a, &mut m, started)?,
        Command::Analyze(a) => analyze(a, &mut m)?,
        Command::Bench(a) => bench::bench(a, &mut m)?,
    };
    m.duration_s = started.elapsed().as_secs_f64();
    let path = cli.manifest.unwrap_or_else(|| manifest::default_path(&primary));
    io::write_text(&path, &m.to_document()).failed()
}

pub(crate) fn input(m: &mut RunManifest, path: &Path) -> Result<(), CliError> {
    m.add_input(path).with_context(|| format!("reading {}", path.display())).invalid()
}

pub(crate) fn output(m: &mut RunManifest, path: &Path) -> Result<(), CliError> {
    m.add_output(path).with_context(|| format!("hashing {}", path.display())).failed()
}

pub(crate) fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let n = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(CliError::Validation(anyhow!("--threads must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().failed()
}

fn build_map(a: &BuildMapArgs, m: &mut RunManifest) -> Result<PathBuf, CliError> {
    input(m, &a.input)?;
    let bytes = std::fs::read(&a.input).with_context(|| a.input.display().to_string()).invalid()?;
    let raw = parse_raw(&bytes).invalid()?;
    for w in &raw.warnings {
        warn!("{w}");
    }
    let options = BuildOptions {
        lane_width: a.lane_width,
        snap_radius: a.snap_radius,
        allow_boundaries: a.allow_boundaries,
        ..BuildOptions::default()
    };
    let net = build_network(&raw.roads, &raw.junctions, &options).invalid()?;
    if let Some(issue) = validate_network(&net).into_iter().next() {
        return Err(CliError::Validation(anyhow!("compiled network is invalid: {issue}")));
    }
    info!("{} roads, {} lanes, {} junctions", net.roads.len(), net.lanes.len(), net.junctions.len());
    io::save_network(&a.output, &net).failed()?;
    output(m, &a.output)?;
    Ok(a.output.clone())
}

fn gen_grid(a: &GenGridArgs, m: &mut RunManifest) -> Result<PathBuf, CliError> {
    let net = generate_grid(a.rows, a.cols, a.block, a.lanes, a.speed).invalid()?;
    io::save_network(&a.output, &net).failed()?;
    output(m, &a.output)?;
    Ok(a.output.clone())
}

fn gen_od(a: &GenOdArgs, m: &mut RunManifest) -> Result<PathBuf, CliError> {
    input(m, &a.net)?;
    input(m, &a.zones)?;
    let net = io::load_network(&a.net).invalid()?;
    let zones = io::load_zones(&a.zones).invalid()?;
    for z in &zones {
        if let Some(&bad) = z.lanes.iter().find(|&&l| net.lane(l).is_none_or(|l| l.is_connector())) {
            return Err(CliError::Validation(anyhow!("zone {}: lane {bad} is not a road lane of the network", z.id)));
        }
    }
    let od = match a.model {
        OdModel::Gravity => gravity_od(&zones, a.total, a.gamma).invalid()?,
        OdModel::Radiation => {
            let mass: f64 = zones.iter().map(|z| z.mass).sum();
            if a.total.is_nan() || a.total < 0.0 || mass.is_nan() || mass <= 0.0 {
                return Err(CliError::Validation(anyhow!("radiation needs a non-negative total and positive mass")));
            }
            let out: Vec<f64> = zones.iter().map(|z| a.total * z.mass / mass).collect();
            radiation_od(&zones, &out).invalid()?
        }
    };
    io::save_od(&a.output, &od).failed()?;
    output(m, &a.output)?;
    Ok(a.output.clone())
}

fn parse_window(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("window `{s}` is not `start:end`"))?;
    Ok((a.trim().parse().context("window start")?, b.trim().parse().context("window end")?))
}

fn gen_demand(a: &GenDemandArgs, m: &mut RunManifest) -> Result<PathBuf, CliError> {
    input(m, &a.od)?;
    input(m, &a.net)?;
    m.seed = Some(a.seed);
    let od = io::load_od(&a.od).invalid()?;
    let net = io::load_network(&a.net).invalid()?;
    let (t0, t1) = parse_window(&a.window).invalid()?;
    let profile = match (a.profile, a.peak_mean, a.peak_std) {
        (Profile::Uniform, _, _) => DepartureProfile::uniform(t0, t1),
        (Profile::Peaked, Some(mean), Some(sd)) => DepartureProfile::peaked(t0, t1, mean, sd),
        (Profile::Peaked, _, _) => {
            return Err(CliError::Validation(anyhow!("peaked profile needs --peak-mean and --peak-std")));
        }
    };
    let options = ConversionOptions { mode_share: a.mode_share };
    let trips = od_to_trips(&od, &net, &profile, a.seed, &options).invalid()?;
    info!("{} trips", trips.len());
    io::save_trips(&a.output, &trips).failed()?;
    output(m, &a.output)?;
    Ok(a.output.clone())
}

pub(crate) fn engine_config(path: Option<&Path>, dt: f64, controller: Option<ControllerKind>) -> Result<EngineConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = io::read_text(p).invalid()?;
            serde_json::from_str(&text).with_context(|| p.display().to_string()).invalid()?
        }
        None => EngineConfig::default(),
    };
    config.dt = dt;
    config.controller = match (controller, config.controller) {
        (None, c) => c,
        (Some(ControllerKind::Fixed), _) => Controller::FixedPhase,
        (Some(ControllerKind::Maxpressure), c @ Controller::MaxPressure { .. }) => c,
        (Some(ControllerKind::Maxpressure), Controller::FixedPhase) => Controller::max_pressure(),
    };
    config.validate().invalid()?;
    Ok(config)
}

fn simulate(a: &SimulateArgs, m: &mut RunManifest, started: Instant) -> Result<PathBuf, CliError> {
    input(m, &a.net)?;
    input(m, &a.trips)?;
    if let Some(p) = &a.engine_config {
        input(m, p)?;
    }
    m.seed = Some(a.seed);
    m.threads = a.threads;
    let pool = thread_pool(a.threads)?;
    let net = io::load_network(&a.net).invalid()?;
    let trips = io::load_trips(&a.trips).invalid()?;
    io::check_trips_against(&trips, &net).invalid()?;
    let config = engine_config(a.engine_config.as_deref(), a.dt, a.controller)?;
    let mut world = World::new(net, &trips, config, a.seed).invalid()?;

    let mut writer = match &a.record {
        Some(path) => {
            let file = File::create(path).with_context(|| path.display().to_string()).failed()?;
            Some(RecordWriter::new(file).failed()?)
        }
        None => None,
    };
    let run_started = Instant::now();
    let out = pool.install(|| match writer.as_mut() {
        Some(w) => world.run(a.steps, w as &mut dyn Recorder),
        None => world.run(a.steps, &mut NullRecorder),
    });
    let elapsed = run_started.elapsed().as_secs_f64().max(1e-9);
    drop(writer);
    io::write_text(&a.roads, &io::road_speeds_to_string(&out.road_speeds)).failed()?;

    let tt = &out.travel_times;
    println!(
        "steps {} | finished {} | unfinished {} | unserved {} | dropped {} | {:.1} steps/s | {:.0} vehicle-updates/s | {:.2} s total",
        out.steps,
        tt.finished.len(),
        tt.unfinished,
        tt.unserved,
        out.dropped.len(),
        out.steps as f64 / elapsed,
        out.vehicle_updates as f64 / elapsed,
        started.elapsed().as_secs_f64(),
    );
    m.steps_per_second = Some(out.steps as f64 / elapsed);
    m.vehicle_updates_per_second = Some(out.vehicle_updates as f64 / elapsed);
    if let Some(path) = &a.record {
        output(m, path)?;
    }
    output(m, &a.roads)?;
    if let Some(reason) = out.aborted {
        return Err(CliError::Runtime(anyhow!("{reason}; outputs are partial")));
    }
    Ok(a.roads.clone())
}

fn analyze(a: &AnalyzeArgs, m: &mut RunManifest) -> Result<PathBuf, CliError> {
    for p in [Some(&a.record), Some(&a.roads), Some(&a.trips), a.compare_speeds.as_ref(), a.od.as_ref(), a.compare_od.as_ref()]
        .into_iter()
        .flatten()
    {
        input(m, p)?;
    }
    let file = File::open(&a.record).with_context(|| a.record.display().to_string()).invalid()?;
    let load = read_records(BufReader::new(file)).invalid()?;
    if load.truncated {
        warn!("record stream is truncated; using {} complete records", load.records.len());
    }
    let roads = io::load_road_speeds(&a.roads).invalid()?;
    let trips = io::load_trips(&a.trips).invalid()?;
    let tt = metrics::travel_times_from_records(&load.records, &trips, roads.dt, roads.end_time);

    let mut comparisons = Comparisons::default();
    if let Some(path) = &a.compare_speeds {
        let real = io::load_road_speeds(path).invalid()?;
        let (ours, theirs) = (metrics::speed_series(&roads), metrics::speed_series(&real));
        comparisons.speed_rmse = Some(metrics::rmse_speeds(&ours, &theirs).invalid()?);
        let (x, y) = metrics::matched_speeds(&ours, &theirs).invalid()?;
        comparisons.speed_spearman = metrics::spearman(&x, &y).map_err(|e| warn!("speed correlation: {e}")).ok();
    }
    if let (Some(od), Some(real)) = (&a.od, &a.compare_od) {
        let (od, real) = (io::load_od(od).invalid()?, io::load_od(real).invalid()?);
        comparisons.od_cpc = Some(metrics::cpc(&od, &real).invalid()?);
        comparisons.od_rmse = Some(metrics::rmse_od(&od, &real).invalid()?);
    }

    let report = Report {
        att: metrics::att(&tt).ok(),
        att_penalized: metrics::att_penalized(&tt).ok(),
        finished_trips: tt.finished.len(),
        unfinished_trips: tt.unfinished,
        unserved_trips: tt.unserved,
        record_count: load.records.len(),
        records_truncated: load.truncated,
        road_speeds: roads.rows.clone(),
        comparisons,
    };
    io::write_text(&a.report, &io::report_to_string(&report)).failed()?;
    output(m, &a.report)?;
    match report.att {
        Some(att) => println!("att {att:.2} s over {} finished trips", report.finished_trips),
        None => println!("att undefined: no finished trips"),
    }
    println!("unfinished {} | unserved {}", report.unfinished_trips, report.unserved_trips);
    Ok(a.report.clone())
}
