mod common;

use common::{grid, min_gap, random_trips};
use std::collections::HashMap;
use trafficsim::engine::{idm_accel, EngineConfig, NullRecorder, VehicleState, VehicleStatus, World};
use trafficsim::io::{read_records, RecordWriter};
use trafficsim::metrics::{att, travel_times_from_records};

/// Distance driven along the route so far.
fn odometer(world: &World, v: &VehicleState) -> f64 {
    let lanes = &world.network().lanes;
    v.route[..v.route_index].iter().map(|&l| lanes[l as usize].length).sum::<f64>() + v.s
}

#[test]
fn busy_grid_keeps_invariants_every_step() {
    let net = grid(4, 4, 2);
    let cap = net.lanes.iter().map(|l| l.max_speed).fold(0.0, f64::max);
    let trips = random_trips(&net, 800, 1200.0, 5);
    let total = trips.len();
    let config = EngineConfig::default();
    let (idm, mobil, dt) = (config.idm, config.mobil, config.dt);
    let mut world = World::new(net, &trips, config, 42).unwrap();
    let (mut injected, mut dropped, mut lane_changes) = (0, 0, 0);
    for _ in 0..1800 {
        let before: HashMap<u64, (f64, f64)> = world
            .vehicles()
            .iter()
            .filter(|v| v.status == VehicleStatus::Driving)
            .map(|v| (v.id, (odometer(&world, v), v.v)))
            .collect();
        let r = world.step();
        injected += r.injected;
        dropped += r.dropped;
        lane_changes += r.lane_changes.len();
        for e in &r.lane_changes {
            if let Some((gap, follower_v, own_v)) = e.new_follower {
                let a = idm_accel(follower_v, follower_v - own_v, gap, &idm, cap);
                assert!(a >= -mobil.safe_decel, "lane change of {} imposes {a}", e.vehicle);
            }
        }
        for v in world.vehicles().iter().filter(|v| v.status == VehicleStatus::Driving) {
            assert!(v.v >= 0.0 && v.v <= cap + 1e-9, "vehicle {} at {}", v.id, v.v);
            if let Some(&(odo, v0)) = before.get(&v.id) {
                let moved = odometer(&world, v) - odo;
                assert!(moved >= -1e-9 && moved <= v0 * dt + 0.5 * idm.max_accel * dt * dt + 1e-9);
            }
        }
        assert!(min_gap(&world) >= -1e-6, "collision at t={}", world.time());
        assert_eq!(injected, world.driving_count() + world.finished_count());
        assert_eq!(world.waiting_count() + injected + dropped, total);
    }
    assert!(world.finished_count() > total * 9 / 10);
    assert!(lane_changes > 0);
}

#[test]
fn empty_world_only_advances_time() {
    let net = grid(2, 2, 1);
    let mut world = World::new(net, &[], EngineConfig::default(), 1).unwrap();
    let out = world.run(100, &mut NullRecorder);
    assert_eq!(world.time(), 100.0);
    assert_eq!(out.vehicle_updates, 0);
    assert!(out.travel_times.finished.is_empty());
}

fn recorded_run(trips: usize, steps: u64, seed: u64) -> (World, Vec<trafficsim::demand::Trip>, Vec<u8>, u64) {
    let net = grid(4, 4, 1);
    let trips = random_trips(&net, trips, 3000.0, seed);
    let mut world = World::new(net, &trips, EngineConfig::default(), seed).unwrap();
    let mut writer = RecordWriter::new(Vec::new()).unwrap();
    let out = world.run(steps, &mut writer);
    assert!(out.aborted.is_none());
    (world, trips, writer.into_inner().unwrap(), out.vehicle_updates)
}

#[test]
fn record_stream_matches_driving_counts() {
    let (world, trips, bytes, updates) = recorded_run(100, 3600, 3);
    let load = read_records(bytes.as_slice()).unwrap();
    assert!(!load.truncated);
    // Step k records the vehicles driving after it; updates count those
    // driving before it, and the world starts empty.
    assert_eq!(load.records.len() as u64, updates + world.driving_count() as u64);
    assert!(load.records.windows(2).all(|w| (w[0].t, w[0].id) < (w[1].t, w[1].id)));
    let tt = world.travel_times();
    assert_eq!(tt.finished.len() + tt.unfinished + tt.unserved + world.dropped().len(), trips.len());
}

#[test]
fn att_from_records_equals_engine_att() {
    let (world, trips, bytes, _) = recorded_run(1000, 1800, 8);
    let load = read_records(bytes.as_slice()).unwrap();
    let from_records = travel_times_from_records(&load.records, &trips, 1.0, world.time());
    let engine = world.travel_times();
    assert_eq!(from_records.finished, engine.finished);
    assert_eq!(att(&from_records).unwrap(), att(&engine).unwrap());
    assert_eq!(from_records.unfinished, engine.unfinished);
}

#[test]
fn recorder_stream_is_independent_of_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| recorded_run(1500, 900, 42).2)
    };
    let single = run(1);
    assert_eq!(single, run(8));
    assert_eq!(single, run(8));
}
