mod common;

use common::ring;
use trafficsim::engine::{equilibrium_gap, EngineConfig, World};

#[test]
fn ring_platoon_settles_at_equilibrium_gap() {
    let (net, lap) = ring(250.0, 15.0);
    let offsets: Vec<f64> = lap
        .iter()
        .scan(0.0, |acc, &l| {
            let start = *acc;
            *acc += net.lanes[l as usize].length;
            Some(start)
        })
        .collect();
    let perimeter: f64 = lap.iter().map(|&l| net.lanes[l as usize].length).sum();
    let config = EngineConfig::default();
    let count = 30usize;
    let mut world = World::new(net.clone(), &[], config.clone(), 3).unwrap();
    for k in 0..count {
        // Uneven start: spacing jitters by up to ±4 m.
        let jitter = [0.0, 4.0, -3.0, 2.5, -4.0][k % 5];
        let x = k as f64 * perimeter / count as f64 + jitter + 5.0;
        let i = offsets.iter().rposition(|&o| o <= x).unwrap();
        let route: Vec<_> = lap.iter().cycle().skip(i).take(lap.len() * 200).copied().collect();
        world.insert_vehicle(k as u64, route, 0, x - offsets[i], 0.0).unwrap();
    }
    for _ in 0..3000 {
        world.step();
    }

    let pos: Vec<f64> = world
        .vehicles()
        .iter()
        .map(|v| offsets[lap.iter().position(|&l| l == v.lane).unwrap()] + v.s)
        .collect();
    let v_e = world.vehicles().iter().map(|v| v.v).sum::<f64>() / count as f64;
    let want = equilibrium_gap(v_e, &config.idm, 15.0);
    for (k, me) in pos.iter().enumerate() {
        let ahead = pos
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &p)| (p - me).rem_euclid(perimeter))
            .fold(f64::INFINITY, f64::min);
        let gap = ahead - config.vehicle_length;
        assert!((gap - want).abs() <= 0.01 * want, "vehicle {k}: gap {gap}, equilibrium {want} at v {v_e}");
    }
    assert!(world.vehicles().iter().all(|v| (v.v - v_e).abs() < 1e-3));
}
