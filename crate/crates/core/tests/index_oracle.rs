mod common;

use proptest::prelude::*;
use trafficsim::engine::{EngineConfig, LaneIndex, Motion, Snapshot, World};

/// Per-lane order computed by a plain sort, independent of the index.
fn sorted_by_lane(snapshot: &Snapshot, lanes: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); lanes];
    let mut all: Vec<(usize, &Motion)> =
        snapshot.motions.iter().enumerate().filter_map(|(slot, m)| m.as_ref().map(|m| (slot, m))).collect();
    all.sort_by(|a, b| b.1.s.partial_cmp(&a.1.s).unwrap().then(a.1.id.cmp(&b.1.id)));
    for (slot, m) in all {
        out[m.lane as usize].push(slot);
    }
    out
}

fn snapshot(max_lanes: u32) -> impl Strategy<Value = (u32, Snapshot)> {
    (1..=max_lanes).prop_flat_map(|lanes| {
        // Positions come from a coarse lattice so ties are common.
        let motion = (0..lanes, 0u32..400, any::<bool>());
        (Just(lanes), prop::collection::vec(motion, 0..200)).prop_map(|(lanes, raw)| {
            let motions = raw
                .into_iter()
                .enumerate()
                .map(|(slot, (lane, s, driving))| {
                    driving.then_some(Motion { id: (slot as u64 * 7919) % 1009, lane, s: s as f64 * 0.25, v: 1.0, length: 5.0 })
                })
                .collect();
            (lanes, Snapshot { motions })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn index_equals_independent_sort((lanes, snap) in snapshot(12)) {
        let index = LaneIndex::build(lanes as usize, &snap);
        let want = sorted_by_lane(&snap, lanes as usize);
        for l in 0..lanes {
            prop_assert_eq!(index.lane(l), want[l as usize].as_slice());
        }
        let indexed: usize = (0..lanes).map(|l| index.count(l)).sum();
        prop_assert_eq!(indexed, snap.motions.iter().flatten().count());
    }
}

#[test]
fn three_vehicles_front_first() {
    let net = common::grid(2, 2, 1);
    let lane = net.road_lanes().next().unwrap().id;
    let mut world = World::new(net, &[], EngineConfig::default(), 0).unwrap();
    for (id, s) in [(0, 10.0), (1, 50.0), (2, 30.0)] {
        world.insert_vehicle(id, vec![lane], 0, s, 0.0).unwrap();
    }
    let (index, snap) = world.prepare();
    let order: Vec<f64> = index.lane(lane).iter().map(|&slot| snap.get(slot).s).collect();
    assert_eq!(order, vec![50.0, 30.0, 10.0]);
}

#[test]
fn thousand_random_vehicles_in_a_world() {
    use rand::{Rng, SeedableRng};
    let net = common::grid(4, 4, 2);
    let lanes: Vec<_> = net.road_lanes().map(|l| (l.id, l.length)).collect();
    let mut world = World::new(net.clone(), &[], EngineConfig::default(), 0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for id in 0..1000 {
        let (lane, len) = lanes[rng.random_range(0..lanes.len())];
        world.insert_vehicle(id, vec![lane], 0, rng.random_range(0.0..len), 0.0).unwrap();
    }
    let (index, snap) = world.prepare();
    let want = sorted_by_lane(&snap, net.lanes.len());
    for l in 0..net.lanes.len() {
        assert_eq!(index.lane(l as u32), want[l].as_slice());
    }
}
