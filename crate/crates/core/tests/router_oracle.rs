mod common;

use rand::{Rng, SeedableRng};
use trafficsim::engine::{EngineError, Router};
use trafficsim::network::{LaneId, RoadNetwork};

/// Entering cost of every lane in integer microseconds.
fn costs(net: &RoadNetwork) -> Vec<u64> {
    net.lanes.iter().map(|l| (l.length / l.max_speed * 1e6).round() as u64).collect()
}

/// Lane graph edges: road lane to connector, connector to outgoing lane.
/// Single-lane roads need no lateral moves.
fn edges(net: &RoadNetwork) -> Vec<(LaneId, LaneId)> {
    net.lanes.iter().flat_map(|l| l.successors.iter().map(move |&s| (l.id, s))).collect()
}

/// Bellman-Ford distance from every lane to the destination road.
fn cost_to_go(net: &RoadNetwork, dest_road: &str, cost: &[u64]) -> Vec<u64> {
    let mut d = vec![u64::MAX; net.lanes.len()];
    for l in &net.roads[dest_road].lanes {
        d[*l as usize] = 0;
    }
    let e = edges(net);
    loop {
        let mut changed = false;
        for &(u, v) in &e {
            if d[v as usize] != u64::MAX && d[v as usize] + cost[v as usize] < d[u as usize] {
                d[u as usize] = d[v as usize] + cost[v as usize];
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Every optimal route by depth-first enumeration, origin included.
fn optimal_routes(net: &RoadNetwork, origin: LaneId, dest_road: &str, cost: &[u64]) -> (u64, Vec<Vec<LaneId>>) {
    let to_go = cost_to_go(net, dest_road, cost);
    let best = cost[origin as usize] + to_go[origin as usize];
    let mut found = Vec::new();
    let mut path = vec![origin];
    fn dfs(
        net: &RoadNetwork,
        dest_road: &str,
        cost: &[u64],
        to_go: &[u64],
        budget: u64,
        path: &mut Vec<LaneId>,
        found: &mut Vec<Vec<LaneId>>,
    ) {
        let u = *path.last().unwrap();
        if !net.lanes[u as usize].is_connector() && net.lanes[u as usize].parent == dest_road {
            if budget == 0 {
                found.push(path.clone());
            }
            return;
        }
        for &v in &net.lanes[u as usize].successors {
            let c = cost[v as usize];
            if c <= budget && to_go[v as usize] != u64::MAX && to_go[v as usize] <= budget - c {
                path.push(v);
                dfs(net, dest_road, cost, to_go, budget - c, path, found);
                path.pop();
            }
        }
    }
    dfs(net, dest_road, cost, &to_go, best - cost[origin as usize], &mut path, &mut found);
    (best, found)
}

#[test]
fn router_matches_exhaustive_search_on_five_by_five() {
    let net = common::grid(5, 5, 1);
    let router = Router::new(&net);
    let cost = costs(&net);
    let road_lanes: Vec<LaneId> = net.road_lanes().map(|l| l.id).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut multi = 0;
    for _ in 0..200 {
        let origin = road_lanes[rng.random_range(0..road_lanes.len())];
        let dest = road_lanes[rng.random_range(0..road_lanes.len())];
        let dest_road = net.lanes[dest as usize].parent.clone();
        let route = router.route(origin, dest).unwrap();
        if net.lanes[origin as usize].parent == dest_road {
            assert_eq!(route, vec![origin]);
            continue;
        }
        let (best, all) = optimal_routes(&net, origin, &dest_road, &cost);
        assert_eq!(router.route_cost(&route), best, "{origin} -> {dest}");
        multi += usize::from(all.len() > 1);
        assert_eq!(&route, all.iter().min().unwrap(), "tie-break for {origin} -> {dest}");
    }
    assert!(multi > 0, "sample should contain equal-cost alternatives");
}

#[test]
fn two_by_two_picks_smaller_ids_among_equal_paths() {
    let net = common::grid(2, 2, 1);
    let router = Router::new(&net);
    let origin = net.roads["r_0_0_0_1"].lanes[0];
    let dest = net.roads["r_1_0_0_0"].lanes[0];
    let cost = costs(&net);
    let (_, all) = optimal_routes(&net, origin, "r_1_0_0_0", &cost);
    for _ in 0..3 {
        assert_eq!(&router.route(origin, dest).unwrap(), all.iter().min().unwrap());
    }
}

#[test]
fn unknown_and_connector_endpoints_are_rejected() {
    let net = common::grid(2, 2, 1);
    let router = Router::new(&net);
    let connector = net.lanes.iter().find(|l| l.is_connector()).unwrap().id;
    assert_eq!(router.route(connector, 0), Err(EngineError::UnknownLane(connector)));
    assert!(router.route(0, 9999).is_err());
}
