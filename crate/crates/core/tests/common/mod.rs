#![allow(dead_code)]

use trafficsim::demand::{uniform_random_trips, Trip};
use trafficsim::engine::World;
use trafficsim::geometry::Point;
use trafficsim::network::{build_network, generate_grid, BuildOptions, LaneId, RawJunction, RawRoad, RoadNetwork};

pub fn grid(rows: usize, cols: usize, lanes: u32) -> RoadNetwork {
    generate_grid(rows, cols, 200.0, lanes, 13.89).unwrap()
}

pub fn random_trips(net: &RoadNetwork, count: usize, window: f64, seed: u64) -> Vec<Trip> {
    uniform_random_trips(net, count, (0.0, window), seed).unwrap()
}

/// Smallest bumper gap between consecutive vehicles on any lane.
pub fn min_gap(world: &World) -> f64 {
    let (index, snapshot) = world.prepare();
    let mut worst = f64::INFINITY;
    for lane in 0..index.lane_count() {
        for pair in index.lane(lane as u32).windows(2) {
            let (leader, follower) = (snapshot.get(pair[0]), snapshot.get(pair[1]));
            worst = worst.min(leader.s - leader.length - follower.s);
        }
    }
    worst
}

/// Single-lane square loop of four roads joined by unsignalized corners.
/// Returns the network and one lap as a lane sequence.
pub fn ring(side: f64, max_speed: f64) -> (RoadNetwork, Vec<LaneId>) {
    let corners = [
        Point::new(0.0, 0.0),
        Point::new(side, 0.0),
        Point::new(side, side),
        Point::new(0.0, side),
    ];
    let roads: Vec<RawRoad> = (0..4)
        .map(|k| RawRoad {
            id: format!("side{k}"),
            polyline: vec![corners[k], corners[(k + 1) % 4]],
            lane_count: 1,
            max_speed,
        })
        .collect();
    let junctions: Vec<RawJunction> = (0..4)
        .map(|k| RawJunction {
            id: format!("corner{k}"),
            in_roads: vec![format!("side{}", (k + 3) % 4)],
            out_roads: vec![format!("side{k}")],
            position: corners[k],
        })
        .collect();
    let net = build_network(&roads, &junctions, &BuildOptions::default()).unwrap();
    let mut lap = Vec::new();
    let mut lane = net.roads["side0"].lanes[0];
    for _ in 0..4 {
        let connector = net.lanes[lane as usize].successors[0];
        lap.push(lane);
        lap.push(connector);
        lane = net.lanes[connector as usize].successors[0];
    }
    (net, lap)
}

/// One road of `lanes` lanes from the origin eastwards, or two such roads
/// joined by an unsignalized junction when `segments` is 2.
pub fn corridor(segments: usize, length: f64, lanes: u32, max_speed: f64) -> RoadNetwork {
    let roads: Vec<RawRoad> = (0..segments)
        .map(|k| RawRoad {
            id: format!("seg{k}"),
            polyline: vec![Point::new(k as f64 * length, 0.0), Point::new((k + 1) as f64 * length, 0.0)],
            lane_count: lanes,
            max_speed,
        })
        .collect();
    let junctions: Vec<RawJunction> = (1..segments)
        .map(|k| RawJunction {
            id: format!("joint{k}"),
            in_roads: vec![format!("seg{}", k - 1)],
            out_roads: vec![format!("seg{k}")],
            position: Point::new(k as f64 * length, 0.0),
        })
        .collect();
    build_network(&roads, &junctions, &BuildOptions::default()).unwrap()
}

/// Connector from `from_road`'s single lane onto `to_road`.
pub fn connector_between(net: &RoadNetwork, from_road: &str, to_road: &str) -> LaneId {
    let lane = net.roads[from_road].lanes[0];
    *net.lanes[lane as usize]
        .successors
        .iter()
        .find(|&&c| net.lanes[net.lanes[c as usize].successors[0] as usize].parent == to_road)
        .unwrap()
}
