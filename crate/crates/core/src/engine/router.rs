//! Free-flow shortest paths over the lane graph.
//!
//! Nodes are lanes. A road lane leads to every open connector that departs
//! from a lane reachable by lane changes on the same road; a connector
//! leads to its outgoing lane. Entering a lane costs its free-flow time.
//! Costs are summed in integer microseconds so equal-cost paths tie
//! exactly regardless of summation order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::network::{LaneId, RoadNetwork};

use super::EngineError;

pub type Route = Vec<LaneId>;

/// Microseconds of free-flow travel.
pub fn lane_cost(net: &RoadNetwork, lane: LaneId) -> u64 {
    (net.lanes[lane as usize].free_flow_time() * 1e6).round() as u64
}

#[derive(Debug, Clone)]
pub struct Router {
    cost: Vec<u64>,
    /// Sorted by lane id.
    next: Vec<Vec<LaneId>>,
    open: Vec<bool>,
    road_of: Vec<Option<usize>>,
}

impl Router {
    pub fn new(net: &RoadNetwork) -> Self {
        let n = net.lanes.len();
        let road_index: std::collections::BTreeMap<&str, usize> =
            net.roads.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let mut next = vec![Vec::new(); n];
        for lane in &net.lanes {
            if lane.is_connector() {
                next[lane.id as usize] = lane.successors.iter().copied().filter(|&l| net.lanes[l as usize].is_open()).collect();
                continue;
            }
            let road = &net.roads[&lane.parent];
            let mut out: Vec<LaneId> = road
                .lanes
                .iter()
                .filter(|&&other| net.laterally_reachable(lane.id, other))
                .flat_map(|&other| net.lanes[other as usize].successors.iter().copied())
                .filter(|&c| net.lanes[c as usize].is_open())
                .collect();
            out.sort_unstable();
            out.dedup();
            next[lane.id as usize] = out;
        }
        Self {
            cost: (0..n as LaneId).map(|l| lane_cost(net, l)).collect(),
            next,
            open: net.lanes.iter().map(|l| l.is_open()).collect(),
            road_of: net
                .lanes
                .iter()
                .map(|l| if l.is_connector() { None } else { road_index.get(l.parent.as_str()).copied() })
                .collect(),
        }
    }

    /// Cost of entering every lane of `route`, origin included.
    pub fn route_cost(&self, route: &[LaneId]) -> u64 {
        route.iter().map(|&l| self.cost[l as usize]).sum()
    }

    pub fn lane_cost(&self, lane: LaneId) -> u64 {
        self.cost[lane as usize]
    }

    /// Lanes directly reachable from `lane`, ascending.
    pub fn successors(&self, lane: LaneId) -> &[LaneId] {
        &self.next[lane as usize]
    }

    /// Shortest route from `origin` to any lane on the road of `dest`.
    /// Among equal-cost routes the lexicographically smallest lane sequence
    /// wins.
    pub fn route(&self, origin: LaneId, dest: LaneId) -> Result<Route, EngineError> {
        let n = self.cost.len();
        for l in [origin, dest] {
            if l as usize >= n || self.road_of[l as usize].is_none() {
                return Err(EngineError::UnknownLane(l));
            }
        }
        let no_route = EngineError::NoRoute { from: origin, to: dest };
        let target_road = self.road_of[dest as usize];
        let is_target = |l: LaneId| self.road_of[l as usize] == target_road;
        if is_target(origin) {
            return Ok(vec![origin]);
        }

        let mut dist = vec![u64::MAX; n];
        dist[origin as usize] = self.cost[origin as usize];
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((dist[origin as usize], origin)));
        let mut best = u64::MAX;
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            if d > best {
                break;
            }
            if is_target(u) {
                best = best.min(d);
                continue;
            }
            for &v in &self.next[u as usize] {
                let nd = d + self.cost[v as usize];
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        if best == u64::MAX {
            return Err(no_route);
        }

        // Lanes from which an optimal target is reachable along tight edges.
        let tight = |u: LaneId, v: LaneId| {
            dist[u as usize] != u64::MAX && dist[u as usize] + self.cost[v as usize] == dist[v as usize]
        };
        let mut on_optimal = vec![false; n];
        let mut settled: Vec<LaneId> = (0..n as LaneId).filter(|&l| dist[l as usize] <= best).collect();
        settled.sort_by_key(|&l| Reverse(dist[l as usize]));
        for &u in &settled {
            on_optimal[u as usize] = if is_target(u) {
                dist[u as usize] == best
            } else {
                self.next[u as usize].iter().any(|&v| on_optimal[v as usize] && tight(u, v))
            };
        }

        let mut route = vec![origin];
        let mut u = origin;
        while !is_target(u) {
            u = *self.next[u as usize]
                .iter()
                .find(|&&v| on_optimal[v as usize] && tight(u, v))
                .ok_or_else(|| no_route.clone())?;
            route.push(u);
        }
        Ok(route)
    }

    pub fn is_open(&self, lane: LaneId) -> bool {
        self.open[lane as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_grid;

    #[test]
    fn origin_on_destination_road() {
        let net = generate_grid(2, 2, 100.0, 2, 10.0).unwrap();
        let r = Router::new(&net);
        let road = net.roads.values().next().unwrap();
        assert_eq!(r.route(road.lanes[0], road.lanes[1]).unwrap(), vec![road.lanes[0]]);
    }

    #[test]
    fn route_alternates_roads_and_connectors() {
        let net = generate_grid(3, 3, 100.0, 1, 10.0).unwrap();
        let r = Router::new(&net);
        let lanes: Vec<LaneId> = net.road_lanes().map(|l| l.id).collect();
        let route = r.route(lanes[0], *lanes.last().unwrap()).unwrap();
        for (k, &l) in route.iter().enumerate() {
            assert_eq!(net.lanes[l as usize].is_connector(), k % 2 == 1);
        }
        assert_eq!(r.route_cost(&route), route.iter().map(|&l| lane_cost(&net, l)).sum::<u64>());
    }

    #[test]
    fn connector_is_not_a_valid_endpoint() {
        let net = generate_grid(2, 2, 100.0, 1, 10.0).unwrap();
        let c = net.lanes.iter().find(|l| l.is_connector()).unwrap().id;
        assert_eq!(Router::new(&net).route(c, 0), Err(EngineError::UnknownLane(c)));
    }
}
