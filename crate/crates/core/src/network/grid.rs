use super::{build_network, BuildOptions, NetworkError, RawJunction, RawRoad, RoadNetwork};
use crate::geometry::{offset_polyline, Point};

/// Synthesizes a Manhattan grid of `rows × cols` junctions spaced
/// `block_length` apart, with one road per direction on every edge.
///
/// Junction `(r, c)` sits at `(c·block, r·block)` and is named `j_r_c`; the
/// road from `(r1, c1)` to `(r2, c2)` is named `r_r1_c1_r2_c2`.
pub fn generate_grid(
    rows: usize,
    cols: usize,
    block_length: f64,
    lanes_per_direction: u32,
    max_speed: f64,
) -> Result<RoadNetwork, NetworkError> {
    if rows < 2 || cols < 2 {
        return Err(NetworkError::Precondition(format!(
            "grid needs at least 2 rows and 2 columns, got {rows}×{cols}"
        )));
    }
    if lanes_per_direction == 0 || !(block_length > 0.0) || !(max_speed > 0.0) {
        return Err(NetworkError::Precondition(
            "lanes, block length and speed must be positive".into(),
        ));
    }
    let options = BuildOptions::default();
    // Each direction runs to the right of the edge centerline.
    let half_width = lanes_per_direction as f64 * options.lane_width / 2.0;
    let options = BuildOptions {
        snap_radius: options.snap_radius.max(half_width + 1.0),
        ..options
    };

    let pos = |r: usize, c: usize| Point::new(c as f64 * block_length, r as f64 * block_length);
    let jid = |r: usize, c: usize| format!("j_{r}_{c}");
    let mut junctions: Vec<RawJunction> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| RawJunction {
            id: jid(r, c),
            in_roads: Vec::new(),
            out_roads: Vec::new(),
            position: pos(r, c),
        })
        .collect();

    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols - 1 {
            edges.push(((r, c), (r, c + 1)));
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols {
            edges.push(((r, c), (r + 1, c)));
        }
    }

    let mut roads = Vec::with_capacity(edges.len() * 2);
    for (a, b) in edges {
        for (from, to) in [(a, b), (b, a)] {
            let id = format!("r_{}_{}_{}_{}", from.0, from.1, to.0, to.1);
            let polyline = offset_polyline(&[pos(from.0, from.1), pos(to.0, to.1)], half_width);
            roads.push(RawRoad {
                id: id.clone(),
                polyline,
                lane_count: lanes_per_direction,
                max_speed,
            });
            junctions[from.0 * cols + from.1].out_roads.push(id.clone());
            junctions[to.0 * cols + to.1].in_roads.push(id);
        }
    }
    build_network(&roads, &junctions, &options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::validate_network;

    #[test]
    fn two_by_two_counts() {
        let net = generate_grid(2, 2, 200.0, 1, 16.67).unwrap();
        assert_eq!(net.junctions.len(), 4);
        assert_eq!(net.roads.len(), 8);
        // corners only: no signals
        assert!(net.junctions.values().all(|j| j.signal.is_none()));
        assert!(validate_network(&net).is_empty());
    }

    #[test]
    fn four_by_four_has_sixteen_junctions() {
        let net = generate_grid(4, 4, 200.0, 1, 16.67).unwrap();
        assert_eq!(net.junctions.len(), 16);
        assert_eq!(net.roads.len(), 2 * (4 * 3 + 4 * 3));
        let signalized = net.junctions.values().filter(|j| j.signal.is_some()).count();
        assert_eq!(signalized, 16 - 4);
        assert!(validate_network(&net).is_empty());
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        assert!(matches!(
            generate_grid(1, 4, 200.0, 1, 16.67),
            Err(NetworkError::Precondition(_))
        ));
    }
}
