//! Gravity and radiation trip distribution.

use rayon::prelude::*;

use super::{distance, DemandError, ODMatrix, Zone};

fn check_zones(zones: &[Zone]) -> Result<(), DemandError> {
    if zones.iter().filter(|z| z.mass > 0.0).count() < 2 {
        return Err(DemandError::TooFewMassiveZones);
    }
    for (i, a) in zones.iter().enumerate() {
        for b in &zones[i + 1..] {
            if a.mass > 0.0 && b.mass > 0.0 && distance(a, b) == 0.0 {
                return Err(DemandError::DegenerateDistance(a.id, b.id));
            }
        }
    }
    Ok(())
}

/// Power-law gravity model: `T_ij = K · m_i · m_j · d_ij^(−gamma)`, scaled so
/// the matrix sums to `total_trips`. The diagonal is zero.
pub fn gravity_od(zones: &[Zone], total_trips: f64, gamma: f64) -> Result<ODMatrix, DemandError> {
    if !(total_trips > 0.0) || !(gamma > 0.0) {
        return Err(DemandError::InvalidArgument("total_trips and gamma must be positive".into()));
    }
    check_zones(zones)?;
    let n = zones.len();
    let raw: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let (a, b) = (&zones[i], &zones[j]);
            if i == j || a.mass <= 0.0 || b.mass <= 0.0 {
                0.0
            } else {
                a.mass * b.mass * libm::pow(distance(a, b), -gamma)
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(DemandError::InvalidArgument("gravity weights vanish or overflow".into()));
    }
    let k = total_trips / sum;
    Ok(ODMatrix {
        zones: zones.to_vec(),
        counts: raw.into_iter().map(|w| w * k).collect(),
    })
}

/// Radiation model. `s_ij` is the total mass strictly closer to zone `i` than
/// `j` is, excluding `i` and `j`. Rows are renormalized to sum to
/// `out_trips[i]`.
pub fn radiation_od(zones: &[Zone], out_trips: &[f64]) -> Result<ODMatrix, DemandError> {
    if zones.len() < 2 || out_trips.len() != zones.len() {
        return Err(DemandError::InvalidArgument(
            "need at least two zones and one production value per zone".into(),
        ));
    }
    if out_trips.iter().any(|o| !(*o >= 0.0) || !o.is_finite()) {
        return Err(DemandError::InvalidArgument("productions must be finite and non-negative".into()));
    }
    if zones.iter().any(|z| !(z.mass >= 0.0)) {
        return Err(DemandError::InvalidArgument("masses must be non-negative".into()));
    }
    check_zones(zones)?;
    let n = zones.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let origin = &zones[i];
            let mut row: Vec<f64> = (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let d_ij = distance(origin, &zones[j]);
                    let s: f64 = (0..n)
                        .filter(|&k| k != i && k != j && distance(origin, &zones[k]) < d_ij)
                        .map(|k| zones[k].mass)
                        .sum();
                    let (mi, mj) = (origin.mass, zones[j].mass);
                    let denom = (mi + s) * (mi + mj + s);
                    if denom > 0.0 {
                        out_trips[i] * mi * mj / denom
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = row.iter().filter(|x| x.is_finite()).sum();
            if total > 0.0 {
                let scale = out_trips[i] / total;
                for x in &mut row {
                    *x = if x.is_finite() { *x * scale } else { 0.0 };
                }
            }
            row
        })
        .collect();
    Ok(ODMatrix {
        zones: zones.to_vec(),
        counts: rows.concat(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    pub(crate) fn zone(id: u32, x: f64, y: f64, mass: f64) -> Zone {
        Zone {
            id,
            centroid: Point::new(x, y),
            mass,
            lanes: vec![0],
        }
    }

    #[test]
    fn two_equal_zones_split_evenly() {
        let od = gravity_od(&[zone(0, 0.0, 0.0, 5.0), zone(1, 3.0, 4.0, 5.0)], 100.0, 2.0).unwrap();
        assert_eq!(od.counts, vec![0.0, 50.0, 50.0, 0.0]);
    }

    #[test]
    fn three_zone_gravity_hand_evaluation() {
        let h = 3f64.sqrt() / 2.0;
        let zones = [zone(1, 0.0, 0.0, 1.0), zone(2, 1.0, 0.0, 1.0), zone(3, 0.5, h, 2.0)];
        let od = gravity_od(&zones, 100.0, 1.0).unwrap();
        // mass products 1, 2, 2 in both directions: 10 units, K = 10
        let expected = [[0.0, 10.0, 20.0], [10.0, 0.0, 20.0], [20.0, 20.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((od.get(i, j) - expected[i][j]).abs() < 1e-9, "{i},{j}: {}", od.get(i, j));
            }
        }
    }

    #[test]
    fn steep_gamma_concentrates_on_closest_pair() {
        let zones = [zone(0, 0.0, 0.0, 1.0), zone(1, 1.0, 0.0, 1.0), zone(2, 10.0, 0.0, 1.0)];
        let od = gravity_od(&zones, 100.0, 30.0).unwrap();
        assert!(od.get(0, 1) + od.get(1, 0) > 99.999);
    }

    #[test]
    fn coincident_massive_centroids_fail() {
        let zones = [zone(0, 1.0, 1.0, 1.0), zone(1, 1.0, 1.0, 2.0), zone(2, 5.0, 1.0, 2.0)];
        assert_eq!(gravity_od(&zones, 10.0, 2.0), Err(DemandError::DegenerateDistance(0, 1)));
        assert_eq!(radiation_od(&zones, &[1.0; 3]), Err(DemandError::DegenerateDistance(0, 1)));
    }

    #[test]
    fn massless_input_fails() {
        let zones = [zone(0, 0.0, 0.0, 0.0), zone(1, 1.0, 0.0, 0.0)];
        assert_eq!(gravity_od(&zones, 10.0, 2.0), Err(DemandError::TooFewMassiveZones));
    }

    #[test]
    fn radiation_two_zones_takes_whole_row() {
        let zones = [zone(0, 0.0, 0.0, 3.0), zone(1, 7.0, 0.0, 1.0)];
        let od = radiation_od(&zones, &[40.0, 12.0]).unwrap();
        assert_eq!(od.counts, vec![0.0, 40.0, 12.0, 0.0]);
    }

    #[test]
    fn radiation_zero_production_row_is_zero() {
        let zones = [zone(0, 0.0, 0.0, 1.0), zone(1, 1.0, 0.0, 1.0), zone(2, 2.0, 0.0, 1.0)];
        let od = radiation_od(&zones, &[0.0, 5.0, 5.0]).unwrap();
        assert_eq!(od.row(0), &[0.0, 0.0, 0.0]);
        assert!((od.row(1).iter().sum::<f64>() - 5.0).abs() < 1e-12);
    }
}
