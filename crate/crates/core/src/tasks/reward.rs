//! Per-step performance measures. All functions are pure.

use super::assignment::{assignment_cost, hungarian};
use crate::assets::CupSpec;
use crate::error::{Error, Result};
use crate::Vec3;

/// Weight of the spilled fraction in the transport reward.
pub const SPILL_PENALTY: f64 = 4.0;
/// Weight of the centroid displacement in the fold reward.
pub const FOLD_DISPLACEMENT_PENALTY: f64 = 1.0;
pub const SPREAD_CELL: f64 = 0.01;
/// Half-width of the square region rasterized by the spread reward.
pub const SPREAD_EXTENT: f64 = 1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WaterTally {
    pub in_control: usize,
    pub in_target: usize,
    pub spilled: usize,
    pub total: usize,
}

impl WaterTally {
    fn fraction(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            count as f64 / self.total as f64
        }
    }

    pub fn control_fraction(&self) -> f64 {
        self.fraction(self.in_control)
    }

    pub fn target_fraction(&self) -> f64 {
        self.fraction(self.in_target)
    }

    pub fn spilled_fraction(&self) -> f64 {
        self.fraction(self.spilled)
    }
}

/// Counts particles inside each cup's cavity. The controlled cup wins where
/// the cavities overlap.
pub fn classify_water(
    positions: &[Vec3],
    control: &CupSpec,
    target: Option<&CupSpec>,
) -> WaterTally {
    let mut t = WaterTally {
        total: positions.len(),
        ..WaterTally::default()
    };
    for &p in positions {
        if control.contains(p) {
            t.in_control += 1;
        } else if target.is_some_and(|c| c.contains(p)) {
            t.in_target += 1;
        } else {
            t.spilled += 1;
        }
    }
    t
}

pub fn reward_transport(tally: &WaterTally, cup_x: f64, target_x: f64) -> f64 {
    -(cup_x - target_x).abs() - SPILL_PENALTY * tally.spilled_fraction()
}

pub fn reward_pour(tally: &WaterTally) -> f64 {
    tally.target_fraction()
}

pub fn reward_pour_amount(tally: &WaterTally, goal_fraction: f64) -> f64 {
    -(tally.target_fraction() - goal_fraction).abs()
}

pub fn reward_straighten(positions: &[Vec3], straight_length: f64) -> f64 {
    match (positions.first(), positions.last()) {
        (Some(&a), Some(&b)) => -((a - b).length() - straight_length).abs(),
        _ => -straight_length,
    }
}

/// Area in m² covered by discs of `radius` around the particles, projected
/// onto the floor and rasterized on a square grid of `cell` spacing over
/// `[-extent, extent]²`. A cell counts when its centre lies inside a disc.
pub fn covered_area(positions: &[Vec3], radius: f64, cell: f64, extent: f64) -> f64 {
    let n = (2.0 * extent / cell).round() as usize;
    let mut covered = vec![false; n * n];
    let r2 = radius * radius;
    let index = |v: f64| ((v + extent) / cell).floor();
    for p in positions {
        let (x0, x1) = (index(p.x - radius), index(p.x + radius));
        let (z0, z1) = (index(p.z - radius), index(p.z + radius));
        if x1 < 0.0 || z1 < 0.0 || x0 >= n as f64 || z0 >= n as f64 {
            continue;
        }
        let clamp = |v: f64| v.clamp(0.0, (n - 1) as f64) as usize;
        for ix in clamp(x0)..=clamp(x1) {
            let cx = -extent + (ix as f64 + 0.5) * cell;
            for iz in clamp(z0)..=clamp(z1) {
                let cz = -extent + (iz as f64 + 0.5) * cell;
                let (dx, dz) = (cx - p.x, cz - p.z);
                if dx * dx + dz * dz <= r2 {
                    covered[ix * n + iz] = true;
                }
            }
        }
    }
    covered.iter().filter(|&&c| c).count() as f64 * cell * cell
}

pub fn reward_spread(positions: &[Vec3], spacing: f64) -> f64 {
    covered_area(positions, spacing, SPREAD_CELL, SPREAD_EXTENT)
}

/// Index pairs `(i, j)`-`(i, l-1-j)` mirrored across the middle column of a
/// `w x l` grid (particle `(i, j)` has index `i * l + j`). The middle column
/// of an odd grid pairs with itself.
pub fn fold_pairs(w: usize, l: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(w * l.div_ceil(2));
    for i in 0..w {
        for j in 0..l.div_ceil(2) {
            pairs.push((i * l + j, i * l + (l - 1 - j)));
        }
    }
    pairs
}

/// Mean mirror-pair distance plus the planar displacement of the centroid.
pub fn reward_fold(positions: &[Vec3], w: usize, l: usize, initial_center: Vec3) -> f64 {
    let pairs = fold_pairs(w, l);
    let mean = pairs
        .iter()
        .map(|&(a, b)| (positions[a] - positions[b]).length())
        .sum::<f64>()
        / pairs.len() as f64;
    let centroid = positions.iter().copied().sum::<Vec3>() / positions.len() as f64;
    let shift = Vec3::new(
        centroid.x - initial_center.x,
        0.0,
        centroid.z - initial_center.z,
    );
    -mean - FOLD_DISPLACEMENT_PENALTY * shift.length()
}

pub fn reward_drop(positions: &[Vec3], target: &[Vec3]) -> f64 {
    let sum: f64 = positions
        .iter()
        .zip(target)
        .map(|(a, b)| (*a - *b).length())
        .sum();
    -sum / positions.len() as f64
}

/// Sum of distances under the optimal one-to-one matching.
pub fn matching_cost(current: &[Vec3], goal: &[Vec3]) -> Result<f64> {
    if current.len() != goal.len() {
        return Err(Error::CountMismatch {
            current: current.len(),
            goal: goal.len(),
        });
    }
    let n = current.len();
    let cost: Vec<f64> = current
        .iter()
        .flat_map(|a| goal.iter().map(move |b| (*a - *b).length()))
        .collect();
    let assign = hungarian(&cost, n);
    Ok(assignment_cost(&cost, n, &assign))
}

pub fn reward_rope_config(current: &[Vec3], goal: &[Vec3]) -> Result<f64> {
    if current.is_empty() {
        return Ok(0.0);
    }
    Ok(-matching_cost(current, goal)? / current.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::CupPose;

    fn cup(x: f64) -> CupSpec {
        CupSpec {
            width: 0.2,
            length: 0.2,
            height: 0.2,
            wall_thickness: 0.01,
            pose: CupPose {
                x,
                y: 0.11,
                theta: 0.0,
            },
        }
    }

    #[test]
    fn tally_all_in_control() {
        let p = vec![Vec3::new(0.0, 0.1, 0.0); 5];
        let t = classify_water(&p, &cup(0.0), Some(&cup(1.0)));
        assert_eq!(
            t,
            WaterTally {
                in_control: 5,
                in_target: 0,
                spilled: 0,
                total: 5
            }
        );
    }

    #[test]
    fn tally_spilled_below_floor() {
        let p = [Vec3::new(0.5, -0.05, 0.0), Vec3::new(1.0, 0.1, 0.05)];
        let t = classify_water(&p, &cup(0.0), Some(&cup(1.0)));
        assert_eq!(
            t,
            WaterTally {
                in_control: 0,
                in_target: 1,
                spilled: 1,
                total: 2
            }
        );
    }

    #[test]
    fn transport_examples() {
        let none = WaterTally {
            in_control: 10,
            in_target: 0,
            spilled: 0,
            total: 10,
        };
        assert_eq!(reward_transport(&none, 0.7, 0.7), 0.0);
        assert_eq!(reward_transport(&none, 0.25, 0.75), -0.5);
        let half = WaterTally {
            in_control: 5,
            in_target: 0,
            spilled: 5,
            total: 10,
        };
        assert_eq!(reward_transport(&half, 0.7, 0.7), -2.0);
    }

    #[test]
    fn pour_examples() {
        let t = |k| WaterTally {
            in_control: 64 - k,
            in_target: k,
            spilled: 0,
            total: 64,
        };
        assert_eq!(reward_pour(&t(64)), 1.0);
        assert_eq!(reward_pour(&t(0)), 0.0);
        assert_eq!(reward_pour(&t(16)), 0.25);
    }

    #[test]
    fn pour_amount_examples() {
        let t = |k| WaterTally {
            in_control: 100 - k,
            in_target: k,
            spilled: 0,
            total: 100,
        };
        assert_eq!(reward_pour_amount(&t(50), 0.5), 0.0);
        assert_eq!(reward_pour_amount(&t(0), 0.5), -0.5);
        assert!((reward_pour_amount(&t(80), 0.55) - -0.25).abs() < 1e-15);
    }

    #[test]
    fn straighten_examples() {
        let straight: Vec<Vec3> = (0..5)
            .map(|i| Vec3::new(i as f64 * 0.25, 0.0, 0.0))
            .collect();
        assert_eq!(reward_straighten(&straight, 1.0), 0.0);
        let folded = [Vec3::ZERO, Vec3::X * 0.5, Vec3::ZERO];
        assert_eq!(reward_straighten(&folded, 1.0), -1.0);
    }

    #[test]
    fn spread_of_stacked_particles_is_one_disc() {
        let s = 0.0125;
        let p = vec![Vec3::new(0.123, 0.0, -0.321); 30];
        let exact = std::f64::consts::PI * s * s;
        let fine = covered_area(&p, s, 0.001, SPREAD_EXTENT);
        assert!((fine - exact).abs() < 0.03 * exact);
        // At 1 cm the error is bounded by one cell width along the rim.
        let coarse = reward_spread(&p, s);
        assert!((coarse - exact).abs() <= 2.0 * std::f64::consts::PI * s * SPREAD_CELL);
    }

    #[test]
    fn spread_of_nothing_is_zero() {
        assert_eq!(reward_spread(&[], 0.0125), 0.0);
    }

    #[test]
    fn spread_ignores_particles_outside_the_grid() {
        assert_eq!(reward_spread(&[Vec3::new(5.0, 0.0, 5.0)], 0.0125), 0.0);
    }

    #[test]
    fn flat_cloth_area_matches_fine_grid() {
        let s = 0.0125;
        let (w, l) = (40, 25);
        let p: Vec<Vec3> = (0..w)
            .flat_map(|i| {
                (0..l).map(move |j| Vec3::new(i as f64 * s - 0.2, 0.0, j as f64 * s - 0.1))
            })
            .collect();
        let coarse = reward_spread(&p, s);
        let fine = covered_area(&p, s, 0.001, SPREAD_EXTENT);
        let interior = (w - 1) as f64 * (l - 1) as f64 * s * s;
        assert!(coarse >= interior);
        assert!((coarse - fine).abs() < 0.05 * fine);
    }

    #[test]
    fn fold_pairs_cover_every_column_once() {
        assert_eq!(fold_pairs(1, 4), vec![(0, 3), (1, 2)]);
        assert_eq!(fold_pairs(2, 3), vec![(0, 2), (1, 1), (3, 5), (4, 4)]);
    }

    #[test]
    fn folded_cloth_scores_zero() {
        // Every column j sits on top of column l-1-j.
        let (w, l) = (3, 4);
        let p: Vec<Vec3> = (0..w)
            .flat_map(|i| (0..l).map(move |j| Vec3::new(i as f64, 0.0, (j.min(l - 1 - j)) as f64)))
            .collect();
        let center = p.iter().copied().sum::<Vec3>() / p.len() as f64;
        assert_eq!(reward_fold(&p, w, l, center), 0.0);
        let moved: Vec<Vec3> = p.iter().map(|q| *q + Vec3::new(0.1, 0.0, 0.0)).collect();
        assert!((reward_fold(&moved, w, l, center) - -0.1).abs() < 1e-12);
    }

    #[test]
    fn drop_examples() {
        let t: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert_eq!(reward_drop(&t, &t), 0.0);
        let lifted: Vec<Vec3> = t.iter().map(|p| *p + Vec3::Y * 0.3).collect();
        assert!((reward_drop(&lifted, &t) - -0.3).abs() < 1e-15);
    }

    #[test]
    fn rope_config_swap_and_mismatch() {
        let g = [Vec3::ZERO, Vec3::X, Vec3::Z];
        assert_eq!(reward_rope_config(&g, &g).unwrap(), 0.0);
        let swapped = [Vec3::X, Vec3::ZERO, Vec3::Z];
        assert_eq!(reward_rope_config(&swapped, &g).unwrap(), 0.0);
        assert!(matches!(
            reward_rope_config(&g[..2], &g),
            Err(Error::CountMismatch {
                current: 2,
                goal: 3
            })
        ));
    }
}
