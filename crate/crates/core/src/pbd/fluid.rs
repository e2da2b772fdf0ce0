//! Position-based fluids: per-particle density constraints over SPH kernels.

use std::f64::consts::PI;

use super::{DensityConstraint, NeighborLists};
use crate::Vec3;

/// Poly6 smoothing kernel evaluated at squared distance `r2`.
pub fn poly6(r2: f64, h: f64) -> f64 {
    let h2 = h * h;
    if r2 > h2 {
        return 0.0;
    }
    let k = 315.0 / (64.0 * PI * h.powi(9));
    let t = h2 - r2;
    k * t * t * t
}

/// Gradient of the spiky kernel with respect to `d = x_i - x_j`.
pub fn spiky_gradient(d: Vec3, h: f64) -> Vec3 {
    spiky_gradient_scaled(d, h, -45.0 / (PI * h.powi(6)))
}

fn spiky_gradient_scaled(d: Vec3, h: f64, k: f64) -> Vec3 {
    let r = d.length();
    if r <= 0.0 || r > h {
        return Vec3::ZERO;
    }
    let t = h - r;
    d * (k * t * t / r)
}

/// Density of an interior particle of an infinite cubic lattice.
pub fn lattice_rest_density(spacing: f64, h: f64, mass: f64) -> f64 {
    let reach = (h / spacing).ceil() as i64;
    let mut rho = 0.0;
    for a in -reach..=reach {
        for b in -reach..=reach {
            for c in -reach..=reach {
                let d = Vec3::new(a as f64, b as f64, c as f64) * spacing;
                rho += mass * poly6(d.length_squared(), h);
            }
        }
    }
    rho
}

/// Poly6 weights and spiky gradients of `x_i - x_j` for every neighbor
/// entry. Each pair is evaluated once and mirrored; the kernels are exactly
/// symmetric, so this matches evaluating both directions.
fn pair_kernels(positions: &[Vec3], nl: &NeighborLists, h: f64, scratch: &mut KernelScratch) {
    let h2 = h * h;
    let k_w = 315.0 / (64.0 * PI * h.powi(9));
    let k_g = -45.0 / (PI * h.powi(6));
    // Every entry is overwritten below, so stale values never leak.
    scratch.w.resize(nl.indices.len(), 0.0);
    scratch.g.resize(nl.indices.len(), Vec3::ZERO);
    let (w, g) = (&mut scratch.w, &mut scratch.g);
    for i in 0..nl.len() {
        for e in nl.upper[i]..nl.offsets[i + 1] {
            let j = nl.indices[e];
            let d = positions[i] - positions[j];
            let r2 = d.length_squared();
            let wi = if r2 > h2 {
                0.0
            } else {
                let t = h2 - r2;
                k_w * t * t * t
            };
            let gi = spiky_gradient_scaled(d, h, k_g);
            let m = nl.mirror[e];
            w[e] = wi;
            w[m] = wi;
            g[e] = gi;
            g[m] = -gi;
        }
    }
}

/// Reusable per-entry kernel buffers.
#[derive(Clone, Debug, Default)]
pub struct KernelScratch {
    w: Vec<f64>,
    g: Vec<Vec3>,
}

fn densities_from(masses: &[f64], nl: &NeighborLists, h: f64, w: &[f64]) -> Vec<f64> {
    let self_w = poly6(0.0, h);
    (0..nl.len())
        .map(|i| {
            let range = nl.offsets[i]..nl.offsets[i + 1];
            masses[i] * self_w
                + nl.indices[range.clone()]
                    .iter()
                    .zip(&w[range])
                    .map(|(&j, &wij)| masses[j] * wij)
                    .sum::<f64>()
        })
        .collect()
}

/// Poly6 density of every particle, including its own contribution.
pub fn densities(positions: &[Vec3], masses: &[f64], nl: &NeighborLists, h: f64) -> Vec<f64> {
    let mut scratch = KernelScratch::default();
    pair_kernels(positions, nl, h, &mut scratch);
    densities_from(masses, nl, h, &scratch.w)
}

/// Position corrections that push each fluid particle back towards the rest
/// density. Only compression is resisted (the constraint is unilateral), so
/// isolated or surface particles receive no correction.
///
/// `positions`, `masses` and `nl` all use the same (fluid-local) indexing.
pub fn project_density(
    positions: &[Vec3],
    masses: &[f64],
    nl: &NeighborLists,
    c: &DensityConstraint,
) -> Vec<Vec3> {
    project_density_with(positions, masses, nl, c, &mut KernelScratch::default())
}

pub fn project_density_with(
    positions: &[Vec3],
    masses: &[f64],
    nl: &NeighborLists,
    c: &DensityConstraint,
    scratch: &mut KernelScratch,
) -> Vec<Vec3> {
    let h = c.kernel_radius;
    let inv_rho0 = 1.0 / c.rest_density;
    pair_kernels(positions, nl, h, scratch);
    let grads = &scratch.g;
    let self_w = poly6(0.0, h);

    let lambdas: Vec<f64> = (0..positions.len())
        .map(|i| {
            let mut sum_w = 0.0;
            let mut grad_i = Vec3::ZERO;
            let mut sum_sq = 0.0;
            for e in nl.offsets[i]..nl.offsets[i + 1] {
                let mj = masses[nl.indices[e]];
                sum_w += mj * scratch.w[e];
                let gj = grads[e] * (mj * inv_rho0);
                sum_sq += gj.length_squared();
                grad_i += gj;
            }
            let rho = masses[i] * self_w + sum_w;
            let constraint = (rho * inv_rho0 - 1.0).max(0.0);
            if constraint == 0.0 {
                return 0.0;
            }
            sum_sq += grad_i.length_squared();
            -constraint / (sum_sq + c.relaxation)
        })
        .collect();

    (0..positions.len())
        .map(|i| {
            let mut dx = Vec3::ZERO;
            for e in nl.offsets[i]..nl.offsets[i + 1] {
                let j = nl.indices[e];
                let s = lambdas[i] + lambdas[j];
                if s != 0.0 {
                    dx += grads[e] * (masses[j] * s);
                }
            }
            dx * inv_rho0
        })
        .collect()
}

/// XSPH velocity smoothing: `v_i + c sum_j (m_j / rho_j) (v_j - v_i) W_ij`.
pub fn xsph_viscosity(
    positions: &[Vec3],
    velocities: &[Vec3],
    masses: &[f64],
    nl: &NeighborLists,
    h: f64,
    c: f64,
) -> Vec<Vec3> {
    xsph_viscosity_with(
        positions,
        velocities,
        masses,
        nl,
        h,
        c,
        &mut KernelScratch::default(),
    )
}

pub fn xsph_viscosity_with(
    positions: &[Vec3],
    velocities: &[Vec3],
    masses: &[f64],
    nl: &NeighborLists,
    h: f64,
    c: f64,
    scratch: &mut KernelScratch,
) -> Vec<Vec3> {
    pair_kernels(positions, nl, h, scratch);
    let w = &scratch.w;
    let rho = densities_from(masses, nl, h, w);
    (0..positions.len())
        .map(|i| {
            let mut dv = Vec3::ZERO;
            for e in nl.offsets[i]..nl.offsets[i + 1] {
                let j = nl.indices[e];
                dv += (velocities[j] - velocities[i]) * (masses[j] / rho[j] * w[e]);
            }
            velocities[i] + dv * c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbd::{neighbor_search, Group};

    fn constraint(rest_density: f64, h: f64) -> DensityConstraint {
        DensityConstraint {
            group: Group::Fluid,
            rest_density,
            kernel_radius: h,
            relaxation: 100.0,
        }
    }

    #[test]
    fn poly6_vanishes_outside_support() {
        assert_eq!(poly6(0.011, 0.1), 0.0);
        assert!(poly6(0.0, 0.1) > poly6(0.005, 0.1));
    }

    #[test]
    fn spiky_gradient_points_towards_the_neighbor() {
        // The kernel decreases with distance, so its gradient w.r.t. x_i - x_j
        // points back along -d.
        let g = spiky_gradient(Vec3::new(0.05, 0.0, 0.0), 0.1);
        assert!(g.x < 0.0 && g.y == 0.0 && g.z == 0.0);
        assert_eq!(spiky_gradient(Vec3::ZERO, 0.1), Vec3::ZERO);
        assert_eq!(spiky_gradient(Vec3::new(0.2, 0.0, 0.0), 0.1), Vec3::ZERO);
    }

    #[test]
    fn isolated_particle_gets_no_correction() {
        let p = [Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)];
        let nl = neighbor_search(&p, 0.1);
        let dx = project_density(&p, &[1.0, 1.0], &nl, &constraint(1.0, 0.1));
        assert_eq!(dx, vec![Vec3::ZERO, Vec3::ZERO]);
    }

    #[test]
    fn compressed_pair_is_pushed_apart_symmetrically() {
        let h = 0.1;
        let p = [Vec3::new(0.3, 0.2, 0.1), Vec3::new(0.3 + h / 2.0, 0.2, 0.1)];
        let nl = neighbor_search(&p, h);
        let pair_density = poly6(0.0, h) + poly6((h / 2.0) * (h / 2.0), h);
        let dx = project_density(&p, &[1.0, 1.0], &nl, &constraint(0.5 * pair_density, h));
        assert!(dx[0].x < 0.0 && dx[1].x > 0.0);
        assert_eq!(dx[0].length(), dx[1].length());
        assert_eq!(dx[0] + dx[1], Vec3::ZERO);
        assert_eq!(dx[0].y, 0.0);
        assert_eq!(dx[0].z, 0.0);
    }

    #[test]
    fn xsph_keeps_uniform_motion_and_momentum() {
        let h = 0.1;
        let p = [
            Vec3::ZERO,
            Vec3::new(0.04, 0.0, 0.0),
            Vec3::new(0.0, 0.05, 0.0),
        ];
        let nl = neighbor_search(&p, h);
        let m = [1.0; 3];
        let same = [Vec3::new(0.3, -0.1, 0.2); 3];
        assert_eq!(xsph_viscosity(&p, &same, &m, &nl, h, 0.5), same.to_vec());
        let v = [Vec3::X, Vec3::ZERO, Vec3::ZERO];
        let out = xsph_viscosity(&p, &v, &m, &nl, h, 0.5);
        assert!(out[0].x < 1.0 && out[1].x > 0.0);
    }

    #[test]
    fn lattice_density_matches_direct_sum_for_small_support() {
        // With h just above the spacing only the 6 face neighbours contribute.
        let s = 1.0;
        let h = 1.2;
        let expected = poly6(0.0, h) + 6.0 * poly6(1.0, h);
        assert!((lattice_rest_density(s, h, 1.0) - expected).abs() < 1e-12 * expected);
    }
}
