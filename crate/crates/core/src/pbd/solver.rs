use super::collision::{
    collide_with_shapes, self_collide, self_collision_members, self_collision_neighbors, Contact,
};
use super::fluid::{project_density_with, xsph_viscosity_with, KernelScratch};
use super::{
    neighbor_search, project_distance, Collider, Constraint, Group, ParticleSet, Scene, SimConfig,
};
use crate::error::{Error, Result};
use crate::Vec3;

/// Positions after integrating gravity over one substep; static particles
/// stay where they are.
pub fn predict_positions(ps: &ParticleSet, cfg: &SimConfig) -> Result<Vec<Vec3>> {
    ps.check_finite()?;
    if !cfg.gravity.is_finite() || !cfg.dt.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(ps
        .positions
        .iter()
        .zip(&ps.velocities)
        .zip(&ps.inv_masses)
        .map(|((&x, &v), &w)| {
            if w > 0.0 {
                x + (v + cfg.gravity * cfg.dt) * cfg.dt
            } else {
                x
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    /// Distance projections skipped because their endpoints coincided.
    pub degenerate: usize,
}

struct FluidBlock {
    members: Vec<usize>,
    masses: Vec<f64>,
    constraint: super::DensityConstraint,
    neighbors: super::NeighborLists,
    scratch: KernelScratch,
}

/// XSPH coefficient applied to fluid velocities after every substep.
pub const FLUID_VISCOSITY: f64 = 0.1;

/// Coulomb friction on the tangential displacement of cloth and rope
/// particles touching a collider. The normal correction made during the
/// substep bounds the tangential motion it can cancel.
#[allow(clippy::too_many_arguments)]
fn apply_contact_friction(
    x: &mut [Vec3],
    start: &[Vec3],
    predicted: &[Vec3],
    w: &[f64],
    groups: &[Group],
    contacts: &[Option<Contact>],
    colliders: &[Collider],
    dt: f64,
) {
    for i in 0..x.len() {
        let Some(c) = contacts[i] else { continue };
        if w[i] == 0.0 || !matches!(groups[i], Group::Cloth | Group::Rope) {
            continue;
        }
        let collider = &colliders[c.collider];
        let depth = c.normal.dot(x[i] - predicted[i]).max(0.0);
        let delta = x[i] - start[i] - collider.velocity_at(x[i]) * dt;
        let tangent = delta - c.normal * delta.dot(c.normal);
        let len = tangent.length();
        let limit = collider.friction * depth;
        if len <= limit {
            x[i] -= tangent;
        } else {
            x[i] -= tangent * (limit / len);
        }
    }
}

/// Advances the scene by one substep.
pub fn solve_step(scene: &mut Scene, cfg: &SimConfig) -> Result<StepStats> {
    cfg.validate()?;
    scene.particles.check_finite()?;
    let dt = cfg.dt;
    let n = scene.particles.len();
    let w = scene.effective_inv_masses();
    let ps = &scene.particles;

    let v_pred: Vec<Vec3> = ps
        .velocities
        .iter()
        .zip(&ps.inv_masses)
        .map(|(&v, &wi)| if wi > 0.0 { v + cfg.gravity * dt } else { v })
        .collect();
    let predicted: Vec<Vec3> = ps
        .positions
        .iter()
        .zip(&v_pred)
        .zip(&ps.inv_masses)
        .map(|((&x, &v), &wi)| if wi > 0.0 { x + v * dt } else { x })
        .collect();
    let mut x = predicted.clone();

    let attachments: Vec<(usize, Vec3)> = scene
        .constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::Attachment(a) => {
                let picker = &scene.pickers[a.picker];
                Some((a.particle, picker.position + picker.grab_offset()))
            }
            _ => None,
        })
        .collect();

    let mut fluids: Vec<FluidBlock> = scene
        .constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::Density(d) => {
                let members = ps.indices_in(d.group);
                let masses = members
                    .iter()
                    .map(|&i| {
                        if ps.inv_masses[i] > 0.0 {
                            1.0 / ps.inv_masses[i]
                        } else {
                            1.0
                        }
                    })
                    .collect();
                let pts: Vec<Vec3> = members.iter().map(|&i| x[i]).collect();
                let neighbors = neighbor_search(&pts, d.kernel_radius);
                Some(FluidBlock {
                    members,
                    masses,
                    constraint: *d,
                    neighbors,
                    scratch: KernelScratch::default(),
                })
            }
            _ => None,
        })
        .collect();

    let self_members = self_collision_members(&ps.groups);
    let self_nl = (!self_members.is_empty())
        .then(|| self_collision_neighbors(&x, &self_members, cfg.particle_radius));

    let mut contacts: Vec<Option<Contact>> = vec![None; n];
    let mut stats = StepStats::default();
    let mut local = Vec::new();

    for _ in 0..cfg.solver_iterations {
        for &(p, target) in &attachments {
            x[p] = target;
        }
        for c in &scene.constraints {
            let Constraint::Distance(d) = c else { continue };
            match project_distance(d, x[d.i], x[d.j], w[d.i], w[d.j]) {
                Some((di, dj)) => {
                    x[d.i] += di;
                    x[d.j] += dj;
                }
                None => stats.degenerate += 1,
            }
        }
        for block in &mut fluids {
            local.clear();
            local.extend(block.members.iter().map(|&i| x[i]));
            let dx = project_density_with(
                &local,
                &block.masses,
                &block.neighbors,
                &block.constraint,
                &mut block.scratch,
            );
            for (k, &i) in block.members.iter().enumerate() {
                if w[i] > 0.0 {
                    x[i] += dx[k];
                }
            }
        }
        if let Some(nl) = &self_nl {
            self_collide(
                &mut x,
                &w,
                &ps.groups,
                &self_members,
                nl,
                cfg.particle_radius,
            );
        }
        collide_with_shapes(
            &mut x,
            &w,
            &scene.colliders,
            cfg.particle_radius,
            Some(&mut contacts),
        );
    }
    // One more shape pass so that later colliders in the list cannot leave a
    // particle inside an earlier one.
    collide_with_shapes(
        &mut x,
        &w,
        &scene.colliders,
        cfg.particle_radius,
        Some(&mut contacts),
    );
    apply_contact_friction(
        &mut x,
        &ps.positions,
        &predicted,
        &w,
        &ps.groups,
        &contacts,
        &scene.colliders,
        dt,
    );

    let mut velocities = ps.velocities.clone();
    for i in 0..n {
        if ps.inv_masses[i] == 0.0 {
            continue;
        }
        let mut v = v_pred[i] + (x[i] - predicted[i]) / dt;
        if let (Some(c), true) = (contacts[i], w[i] > 0.0) {
            let collider = &scene.colliders[c.collider];
            let surface = collider.velocity_at(x[i]);
            let rel = v - surface;
            let normal = c.normal * rel.dot(c.normal);
            let tangent = rel - normal;
            v = surface + normal + tangent * (1.0 - collider.friction);
        }
        velocities[i] = v;
    }

    for block in &mut fluids {
        local.clear();
        local.extend(block.members.iter().map(|&i| x[i]));
        let v: Vec<Vec3> = block.members.iter().map(|&i| velocities[i]).collect();
        let smoothed = xsph_viscosity_with(
            &local,
            &v,
            &block.masses,
            &block.neighbors,
            block.constraint.kernel_radius,
            FLUID_VISCOSITY,
            &mut block.scratch,
        );
        for (k, &i) in block.members.iter().enumerate() {
            if w[i] > 0.0 {
                velocities[i] = smoothed[k];
            }
        }
    }

    if x.iter().any(|p| !p.is_finite()) || velocities.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    for i in 0..n {
        if scene.particles.inv_masses[i] > 0.0 {
            scene.particles.positions[i] = x[i];
        }
    }
    scene.particles.velocities = velocities;
    Ok(stats)
}
