//! Position-based dynamics.
//!
//! A substep predicts positions from velocities, projects the predicted
//! positions onto the constraint set with a fixed-order Gauss-Seidel sweep,
//! resolves collisions and then derives the new velocities from the position
//! change. Everything here is sequential and bit-reproducible.

mod collision;
mod constraint;
mod fluid;
mod neighbor;
mod solver;

pub use collision::{resolve_collisions, Collider, Shape};
pub use constraint::{
    project_distance, Attachment, Constraint, DensityConstraint, DistanceConstraint, DistanceKind,
};
pub use fluid::{
    densities, lattice_rest_density, poly6, project_density, spiky_gradient, xsph_viscosity,
};
pub use neighbor::{brute_force_neighbors, neighbor_search, NeighborLists};
pub use solver::{predict_positions, solve_step, StepStats, FLUID_VISCOSITY};

use crate::actuation::Picker;
use crate::error::{Error, Result};
use crate::Vec3;

/// Object membership of a particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Group {
    None = 0,
    Fluid = 1,
    Cloth = 2,
    Rope = 3,
}

impl Group {
    pub fn from_u8(v: u8) -> Option<Group> {
        match v {
            0 => Some(Group::None),
            1 => Some(Group::Fluid),
            2 => Some(Group::Cloth),
            3 => Some(Group::Rope),
            _ => None,
        }
    }

    /// Cloth and rope particles collide with other particles of their own group.
    pub fn self_colliding(self) -> bool {
        matches!(self, Group::Cloth | Group::Rope)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleSet {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// Zero marks a static particle.
    pub inv_masses: Vec<f64>,
    pub groups: Vec<Group>,
}

impl ParticleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(&mut self, position: Vec3, inv_mass: f64, group: Group) -> usize {
        self.positions.push(position);
        self.velocities.push(Vec3::ZERO);
        self.inv_masses.push(inv_mass);
        self.groups.push(group);
        self.positions.len() - 1
    }

    /// Appends `other`, returning the index offset of its first particle.
    pub fn append(&mut self, other: &ParticleSet) -> usize {
        let offset = self.len();
        self.positions.extend_from_slice(&other.positions);
        self.velocities.extend_from_slice(&other.velocities);
        self.inv_masses.extend_from_slice(&other.inv_masses);
        self.groups.extend_from_slice(&other.groups);
        offset
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.velocities.len() != n || self.inv_masses.len() != n || self.groups.len() != n {
            return Err(Error::invalid("particle set", "array lengths differ"));
        }
        if self.inv_masses.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("particle set", "negative inverse mass"));
        }
        self.check_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        let finite = self.positions.iter().all(|p| p.is_finite())
            && self.velocities.iter().all(|v| v.is_finite())
            && self.inv_masses.iter().all(|w| w.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn indices_in(&self, group: Group) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.groups[i] == group)
            .collect()
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.inv_masses)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, _)| v.length())
            .fold(0.0, f64::max)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.inv_masses)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, &w)| 0.5 * v.length_squared() / w)
            .sum()
    }

    pub fn centroid(&self, indices: &[usize]) -> Vec3 {
        if indices.is_empty() {
            return Vec3::ZERO;
        }
        let sum: Vec3 = indices.iter().map(|&i| self.positions[i]).sum();
        sum / indices.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Seconds per substep.
    pub dt: f64,
    pub gravity: Vec3,
    pub solver_iterations: usize,
    /// Collision radius against colliders and for cloth/rope self-collision.
    pub particle_radius: f64,
    pub fluid_rest_distance: f64,
}

/// Radius of a water particle; also the fluid kernel support.
pub const WATER_PARTICLE_RADIUS: f64 = 0.033;
/// Lattice pitch of water particles at rest.
pub const FLUID_REST_DISTANCE: f64 = 0.55 * WATER_PARTICLE_RADIUS;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            gravity: Vec3::new(0.0, -9.8, 0.0),
            solver_iterations: 40,
            particle_radius: 0.00625,
            fluid_rest_distance: FLUID_REST_DISTANCE,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("sim config", "dt must be positive"));
        }
        if self.solver_iterations == 0 {
            return Err(Error::invalid(
                "sim config",
                "solver_iterations must be at least 1",
            ));
        }
        if !(self.particle_radius > 0.0) {
            return Err(Error::invalid(
                "sim config",
                "particle_radius must be positive",
            ));
        }
        if !self.gravity.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Full simulation state: particles, constraints, colliders and pickers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub particles: ParticleSet,
    pub constraints: Vec<Constraint>,
    pub colliders: Vec<Collider>,
    pub pickers: Vec<Picker>,
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds particles and their constraints, re-indexing the constraints.
    pub fn add_object(&mut self, particles: &ParticleSet, constraints: &[Constraint]) -> usize {
        let offset = self.particles.append(particles);
        self.constraints
            .extend(constraints.iter().map(|c| c.offset_particles(offset)));
        offset
    }

    pub fn validate(&self) -> Result<()> {
        self.particles.validate()?;
        let n = self.particles.len();
        for c in &self.constraints {
            c.validate(n, self.pickers.len())?;
        }
        for c in &self.colliders {
            c.validate()?;
        }
        Ok(())
    }

    /// Inverse masses with picker-attached particles treated as static.
    pub fn effective_inv_masses(&self) -> Vec<f64> {
        let mut w = self.particles.inv_masses.clone();
        for c in &self.constraints {
            if let Constraint::Attachment(a) = c {
                w[a.particle] = 0.0;
            }
        }
        w
    }

    pub fn attachment_of(&self, picker: usize) -> Option<usize> {
        self.constraints.iter().find_map(|c| match c {
            Constraint::Attachment(a) if a.picker == picker => Some(a.particle),
            _ => None,
        })
    }

    pub fn is_attached(&self, particle: usize) -> bool {
        self.constraints
            .iter()
            .any(|c| matches!(c, Constraint::Attachment(a) if a.particle == particle))
    }

    /// Deepest penetration of any free dynamic particle into any collider.
    pub fn max_penetration(&self, cfg: &SimConfig) -> f64 {
        let w = self.effective_inv_masses();
        let mut worst = 0.0f64;
        for (i, p) in self.particles.positions.iter().enumerate() {
            if w[i] == 0.0 {
                continue;
            }
            for c in &self.colliders {
                worst = worst.max(c.penetration(*p, cfg.particle_radius));
            }
        }
        worst
    }
}
