//! Builders for cloth, rope, water blocks and cups.

use crate::error::{Error, Result};
use crate::pbd::{
    lattice_rest_density, Collider, Constraint, DensityConstraint, DistanceKind, Group,
    ParticleSet, Shape,
};
use crate::Vec3;

pub const CLOTH_SPACING: f64 = 0.0125;
pub const ROPE_SPACING: f64 = 0.025;
pub const ROPE_PARTICLES: usize = 41;
pub const BEND_STIFFNESS_CLOTH: f64 = 0.6;
pub const BEND_STIFFNESS_ROPE: f64 = 0.8;
/// Ratio between the fluid kernel support and the rest spacing.
pub const KERNEL_TO_REST: f64 = 1.0 / 0.55;
pub const DENSITY_RELAXATION: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClothSpec {
    /// Particles along x.
    pub width: usize,
    /// Particles along z.
    pub length: usize,
    pub spacing: f64,
    pub mass_per_particle: f64,
    pub stretch_stiffness: f64,
    pub bend_stiffness: f64,
}

impl ClothSpec {
    pub fn new(width: usize, length: usize) -> Self {
        ClothSpec {
            width,
            length,
            spacing: CLOTH_SPACING,
            mass_per_particle: 1.0,
            stretch_stiffness: 1.0,
            bend_stiffness: BEND_STIFFNESS_CLOTH,
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.length + j
    }

    fn validate(&self) -> Result<()> {
        if self.width < 2
            || self.length < 2
            || !(self.spacing > 0.0)
            || !(self.mass_per_particle > 0.0)
        {
            return Err(Error::invalid(
                "cloth spec",
                "need at least 2x2 particles and positive spacing",
            ));
        }
        Ok(())
    }
}

/// A flat grid in the xz-plane with particle `(i, j)` at
/// `origin + (i, 0, j) * spacing`.
pub fn build_cloth(spec: &ClothSpec, origin: Vec3) -> Result<(ParticleSet, Vec<Constraint>)> {
    spec.validate()?;
    let (w, l) = (spec.width, spec.length);
    let mut ps = ParticleSet::new();
    for i in 0..w {
        for j in 0..l {
            let p = origin + Vec3::new(i as f64, 0.0, j as f64) * spec.spacing;
            ps.push(p, 1.0 / spec.mass_per_particle, Group::Cloth);
        }
    }
    let mut constraints = Vec::new();
    let mut link = |a: usize, b: usize, k: f64, kind| {
        let rest = (ps.positions[a] - ps.positions[b]).length();
        constraints.push(Constraint::distance(a, b, rest, k, kind));
    };
    for i in 0..w {
        for j in 0..l {
            let a = spec.index(i, j);
            if i + 1 < w {
                link(
                    a,
                    spec.index(i + 1, j),
                    spec.stretch_stiffness,
                    DistanceKind::Stretch,
                );
            }
            if j + 1 < l {
                link(
                    a,
                    spec.index(i, j + 1),
                    spec.stretch_stiffness,
                    DistanceKind::Stretch,
                );
            }
            if i + 1 < w && j + 1 < l {
                link(
                    a,
                    spec.index(i + 1, j + 1),
                    spec.stretch_stiffness,
                    DistanceKind::Stretch,
                );
            }
            if i + 1 < w && j >= 1 {
                link(
                    a,
                    spec.index(i + 1, j - 1),
                    spec.stretch_stiffness,
                    DistanceKind::Stretch,
                );
            }
        }
    }
    for i in 0..w {
        for j in 0..l {
            let a = spec.index(i, j);
            if i + 2 < w {
                link(
                    a,
                    spec.index(i + 2, j),
                    spec.bend_stiffness,
                    DistanceKind::Bend,
                );
            }
            if j + 2 < l {
                link(
                    a,
                    spec.index(i, j + 2),
                    spec.bend_stiffness,
                    DistanceKind::Bend,
                );
            }
        }
    }
    Ok((ps, constraints))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RopeSpec {
    pub n_particles: usize,
    pub spacing: f64,
    pub mass_per_particle: f64,
    pub stiffness: f64,
    pub bend_stiffness: f64,
}

impl Default for RopeSpec {
    fn default() -> Self {
        RopeSpec {
            n_particles: ROPE_PARTICLES,
            spacing: ROPE_SPACING,
            mass_per_particle: 1.0,
            stiffness: 1.0,
            bend_stiffness: BEND_STIFFNESS_ROPE,
        }
    }
}

impl RopeSpec {
    pub fn straight_length(&self) -> f64 {
        (self.n_particles - 1) as f64 * self.spacing
    }
}

/// Straight rope along +x starting at `start`.
pub fn straight_polyline(spec: &RopeSpec, start: Vec3) -> Vec<Vec3> {
    (0..spec.n_particles)
        .map(|i| start + Vec3::X * (i as f64 * spec.spacing))
        .collect()
}

pub fn build_rope(spec: &RopeSpec, shape: &[Vec3]) -> Result<(ParticleSet, Vec<Constraint>)> {
    if spec.n_particles < 2 || !(spec.spacing > 0.0) {
        return Err(Error::invalid(
            "rope spec",
            "need at least 2 particles and positive spacing",
        ));
    }
    if shape.len() != spec.n_particles {
        return Err(Error::invalid(
            "rope shape",
            format!("{} points for {} particles", shape.len(), spec.n_particles),
        ));
    }
    let mut ps = ParticleSet::new();
    for &p in shape {
        ps.push(p, 1.0 / spec.mass_per_particle, Group::Rope);
    }
    let n = spec.n_particles;
    let mut constraints: Vec<Constraint> = (0..n - 1)
        .map(|i| {
            Constraint::distance(
                i,
                i + 1,
                spec.spacing,
                spec.stiffness,
                DistanceKind::Stretch,
            )
        })
        .collect();
    constraints.extend((0..n.saturating_sub(2)).map(|i| {
        Constraint::distance(
            i,
            i + 2,
            2.0 * spec.spacing,
            spec.bend_stiffness,
            DistanceKind::Bend,
        )
    }));
    Ok((ps, constraints))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidSpec {
    /// Particle counts along x, z and y.
    pub width: usize,
    pub length: usize,
    pub height: usize,
    pub rest_distance: f64,
    pub mass_per_particle: f64,
}

impl FluidSpec {
    pub fn new(width: usize, length: usize, height: usize) -> Self {
        FluidSpec {
            width,
            length,
            height,
            rest_distance: crate::pbd::FLUID_REST_DISTANCE,
            mass_per_particle: 1.0,
        }
    }

    pub fn count(&self) -> usize {
        self.width * self.length * self.height
    }

    pub fn kernel_radius(&self) -> f64 {
        self.rest_distance * KERNEL_TO_REST
    }

    pub fn density_constraint(&self) -> DensityConstraint {
        let h = self.kernel_radius();
        DensityConstraint {
            group: Group::Fluid,
            rest_density: lattice_rest_density(self.rest_distance, h, self.mass_per_particle),
            kernel_radius: h,
            relaxation: DENSITY_RELAXATION,
        }
    }
}

/// Cuboid lattice of water particles with its lowest corner at `origin`.
pub fn build_fluid_block(spec: &FluidSpec, origin: Vec3) -> Result<(ParticleSet, Constraint)> {
    if spec.width == 0 || spec.length == 0 || spec.height == 0 || !(spec.rest_distance > 0.0) {
        return Err(Error::invalid("fluid spec", "counts must be at least 1"));
    }
    let mut ps = ParticleSet::new();
    let d = spec.rest_distance;
    for y in 0..spec.height {
        for x in 0..spec.width {
            for z in 0..spec.length {
                let p = origin + Vec3::new(x as f64, y as f64, z as f64) * d;
                ps.push(p, 1.0 / spec.mass_per_particle, Group::Fluid);
            }
        }
    }
    Ok((ps, Constraint::Density(spec.density_constraint())))
}

/// Pose of a cup in the xy-plane: the cavity centre and the tilt about z.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CupPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CupSpec {
    /// Inner cavity size along x, z and y.
    pub width: f64,
    pub length: f64,
    pub height: f64,
    pub wall_thickness: f64,
    pub pose: CupPose,
}

impl CupSpec {
    /// Cavity-centre height at which an upright cup rests on the floor.
    pub fn resting_center_height(&self) -> f64 {
        self.height / 2.0 + self.wall_thickness
    }

    /// Bottom slab followed by the -x, +x, -z, +z walls, in cup-local
    /// coordinates (origin at the cavity centre).
    pub fn local_boxes(&self) -> [(Vec3, Vec3); 5] {
        let (w, l, h, t) = (self.width, self.length, self.height, self.wall_thickness);
        [
            (
                Vec3::new(0.0, -h / 2.0 - t / 2.0, 0.0),
                Vec3::new(w / 2.0 + t, t / 2.0, l / 2.0 + t),
            ),
            (
                Vec3::new(-(w + t) / 2.0, 0.0, 0.0),
                Vec3::new(t / 2.0, h / 2.0, l / 2.0 + t),
            ),
            (
                Vec3::new((w + t) / 2.0, 0.0, 0.0),
                Vec3::new(t / 2.0, h / 2.0, l / 2.0 + t),
            ),
            (
                Vec3::new(0.0, 0.0, -(l + t) / 2.0),
                Vec3::new(w / 2.0, h / 2.0, t / 2.0),
            ),
            (
                Vec3::new(0.0, 0.0, (l + t) / 2.0),
                Vec3::new(w / 2.0, h / 2.0, t / 2.0),
            ),
        ]
    }

    fn validate(&self) -> Result<()> {
        let dims = [self.width, self.length, self.height, self.wall_thickness];
        if dims.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::invalid(
                "cup spec",
                "all dimensions must be positive",
            ));
        }
        Ok(())
    }

    pub fn to_world(&self, local: Vec3) -> Vec3 {
        let (s, c) = self.pose.theta.sin_cos();
        Vec3::new(
            self.pose.x + c * local.x - s * local.y,
            self.pose.y + s * local.x + c * local.y,
            local.z,
        )
    }

    pub fn to_local(&self, world: Vec3) -> Vec3 {
        let (s, c) = self.pose.theta.sin_cos();
        let dx = world.x - self.pose.x;
        let dy = world.y - self.pose.y;
        Vec3::new(c * dx + s * dy, -s * dx + c * dy, world.z)
    }

    /// Whether `p` lies inside the cavity (between the bottom and the rim,
    /// within the inner footprint).
    pub fn contains(&self, p: Vec3) -> bool {
        let q = self.to_local(p);
        q.x.abs() <= self.width / 2.0
            && q.z.abs() <= self.length / 2.0
            && q.y.abs() <= self.height / 2.0
    }

    /// Lowest cavity-centre height that keeps the tilted cup above the floor.
    pub fn min_center_height(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let hw = self.width / 2.0 + self.wall_thickness;
        let bottom = -self.height / 2.0 - self.wall_thickness;
        let top = self.height / 2.0;
        [(-hw, bottom), (hw, bottom), (-hw, top), (hw, top)]
            .iter()
            .map(|&(x, y)| -(s * x + c * y))
            .fold(f64::MIN, f64::max)
    }
}

/// Five boxes forming an open-top container around the cavity.
pub fn build_cup(spec: &CupSpec) -> Result<Vec<Collider>> {
    spec.validate()?;
    Ok(spec
        .local_boxes()
        .iter()
        .map(|&(center, half_extents)| {
            Collider::new(Shape::Box {
                center: spec.to_world(center),
                half_extents,
                angle: spec.pose.theta,
            })
        })
        .collect())
}
