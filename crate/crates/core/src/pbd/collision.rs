use super::{neighbor_search, Group, NeighborLists, SimConfig};
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// Solid region `normal · p < offset`.
    HalfSpace { normal: Vec3, offset: f64 },
    /// Oriented box; `angle` rotates it about the z axis (the tilt axis of
    /// the cups).
    Box {
        center: Vec3,
        half_extents: Vec3,
        angle: f64,
    },
}

/// A static or kinematic collision shape. The velocity fields describe the
/// rigid motion of kinematic colliders during the current substep and are
/// only used to compute friction relative to the moving surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collider {
    pub shape: Shape,
    pub friction: f64,
    pub linear_velocity: Vec3,
    pub angular_velocity: f64,
    pub pivot: Vec3,
}

fn rotate_z(v: Vec3, cos: f64, sin: f64) -> Vec3 {
    Vec3::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y, v.z)
}

impl Collider {
    pub fn floor() -> Self {
        Collider::new(Shape::HalfSpace {
            normal: Vec3::Y,
            offset: 0.0,
        })
    }

    pub fn new(shape: Shape) -> Self {
        Collider {
            shape,
            friction: 0.5,
            linear_velocity: Vec3::ZERO,
            angular_velocity: 0.0,
            pivot: Vec3::ZERO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.friction) {
            return Err(Error::invalid("collider", "friction outside [0, 1]"));
        }
        match self.shape {
            Shape::HalfSpace { normal, offset } => {
                if (normal.length() - 1.0).abs() > 1e-9 || !offset.is_finite() {
                    return Err(Error::invalid(
                        "collider",
                        "half-space normal must be unit length",
                    ));
                }
            }
            Shape::Box {
                center,
                half_extents,
                angle,
            } => {
                if !(half_extents.min_element() > 0.0) || !center.is_finite() || !angle.is_finite()
                {
                    return Err(Error::invalid(
                        "collider",
                        "box half extents must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Moves `p` to the nearest point at least `radius` outside the shape.
    /// Returns the outward normal when a correction was applied.
    pub fn push_out(&self, p: &mut Vec3, radius: f64) -> Option<Vec3> {
        self.push_out_rotated(p, radius, self.sin_cos())
    }

    fn sin_cos(&self) -> (f64, f64) {
        match self.shape {
            Shape::Box { angle, .. } => angle.sin_cos(),
            Shape::HalfSpace { .. } => (0.0, 1.0),
        }
    }

    fn push_out_rotated(&self, p: &mut Vec3, radius: f64, (sin, cos): (f64, f64)) -> Option<Vec3> {
        match self.shape {
            Shape::HalfSpace { normal, offset } => {
                let dist = normal.dot(*p) - offset;
                if dist < radius {
                    *p += normal * (radius - dist);
                    Some(normal)
                } else {
                    None
                }
            }
            Shape::Box {
                center,
                half_extents,
                ..
            } => {
                let mut local = rotate_z(*p - center, cos, -sin);
                let reach = half_extents + Vec3::splat(radius);
                let pen = reach - local.abs();
                if pen.x <= 0.0 || pen.y <= 0.0 || pen.z <= 0.0 {
                    return None;
                }
                // Minimum-penetration axis; ties resolve in x, y, z order.
                let mut axis = 0;
                if pen.y < pen[axis] {
                    axis = 1;
                }
                if pen.z < pen[axis] {
                    axis = 2;
                }
                let sign = if local[axis] >= 0.0 { 1.0 } else { -1.0 };
                local[axis] = sign * reach[axis];
                *p = center + rotate_z(local, cos, sin);
                let mut n = Vec3::ZERO;
                n[axis] = sign;
                Some(rotate_z(n, cos, sin))
            }
        }
    }

    /// How far `p` lies inside the shape inflated by `radius` (0 if outside).
    pub fn penetration(&self, p: Vec3, radius: f64) -> f64 {
        match self.shape {
            Shape::HalfSpace { normal, offset } => (radius - (normal.dot(p) - offset)).max(0.0),
            Shape::Box {
                center,
                half_extents,
                angle,
            } => {
                let (sin, cos) = angle.sin_cos();
                let local = rotate_z(p - center, cos, -sin);
                let pen = half_extents + Vec3::splat(radius) - local.abs();
                pen.min_element().max(0.0)
            }
        }
    }

    /// Velocity of the collider surface at `p`.
    pub fn velocity_at(&self, p: Vec3) -> Vec3 {
        let r = p - self.pivot;
        self.linear_velocity
            + Vec3::new(
                -self.angular_velocity * r.y,
                self.angular_velocity * r.x,
                0.0,
            )
    }
}

/// Last collider contact of a particle within a substep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Contact {
    pub collider: usize,
    pub normal: Vec3,
}

pub(crate) fn collide_with_shapes(
    positions: &mut [Vec3],
    inv_masses: &[f64],
    colliders: &[Collider],
    radius: f64,
    mut contacts: Option<&mut [Option<Contact>]>,
) {
    let rotations: Vec<(f64, f64)> = colliders.iter().map(Collider::sin_cos).collect();
    let reach: Vec<Option<(Vec3, Vec3)>> = colliders
        .iter()
        .zip(&rotations)
        .map(|(c, &(sin, cos))| match c.shape {
            Shape::Box {
                center,
                half_extents: e,
                ..
            } => {
                // World-space box around the inflated shape, padded against
                // rounding so it never rejects a real contact.
                let half = Vec3::new(
                    cos.abs() * e.x + sin.abs() * e.y,
                    sin.abs() * e.x + cos.abs() * e.y,
                    e.z,
                ) + Vec3::splat(radius * (1.0 + 1e-9) + 1e-12);
                Some((center - half, center + half))
            }
            Shape::HalfSpace { .. } => None,
        })
        .collect();
    for (i, p) in positions.iter_mut().enumerate() {
        if inv_masses[i] == 0.0 {
            continue;
        }
        for (ci, c) in colliders.iter().enumerate() {
            if let Some((lo, hi)) = reach[ci] {
                if p.cmplt(lo).any() || p.cmpgt(hi).any() {
                    continue;
                }
            }
            if let Some(normal) = c.push_out_rotated(p, radius, rotations[ci]) {
                if let Some(contacts) = contacts.as_deref_mut() {
                    contacts[i] = Some(Contact {
                        collider: ci,
                        normal,
                    });
                }
            }
        }
    }
}

/// Separates same-group cloth/rope particles closer than two radii.
/// `members` maps the local indices of `nl` to particle indices.
pub(crate) fn self_collide(
    positions: &mut [Vec3],
    inv_masses: &[f64],
    groups: &[Group],
    members: &[usize],
    nl: &NeighborLists,
    radius: f64,
) {
    let min_dist = 2.0 * radius;
    for (a, &i) in members.iter().enumerate() {
        for &b in nl.neighbors(a) {
            if b <= a {
                continue;
            }
            let j = members[b];
            if groups[i] != groups[j] {
                continue;
            }
            let wsum = inv_masses[i] + inv_masses[j];
            if wsum == 0.0 {
                continue;
            }
            let d = positions[i] - positions[j];
            let len = d.length();
            if len >= min_dist || len < 1e-12 {
                continue;
            }
            let push = d * ((min_dist - len) / len);
            positions[i] += push * (inv_masses[i] / wsum);
            positions[j] -= push * (inv_masses[j] / wsum);
        }
    }
}

pub(crate) fn self_collision_members(groups: &[Group]) -> Vec<usize> {
    (0..groups.len())
        .filter(|&i| groups[i].self_colliding())
        .collect()
}

pub(crate) fn self_collision_neighbors(
    positions: &[Vec3],
    members: &[usize],
    radius: f64,
) -> NeighborLists {
    let pts: Vec<Vec3> = members.iter().map(|&i| positions[i]).collect();
    neighbor_search(&pts, 2.5 * radius)
}

/// Standalone collision pass: cloth/rope self-collision followed by
/// projection out of every collider.
pub fn resolve_collisions(
    predicted: &[Vec3],
    inv_masses: &[f64],
    groups: &[Group],
    colliders: &[Collider],
    cfg: &SimConfig,
) -> Vec<Vec3> {
    let mut out = predicted.to_vec();
    let members = self_collision_members(groups);
    if !members.is_empty() {
        let nl = self_collision_neighbors(&out, &members, cfg.particle_radius);
        self_collide(
            &mut out,
            inv_masses,
            groups,
            &members,
            &nl,
            cfg.particle_radius,
        );
    }
    collide_with_shapes(&mut out, inv_masses, colliders, cfg.particle_radius, None);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(r: f64) -> SimConfig {
        SimConfig {
            particle_radius: r,
            ..SimConfig::default()
        }
    }

    #[test]
    fn particle_below_floor_is_lifted() {
        let out = resolve_collisions(
            &[Vec3::new(0.2, -0.1, 0.3)],
            &[1.0],
            &[Group::None],
            &[Collider::floor()],
            &cfg(0.05),
        );
        assert!((out[0] - Vec3::new(0.2, 0.05, 0.3)).length() < 1e-15);
    }

    #[test]
    fn distant_particle_unchanged() {
        let b = Collider::new(Shape::Box {
            center: Vec3::new(5.0, 5.0, 5.0),
            half_extents: Vec3::splat(0.5),
            angle: 0.3,
        });
        let p = Vec3::new(0.1, 0.7, -0.2);
        let out = resolve_collisions(
            &[p],
            &[1.0],
            &[Group::Fluid],
            &[Collider::floor(), b],
            &cfg(0.05),
        );
        assert_eq!(out[0], p);
    }

    #[test]
    fn cloth_pair_pushed_apart_symmetrically() {
        let a = Vec3::new(0.0, 1.0, 0.0);
        let b = Vec3::new(0.04, 1.0, 0.0);
        let out = resolve_collisions(
            &[a, b],
            &[1.0, 1.0],
            &[Group::Cloth, Group::Cloth],
            &[],
            &cfg(0.05),
        );
        assert!(((out[1] - out[0]).length() - 0.10).abs() < 1e-15);
        assert!((out[0].x - -0.03).abs() < 1e-15);
        assert!((out[1].x - 0.07).abs() < 1e-15);
    }

    #[test]
    fn different_groups_do_not_self_collide() {
        let a = Vec3::new(0.0, 1.0, 0.0);
        let b = Vec3::new(0.04, 1.0, 0.0);
        let out = resolve_collisions(
            &[a, b],
            &[1.0, 1.0],
            &[Group::Cloth, Group::Rope],
            &[],
            &cfg(0.05),
        );
        assert_eq!(out, vec![a, b]);
    }

    #[test]
    fn static_particles_ignore_colliders() {
        let p = Vec3::new(0.0, -1.0, 0.0);
        let out = resolve_collisions(
            &[p],
            &[0.0],
            &[Group::None],
            &[Collider::floor()],
            &cfg(0.05),
        );
        assert_eq!(out[0], p);
    }

    #[test]
    fn box_center_resolves_along_x_first() {
        let b = Collider::new(Shape::Box {
            center: Vec3::new(1.0, 1.0, 1.0),
            half_extents: Vec3::splat(0.2),
            angle: 0.0,
        });
        let mut p = Vec3::new(1.0, 1.0, 1.0);
        let n = b.push_out(&mut p, 0.05).unwrap();
        assert_eq!(n, Vec3::X);
        assert!((p - Vec3::new(1.25, 1.0, 1.0)).length() < 1e-15);
    }

    #[test]
    fn box_pushes_along_minimum_penetration() {
        let b = Collider::new(Shape::Box {
            center: Vec3::ZERO,
            half_extents: Vec3::new(1.0, 0.1, 1.0),
            angle: 0.0,
        });
        let mut p = Vec3::new(0.3, 0.05, -0.2);
        let n = b.push_out(&mut p, 0.01).unwrap();
        assert_eq!(n, Vec3::Y);
        assert!((p.y - 0.11).abs() < 1e-15);
        assert_eq!(b.penetration(p, 0.01), 0.0);
    }

    #[test]
    fn rotated_box_normal_follows_rotation() {
        let angle = std::f64::consts::FRAC_PI_2;
        let b = Collider::new(Shape::Box {
            center: Vec3::ZERO,
            half_extents: Vec3::new(0.05, 1.0, 1.0),
            angle,
        });
        // After a quarter turn about z the thin axis points along y.
        let mut p = Vec3::new(0.2, 0.02, 0.0);
        let n = b.push_out(&mut p, 0.01).unwrap();
        assert!((n - Vec3::Y).length() < 1e-12);
        assert!((p.y - 0.06).abs() < 1e-12);
    }

    #[test]
    fn kinematic_surface_velocity() {
        let mut c = Collider::floor();
        c.linear_velocity = Vec3::new(1.0, 0.0, 0.0);
        c.angular_velocity = 2.0;
        c.pivot = Vec3::ZERO;
        assert_eq!(
            c.velocity_at(Vec3::new(0.0, 1.0, 0.0)),
            Vec3::new(-1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn invalid_colliders_rejected() {
        let bad = Collider::new(Shape::HalfSpace {
            normal: Vec3::new(0.0, 2.0, 0.0),
            offset: 0.0,
        });
        assert!(bad.validate().is_err());
        let flat = Collider::new(Shape::Box {
            center: Vec3::ZERO,
            half_extents: Vec3::new(1.0, 0.0, 1.0),
            angle: 0.0,
        });
        assert!(flat.validate().is_err());
    }
}
