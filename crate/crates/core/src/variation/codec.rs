//! Little-endian binary encoding of scenes. Reals are written as f32 in
//! cache files and as f64 in snapshots.

use crate::actuation::{Grab, Picker};
use crate::error::{Error, Result};
use crate::pbd::{
    Attachment, Collider, Constraint, DensityConstraint, DistanceConstraint, DistanceKind, Group,
    ParticleSet, Scene, Shape,
};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

pub struct Writer {
    pub buf: Vec<u8>,
    precision: Precision,
}

impl Writer {
    pub fn new(precision: Precision) -> Self {
        Writer {
            buf: Vec::new(),
            precision,
        }
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u128(&mut self, v: u128) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn len(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v)
            .map_err(|_| Error::Format(format!("count {v} does not fit in u32")))?;
        self.u32(v);
        Ok(())
    }

    pub fn real(&mut self, v: f64) {
        match self.precision {
            Precision::F32 => self.bytes(&(v as f32).to_le_bytes()),
            Precision::F64 => self.bytes(&v.to_le_bytes()),
        }
    }

    pub fn vec3(&mut self, v: Vec3) {
        self.real(v.x);
        self.real(v.y);
        self.real(v.z);
    }
}

pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    precision: Precision,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8], precision: Precision) -> Self {
        Reader {
            data,
            pos: 0,
            precision,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.data.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Format(format!("truncated data at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.array()?))
    }

    pub fn index(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    pub fn real(&mut self) -> Result<f64> {
        Ok(match self.precision {
            Precision::F32 => f32::from_le_bytes(self.array()?) as f64,
            Precision::F64 => f64::from_le_bytes(self.array()?),
        })
    }

    pub fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.real()?, self.real()?, self.real()?))
    }

    /// Count prefix, rejected when the remaining bytes cannot hold that
    /// many items of `min_size` bytes.
    pub fn count(&mut self, min_size: usize) -> Result<usize> {
        let n = self.index()?;
        if n.saturating_mul(min_size) > self.data.len() - self.pos {
            return Err(Error::Format(format!(
                "count {n} exceeds the remaining data"
            )));
        }
        Ok(n)
    }
}

pub fn write_scene(w: &mut Writer, scene: &Scene) -> Result<()> {
    let ps = &scene.particles;
    w.len(ps.len())?;
    for &p in &ps.positions {
        w.vec3(p);
    }
    for &v in &ps.velocities {
        w.vec3(v);
    }
    for &m in &ps.inv_masses {
        w.real(m);
    }
    w.len(scene.constraints.len())?;
    for c in &scene.constraints {
        match c {
            Constraint::Distance(d) => {
                w.u8(0);
                w.len(d.i)?;
                w.len(d.j)?;
                w.real(d.rest_length);
                w.real(d.stiffness);
                w.u8(d.kind as u8);
            }
            Constraint::Density(d) => {
                w.u8(1);
                w.u8(d.group as u8);
                w.real(d.rest_density);
                w.real(d.kernel_radius);
                w.real(d.relaxation);
            }
            Constraint::Attachment(a) => {
                w.u8(2);
                w.len(a.picker)?;
                w.len(a.particle)?;
            }
        }
    }
    w.len(scene.colliders.len())?;
    for c in &scene.colliders {
        match c.shape {
            Shape::HalfSpace { normal, offset } => {
                w.u8(0);
                w.vec3(normal);
                w.real(offset);
            }
            Shape::Box {
                center,
                half_extents,
                angle,
            } => {
                w.u8(1);
                w.vec3(center);
                w.vec3(half_extents);
                w.real(angle);
            }
        }
        w.real(c.friction);
        w.vec3(c.linear_velocity);
        w.real(c.angular_velocity);
        w.vec3(c.pivot);
    }
    w.len(scene.pickers.len())?;
    for p in &scene.pickers {
        w.vec3(p.position);
        w.real(p.radius);
        match p.attached {
            Some(g) => {
                w.u8(1);
                w.len(g.particle)?;
                w.vec3(g.offset);
            }
            None => w.u8(0),
        }
    }
    Ok(())
}

/// Reads a scene whose particles all belong to `group`.
pub fn read_scene(r: &mut Reader<'_>, group: Group) -> Result<Scene> {
    let n = r.count(4)?;
    let mut ps = ParticleSet {
        positions: Vec::with_capacity(n),
        velocities: Vec::with_capacity(n),
        inv_masses: Vec::with_capacity(n),
        groups: vec![group; n],
    };
    for _ in 0..n {
        ps.positions.push(r.vec3()?);
    }
    for _ in 0..n {
        ps.velocities.push(r.vec3()?);
    }
    for _ in 0..n {
        ps.inv_masses.push(r.real()?);
    }
    let nc = r.count(1)?;
    let mut constraints = Vec::with_capacity(nc);
    for _ in 0..nc {
        constraints.push(match r.u8()? {
            0 => {
                let (i, j) = (r.index()?, r.index()?);
                let (rest_length, stiffness) = (r.real()?, r.real()?);
                let kind = match r.u8()? {
                    0 => DistanceKind::Stretch,
                    1 => DistanceKind::Bend,
                    k => return Err(Error::Format(format!("unknown distance kind {k}"))),
                };
                Constraint::Distance(DistanceConstraint {
                    i,
                    j,
                    rest_length,
                    stiffness,
                    kind,
                })
            }
            1 => {
                let g = r.u8()?;
                let group =
                    Group::from_u8(g).ok_or_else(|| Error::Format(format!("unknown group {g}")))?;
                Constraint::Density(DensityConstraint {
                    group,
                    rest_density: r.real()?,
                    kernel_radius: r.real()?,
                    relaxation: r.real()?,
                })
            }
            2 => Constraint::Attachment(Attachment {
                picker: r.index()?,
                particle: r.index()?,
            }),
            t => return Err(Error::Format(format!("unknown constraint tag {t}"))),
        });
    }
    let nk = r.count(1)?;
    let mut colliders = Vec::with_capacity(nk);
    for _ in 0..nk {
        let shape = match r.u8()? {
            0 => Shape::HalfSpace {
                normal: r.vec3()?,
                offset: r.real()?,
            },
            1 => Shape::Box {
                center: r.vec3()?,
                half_extents: r.vec3()?,
                angle: r.real()?,
            },
            t => return Err(Error::Format(format!("unknown collider tag {t}"))),
        };
        colliders.push(Collider {
            shape,
            friction: r.real()?,
            linear_velocity: r.vec3()?,
            angular_velocity: r.real()?,
            pivot: r.vec3()?,
        });
    }
    let np = r.count(1)?;
    let mut pickers = Vec::with_capacity(np);
    for _ in 0..np {
        let position = r.vec3()?;
        let radius = r.real()?;
        let attached = match r.u8()? {
            0 => None,
            1 => Some(Grab {
                particle: r.index()?,
                offset: r.vec3()?,
            }),
            t => return Err(Error::Format(format!("unknown picker flag {t}"))),
        };
        pickers.push(Picker {
            position,
            radius,
            attached,
        });
    }
    let scene = Scene {
        particles: ps,
        constraints,
        colliders,
        pickers,
    };
    // Normalized unit vectors can drift off unit length in f32.
    let scene = renormalize(scene);
    scene.validate()?;
    Ok(scene)
}

fn renormalize(mut scene: Scene) -> Scene {
    for c in &mut scene.colliders {
        if let Shape::HalfSpace { normal, .. } = &mut c.shape {
            *normal = normal.normalize();
        }
    }
    scene
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{build_cloth, build_cup, ClothSpec, CupPose, CupSpec};

    fn sample_scene() -> Scene {
        let (ps, cs) = build_cloth(&ClothSpec::new(3, 4), Vec3::new(0.1, 0.2, 0.3)).unwrap();
        let mut scene = Scene::new();
        scene.add_object(&ps, &cs);
        scene.colliders.push(Collider::floor());
        scene.colliders.extend(
            build_cup(&CupSpec {
                width: 0.3,
                length: 0.2,
                height: 0.1,
                wall_thickness: 0.01,
                pose: CupPose {
                    x: 0.4,
                    y: 0.3,
                    theta: 0.2,
                },
            })
            .unwrap(),
        );
        scene.pickers.push(Picker::new(Vec3::new(0.1, 0.25, 0.3)));
        scene.pickers[0].attached = Some(Grab {
            particle: 0,
            offset: Vec3::new(0.0, -0.05, 0.0),
        });
        scene.constraints.push(Constraint::Attachment(Attachment {
            picker: 0,
            particle: 0,
        }));
        scene.particles.velocities[3] = Vec3::new(0.01, -0.2, 0.3);
        scene
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let scene = sample_scene();
        let mut w = Writer::new(Precision::F64);
        write_scene(&mut w, &scene).unwrap();
        let mut r = Reader::new(&w.buf, Precision::F64);
        assert_eq!(read_scene(&mut r, Group::Cloth).unwrap(), scene);
        assert!(r.is_empty());
    }

    #[test]
    fn f32_round_trip_is_idempotent() {
        let scene = sample_scene();
        let mut w = Writer::new(Precision::F32);
        write_scene(&mut w, &scene).unwrap();
        let once = read_scene(&mut Reader::new(&w.buf, Precision::F32), Group::Cloth).unwrap();
        let mut w2 = Writer::new(Precision::F32);
        write_scene(&mut w2, &once).unwrap();
        assert_eq!(w.buf, w2.buf);
        for (a, b) in once
            .particles
            .positions
            .iter()
            .zip(&scene.particles.positions)
        {
            assert!((*a - *b).length() < 1e-6);
        }
    }

    #[test]
    fn truncated_data_is_an_error() {
        let mut w = Writer::new(Precision::F32);
        write_scene(&mut w, &sample_scene()).unwrap();
        for cut in [0, 3, 10, w.buf.len() - 1] {
            let mut r = Reader::new(&w.buf[..cut], Precision::F32);
            assert!(read_scene(&mut r, Group::Cloth).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn huge_counts_are_rejected() {
        let mut w = Writer::new(Precision::F32);
        w.u32(u32::MAX);
        assert!(read_scene(&mut Reader::new(&w.buf, Precision::F32), Group::Cloth).is_err());
    }
}
