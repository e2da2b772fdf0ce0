use super::Group;
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum DistanceKind {
    Stretch = 0,
    Bend = 1,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceConstraint {
    pub i: usize,
    pub j: usize,
    pub rest_length: f64,
    /// Fraction of the violation removed per projection, in (0, 1].
    pub stiffness: f64,
    pub kind: DistanceKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityConstraint {
    pub group: Group,
    pub rest_density: f64,
    pub kernel_radius: f64,
    /// Constraint-force-mixing term added to the denominator of the multiplier.
    pub relaxation: f64,
}

/// Pins a particle to a picker at the offset recorded in the picker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attachment {
    pub picker: usize,
    pub particle: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Distance(DistanceConstraint),
    Density(DensityConstraint),
    Attachment(Attachment),
}

impl Constraint {
    pub fn distance(
        i: usize,
        j: usize,
        rest_length: f64,
        stiffness: f64,
        kind: DistanceKind,
    ) -> Self {
        Constraint::Distance(DistanceConstraint {
            i,
            j,
            rest_length,
            stiffness,
            kind,
        })
    }

    pub(crate) fn offset_particles(&self, offset: usize) -> Constraint {
        match *self {
            Constraint::Distance(d) => Constraint::Distance(DistanceConstraint {
                i: d.i + offset,
                j: d.j + offset,
                ..d
            }),
            Constraint::Density(d) => Constraint::Density(d),
            Constraint::Attachment(a) => Constraint::Attachment(Attachment {
                particle: a.particle + offset,
                ..a
            }),
        }
    }

    pub fn validate(&self, n_particles: usize, n_pickers: usize) -> Result<()> {
        match self {
            Constraint::Distance(d) => {
                if d.i == d.j {
                    return Err(Error::invalid("distance constraint", "i == j"));
                }
                if d.i >= n_particles || d.j >= n_particles {
                    return Err(Error::invalid("distance constraint", "index out of range"));
                }
                if !(d.rest_length > 0.0) {
                    return Err(Error::invalid(
                        "distance constraint",
                        "rest length must be positive",
                    ));
                }
                if !(d.stiffness > 0.0 && d.stiffness <= 1.0) {
                    return Err(Error::invalid(
                        "distance constraint",
                        "stiffness outside (0, 1]",
                    ));
                }
            }
            Constraint::Density(d) => {
                if !(d.rest_density > 0.0) || !(d.kernel_radius > 0.0) {
                    return Err(Error::invalid(
                        "density constraint",
                        "rest density and kernel radius must be positive",
                    ));
                }
            }
            Constraint::Attachment(a) => {
                if a.particle >= n_particles || a.picker >= n_pickers {
                    return Err(Error::invalid("attachment", "index out of range"));
                }
            }
        }
        Ok(())
    }
}

/// Corrections for the two endpoints of a distance constraint.
///
/// Returns `None` when the endpoints coincide (the direction is undefined)
/// and zero corrections when both endpoints are static.
pub fn project_distance(
    c: &DistanceConstraint,
    xi: Vec3,
    xj: Vec3,
    wi: f64,
    wj: f64,
) -> Option<(Vec3, Vec3)> {
    let d = xi - xj;
    let len = d.length();
    if len < 1e-9 {
        return None;
    }
    let wsum = wi + wj;
    if wsum == 0.0 {
        return Some((Vec3::ZERO, Vec3::ZERO));
    }
    let n = d / len;
    let violation = c.stiffness * (len - c.rest_length);
    let di = -(wi / wsum) * violation * n;
    let dj = (wj / wsum) * violation * n;
    Some((di, dj))
}
