//! Action spaces, pickers and kinematic cups.

use crate::assets::{CupPose, CupSpec};
use crate::error::{Error, Result};
use crate::pbd::{Attachment, Collider, Constraint, Group, Scene, Shape};
use crate::Vec3;

pub const PICKER_RADIUS: f64 = 0.05;
/// Picker height limit for the drop tasks.
pub const DROP_FLOOR_THRESHOLD: f64 = 0.12;
pub const WORKSPACE_HALF_EXTENT: f64 = 1.5;

/// Particle held by a picker, with the offset captured at grab time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grab {
    pub particle: usize,
    pub offset: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Picker {
    pub position: Vec3,
    pub radius: f64,
    pub attached: Option<Grab>,
}

impl Picker {
    pub fn new(position: Vec3) -> Self {
        Picker {
            position,
            radius: PICKER_RADIUS,
            attached: None,
        }
    }

    pub fn grab_offset(&self) -> Vec3 {
        self.attached.map_or(Vec3::ZERO, |g| g.offset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    /// Cup translation along x.
    Cup1D,
    /// Cup translation in x, y and tilt.
    Cup3D,
    Pickers(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSpaceSpec {
    pub kind: ActionKind,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

pub const CUP1D_STEP: f64 = 0.011;
pub const CUP_STEP: f64 = 0.01;
pub const CUP_TILT_STEP: f64 = 0.015;
pub const PICKER_STEP: f64 = 0.01;

impl ActionSpaceSpec {
    pub fn new(kind: ActionKind) -> Self {
        let (low, high) = match kind {
            ActionKind::Cup1D => (vec![-CUP1D_STEP], vec![CUP1D_STEP]),
            ActionKind::Cup3D => (
                vec![-CUP_STEP, -CUP_STEP, -CUP_TILT_STEP],
                vec![CUP_STEP, CUP_STEP, CUP_TILT_STEP],
            ),
            ActionKind::Pickers(n) => {
                let low = [-PICKER_STEP, -PICKER_STEP, -PICKER_STEP, 0.0];
                let high = [PICKER_STEP, PICKER_STEP, PICKER_STEP, 1.0];
                (low.repeat(n), high.repeat(n))
            }
        };
        ActionSpaceSpec { kind, low, high }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            ActionKind::Cup1D => 1,
            ActionKind::Cup3D => 3,
            ActionKind::Pickers(n) => 4 * n,
        };
        if self.low.len() != expected || self.high.len() != expected {
            return Err(Error::invalid(
                "action space",
                "bounds do not match the action kind",
            ));
        }
        if self
            .low
            .iter()
            .zip(&self.high)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::invalid(
                "action space",
                "bounds must be finite with low < high",
            ));
        }
        Ok(())
    }
}

/// Maps a normalized action in [-1, 1]^k onto the raw ranges. Inputs outside
/// [-1, 1] are clamped first.
pub fn denormalize(spec: &ActionSpaceSpec, task: &'static str, action: &[f64]) -> Result<Vec<f64>> {
    if action.len() != spec.dim() {
        return Err(Error::ActionDimension {
            task,
            expected: spec.dim(),
            got: action.len(),
        });
    }
    if action.iter().any(|a| a.is_nan()) {
        return Err(Error::NonFinite);
    }
    Ok(action
        .iter()
        .zip(spec.low.iter().zip(&spec.high))
        .map(|(&a, (&lo, &hi))| {
            let t = (a.clamp(-1.0, 1.0) + 1.0) * 0.5;
            if t == 1.0 {
                hi
            } else {
                (lo + t * (hi - lo)).clamp(lo, hi)
            }
        })
        .collect())
}

/// Axis-aligned region the pickers may occupy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Workspace {
    pub min: Vec3,
    pub max: Vec3,
}

impl Workspace {
    pub fn with_floor(floor: f64) -> Self {
        let e = WORKSPACE_HALF_EXTENT;
        Workspace {
            min: Vec3::new(-e, floor, -e),
            max: Vec3::new(e, e, e),
        }
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        p.clamp(self.min, self.max)
    }
}

/// Attaches or releases according to the pick channel `p`.
///
/// With `p >= 0.5` an unattached picker grabs the nearest free cloth or rope
/// particle within `grab_range`; with `p < 0.5` it releases whatever it
/// holds. Releasing only removes the constraint.
pub fn update_grasp(scene: &mut Scene, picker: usize, p: f64, grab_range: f64) {
    let picking = p >= 0.5;
    let held = scene.pickers[picker].attached;
    match (picking, held) {
        (true, Some(_)) => {}
        (true, None) => {
            let center = scene.pickers[picker].position;
            let mut best: Option<(f64, usize)> = None;
            for (i, &x) in scene.particles.positions.iter().enumerate() {
                let g = scene.particles.groups[i];
                if !(g == Group::Cloth || g == Group::Rope) || scene.is_attached(i) {
                    continue;
                }
                let d = (x - center).length();
                if d <= grab_range && best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            if let Some((_, particle)) = best {
                scene.pickers[picker].attached = Some(Grab {
                    particle,
                    offset: scene.particles.positions[particle] - center,
                });
                scene
                    .constraints
                    .push(Constraint::Attachment(Attachment { picker, particle }));
            }
        }
        (false, Some(_)) => release(scene, picker),
        (false, None) => {}
    }
}

pub fn release(scene: &mut Scene, picker: usize) {
    scene.pickers[picker].attached = None;
    scene
        .constraints
        .retain(|c| !matches!(c, Constraint::Attachment(a) if a.picker == picker));
}

/// Moves a picker by `delta`, clamped to the workspace.
pub fn move_picker(scene: &mut Scene, picker: usize, delta: Vec3, workspace: &Workspace) {
    let pk = &mut scene.pickers[picker];
    pk.position = workspace.clamp(pk.position + delta);
}

/// One-shot picker action `(dx, dy, dz, p)`: grasp update followed by the
/// full displacement.
pub fn apply_picker(
    scene: &mut Scene,
    picker: usize,
    raw: [f64; 4],
    workspace: &Workspace,
    grab_range: f64,
) {
    update_grasp(scene, picker, raw[3], grab_range);
    move_picker(scene, picker, Vec3::new(raw[0], raw[1], raw[2]), workspace);
}

/// A kinematic cup and the slice of scene colliders that represents it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cup {
    pub spec: CupSpec,
    pub first_collider: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CupLimits {
    pub x: (f64, f64),
    /// Upper bound on the lift above the resting height.
    pub max_lift: f64,
    pub theta: (f64, f64),
}

impl Default for CupLimits {
    fn default() -> Self {
        CupLimits {
            x: (-WORKSPACE_HALF_EXTENT, WORKSPACE_HALF_EXTENT),
            max_lift: 1.0,
            theta: (-std::f64::consts::PI, std::f64::consts::PI),
        }
    }
}

impl Cup {
    /// Adds the cup's colliders to the scene.
    pub fn insert(scene: &mut Scene, spec: CupSpec) -> Result<Cup> {
        let colliders = crate::assets::build_cup(&spec)?;
        let first_collider = scene.colliders.len();
        scene.colliders.extend(colliders);
        Ok(Cup {
            spec,
            first_collider,
        })
    }

    pub fn pose(&self) -> CupPose {
        self.spec.pose
    }

    /// Repositions the cup's boxes at `pose`; the displacement from the
    /// previous pose over `dt` becomes the colliders' surface velocity.
    pub fn set_pose(&mut self, scene: &mut Scene, pose: CupPose, dt: f64) {
        let old = self.spec.pose;
        self.spec.pose = pose;
        let lin = Vec3::new(pose.x - old.x, pose.y - old.y, 0.0) / dt;
        let ang = (pose.theta - old.theta) / dt;
        let pivot = Vec3::new(pose.x, pose.y, 0.0);
        for (k, &(center, half_extents)) in self.spec.local_boxes().iter().enumerate() {
            let c = &mut scene.colliders[self.first_collider + k];
            c.shape = Shape::Box {
                center: self.spec.to_world(center),
                half_extents,
                angle: pose.theta,
            };
            c.linear_velocity = lin;
            c.angular_velocity = ang;
            c.pivot = pivot;
        }
    }

    pub fn colliders<'a>(&self, scene: &'a Scene) -> &'a [Collider] {
        &scene.colliders[self.first_collider..self.first_collider + 5]
    }
}

/// New pose after a raw cup action. `Cup1D` reads only `dx`; `Cup3D` reads
/// `(dx, dy, dtheta)`. The result is clamped to the limits and lifted if
/// the tilt would push the cup through the floor.
pub fn apply_cup(spec: &CupSpec, raw: &[f64], kind: ActionKind, limits: &CupLimits) -> CupPose {
    let pose = spec.pose;
    let (dx, dy, dtheta) = match kind {
        ActionKind::Cup1D => (raw[0], 0.0, 0.0),
        ActionKind::Cup3D => (raw[0], raw[1], raw[2]),
        ActionKind::Pickers(_) => (0.0, 0.0, 0.0),
    };
    if dx == 0.0 && dy == 0.0 && dtheta == 0.0 {
        return pose;
    }
    let x = (pose.x + dx).clamp(limits.x.0, limits.x.1);
    let theta = (pose.theta + dtheta).clamp(limits.theta.0, limits.theta.1);
    let rest = spec.resting_center_height();
    let floor = spec.min_center_height(theta).max(rest.min(pose.y));
    let y = (pose.y + dy)
        .clamp(floor, rest + limits.max_lift)
        .max(floor);
    CupPose { x, y, theta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbd::ParticleSet;

    fn picker_scene(particle_at: Vec3) -> Scene {
        let mut ps = ParticleSet::new();
        ps.push(particle_at, 1.0, Group::Cloth);
        ps.push(Vec3::new(5.0, 0.0, 0.0), 1.0, Group::Cloth);
        let mut scene = Scene::new();
        scene.add_object(&ps, &[]);
        scene.pickers.push(Picker::new(Vec3::ZERO));
        scene
    }

    #[test]
    fn transport_water_endpoints() {
        let spec = ActionSpaceSpec::new(ActionKind::Cup1D);
        assert_eq!(denormalize(&spec, "t", &[1.0]).unwrap(), vec![0.011]);
        assert_eq!(denormalize(&spec, "t", &[-1.0]).unwrap(), vec![-0.011]);
        assert_eq!(denormalize(&spec, "t", &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(denormalize(&spec, "t", &[7.0]).unwrap(), vec![0.011]);
    }

    #[test]
    fn pour_water_endpoints() {
        let spec = ActionSpaceSpec::new(ActionKind::Cup3D);
        assert_eq!(
            denormalize(&spec, "p", &[1.0; 3]).unwrap(),
            vec![0.01, 0.01, 0.015]
        );
        assert_eq!(
            denormalize(&spec, "p", &[-1.0; 3]).unwrap(),
            vec![-0.01, -0.01, -0.015]
        );
    }

    #[test]
    fn picker_channel_endpoints() {
        let spec = ActionSpaceSpec::new(ActionKind::Pickers(2));
        assert_eq!(spec.dim(), 8);
        let lo = denormalize(&spec, "c", &[-1.0; 8]).unwrap();
        let hi = denormalize(&spec, "c", &[1.0; 8]).unwrap();
        assert_eq!(lo, vec![-0.01, -0.01, -0.01, 0.0, -0.01, -0.01, -0.01, 0.0]);
        assert_eq!(hi, vec![0.01, 0.01, 0.01, 1.0, 0.01, 0.01, 0.01, 1.0]);
    }

    #[test]
    fn wrong_dimension_is_an_error() {
        let spec = ActionSpaceSpec::new(ActionKind::Cup3D);
        assert!(matches!(
            denormalize(&spec, "pour_water", &[0.0; 2]),
            Err(Error::ActionDimension {
                expected: 3,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(ActionSpaceSpec::new(ActionKind::Pickers(3))
            .validate()
            .is_ok());
        let mut bad = ActionSpaceSpec::new(ActionKind::Cup1D);
        bad.low[0] = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grab_within_range() {
        let mut scene = picker_scene(Vec3::new(0.0, -0.03, 0.0));
        update_grasp(&mut scene, 0, 0.6, 0.056);
        assert_eq!(scene.pickers[0].attached.map(|g| g.particle), Some(0));
        assert_eq!(scene.attachment_of(0), Some(0));
        assert_eq!(scene.pickers[0].grab_offset(), Vec3::new(0.0, -0.03, 0.0));
    }

    #[test]
    fn release_below_half() {
        let mut scene = picker_scene(Vec3::new(0.0, -0.03, 0.0));
        update_grasp(&mut scene, 0, 0.6, 0.056);
        let before = scene.particles.positions.clone();
        update_grasp(&mut scene, 0, 0.49, 0.056);
        assert_eq!(scene.pickers[0].attached, None);
        assert_eq!(scene.attachment_of(0), None);
        assert_eq!(scene.particles.positions, before);
    }

    #[test]
    fn out_of_reach_does_nothing() {
        let mut scene = picker_scene(Vec3::new(0.56, 0.0, 0.0));
        update_grasp(&mut scene, 0, 0.9, 0.056);
        assert_eq!(scene.pickers[0].attached, None);
        assert!(scene.constraints.is_empty());
    }

    #[test]
    fn fluid_is_not_grabbable() {
        let mut scene = Scene::new();
        scene
            .particles
            .push(Vec3::new(0.0, 0.01, 0.0), 1.0, Group::Fluid);
        scene.pickers.push(Picker::new(Vec3::ZERO));
        update_grasp(&mut scene, 0, 1.0, 0.1);
        assert_eq!(scene.pickers[0].attached, None);
    }

    #[test]
    fn floor_threshold_clamps_height() {
        let mut scene = picker_scene(Vec3::ZERO);
        scene.pickers[0].position = Vec3::new(0.0, 0.125, 0.0);
        let ws = Workspace::with_floor(DROP_FLOOR_THRESHOLD);
        apply_picker(&mut scene, 0, [0.0, -0.01, 0.0, 0.0], &ws, 0.056);
        assert_eq!(scene.pickers[0].position.y, DROP_FLOOR_THRESHOLD);
        apply_picker(&mut scene, 0, [0.0, -0.01, 0.0, 0.0], &ws, 0.056);
        assert_eq!(scene.pickers[0].position.y, DROP_FLOOR_THRESHOLD);
    }

    fn cup_spec(x: f64) -> CupSpec {
        let mut spec = CupSpec {
            width: 0.3,
            length: 0.3,
            height: 0.2,
            wall_thickness: 0.01,
            pose: CupPose::default(),
        };
        spec.pose = CupPose {
            x,
            y: spec.resting_center_height(),
            theta: 0.0,
        };
        spec
    }

    #[test]
    fn cup1d_increment() {
        let spec = cup_spec(0.3);
        let pose = apply_cup(&spec, &[0.011], ActionKind::Cup1D, &CupLimits::default());
        assert!((pose.x - 0.311).abs() < 1e-15);
        assert_eq!(pose.y, spec.pose.y);
        assert_eq!(pose.theta, 0.0);
    }

    #[test]
    fn cup3d_tilt_accumulates_to_pouring_angle() {
        let mut spec = cup_spec(0.0);
        for _ in 0..105 {
            spec.pose = apply_cup(
                &spec,
                &[0.0, 0.0, 0.015],
                ActionKind::Cup3D,
                &CupLimits::default(),
            );
        }
        assert!((spec.pose.theta - 1.575).abs() < 1e-12);
        assert!(spec.pose.y >= spec.min_center_height(spec.pose.theta) - 1e-15);
    }

    #[test]
    fn zero_action_keeps_pose() {
        let spec = cup_spec(0.2);
        assert_eq!(
            apply_cup(
                &spec,
                &[0.0, 0.0, 0.0],
                ActionKind::Cup3D,
                &CupLimits::default()
            ),
            spec.pose
        );
    }

    #[test]
    fn set_pose_moves_colliders() {
        let mut scene = Scene::new();
        let mut cup = Cup::insert(&mut scene, cup_spec(0.0)).unwrap();
        let mut pose = cup.pose();
        pose.x += 0.01;
        cup.set_pose(&mut scene, pose, 0.01);
        let expected = build_cup_at(pose);
        for (c, e) in cup.colliders(&scene).iter().zip(&expected) {
            assert_eq!(c.shape, e.shape);
            assert!((c.linear_velocity - Vec3::new(1.0, 0.0, 0.0)).length() < 1e-12);
        }
    }

    fn build_cup_at(pose: CupPose) -> Vec<Collider> {
        let mut spec = cup_spec(0.0);
        spec.pose = pose;
        crate::assets::build_cup(&spec).unwrap()
    }
}
