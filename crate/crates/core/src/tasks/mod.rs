//! The ten manipulation tasks: settings, action application, performance
//! and observations.

pub mod assignment;
pub mod reward;
pub mod rope;

use std::fmt;

use crate::actuation::{
    apply_cup, update_grasp, ActionKind, ActionSpaceSpec, Cup, CupLimits, Workspace,
    DROP_FLOOR_THRESHOLD, PICKER_RADIUS,
};
use crate::assets::{CupPose, RopeSpec};
use crate::error::{Error, Result};
use crate::pbd::{solve_step, Group, Scene, SimConfig, StepStats, FLUID_REST_DISTANCE};
use crate::Vec3;

pub use reward::WaterTally;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    TransportWater,
    PourWater,
    PourWaterAmount,
    StraightenRope,
    RopeConfiguration,
    SpreadCloth,
    FoldCloth,
    FoldCrumpledCloth,
    DropCloth,
    DropFoldCloth,
}

/// Which deformable object a task manipulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectKind {
    Water,
    Rope,
    Cloth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskInfo {
    pub horizon: usize,
    /// Substeps per environment step.
    pub repetition: usize,
    /// Default CEM planning horizon.
    pub planning_horizon: usize,
}

impl TaskKind {
    pub const ALL: [TaskKind; 10] = [
        TaskKind::TransportWater,
        TaskKind::PourWater,
        TaskKind::PourWaterAmount,
        TaskKind::StraightenRope,
        TaskKind::RopeConfiguration,
        TaskKind::SpreadCloth,
        TaskKind::FoldCloth,
        TaskKind::FoldCrumpledCloth,
        TaskKind::DropCloth,
        TaskKind::DropFoldCloth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::TransportWater => "transport_water",
            TaskKind::PourWater => "pour_water",
            TaskKind::PourWaterAmount => "pour_water_amount",
            TaskKind::StraightenRope => "straighten_rope",
            TaskKind::RopeConfiguration => "rope_configuration",
            TaskKind::SpreadCloth => "spread_cloth",
            TaskKind::FoldCloth => "fold_cloth",
            TaskKind::FoldCrumpledCloth => "fold_crumpled_cloth",
            TaskKind::DropCloth => "drop_cloth",
            TaskKind::DropFoldCloth => "drop_fold_cloth",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TaskKind::TransportWater => "TransportWater",
            TaskKind::PourWater => "PourWater",
            TaskKind::PourWaterAmount => "PourWaterAmount",
            TaskKind::StraightenRope => "StraightenRope",
            TaskKind::RopeConfiguration => "RopeConfiguration",
            TaskKind::SpreadCloth => "SpreadCloth",
            TaskKind::FoldCloth => "FoldCloth",
            TaskKind::FoldCrumpledCloth => "FoldCrumpledCloth",
            TaskKind::DropCloth => "DropCloth",
            TaskKind::DropFoldCloth => "DropFoldCloth",
        }
    }

    /// Accepts both `pour_water` and `PourWater`.
    pub fn from_name(s: &str) -> Result<TaskKind> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || k.title() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }

    pub fn id(self) -> u16 {
        self as u16
    }

    pub fn from_id(id: u16) -> Result<TaskKind> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown task id {id}")))
    }

    pub fn object(self) -> ObjectKind {
        match self {
            TaskKind::TransportWater | TaskKind::PourWater | TaskKind::PourWaterAmount => {
                ObjectKind::Water
            }
            TaskKind::StraightenRope | TaskKind::RopeConfiguration => ObjectKind::Rope,
            _ => ObjectKind::Cloth,
        }
    }

    pub fn group(self) -> Group {
        match self.object() {
            ObjectKind::Water => Group::Fluid,
            ObjectKind::Rope => Group::Rope,
            ObjectKind::Cloth => Group::Cloth,
        }
    }

    pub fn info(self) -> TaskInfo {
        let (horizon, repetition, planning_horizon) = match self {
            TaskKind::TransportWater => (75, 8, 7),
            TaskKind::PourWater | TaskKind::PourWaterAmount => (100, 8, 40),
            TaskKind::StraightenRope | TaskKind::RopeConfiguration => (75, 8, 15),
            TaskKind::SpreadCloth => (100, 8, 15),
            TaskKind::FoldCloth | TaskKind::FoldCrumpledCloth => (100, 8, 30),
            TaskKind::DropCloth | TaskKind::DropFoldCloth => (15, 32, 15),
        };
        TaskInfo {
            horizon,
            repetition,
            planning_horizon,
        }
    }

    pub fn action_kind(self) -> ActionKind {
        match self {
            TaskKind::TransportWater => ActionKind::Cup1D,
            TaskKind::PourWater | TaskKind::PourWaterAmount => ActionKind::Cup3D,
            _ => ActionKind::Pickers(2),
        }
    }

    pub fn action_space(self) -> ActionSpaceSpec {
        ActionSpaceSpec::new(self.action_kind())
    }

    pub fn is_drop(self) -> bool {
        matches!(self, TaskKind::DropCloth | TaskKind::DropFoldCloth)
    }

    /// Every task except StraightenRope uses the first-step performance as
    /// its lower bound.
    pub fn lower_bound_is_first_step(self) -> bool {
        self != TaskKind::StraightenRope
    }

    pub fn sim_config(self) -> SimConfig {
        let base = SimConfig::default();
        match self.object() {
            ObjectKind::Water => SimConfig {
                solver_iterations: FLUID_SOLVER_ITERATIONS,
                particle_radius: FLUID_REST_DISTANCE / 2.0,
                ..base
            },
            ObjectKind::Rope => SimConfig {
                particle_radius: crate::assets::ROPE_SPACING / 2.0,
                ..base
            },
            ObjectKind::Cloth => SimConfig {
                particle_radius: crate::assets::CLOTH_SPACING / 2.0,
                ..base
            },
        }
    }

    pub fn workspace(self) -> Workspace {
        Workspace::with_floor(if self.is_drop() {
            DROP_FLOOR_THRESHOLD
        } else {
            PICKER_FLOOR
        })
    }

    pub fn reduced_dim(self) -> usize {
        match self {
            TaskKind::TransportWater => 7,
            TaskKind::PourWater => 13,
            TaskKind::PourWaterAmount => 14,
            TaskKind::StraightenRope | TaskKind::RopeConfiguration => 3 * rope::KEYPOINTS + 6,
            _ => 18,
        }
    }

    /// Largest particle count any variation of this task can have.
    pub fn max_particles(self, scale: ParticleScale) -> usize {
        match self.object() {
            ObjectKind::Water => {
                let m = MAX_WATER_SIDE.div_ceil(scale.fluid_divisor());
                m * m * 4 * m
            }
            ObjectKind::Rope => crate::assets::ROPE_PARTICLES,
            ObjectKind::Cloth => {
                let m = MAX_CLOTH_SIDE.div_ceil(scale.cloth_divisor());
                m * m
            }
        }
    }

    pub fn full_state_dim(self, scale: ParticleScale) -> usize {
        3 * self.max_particles(scale) + self.extra_state_dim()
    }

    fn extra_state_dim(self) -> usize {
        match self.action_kind() {
            ActionKind::Pickers(n) => 4 * n,
            _ => 3,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const FLUID_SOLVER_ITERATIONS: usize = 4;
/// Lowest picker height outside the drop tasks.
pub const PICKER_FLOOR: f64 = 0.05;
pub const MAX_WATER_SIDE: usize = 13;
pub const MAX_CLOTH_SIDE: usize = 120;

/// Uniform reduction of particle counts for desk-scale runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParticleScale {
    #[default]
    Paper,
    /// Cloth dimensions divided by 4, water dimensions by 2.
    Desk,
}

impl ParticleScale {
    pub fn name(self) -> &'static str {
        match self {
            ParticleScale::Paper => "paper",
            ParticleScale::Desk => "desk",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ParticleScale::Paper),
            "desk" => Ok(ParticleScale::Desk),
            _ => Err(Error::invalid(
                "particle scale",
                format!("`{s}` (expected paper or desk)"),
            )),
        }
    }

    pub fn cloth_divisor(self) -> usize {
        match self {
            ParticleScale::Paper => 1,
            ParticleScale::Desk => 4,
        }
    }

    pub fn fluid_divisor(self) -> usize {
        match self {
            ParticleScale::Paper => 1,
            ParticleScale::Desk => 2,
        }
    }
}

/// Task-specific state that lives outside the particle scene.
#[derive(Clone, Debug, PartialEq)]
pub enum Setup {
    Transport {
        cup: Cup,
        target_x: f64,
    },
    Pour {
        control: Cup,
        target: Cup,
        initial_distance: f64,
        /// Goal fraction of the amount task.
        goal: Option<f64>,
    },
    Rope {
        spec: RopeSpec,
        goal: Option<Vec<Vec3>>,
    },
    Cloth {
        width: usize,
        length: usize,
        spacing: f64,
        initial_center: Vec3,
        /// Flattened target of the drop tasks.
        flat_target: Option<Vec<Vec3>>,
    },
}

/// A task instance: scene, simulation settings and task bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskState {
    pub kind: TaskKind,
    pub scene: Scene,
    pub sim: SimConfig,
    pub setup: Setup,
}

impl TaskState {
    pub fn new(kind: TaskKind, scene: Scene, setup: Setup) -> Self {
        TaskState {
            kind,
            scene,
            sim: kind.sim_config(),
            setup,
        }
    }

    pub fn grab_range(&self) -> f64 {
        PICKER_RADIUS + self.sim.particle_radius
    }

    /// Applies one raw (denormalized) action over `repetition` substeps.
    /// Picker and cup motion is split into equal increments.
    pub fn apply(&mut self, raw: &[f64], repetition: usize) -> Result<StepStats> {
        let mut stats = StepStats::default();
        let kind = self.kind.action_kind();
        match (&mut self.setup, kind) {
            (Setup::Transport { cup, .. }, ActionKind::Cup1D)
            | (Setup::Pour { control: cup, .. }, ActionKind::Cup3D) => {
                let start = cup.pose();
                let end = apply_cup(&cup.spec, raw, kind, &CupLimits::default());
                for k in 1..=repetition {
                    let pose = if k == repetition {
                        end
                    } else {
                        let t = k as f64 / repetition as f64;
                        CupPose {
                            x: start.x + (end.x - start.x) * t,
                            y: start.y + (end.y - start.y) * t,
                            theta: start.theta + (end.theta - start.theta) * t,
                        }
                    };
                    cup.set_pose(&mut self.scene, pose, self.sim.dt);
                    stats.degenerate += solve_step(&mut self.scene, &self.sim)?.degenerate;
                }
            }
            (_, ActionKind::Pickers(n)) => {
                let workspace = self.kind.workspace();
                let range = PICKER_RADIUS + self.sim.particle_radius;
                let mut moves = Vec::with_capacity(n);
                for p in 0..n {
                    update_grasp(&mut self.scene, p, raw[4 * p + 3], range);
                    let start = self.scene.pickers[p].position;
                    let end = workspace
                        .clamp(start + Vec3::new(raw[4 * p], raw[4 * p + 1], raw[4 * p + 2]));
                    moves.push((start, end));
                }
                for k in 1..=repetition {
                    for (p, &(start, end)) in moves.iter().enumerate() {
                        self.scene.pickers[p].position = if k == repetition {
                            end
                        } else {
                            start + (end - start) * (k as f64 / repetition as f64)
                        };
                    }
                    stats.degenerate += solve_step(&mut self.scene, &self.sim)?.degenerate;
                }
            }
            _ => {
                return Err(Error::invalid(
                    "task state",
                    "setup does not match the task kind",
                ))
            }
        }
        Ok(stats)
    }

    /// Lets the scene evolve without actuation.
    pub fn idle(&mut self, substeps: usize) -> Result<()> {
        let zero = vec![0.0; self.kind.action_space().dim()];
        let mut raw = zero;
        if let ActionKind::Pickers(n) = self.kind.action_kind() {
            // Keep whatever is held.
            for p in 0..n {
                raw[4 * p + 3] = if self.scene.pickers[p].attached.is_some() {
                    1.0
                } else {
                    0.0
                };
            }
        }
        self.apply(&raw, substeps).map(|_| ())
    }

    pub fn object_indices(&self) -> Vec<usize> {
        self.scene.particles.indices_in(self.kind.group())
    }

    fn object_positions(&self) -> Vec<Vec3> {
        let g = self.kind.group();
        let ps = &self.scene.particles;
        ps.positions
            .iter()
            .zip(&ps.groups)
            .filter(|(_, &gi)| gi == g)
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn tally(&self) -> Option<WaterTally> {
        match &self.setup {
            Setup::Transport { cup, .. } => Some(reward::classify_water(
                &self.object_positions(),
                &cup.spec,
                None,
            )),
            Setup::Pour {
                control, target, ..
            } => Some(reward::classify_water(
                &self.object_positions(),
                &control.spec,
                Some(&target.spec),
            )),
            _ => None,
        }
    }

    /// The task's performance measure s for the current state.
    pub fn performance(&self) -> Result<f64> {
        let pos = self.object_positions();
        Ok(match (&self.setup, self.kind) {
            (Setup::Transport { cup, target_x }, _) => {
                let t = reward::classify_water(&pos, &cup.spec, None);
                reward::reward_transport(&t, cup.pose().x, *target_x)
            }
            (
                Setup::Pour {
                    control,
                    target,
                    goal,
                    ..
                },
                _,
            ) => {
                let t = reward::classify_water(&pos, &control.spec, Some(&target.spec));
                match goal {
                    Some(g) => reward::reward_pour_amount(&t, *g),
                    None => reward::reward_pour(&t),
                }
            }
            (Setup::Rope { spec, goal: None }, _) => {
                reward::reward_straighten(&pos, spec.straight_length())
            }
            (Setup::Rope { goal: Some(g), .. }, _) => {
                reward::reward_rope_config(&rope::keypoints(&pos), g)?
            }
            (Setup::Cloth { spacing, .. }, TaskKind::SpreadCloth) => {
                reward::reward_spread(&pos, *spacing)
            }
            (
                Setup::Cloth {
                    flat_target: Some(t),
                    ..
                },
                TaskKind::DropCloth,
            ) => reward::reward_drop(&pos, t),
            (
                Setup::Cloth {
                    width,
                    length,
                    initial_center,
                    ..
                },
                _,
            ) => reward::reward_fold(&pos, *width, *length, *initial_center),
        })
    }

    /// Height of the water surface above the controlled cup's bottom, in
    /// the cup frame.
    fn water_height(&self, cup: &Cup) -> f64 {
        let bottom = -cup.spec.height / 2.0;
        self.object_positions()
            .into_iter()
            .filter(|p| cup.spec.contains(*p))
            .map(|p| cup.spec.to_local(p).y - bottom)
            .fold(0.0, f64::max)
    }

    fn push_pickers(&self, out: &mut Vec<f64>, with_state: bool) {
        for pk in &self.scene.pickers {
            out.extend_from_slice(&pk.position.to_array());
            if with_state {
                out.push(if pk.attached.is_some() { 1.0 } else { 0.0 });
            }
        }
    }

    /// Low-dimensional task summary; see [`TaskKind::reduced_dim`].
    pub fn reduced_state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.kind.reduced_dim());
        match &self.setup {
            Setup::Transport { cup, target_x } => {
                let t = self.tally().unwrap_or_default();
                let s = &cup.spec;
                out.extend([
                    s.width,
                    s.length,
                    s.height,
                    target_x - s.pose.x,
                    self.water_height(cup),
                    t.control_fraction(),
                    1.0 - t.control_fraction(),
                ]);
            }
            Setup::Pour {
                control,
                target,
                initial_distance,
                goal,
            } => {
                let t = self.tally().unwrap_or_default();
                let (c, g) = (&control.spec, &target.spec);
                out.extend([c.width, c.length, c.height, g.width, g.length, g.height]);
                out.extend([c.pose.x, c.pose.y, c.pose.theta, *initial_distance]);
                out.extend([
                    self.water_height(control),
                    t.control_fraction(),
                    t.target_fraction(),
                ]);
                if let Some(goal) = goal {
                    out.push(*goal);
                }
            }
            Setup::Rope { .. } => {
                for k in rope::keypoints(&self.object_positions()) {
                    out.extend_from_slice(&k.to_array());
                }
                self.push_pickers(&mut out, false);
            }
            Setup::Cloth { width, length, .. } => {
                let pos = self.object_positions();
                let (w, l) = (*width, *length);
                for idx in [0, (w - 1) * l, l - 1, w * l - 1] {
                    out.extend_from_slice(&pos[idx].to_array());
                }
                self.push_pickers(&mut out, false);
            }
        }
        out
    }

    /// All particle positions zero-padded to the task maximum, followed by
    /// the picker positions and pick flags or the controlled cup's pose.
    pub fn full_state(&self, scale: ParticleScale) -> Result<Vec<f64>> {
        let max = self.kind.max_particles(scale);
        let n = self.scene.particles.len();
        if n > max {
            return Err(Error::invalid(
                "full state",
                format!("{n} particles exceed the {} maximum of {max}", scale.name()),
            ));
        }
        let mut out = Vec::with_capacity(self.kind.full_state_dim(scale));
        for p in &self.scene.particles.positions {
            out.extend_from_slice(&p.to_array());
        }
        out.resize(3 * max, 0.0);
        match &self.setup {
            Setup::Transport { cup, .. } | Setup::Pour { control: cup, .. } => {
                let p = cup.pose();
                out.extend([p.x, p.y, p.theta]);
            }
            _ => self.push_pickers(&mut out, true),
        }
        Ok(out)
    }
}
