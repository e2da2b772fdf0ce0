//! Gym-style environment handle, snapshots, policies and episode runs.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::actuation::{denormalize, Cup};
use crate::assets::{CupPose, CupSpec, RopeSpec};
use crate::cem::{CemConfig, CemPolicy, PlanningModel};
use crate::error::{Error, Result};
use crate::metrics::{compute_bounds, normalize, EvalRecord, EvalReport, PerformanceBounds};
use crate::render::{render_state, Frame, IMAGE_SIZE};
use crate::tasks::{ParticleScale, Setup, TaskKind, TaskState, WaterTally};
use crate::variation::{
    generate, instantiate, read_scene, write_scene, Cache, Draws, Precision, Reader, Rng, RngState,
    TaskVariation, Writer, TRAIN_VARIATIONS,
};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObsMode {
    Full,
    Reduced,
    Image,
}

impl ObsMode {
    pub fn name(self) -> &'static str {
        match self {
            ObsMode::Full => "full",
            ObsMode::Reduced => "reduced",
            ObsMode::Image => "image",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ObsMode::Full),
            "reduced" => Ok(ObsMode::Reduced),
            "image" => Ok(ObsMode::Image),
            _ => Err(Error::invalid(
                "observation mode",
                format!("`{s}` (expected full, reduced or image)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Vector(Vec<f64>),
    Image(Frame),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvConfig {
    pub kind: TaskKind,
    /// Particle scale of variations generated on the fly.
    pub scale: ParticleScale,
    pub obs_mode: ObsMode,
    pub image_size: usize,
}

impl EnvConfig {
    pub fn new(kind: TaskKind) -> Self {
        EnvConfig {
            kind,
            scale: ParticleScale::Paper,
            obs_mode: ObsMode::Reduced,
            image_size: IMAGE_SIZE,
        }
    }
}

/// Where reset finds its initial scenes.
#[derive(Clone, Debug)]
pub enum VariationSource {
    Cache(Arc<Cache>),
    /// Generate each requested variation from this master seed.
    Generate {
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub performance: f64,
    pub normalized: f64,
    pub tally: Option<WaterTally>,
    /// Covered area of the spread task.
    pub area: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Complete in-memory state of an environment.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kind: TaskKind,
    pub variation: usize,
    pub step_count: usize,
    pub rng: RngState,
    pub bounds: PerformanceBounds,
    pub state: TaskState,
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"SGS1";

#[derive(Clone, Debug)]
pub struct EnvHandle {
    pub config: EnvConfig,
    source: VariationSource,
    state: Option<TaskState>,
    variation: usize,
    step_count: usize,
    bounds: Option<PerformanceBounds>,
    rng: Rng,
}

impl EnvHandle {
    pub fn new(config: EnvConfig, source: VariationSource) -> Result<Self> {
        if let VariationSource::Cache(c) = &source {
            if c.kind != config.kind {
                return Err(Error::invalid(
                    "variation cache",
                    format!(
                        "cache holds {} but the environment runs {}",
                        c.kind.name(),
                        config.kind.name()
                    ),
                ));
            }
        }
        Ok(EnvHandle {
            config,
            source,
            state: None,
            variation: 0,
            step_count: 0,
            bounds: None,
            rng: Rng::new(0, 0),
        })
    }

    pub fn kind(&self) -> TaskKind {
        self.config.kind
    }

    pub fn seed(&mut self, seed: u64) {
        self.rng = Rng::new(seed, 0);
    }

    pub fn horizon(&self) -> usize {
        self.kind().info().horizon
    }

    pub fn action_dim(&self) -> usize {
        self.kind().action_space().dim()
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn variation_index(&self) -> usize {
        self.variation
    }

    pub fn remaining_steps(&self) -> usize {
        self.horizon() - self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.step_count >= self.horizon()
    }

    pub fn state(&self) -> Option<&TaskState> {
        self.state.as_ref()
    }

    pub fn bounds(&self) -> Option<PerformanceBounds> {
        self.bounds
    }

    pub fn variation(&self, index: usize) -> Result<TaskVariation> {
        match &self.source {
            VariationSource::Cache(c) => c.get(index).cloned(),
            VariationSource::Generate { seed } => {
                generate(self.kind(), self.config.scale, *seed, index)
            }
        }
    }

    fn scale(&self) -> Result<ParticleScale> {
        match &self.source {
            VariationSource::Cache(c) => match c.variations.first() {
                Some(v) => v.scale(),
                None => Ok(self.config.scale),
            },
            VariationSource::Generate { .. } => Ok(self.config.scale),
        }
    }

    pub fn reset(&mut self, index: usize) -> Result<Observation> {
        let v = self.variation(index)?;
        let state = instantiate(&v)?;
        self.bounds = Some(compute_bounds(&state)?);
        self.state = Some(state);
        self.variation = index;
        self.step_count = 0;
        self.observe()
    }

    /// Resets to a variation drawn from the training split.
    pub fn reset_training(&mut self) -> Result<(usize, Observation)> {
        let index = match &self.source {
            VariationSource::Cache(c) => {
                let train: Vec<usize> = c
                    .indices()
                    .into_iter()
                    .filter(|&i| i < TRAIN_VARIATIONS)
                    .collect();
                if train.is_empty() {
                    return Err(Error::MissingVariation {
                        task: self.kind().name(),
                        index: 0,
                    });
                }
                train[self.rng.randint(0, train.len() as i64 - 1) as usize]
            }
            VariationSource::Generate { .. } => {
                self.rng.randint(0, TRAIN_VARIATIONS as i64 - 1) as usize
            }
        };
        Ok((index, self.reset(index)?))
    }

    fn ready(&self) -> Result<(&TaskState, PerformanceBounds)> {
        match (&self.state, self.bounds) {
            (Some(s), Some(b)) => Ok((s, b)),
            _ => Err(Error::NotReset),
        }
    }

    pub fn observe(&self) -> Result<Observation> {
        let (state, _) = self.ready()?;
        Ok(match self.config.obs_mode {
            ObsMode::Full => Observation::Vector(state.full_state(self.scale()?)?),
            ObsMode::Reduced => Observation::Vector(state.reduced_state()),
            ObsMode::Image => Observation::Image(render_state(state, self.config.image_size)?),
        })
    }

    /// Advances one step without building an observation.
    pub fn advance(&mut self, action: &[f64]) -> Result<(StepInfo, bool)> {
        if self.state.is_none() {
            return Err(Error::NotReset);
        }
        if self.is_done() {
            return Err(Error::EpisodeFinished);
        }
        let kind = self.kind();
        let raw = denormalize(&kind.action_space(), kind.name(), action)?;
        let bounds = self.bounds.ok_or(Error::NotReset)?;
        let state = self.state.as_mut().ok_or(Error::NotReset)?;
        state.apply(&raw, kind.info().repetition)?;
        let performance = state.performance()?;
        self.step_count += 1;
        let info = StepInfo {
            performance,
            normalized: normalize(performance, &bounds),
            tally: state.tally(),
            area: match &state.setup {
                Setup::Cloth { .. } if kind == TaskKind::SpreadCloth => Some(performance),
                _ => None,
            },
        };
        Ok((info, self.is_done()))
    }

    pub fn step(&mut self, action: &[f64]) -> Result<Step> {
        let (info, done) = self.advance(action)?;
        Ok(Step {
            observation: self.observe()?,
            reward: info.performance,
            done,
            info,
        })
    }

    pub fn performance(&self) -> Result<f64> {
        self.ready()?.0.performance()
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        let (state, bounds) = self.ready()?;
        Ok(Snapshot {
            kind: self.kind(),
            variation: self.variation,
            step_count: self.step_count,
            rng: self.rng.state(),
            bounds,
            state: state.clone(),
        })
    }

    pub fn restore(&mut self, s: &Snapshot) -> Result<()> {
        if s.kind != self.kind() {
            return Err(Error::SnapshotMismatch {
                expected: self.kind().name(),
                found: s.kind.name(),
            });
        }
        self.variation = s.variation;
        self.step_count = s.step_count;
        self.rng = Rng::from_state(s.rng);
        self.bounds = Some(s.bounds);
        match &mut self.state {
            Some(state) => state.clone_from(&s.state),
            None => self.state = Some(s.state.clone()),
        }
        Ok(())
    }

    pub fn snapshot_bytes(&self) -> Result<Vec<u8>> {
        self.snapshot()?.to_bytes()
    }

    pub fn restore_bytes(&mut self, data: &[u8]) -> Result<()> {
        let s = Snapshot::from_bytes(data)?;
        self.restore(&s)
    }
}

impl PlanningModel for EnvHandle {
    type Snapshot = Snapshot;

    fn snapshot(&self) -> Result<Snapshot> {
        EnvHandle::snapshot(self)
    }

    fn restore(&mut self, s: &Snapshot) -> Result<()> {
        EnvHandle::restore(self, s)
    }

    fn step_reward(&mut self, action: &[f64]) -> Result<(f64, bool)> {
        let (info, done) = self.advance(action)?;
        Ok((info.performance, done))
    }

    fn action_dim(&self) -> usize {
        EnvHandle::action_dim(self)
    }

    fn remaining_steps(&self) -> usize {
        EnvHandle::remaining_steps(self)
    }
}

fn write_cup(w: &mut Writer, c: &Cup) -> Result<()> {
    let s = &c.spec;
    for v in [
        s.width,
        s.length,
        s.height,
        s.wall_thickness,
        s.pose.x,
        s.pose.y,
        s.pose.theta,
    ] {
        w.real(v);
    }
    w.len(c.first_collider)
}

fn read_cup(r: &mut Reader<'_>) -> Result<Cup> {
    let mut v = [0.0; 7];
    for x in &mut v {
        *x = r.real()?;
    }
    Ok(Cup {
        spec: CupSpec {
            width: v[0],
            length: v[1],
            height: v[2],
            wall_thickness: v[3],
            pose: CupPose {
                x: v[4],
                y: v[5],
                theta: v[6],
            },
        },
        first_collider: r.index()?,
    })
}

fn write_points(w: &mut Writer, pts: Option<&Vec<Vec3>>) -> Result<()> {
    match pts {
        Some(p) => {
            w.u8(1);
            w.len(p.len())?;
            for &x in p {
                w.vec3(x);
            }
        }
        None => w.u8(0),
    }
    Ok(())
}

fn read_points(r: &mut Reader<'_>) -> Result<Option<Vec<Vec3>>> {
    if r.u8()? == 0 {
        return Ok(None);
    }
    let n = r.count(24)?;
    (0..n)
        .map(|_| r.vec3())
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn write_setup(w: &mut Writer, setup: &Setup) -> Result<()> {
    match setup {
        Setup::Transport { cup, target_x } => {
            w.u8(0);
            write_cup(w, cup)?;
            w.real(*target_x);
        }
        Setup::Pour {
            control,
            target,
            initial_distance,
            goal,
        } => {
            w.u8(1);
            write_cup(w, control)?;
            write_cup(w, target)?;
            w.real(*initial_distance);
            w.u8(goal.is_some() as u8);
            w.real(goal.unwrap_or(0.0));
        }
        Setup::Rope { spec, goal } => {
            w.u8(2);
            w.len(spec.n_particles)?;
            for v in [
                spec.spacing,
                spec.mass_per_particle,
                spec.stiffness,
                spec.bend_stiffness,
            ] {
                w.real(v);
            }
            write_points(w, goal.as_ref())?;
        }
        Setup::Cloth {
            width,
            length,
            spacing,
            initial_center,
            flat_target,
        } => {
            w.u8(3);
            w.len(*width)?;
            w.len(*length)?;
            w.real(*spacing);
            w.vec3(*initial_center);
            write_points(w, flat_target.as_ref())?;
        }
    }
    Ok(())
}

fn read_setup(r: &mut Reader<'_>) -> Result<Setup> {
    Ok(match r.u8()? {
        0 => Setup::Transport {
            cup: read_cup(r)?,
            target_x: r.real()?,
        },
        1 => {
            let control = read_cup(r)?;
            let target = read_cup(r)?;
            let initial_distance = r.real()?;
            let has_goal = r.u8()? != 0;
            let g = r.real()?;
            Setup::Pour {
                control,
                target,
                initial_distance,
                goal: has_goal.then_some(g),
            }
        }
        2 => {
            let n_particles = r.index()?;
            let spec = RopeSpec {
                n_particles,
                spacing: r.real()?,
                mass_per_particle: r.real()?,
                stiffness: r.real()?,
                bend_stiffness: r.real()?,
            };
            Setup::Rope {
                spec,
                goal: read_points(r)?,
            }
        }
        3 => Setup::Cloth {
            width: r.index()?,
            length: r.index()?,
            spacing: r.real()?,
            initial_center: r.vec3()?,
            flat_target: read_points(r)?,
        },
        t => return Err(Error::Format(format!("unknown setup tag {t}"))),
    })
}

impl Snapshot {
    /// Encoding: magic `SGS1`, task id, variation, step count, rng state,
    /// bounds, task setup, then the scene with f64 reals.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(Precision::F64);
        w.bytes(SNAPSHOT_MAGIC);
        w.u16(self.kind.id());
        w.len(self.variation)?;
        w.len(self.step_count)?;
        w.u64(self.rng.seed);
        w.u64(self.rng.stream);
        w.u128(self.rng.word_pos);
        w.real(self.bounds.lower);
        w.real(self.bounds.upper);
        write_setup(&mut w, &self.state.setup)?;
        write_scene(&mut w, &self.state.scene)?;
        Ok(w.buf)
    }

    pub fn from_bytes(data: &[u8]) -> Result<Snapshot> {
        let mut r = Reader::new(data, Precision::F64);
        if r.take(4)? != SNAPSHOT_MAGIC {
            return Err(Error::Format(
                "not an environment snapshot (bad magic)".into(),
            ));
        }
        let kind = TaskKind::from_id(r.u16()?)?;
        let variation = r.index()?;
        let step_count = r.index()?;
        let rng = RngState {
            seed: r.u64()?,
            stream: r.u64()?,
            word_pos: r.u128()?,
        };
        let bounds = PerformanceBounds {
            lower: r.real()?,
            upper: r.real()?,
        };
        let setup = read_setup(&mut r)?;
        let scene = read_scene(&mut r, kind.group())?;
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after the snapshot".into()));
        }
        Ok(Snapshot {
            kind,
            variation,
            step_count,
            rng,
            bounds,
            state: TaskState::new(kind, scene, setup),
        })
    }
}

/// Maps the current environment state to a normalized action.
pub trait Policy {
    fn act(&mut self, env: &EnvHandle) -> Result<Vec<f64>>;
}

pub struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn act(&mut self, env: &EnvHandle) -> Result<Vec<f64>> {
        Ok(vec![0.0; env.action_dim()])
    }
}

/// Uniform actions on `[-1, 1]`.
pub struct RandomPolicy {
    rng: Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomPolicy {
            rng: Rng::new(seed, stream),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, env: &EnvHandle) -> Result<Vec<f64>> {
        Ok((0..env.action_dim())
            .map(|_| self.rng.uniform(-1.0, 1.0))
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    Zero,
    Random,
    Cem(CemConfig),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Zero => "zero",
            PolicyKind::Random => "random",
            PolicyKind::Cem(_) => "cem",
        }
    }

    /// Policy for one episode; the variation index selects the rng stream.
    pub fn make(&self, seed: u64, index: usize) -> Box<dyn Policy> {
        match self {
            PolicyKind::Zero => Box::new(ZeroPolicy),
            PolicyKind::Random => Box::new(RandomPolicy::new(seed, index as u64)),
            PolicyKind::Cem(cfg) => Box::new(CemPolicy::new(cfg.clone(), seed, index as u64)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub action: Vec<f64>,
    pub performance: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub index: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub final_normalized: f64,
}

impl EpisodeRecord {
    pub fn final_performance(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.performance)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "episode {} seed {}", self.index, self.seed);
        for (t, st) in self.steps.iter().enumerate() {
            let action: Vec<String> = st.action.iter().map(|a| format!("{a:?}")).collect();
            let _ = writeln!(
                s,
                "{t} {:?} {:?} [{}]",
                st.performance,
                st.normalized,
                action.join(" ")
            );
        }
        let _ = writeln!(s, "final {:?}", self.final_normalized);
        s
    }
}

/// Runs one full episode on variation `index`. `on_frame` receives the
/// reset frame (step 0) and the frame after every step.
pub fn run_episode(
    env: &mut EnvHandle,
    policy: &mut dyn Policy,
    index: usize,
    seed: u64,
    mut on_frame: Option<&mut dyn FnMut(usize, &Frame) -> Result<()>>,
) -> Result<EpisodeRecord> {
    env.seed(seed);
    env.reset(index)?;
    if let Some(f) = on_frame.as_mut() {
        f(
            0,
            &render_state(env.state().ok_or(Error::NotReset)?, env.config.image_size)?,
        )?;
    }
    let mut steps = Vec::with_capacity(env.horizon());
    while !env.is_done() {
        let action = policy.act(env)?;
        let (info, _) = env.advance(&action)?;
        if let Some(f) = on_frame.as_mut() {
            f(
                env.step_count(),
                &render_state(env.state().ok_or(Error::NotReset)?, env.config.image_size)?,
            )?;
        }
        steps.push(StepRecord {
            action,
            performance: info.performance,
            normalized: info.normalized,
        });
    }
    Ok(EpisodeRecord {
        index,
        seed,
        final_normalized: steps.last().map_or(f64::NAN, |s| s.normalized),
        steps,
    })
}

/// One episode per index; final-step normalized performance per episode.
pub fn evaluate(
    env: &mut EnvHandle,
    policy: &PolicyKind,
    seed: u64,
    indices: &[usize],
) -> Result<EvalReport> {
    let mut records = Vec::with_capacity(indices.len());
    for &i in indices {
        let ep = run_episode(env, policy.make(seed, i).as_mut(), i, seed, None)?;
        records.push(EvalRecord {
            index: i,
            seed,
            performance: ep.final_performance(),
            normalized: ep.final_normalized,
        });
    }
    Ok(EvalReport::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obs_mode_names() {
        for m in [ObsMode::Full, ObsMode::Reduced, ObsMode::Image] {
            assert_eq!(ObsMode::from_name(m.name()).unwrap(), m);
        }
        assert!(ObsMode::from_name("pixels").is_err());
    }

    #[test]
    fn step_before_reset_errors() {
        let mut env = EnvHandle::new(
            EnvConfig::new(TaskKind::StraightenRope),
            VariationSource::Generate { seed: 0 },
        )
        .unwrap();
        assert!(matches!(env.step(&[0.0; 8]), Err(Error::NotReset)));
    }
}
