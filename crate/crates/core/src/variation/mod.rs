//! Seeded generation of task variations and the variation cache.
//!
//! Variation `i` of a cache with master seed `S` draws from ChaCha8 stream
//! `i` of `S`. A variation whose performance bounds collapse is redrawn from
//! stream `(k << 32) | i` for `k = 1, 2, ...`. Generated scenes are passed
//! through the f32 cache encoding, so a scene generated on the fly is
//! identical to the one read back from a cache file.

mod cache;
mod codec;
mod params;
mod rng;

pub use cache::{build_cache, inspect, load_cache, save_cache, Cache, CACHE_MAGIC};
pub use codec::{read_scene, write_scene, Precision, Reader, Writer};
pub use params::{Params, Value};
pub use rng::{Draws, Rng, RngState};

use std::f64::consts::TAU;

use crate::actuation::{release, update_grasp, Cup, Grab, Picker};
use crate::assets::{
    build_cloth, build_fluid_block, build_rope, straight_polyline, ClothSpec, CupPose, CupSpec,
    FluidSpec, RopeSpec,
};
use crate::error::{Error, Result};
use crate::metrics::compute_bounds;
use crate::pbd::{solve_step, Attachment, Collider, Constraint, Scene, WATER_PARTICLE_RADIUS};
use crate::tasks::{rope, ObjectKind, ParticleScale, Setup, TaskKind, TaskState};
use crate::Vec3;

pub const VARIATIONS: usize = 1000;
/// Indices below this belong to the training split.
pub const TRAIN_VARIATIONS: usize = 800;
pub const SETTLE_SPEED: f64 = 0.01;
/// Kinetic energy below which cloth and rope count as settled.
pub const SETTLE_ENERGY: f64 = 1e-4;
pub const SETTLE_MAX_SUBSTEPS: usize = 1000;
pub const CUP_WALL_THICKNESS: f64 = 0.02;
/// Clearance between the two cups when the drawn distance would make them
/// overlap.
pub const CUP_GAP: f64 = 0.01;
pub const MAX_REDRAWS: u64 = 16;
/// Picker travel per substep during generation-time lifts.
const LIFT_STEP: f64 = 0.01;
const HOLD_SUBSTEPS: usize = 20;
/// Sideways picker travel per unit of lift during perturbations.
const DRIFT_RATIO: f64 = 0.5;
/// Substeps simulated before the settle test is first checked.
const SETTLE_MIN_SUBSTEPS: usize = 20;
/// Height of the pickers above their designated particles at reset.
const PICKER_CLEARANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Medium,
    Large,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CupDims {
    pub width: f64,
    pub length: f64,
    pub height: f64,
}

/// Water block shared by both water tasks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaterBlock {
    pub w_w: usize,
    pub l_w: usize,
    pub level: Level,
    pub h_w: usize,
}

impl WaterBlock {
    pub fn m(&self) -> usize {
        self.w_w.min(self.l_w)
    }

    pub fn volume(&self) -> usize {
        self.w_w * self.h_w * self.l_w
    }

    /// Water column height in particle layers once spread over a
    /// `(w_w + 1) x (l_w + 1)` footprint.
    pub fn h(&self) -> f64 {
        self.volume() as f64 / ((self.w_w + 1) * (self.l_w + 1)) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PourWaterParams {
    pub block: WaterBlock,
    pub control: CupDims,
    pub target: CupDims,
    /// Drawn centre distance between the cups.
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportWaterParams {
    pub block: WaterBlock,
    pub cup: CupDims,
    /// Target cup position relative to the start.
    pub target_offset: f64,
}

fn draw_block(d: &mut impl Draws, scale: ParticleScale) -> WaterBlock {
    let div = scale.fluid_divisor();
    let w_w = (d.randint(4, 13) as usize).div_ceil(div);
    let l_w = (d.randint(4, 13) as usize).div_ceil(div);
    let level = if d.randint(0, 1) == 0 {
        Level::Medium
    } else {
        Level::Large
    };
    let m = w_w.min(l_w);
    let h_w = match level {
        Level::Medium => (3.5 * m as f64).floor() as usize,
        Level::Large => 4 * m,
    };
    WaterBlock {
        w_w,
        l_w,
        level,
        h_w,
    }
}

/// Draw order: w_w, l_w, level, cup height jitter, target height jitter,
/// distance.
pub fn gen_pour_water(d: &mut impl Draws, scale: ParticleScale) -> PourWaterParams {
    let r = WATER_PARTICLE_RADIUS;
    let block = draw_block(d, scale);
    let (w, l, h, m) = (
        block.w_w as f64,
        block.l_w as f64,
        block.h(),
        block.m() as f64,
    );
    let height = match block.level {
        Level::Medium => h * r / 2.0 + 0.001 * d.uniform(-0.5, 0.5),
        Level::Large => h * r / 3.0 + 0.001 * d.uniform(0.0, 1.0),
    };
    let target_height = height + d.uniform(0.0, 0.1);
    let distance = m * d.uniform(0.05, 0.09) + (w + 4.0) * r / 2.0;
    PourWaterParams {
        block,
        control: CupDims {
            width: w * r + 0.1,
            length: l * r + 0.1,
            height,
        },
        target: CupDims {
            width: w * r + 0.07,
            length: l * r + 0.07,
            height: target_height,
        },
        distance,
    }
}

pub const TRANSPORT_TARGET_RANGE: (f64, f64) = (0.2, 0.6);

pub fn transport_cup_height(level: Level, h: f64, m: f64) -> f64 {
    let r = WATER_PARTICLE_RADIUS;
    match level {
        Level::Medium => h * r / 2.0,
        Level::Large => h * r / 3.0 + 0.0015 * m,
    }
}

/// Draw order: w_w, l_w, level, target offset.
pub fn gen_transport_water(d: &mut impl Draws, scale: ParticleScale) -> TransportWaterParams {
    let r = WATER_PARTICLE_RADIUS;
    let block = draw_block(d, scale);
    let (w, l, h, m) = (
        block.w_w as f64,
        block.l_w as f64,
        block.h(),
        block.m() as f64,
    );
    let height = transport_cup_height(block.level, h, m);
    TransportWaterParams {
        block,
        cup: CupDims {
            width: w * r + 0.1,
            length: l * r + 0.1,
            height,
        },
        target_offset: d.uniform(TRANSPORT_TARGET_RANGE.0, TRANSPORT_TARGET_RANGE.1),
    }
}

pub fn gen_goal_amount(d: &mut impl Draws) -> f64 {
    0.1 + d.uniform(0.0, 1.0) * 0.9
}

pub fn gen_cloth_dims(d: &mut impl Draws, scale: ParticleScale) -> (usize, usize) {
    let div = scale.cloth_divisor();
    let w = (d.randint(60, 120) as usize).div_ceil(div);
    let l = (d.randint(60, 120) as usize).div_ceil(div);
    (w, l)
}

/// One seeded instance of a task: its parameters and settled initial scene.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskVariation {
    pub kind: TaskKind,
    pub index: usize,
    /// Master seed of the cache the variation belongs to.
    pub seed: u64,
    pub params: Params,
    pub scene: Scene,
}

impl TaskVariation {
    pub fn is_training(&self) -> bool {
        self.index < TRAIN_VARIATIONS
    }

    pub fn scale(&self) -> Result<ParticleScale> {
        Ok(match self.params.int("desk_scale")? {
            0 => ParticleScale::Paper,
            _ => ParticleScale::Desk,
        })
    }

    pub fn stream(&self) -> Result<u64> {
        Ok(self.params.int("stream")? as u64)
    }
}

fn cup_spec(dims: CupDims, x: f64) -> CupSpec {
    let mut spec = CupSpec {
        width: dims.width,
        length: dims.length,
        height: dims.height,
        wall_thickness: CUP_WALL_THICKNESS,
        pose: CupPose::default(),
    };
    spec.pose = CupPose {
        x,
        y: spec.resting_center_height(),
        theta: 0.0,
    };
    spec
}

fn cup_dims(p: &Params, prefix: &str) -> Result<CupDims> {
    Ok(CupDims {
        width: p.real(&format!("{prefix}_width"))?,
        length: p.real(&format!("{prefix}_length"))?,
        height: p.real(&format!("{prefix}_height"))?,
    })
}

fn set_cup(p: &mut Params, prefix: &str, c: CupDims) {
    p.set_real(&format!("{prefix}_width"), c.width)
        .set_real(&format!("{prefix}_length"), c.length)
        .set_real(&format!("{prefix}_height"), c.height);
}

fn set_block(p: &mut Params, b: &WaterBlock) {
    p.set_int("w_w", b.w_w as i64)
        .set_int("l_w", b.l_w as i64)
        .set_int("h_w", b.h_w as i64)
        .set_int("level", matches!(b.level, Level::Large) as i64);
}

/// Centre distance at which the target cup just clears the controlled one.
fn min_cup_distance(control: CupDims, target: CupDims) -> f64 {
    (control.width + target.width) / 2.0 + 2.0 * CUP_WALL_THICKNESS + CUP_GAP
}

fn water_scene(block: &WaterBlock, cups: &[CupSpec]) -> Result<Scene> {
    let mut scene = Scene::new();
    scene.colliders.push(Collider::floor());
    for c in cups {
        scene.colliders.extend(crate::assets::build_cup(c)?);
    }
    let spec = FluidSpec::new(block.w_w, block.l_w, block.h_w);
    let d = spec.rest_distance;
    let control = &cups[0];
    let origin = Vec3::new(
        control.pose.x - (block.w_w - 1) as f64 * d / 2.0,
        control.pose.y - control.height / 2.0 + d / 2.0,
        -((block.l_w - 1) as f64) * d / 2.0,
    );
    let (ps, density) = build_fluid_block(&spec, origin)?;
    scene.add_object(&ps, &[density]);
    Ok(scene)
}

/// Centred flat cloth lying on the floor, particle `(i, j)` at
/// `((i - (w-1)/2) s, r, (j - (l-1)/2) s)`.
pub fn flat_cloth_positions(w: usize, l: usize, spacing: f64, height: f64) -> Vec<Vec3> {
    let (cx, cz) = ((w - 1) as f64 / 2.0, (l - 1) as f64 / 2.0);
    (0..w)
        .flat_map(|i| {
            (0..l).map(move |j| {
                Vec3::new((i as f64 - cx) * spacing, height, (j as f64 - cz) * spacing)
            })
        })
        .collect()
}

fn cloth_scene(w: usize, l: usize, positions: &[Vec3]) -> Result<Scene> {
    let spec = ClothSpec::new(w, l);
    let (mut ps, cs) = build_cloth(&spec, Vec3::ZERO)?;
    ps.positions.copy_from_slice(positions);
    // Rest lengths follow the supplied layout; it is a rigid motion of the
    // builder's grid, so the lengths are the grid spacings.
    let mut scene = Scene::new();
    scene.colliders.push(Collider::floor());
    scene.add_object(&ps, &cs);
    scene.pickers = vec![Picker::new(Vec3::ZERO), Picker::new(Vec3::ZERO)];
    Ok(scene)
}

/// Steps the scene until it is at rest or the substep budget runs out.
/// Water only needs the speed test; cloth and rope also need the kinetic
/// energy test. Returns the substeps taken.
pub fn settle(state: &mut TaskState) -> Result<usize> {
    let check_energy = state.kind.object() != ObjectKind::Water;
    for k in 0..SETTLE_MAX_SUBSTEPS {
        let ps = &state.scene.particles;
        let resting =
            ps.max_speed() < SETTLE_SPEED && (!check_energy || ps.kinetic_energy() < SETTLE_ENERGY);
        if k >= SETTLE_MIN_SUBSTEPS && resting {
            return Ok(k);
        }
        solve_step(&mut state.scene, &state.sim)?;
    }
    Ok(SETTLE_MAX_SUBSTEPS)
}

/// Horizontal unit direction of the sideways drift of lift `k`.
fn drift_direction(k: usize) -> Vec3 {
    let a = (2 * k + 1) as f64 * std::f64::consts::FRAC_PI_4;
    Vec3::new(a.cos(), 0.0, a.sin())
}

/// Grabs `particle` with picker 0, raises it by `height` while drifting
/// sideways by `DRIFT_RATIO * height`, holds, releases and lets the object
/// come to rest. `k` numbers the lift within a variation and fixes the
/// drift direction.
pub fn lift_and_drop(state: &mut TaskState, particle: usize, height: f64, k: usize) -> Result<()> {
    let range = state.grab_range();
    state.scene.pickers[0].position = state.scene.particles.positions[particle];
    update_grasp(&mut state.scene, 0, 1.0, range);
    let drift = drift_direction(k) * DRIFT_RATIO;
    let mut raised = 0.0;
    while raised < height {
        let dy = LIFT_STEP.min(height - raised);
        raised += dy;
        state.scene.pickers[0].position += Vec3::Y * dy + drift * dy;
        solve_step(&mut state.scene, &state.sim)?;
    }
    for _ in 0..HOLD_SUBSTEPS {
        solve_step(&mut state.scene, &state.sim)?;
    }
    release(&mut state.scene, 0);
    settle(state)?;
    Ok(())
}

fn place_pickers(scene: &mut Scene, particles: [usize; 2]) {
    for (p, &i) in particles.iter().enumerate() {
        scene.pickers[p] = Picker::new(scene.particles.positions[i] + Vec3::Y * PICKER_CLEARANCE);
    }
}

/// Draws the parameters of one variation and builds its settled scene.
pub fn build_variation(
    kind: TaskKind,
    scale: ParticleScale,
    d: &mut impl Draws,
) -> Result<(Params, TaskState)> {
    let mut p = Params::new();
    p.set_int("desk_scale", (scale == ParticleScale::Desk) as i64);
    let state = match kind.object() {
        ObjectKind::Water => build_water(kind, scale, d, &mut p)?,
        ObjectKind::Rope => build_rope_task(kind, d, &mut p)?,
        ObjectKind::Cloth => build_cloth_task(kind, scale, d, &mut p)?,
    };
    Ok((p, state))
}

fn build_water(
    kind: TaskKind,
    scale: ParticleScale,
    d: &mut impl Draws,
    p: &mut Params,
) -> Result<TaskState> {
    let scene_cups: Vec<CupSpec>;
    if kind == TaskKind::TransportWater {
        let t = gen_transport_water(d, scale);
        set_block(p, &t.block);
        set_cup(p, "cup", t.cup);
        p.set_real("target_x", t.target_offset);
        scene_cups = vec![cup_spec(t.cup, 0.0)];
        let scene = water_scene(&t.block, &scene_cups)?;
        let mut state = instantiate_scene(kind, p, scene)?;
        settle(&mut state)?;
        return Ok(state);
    }
    let t = gen_pour_water(d, scale);
    set_block(p, &t.block);
    set_cup(p, "cup", t.control);
    set_cup(p, "target", t.target);
    p.set_real("distance", t.distance);
    p.set_real(
        "target_x",
        t.distance.max(min_cup_distance(t.control, t.target)),
    );
    if kind == TaskKind::PourWaterAmount {
        p.set_real("goal", gen_goal_amount(d));
    }
    scene_cups = vec![
        cup_spec(t.control, 0.0),
        cup_spec(t.target, p.real("target_x")?),
    ];
    let scene = water_scene(&t.block, &scene_cups)?;
    let mut state = instantiate_scene(kind, p, scene)?;
    settle(&mut state)?;
    Ok(state)
}

fn build_rope_task(kind: TaskKind, d: &mut impl Draws, p: &mut Params) -> Result<TaskState> {
    let spec = RopeSpec::default();
    let radius = kind.sim_config().particle_radius;
    let start = Vec3::new(-spec.straight_length() / 2.0, radius, 0.0);
    let (ps, cs) = build_rope(&spec, &straight_polyline(&spec, start))?;
    let mut scene = Scene::new();
    scene.colliders.push(Collider::floor());
    scene.add_object(&ps, &cs);
    scene.pickers = vec![Picker::new(Vec3::ZERO), Picker::new(Vec3::ZERO)];
    let n = spec.n_particles;
    let mut draws = Vec::with_capacity(4);
    for k in 0..4 {
        let pick = d.randint(0, n as i64 - 1);
        let lift = d.uniform(0.0, 0.5);
        p.set_int(&format!("pick_{k}"), pick)
            .set_real(&format!("lift_{k}"), lift);
        draws.push((pick as usize, lift));
    }
    if kind == TaskKind::RopeConfiguration {
        p.set_int("letter", d.randint(0, rope::Letter::ALL.len() as i64 - 1));
        p.set_real("rotation", d.uniform(0.0, TAU));
    }
    let mut state = instantiate_scene(kind, p, scene)?;
    for (k, (pick, lift)) in draws.into_iter().enumerate() {
        lift_and_drop(&mut state, pick, lift, k)?;
    }
    place_pickers(&mut state.scene, [0, n - 1]);
    Ok(state)
}

fn build_cloth_task(
    kind: TaskKind,
    scale: ParticleScale,
    d: &mut impl Draws,
    p: &mut Params,
) -> Result<TaskState> {
    let (w, l) = gen_cloth_dims(d, scale);
    p.set_int("width", w as i64).set_int("length", l as i64);
    let s = crate::assets::CLOTH_SPACING;
    let radius = kind.sim_config().particle_radius;
    let corners = [0, (w - 1) * l];
    match kind {
        TaskKind::SpreadCloth | TaskKind::FoldCrumpledCloth => {
            let pick = d.randint(0, (w * l) as i64 - 1);
            let lift = d.uniform(0.0, 0.5);
            p.set_int("pick", pick).set_real("lift", lift);
            let scene = cloth_scene(w, l, &flat_cloth_positions(w, l, s, radius))?;
            let mut state = instantiate_scene(kind, p, scene)?;
            lift_and_drop(&mut state, pick as usize, lift, 0)?;
            place_pickers(&mut state.scene, corners);
            Ok(state)
        }
        TaskKind::FoldCloth => {
            let rotation = d.uniform(0.0, TAU);
            p.set_real("rotation", rotation);
            let (sn, cs) = rotation.sin_cos();
            let flat: Vec<Vec3> = flat_cloth_positions(w, l, s, radius)
                .into_iter()
                .map(|q| Vec3::new(cs * q.x + sn * q.z, q.y, -sn * q.x + cs * q.z))
                .collect();
            let scene = cloth_scene(w, l, &flat)?;
            let mut state = instantiate_scene(kind, p, scene)?;
            settle(&mut state)?;
            place_pickers(&mut state.scene, corners);
            Ok(state)
        }
        TaskKind::DropCloth | TaskKind::DropFoldCloth => {
            let height = ((l - 1) as f64 * s + d.uniform(0.3, 0.6))
                .min(crate::actuation::WORKSPACE_HALF_EXTENT);
            p.set_real("height", height);
            let cx = (w - 1) as f64 / 2.0;
            let hanging: Vec<Vec3> = (0..w)
                .flat_map(|i| {
                    (0..l).map(move |j| Vec3::new((i as f64 - cx) * s, height - j as f64 * s, 0.0))
                })
                .collect();
            let mut scene = cloth_scene(w, l, &hanging)?;
            for (picker, &particle) in corners.iter().enumerate() {
                scene.pickers[picker] = Picker {
                    attached: Some(Grab {
                        particle,
                        offset: Vec3::ZERO,
                    }),
                    ..Picker::new(hanging[particle])
                };
                scene
                    .constraints
                    .push(Constraint::Attachment(Attachment { picker, particle }));
            }
            let mut state = instantiate_scene(kind, p, scene)?;
            settle(&mut state)?;
            Ok(state)
        }
        _ => unreachable!("not a cloth task"),
    }
}

/// Rebuilds the task bookkeeping for a scene generated from `p`.
fn instantiate_scene(kind: TaskKind, p: &Params, mut scene: Scene) -> Result<TaskState> {
    let setup = match kind.object() {
        ObjectKind::Water => {
            let dt = kind.sim_config().dt;
            let mut control = Cup {
                spec: cup_spec(cup_dims(p, "cup")?, 0.0),
                first_collider: 1,
            };
            control.set_pose(&mut scene, control.pose(), dt);
            if kind == TaskKind::TransportWater {
                Setup::Transport {
                    cup: control,
                    target_x: p.real("target_x")?,
                }
            } else {
                let mut target = Cup {
                    spec: cup_spec(cup_dims(p, "target")?, p.real("target_x")?),
                    first_collider: 6,
                };
                target.set_pose(&mut scene, target.pose(), dt);
                Setup::Pour {
                    control,
                    target,
                    initial_distance: p.real("target_x")?,
                    goal: match kind {
                        TaskKind::PourWaterAmount => Some(p.real("goal")?),
                        _ => None,
                    },
                }
            }
        }
        ObjectKind::Rope => {
            let spec = RopeSpec::default();
            let goal = match kind {
                TaskKind::RopeConfiguration => {
                    let idx = p.count("letter")?;
                    let letter = rope::Letter::from_index(idx)
                        .ok_or_else(|| Error::Format(format!("unknown letter index {idx}")))?;
                    Some(rope::letter_goal(
                        letter,
                        spec.n_particles,
                        spec.straight_length(),
                        p.real("rotation")?,
                        kind.sim_config().particle_radius,
                    ))
                }
                _ => None,
            };
            Setup::Rope { spec, goal }
        }
        ObjectKind::Cloth => {
            let (w, l) = (p.count("width")?, p.count("length")?);
            let s = crate::assets::CLOTH_SPACING;
            let flat = flat_cloth_positions(w, l, s, kind.sim_config().particle_radius);
            let flat_center = flat.iter().copied().sum::<Vec3>() / flat.len() as f64;
            let initial_center = match kind {
                TaskKind::DropFoldCloth => flat_center,
                _ => {
                    let ps = &scene.particles;
                    ps.centroid(&(0..ps.len()).collect::<Vec<_>>())
                }
            };
            Setup::Cloth {
                width: w,
                length: l,
                spacing: s,
                initial_center,
                flat_target: kind.is_drop().then_some(flat),
            }
        }
    };
    let state = TaskState::new(kind, scene, setup);
    if state.object_indices().len() != state.scene.particles.len() {
        return Err(Error::Format(
            "scene holds particles of another object type".into(),
        ));
    }
    Ok(state)
}

/// Task instance for a cached or freshly generated variation.
pub fn instantiate(v: &TaskVariation) -> Result<TaskState> {
    instantiate_scene(v.kind, &v.params, v.scene.clone())
}

fn quantize(v: &TaskVariation) -> Result<TaskVariation> {
    let mut w = Writer::new(Precision::F32);
    write_scene(&mut w, &v.scene)?;
    let scene = read_scene(&mut Reader::new(&w.buf, Precision::F32), v.kind.group())?;
    Ok(TaskVariation { scene, ..v.clone() })
}

/// Generates variation `index` of the cache with `master_seed`.
pub fn generate(
    kind: TaskKind,
    scale: ParticleScale,
    master_seed: u64,
    index: usize,
) -> Result<TaskVariation> {
    if index >= VARIATIONS {
        return Err(Error::IndexOutOfRange(index));
    }
    let wrap = |e: Error| Error::Variation {
        index,
        source: Box::new(e),
    };
    for attempt in 0..MAX_REDRAWS {
        let stream = (attempt << 32) | index as u64;
        let mut rng = Rng::new(master_seed, stream);
        let (mut params, state) = build_variation(kind, scale, &mut rng).map_err(wrap)?;
        params.set_int("stream", stream as i64);
        let v = quantize(&TaskVariation {
            kind,
            index,
            seed: master_seed,
            params,
            scene: state.scene,
        })
        .map_err(wrap)?;
        let b = compute_bounds(&instantiate(&v).map_err(wrap)?).map_err(wrap)?;
        if b.upper - b.lower >= crate::metrics::MIN_BOUND_GAP {
            return Ok(v);
        }
    }
    Err(wrap(Error::invalid(
        "variation",
        "performance bounds stayed degenerate after redraws",
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Replays fixed values: every `uniform` call returns `lo + t (hi - lo)`
    /// and every `randint` the next queued integer.
    struct Fixed {
        t: f64,
        ints: Vec<i64>,
    }

    impl Draws for Fixed {
        fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
            lo + self.t * (hi - lo)
        }
        fn randint(&mut self, lo: i64, hi: i64) -> i64 {
            self.ints.remove(0).clamp(lo, hi)
        }
    }

    #[test]
    fn pour_cup_widths() {
        let mut d = Fixed {
            t: 0.0,
            ints: vec![10, 10, 0],
        };
        let p = gen_pour_water(&mut d, ParticleScale::Paper);
        assert!((p.control.width - 0.43).abs() < 1e-12);
        assert!((p.target.width - 0.40).abs() < 1e-12);
    }

    #[test]
    fn medium_block_height() {
        let mut d = Fixed {
            t: 0.0,
            ints: vec![4, 4, 0],
        };
        let p = gen_pour_water(&mut d, ParticleScale::Paper);
        assert_eq!(p.block.h_w, 14);
        assert_eq!(p.block.volume(), 224);
    }

    #[test]
    fn lower_bound_draws_hit_closed_form_minima() {
        let mut d = Fixed {
            t: 0.0,
            ints: vec![6, 9, 0],
        };
        let p = gen_pour_water(&mut d, ParticleScale::Paper);
        let r = WATER_PARTICLE_RADIUS;
        let h = p.block.h();
        assert_eq!(p.control.height, h * r / 2.0 + 0.001 * -0.5);
        assert_eq!(p.target.height, p.control.height);
        assert_eq!(p.distance, 6.0 * 0.05 + (6.0 + 4.0) * r / 2.0);
    }

    #[test]
    fn transport_large_cup_height() {
        // h = 12 needs v = 12 (w+1)(l+1); w = l = 5, large: h_w = 20,
        // v = 500, h = 500/36. Check the formula on that h instead.
        let mut d = Fixed {
            t: 0.5,
            ints: vec![5, 5, 1],
        };
        let p = gen_transport_water(&mut d, ParticleScale::Paper);
        let r = WATER_PARTICLE_RADIUS;
        assert_eq!(p.cup.height, p.block.h() * r / 3.0 + 0.0015 * 5.0);
        assert_eq!(p.target_offset, 0.4);
    }

    #[test]
    fn transport_heights_for_h_12() {
        assert!((transport_cup_height(Level::Medium, 12.0, 5.0) - 0.198).abs() < 1e-12);
        assert!((transport_cup_height(Level::Large, 12.0, 5.0) - 0.1395).abs() < 1e-12);
    }

    #[test]
    fn goal_amount_range() {
        assert_eq!(
            gen_goal_amount(&mut Fixed {
                t: 0.0,
                ints: vec![]
            }),
            0.1
        );
        assert_eq!(
            gen_goal_amount(&mut Fixed {
                t: 1.0,
                ints: vec![]
            }),
            1.0
        );
    }

    #[test]
    fn desk_scale_halves_water_and_quarters_cloth() {
        let mut d = Fixed {
            t: 0.0,
            ints: vec![13, 4, 1],
        };
        let p = gen_pour_water(&mut d, ParticleScale::Desk);
        assert_eq!((p.block.w_w, p.block.l_w, p.block.h_w), (7, 2, 8));
        let mut d = Fixed {
            t: 0.0,
            ints: vec![60, 120],
        };
        assert_eq!(gen_cloth_dims(&mut d, ParticleScale::Desk), (15, 30));
    }

    #[test]
    fn flat_cloth_is_centred() {
        let p = flat_cloth_positions(4, 7, 0.1, 0.0);
        let c = p.iter().copied().sum::<Vec3>() / p.len() as f64;
        assert!(c.length() < 1e-15);
    }

    #[test]
    fn index_out_of_range() {
        assert!(matches!(
            generate(TaskKind::StraightenRope, ParticleScale::Desk, 0, 1000),
            Err(Error::IndexOutOfRange(1000))
        ));
    }
}
