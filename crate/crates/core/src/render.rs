//! Deterministic software renderer: ray-cast floor and boxes, z-buffered
//! particle sprites, PPM output.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pbd::{Group, Scene, Shape};
use crate::tasks::{Setup, TaskState};
use crate::Vec3;

pub const IMAGE_SIZE: usize = 128;
pub const MIN_IMAGE_SIZE: usize = 16;

/// Half-width of the drawn floor square.
pub const FLOOR_EXTENT: f64 = 3.0;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [214, 222, 232];
pub const FLUID_COLOR: Rgb = [40, 100, 220];
pub const CLOTH_COLOR: Rgb = [236, 128, 170];
pub const ROPE_COLOR: Rgb = [232, 196, 40];
pub const BOX_COLOR: Rgb = [172, 176, 186];
pub const PICKER_COLOR: Rgb = [60, 60, 60];
pub const GOAL_COLOR: Rgb = [255, 0, 0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub eye: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub size: usize,
}

/// Camera space basis and focal length in pixels.
struct View {
    eye: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    focal: f64,
    half: f64,
}

impl Camera {
    pub fn new(eye: Vec3, look_at: Vec3) -> Self {
        Camera {
            eye,
            look_at,
            up: Vec3::Y,
            fov_y: 45f64.to_radians(),
            size: IMAGE_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dir = self.look_at - self.eye;
        if !(dir.length() > 0.0) || dir.cross(self.up).length() < 1e-12 {
            return Err(Error::invalid(
                "camera",
                "eye, look_at and up are degenerate",
            ));
        }
        if self.size < MIN_IMAGE_SIZE {
            return Err(Error::invalid(
                "camera",
                format!("image size {} below {MIN_IMAGE_SIZE}", self.size),
            ));
        }
        if !(self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI) {
            return Err(Error::invalid("camera", "field of view outside (0, pi)"));
        }
        Ok(())
    }

    /// Fixed oblique view for a task instance.
    pub fn for_state(state: &TaskState) -> Self {
        match &state.setup {
            Setup::Transport { cup, target_x } => {
                let c = Vec3::new((cup.spec.pose.x + target_x) / 2.0, 0.15, 0.0);
                Camera::new(c + Vec3::new(0.0, 0.55, 1.1), c)
            }
            Setup::Pour {
                control, target, ..
            } => {
                let c = Vec3::new((control.spec.pose.x + target.spec.pose.x) / 2.0, 0.15, 0.0);
                Camera::new(c + Vec3::new(0.0, 0.45, 0.8), c)
            }
            Setup::Rope { .. } => Camera::new(Vec3::new(0.0, 1.1, 1.1), Vec3::ZERO),
            Setup::Cloth { .. } if state.kind.is_drop() => {
                Camera::new(Vec3::new(0.0, 1.1, 2.2), Vec3::new(0.0, 0.5, 0.0))
            }
            Setup::Cloth { .. } => Camera::new(Vec3::new(0.0, 1.8, 1.8), Vec3::ZERO),
        }
    }

    fn view(&self) -> View {
        let forward = (self.look_at - self.eye).normalize();
        let right = forward.cross(self.up).normalize();
        let up = right.cross(forward);
        let half = self.size as f64 / 2.0;
        View {
            eye: self.eye,
            right,
            up,
            forward,
            focal: half / (self.fov_y / 2.0).tan(),
            half,
        }
    }

    /// Pixel coordinates (x right, y down, continuous) and depth of a world
    /// point, or `None` behind the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        self.view().project(p)
    }
}

impl View {
    fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let d = p - self.eye;
        let z = d.dot(self.forward);
        if z <= 1e-9 {
            return None;
        }
        Some((
            self.half + self.focal * d.dot(self.right) / z,
            self.half - self.focal * d.dot(self.up) / z,
            z,
        ))
    }

    /// Ray through the centre of pixel `(i, j)`.
    fn ray(&self, i: usize, j: usize) -> Vec3 {
        let x = (i as f64 + 0.5 - self.half) / self.focal;
        let y = (self.half - (j as f64 + 0.5)) / self.focal;
        (self.forward + self.right * x + self.up * y).normalize()
    }
}

/// RGB image, rows top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub size: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(size: usize, color: Rgb) -> Self {
        Frame {
            size,
            pixels: color.repeat(size * size),
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let k = 3 * (y * self.size + x);
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }

    fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let k = 3 * (y * self.size + x);
        self.pixels[k..k + 3].copy_from_slice(&c);
    }

    pub fn count(&self, c: Rgb) -> usize {
        self.pixels.chunks_exact(3).filter(|p| *p == c).count()
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.size, self.size).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_ppm(data: &[u8]) -> Result<Frame> {
        let bad = |m: &str| Error::Format(format!("PPM: {m}"));
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(
                std::str::from_utf8(&data[start..pos]).map_err(|_| bad("header is not ASCII"))?,
            );
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad("expected P6 with maxval 255"));
        }
        let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
        let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
        if w != h {
            return Err(bad("frames are square"));
        }
        let body = &data[(pos + 1).min(data.len())..];
        if body.len() != 3 * w * h {
            return Err(bad("pixel data has the wrong length"));
        }
        Ok(Frame {
            size: w,
            pixels: body.to_vec(),
        })
    }
}

pub fn write_image(frame: &Frame, path: &Path) -> Result<()> {
    fs::write(path, frame.to_ppm())?;
    Ok(())
}

pub fn read_image(path: &Path) -> Result<Frame> {
    Frame::from_ppm(&fs::read(path)?)
}

pub fn frame_name(step: usize) -> String {
    format!("frame_{step:05}.ppm")
}

/// Segment drawn on top of everything in pure red, two pixels thick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoalLine {
    pub a: Vec3,
    pub b: Vec3,
}

fn shade(c: Rgb, k: f64) -> Rgb {
    c.map(|v| (v as f64 * k).round().clamp(0.0, 254.0) as u8)
}

fn floor_color(dist: f64) -> Rgb {
    let v = (150.0 - 18.0 * dist).clamp(70.0, 150.0).round() as u8;
    [v, v, v.saturating_add(4)]
}

/// Distance along the ray to a z-rotated box and the hit normal in world
/// space.
fn hit_box(origin: Vec3, dir: Vec3, center: Vec3, half: Vec3, angle: f64) -> Option<(f64, Vec3)> {
    let (s, c) = angle.sin_cos();
    let to_local = |v: Vec3| Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z);
    let o = to_local(origin - center);
    let d = to_local(dir);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut axis = 0;
    for a in 0..3 {
        if d[a].abs() < 1e-15 {
            if o[a].abs() > half[a] {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = ((-half[a] - o[a]) / d[a], (half[a] - o[a]) / d[a]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        if ta > t0 {
            t0 = ta;
            axis = a;
        }
        t1 = t1.min(tb);
    }
    if t0 > t1 || t0 <= 0.0 {
        return None;
    }
    let mut n = Vec3::ZERO;
    n[axis] = -d[axis].signum();
    let world_n = Vec3::new(c * n.x - s * n.y, s * n.x + c * n.y, n.z);
    Some((t0, world_n))
}

const LIGHT: Vec3 = Vec3::new(0.3, 0.9, 0.4);

fn particle_color(g: Group) -> Rgb {
    match g {
        Group::Fluid => FLUID_COLOR,
        Group::Cloth => CLOTH_COLOR,
        Group::Rope => ROPE_COLOR,
        Group::None => BOX_COLOR,
    }
}

/// Renders `scene`. Particles are discs of `particle_radius` projected to
/// screen space; box colliders are flat shaded; the floor is always drawn.
pub fn render_scene(
    scene: &Scene,
    camera: &Camera,
    particle_radius: f64,
    goal: Option<GoalLine>,
) -> Result<Frame> {
    camera.validate()?;
    let v = camera.view();
    let d = camera.size;
    let mut frame = Frame::new(d, BACKGROUND);
    let mut depth = vec![f64::INFINITY; d * d];
    let light = LIGHT.normalize();

    for j in 0..d {
        for i in 0..d {
            let dir = v.ray(i, j);
            let mut best = f64::INFINITY;
            let mut color = BACKGROUND;
            if dir.y < -1e-12 {
                let t = -v.eye.y / dir.y;
                let hit = v.eye + dir * t;
                if t > 0.0 && hit.x.abs() <= FLOOR_EXTENT && hit.z.abs() <= FLOOR_EXTENT {
                    best = t;
                    color = floor_color(t);
                }
            }
            for c in &scene.colliders {
                if let Shape::Box {
                    center,
                    half_extents,
                    angle,
                } = c.shape
                {
                    if let Some((t, n)) = hit_box(v.eye, dir, center, half_extents, angle) {
                        if t < best {
                            best = t;
                            color = shade(BOX_COLOR, 0.55 + 0.45 * n.dot(light).max(0.0));
                        }
                    }
                }
            }
            // Depth along the optical axis, comparable with sprite depths.
            depth[j * d + i] = best * dir.dot(v.forward);
            frame.set(i, j, color);
        }
    }

    let sprites = scene
        .particles
        .positions
        .iter()
        .zip(&scene.particles.groups)
        .map(|(p, g)| (*p, particle_radius, particle_color(*g)))
        .chain(
            scene
                .pickers
                .iter()
                .map(|p| (p.position, 0.01, PICKER_COLOR)),
        );
    for (p, radius, color) in sprites {
        let Some((px, py, z)) = v.project(p) else {
            continue;
        };
        let r = (v.focal * radius / z).max(0.5);
        let (x0, x1) = (
            (px - r).floor().max(0.0),
            (px + r).ceil().min(d as f64 - 1.0),
        );
        let (y0, y1) = (
            (py - r).floor().max(0.0),
            (py + r).ceil().min(d as f64 - 1.0),
        );
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let (dx, dy) = (x as f64 + 0.5 - px, y as f64 + 0.5 - py);
                let k = y * d + x;
                if dx * dx + dy * dy <= r * r && z < depth[k] {
                    depth[k] = z;
                    let rim = (dx * dx + dy * dy) / (r * r);
                    frame.set(x, y, shade(color, 1.0 - 0.25 * rim));
                }
            }
        }
    }

    if let Some(g) = goal {
        draw_line(&mut frame, &v, g);
    }
    Ok(frame)
}

fn draw_line(frame: &mut Frame, v: &View, g: GoalLine) {
    let (Some(a), Some(b)) = (v.project(g.a), v.project(g.b)) else {
        return;
    };
    let d = frame.size as f64;
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = (a.0 + (b.0 - a.0) * t).floor();
        let y = (a.1 + (b.1 - a.1) * t).floor();
        for yy in [y, y + 1.0] {
            if (0.0..d).contains(&x) && (0.0..d).contains(&yy) {
                frame.set(x as usize, yy as usize, GOAL_COLOR);
            }
        }
    }
}

/// Goal fill line across the front of the target cup: the height the
/// target's share of the water would reach when spread over the cavity.
pub fn goal_line(state: &TaskState) -> Option<GoalLine> {
    let Setup::Pour {
        target,
        goal: Some(g),
        ..
    } = &state.setup
    else {
        return None;
    };
    let s = &target.spec;
    let n = state.object_indices().len() as f64;
    let d0 = state.sim.fluid_rest_distance;
    let fill = (g * n * d0.powi(3) / (s.width * s.length)).min(s.height);
    let y = -s.height / 2.0 + fill;
    let z = s.length / 2.0 + s.wall_thickness + 1e-3;
    let half = s.width / 2.0 + s.wall_thickness;
    Some(GoalLine {
        a: s.to_world(Vec3::new(-half, y, z)),
        b: s.to_world(Vec3::new(half, y, z)),
    })
}

/// Renders a task instance with its default camera.
pub fn render_state(state: &TaskState, size: usize) -> Result<Frame> {
    let camera = Camera {
        size,
        ..Camera::for_state(state)
    };
    render_scene(
        &state.scene,
        &camera,
        state.sim.particle_radius,
        goal_line(state),
    )
}
