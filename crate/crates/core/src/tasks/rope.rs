//! Rope keypoints and the letter shapes used as configuration goals.

use std::f64::consts::PI;

use crate::Vec3;

pub const KEYPOINTS: usize = 10;

/// Indices of `KEYPOINTS` particles evenly spaced along an `n`-particle rope,
/// both ends included.
pub fn keypoint_indices(n: usize) -> Vec<usize> {
    (0..KEYPOINTS)
        .map(|k| ((k * (n - 1)) as f64 / (KEYPOINTS - 1) as f64).round() as usize)
        .collect()
}

pub fn keypoints(positions: &[Vec3]) -> Vec<Vec3> {
    keypoint_indices(positions.len())
        .into_iter()
        .map(|i| positions[i])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    S,
    C,
    L,
    U,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::S, Letter::C, Letter::L, Letter::U];

    pub fn from_index(i: usize) -> Option<Letter> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outline in the unit square, in stroke order.
    pub fn template(self) -> Vec<(f64, f64)> {
        let arc = |cx: f64, cy: f64, r: f64, a0: f64, a1: f64, n: usize| -> Vec<(f64, f64)> {
            (0..=n)
                .map(|k| {
                    let a = a0 + (a1 - a0) * k as f64 / n as f64;
                    (cx + r * a.cos(), cy + r * a.sin())
                })
                .collect()
        };
        match self {
            Letter::L => vec![(0.0, 1.0), (0.0, 0.0), (0.6, 0.0)],
            Letter::U => vec![(0.0, 1.0), (0.0, 0.0), (0.7, 0.0), (0.7, 1.0)],
            Letter::C => arc(0.5, 0.5, 0.5, 0.25 * PI, 1.75 * PI, 24),
            Letter::S => {
                let mut top = arc(0.5, 0.75, 0.25, 0.0, 1.5 * PI, 18);
                let bottom = arc(0.5, 0.25, 0.25, 0.5 * PI, -PI, 18);
                top.extend(bottom.into_iter().skip(1));
                top
            }
        }
    }
}

/// Points at the given arc-length fractions along a polyline.
pub fn resample(polyline: &[(f64, f64)], fractions: &[f64]) -> Vec<(f64, f64)> {
    let seg: Vec<f64> = polyline
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();
    let total: f64 = seg.iter().sum();
    fractions
        .iter()
        .map(|&f| {
            let mut s = f.clamp(0.0, 1.0) * total;
            for (k, &len) in seg.iter().enumerate() {
                if s <= len || k == seg.len() - 1 {
                    let t = if len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                    let (a, b) = (polyline[k], polyline[k + 1]);
                    return (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
                }
                s -= len;
            }
            polyline[polyline.len() - 1]
        })
        .collect()
}

fn polyline_length(polyline: &[(f64, f64)]) -> f64 {
    polyline
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum()
}

/// Goal keypoints for a rope of `n` particles and length `rope_length`: the
/// letter is scaled to the rope length, laid on the floor at `height`,
/// centred on the origin and turned by `rotation` about the vertical.
pub fn letter_goal(
    letter: Letter,
    n: usize,
    rope_length: f64,
    rotation: f64,
    height: f64,
) -> Vec<Vec3> {
    let template = letter.template();
    let scale = rope_length / polyline_length(&template);
    let fractions: Vec<f64> = keypoint_indices(n)
        .into_iter()
        .map(|i| i as f64 / (n - 1) as f64)
        .collect();
    let pts = resample(&template, &fractions);
    let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
    for &(x, z) in &template {
        lo = (lo.0.min(x), lo.1.min(z));
        hi = (hi.0.max(x), hi.1.max(z));
    }
    let center = ((lo.0 + hi.0) / 2.0, (lo.1 + hi.1) / 2.0);
    let (s, c) = rotation.sin_cos();
    pts.into_iter()
        .map(|(x, z)| {
            let (x, z) = ((x - center.0) * scale, (z - center.1) * scale);
            Vec3::new(c * x + s * z, height, -s * x + c * z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keypoints_of_default_rope() {
        assert_eq!(
            keypoint_indices(41),
            vec![0, 4, 9, 13, 18, 22, 27, 31, 36, 40]
        );
    }

    #[test]
    fn keypoints_include_ends() {
        let k = keypoint_indices(10);
        assert_eq!(k, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn resample_straight_line() {
        let p = resample(
            &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)],
            &[0.0, 0.25, 0.5, 0.75, 1.0],
        );
        assert_eq!(
            p,
            vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 0.5), (1.0, 1.0)]
        );
    }

    #[test]
    fn goal_spans_rope_length() {
        for letter in Letter::ALL {
            let g = letter_goal(letter, 41, 1.0, 0.7, 0.0125);
            assert_eq!(g.len(), KEYPOINTS);
            let path: f64 = g.windows(2).map(|w| (w[1] - w[0]).length()).sum();
            assert!(path <= 1.0 + 1e-9, "{letter:?}: {path}");
            assert!(path > 0.5, "{letter:?}: {path}");
            assert!(g.iter().all(|p| p.y == 0.0125));
        }
    }
}
