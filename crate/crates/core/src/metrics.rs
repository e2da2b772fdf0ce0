//! Performance bounds, normalized performance and evaluation reports.

use std::fmt::Write as _;

use crate::actuation::denormalize;
use crate::error::{Error, Result};
use crate::tasks::{reward, Setup, TaskKind, TaskState};
use crate::variation::flat_cloth_positions;

pub use crate::env::evaluate;

/// Bound gaps below this mark a variation as degenerate.
pub const MIN_BOUND_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerformanceBounds {
    pub lower: f64,
    pub upper: f64,
}

impl PerformanceBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(upper > lower) {
            return Err(Error::invalid(
                "performance bounds",
                format!("upper {upper} is not above lower {lower}"),
            ));
        }
        Ok(PerformanceBounds { lower, upper })
    }

    pub fn normalize(&self, s: f64) -> f64 {
        normalize(s, self)
    }
}

/// `(s - l) / (u - l)`, unclipped.
pub fn normalize(s: f64, b: &PerformanceBounds) -> f64 {
    (s - b.lower) / (b.upper - b.lower)
}

/// Performance after one do-nothing step, run on a copy of `state`.
pub fn first_step_performance(state: &TaskState) -> Result<f64> {
    let mut probe = state.clone();
    let spec = state.kind.action_space();
    let raw = denormalize(&spec, state.kind.name(), &vec![0.0; spec.dim()])?;
    probe.apply(&raw, state.kind.info().repetition)?;
    probe.performance()
}

pub fn upper_bound(state: &TaskState) -> f64 {
    match (&state.setup, state.kind) {
        (_, TaskKind::PourWater) => 1.0,
        (
            Setup::Cloth {
                width,
                length,
                spacing,
                ..
            },
            TaskKind::SpreadCloth,
        ) => reward::reward_spread(
            &flat_cloth_positions(*width, *length, *spacing, state.sim.particle_radius),
            *spacing,
        ),
        _ => 0.0,
    }
}

/// Bounds for the settled initial state of a variation. The lower bound is
/// the first-step performance, except for StraightenRope where it is the
/// negated straight rope length.
pub fn compute_bounds(state: &TaskState) -> Result<PerformanceBounds> {
    let lower = match &state.setup {
        Setup::Rope { spec, goal: None } => -spec.straight_length(),
        _ => first_step_performance(state)?,
    };
    let upper = upper_bound(state);
    if upper - lower < MIN_BOUND_GAP {
        // Still a valid pair for callers that only normalize; generation
        // checks the gap itself and redraws.
        return Ok(PerformanceBounds { lower, upper });
    }
    PerformanceBounds::new(lower, upper)
}

/// Final result of one evaluation episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub index: usize,
    pub seed: u64,
    pub performance: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Sorted by variation index.
    pub records: Vec<EvalRecord>,
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

impl EvalReport {
    pub fn new(mut records: Vec<EvalRecord>) -> Self {
        records.sort_by_key(|r| r.index);
        let mut finals: Vec<f64> = records.iter().map(|r| r.normalized).collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        finals.sort_by(f64::total_cmp);
        EvalReport {
            mean,
            median: percentile(&finals, 0.5),
            p25: percentile(&finals, 0.25),
            p75: percentile(&finals, 0.75),
            records,
        }
    }

    pub fn episodes(&self) -> usize {
        self.records.len()
    }

    /// Text form: `header` lines prefixed with `# `, one `index seed s
    /// normalized` record per variation, then a summary block.
    pub fn to_text(&self, header: &[(String, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "index seed performance normalized");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{} {} {:?} {:?}",
                r.index, r.seed, r.performance, r.normalized
            );
        }
        let _ = writeln!(s, "episodes {}", self.episodes());
        let _ = writeln!(s, "mean {:?}", self.mean);
        let _ = writeln!(s, "median {:?}", self.median);
        let _ = writeln!(s, "p25 {:?}", self.p25);
        let _ = writeln!(s, "p75 {:?}", self.p75);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_endpoints_are_exact() {
        let b = PerformanceBounds::new(-0.37, 0.0).unwrap();
        assert_eq!(normalize(-0.37, &b), 0.0);
        assert_eq!(normalize(0.0, &b), 1.0);
        assert_eq!(normalize(-0.185, &b), 0.5);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(PerformanceBounds::new(1.0, 1.0).is_err());
        assert!(PerformanceBounds::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 0.25), 1.75);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
    }

    #[test]
    fn report_mean_averages_finals() {
        let recs: Vec<EvalRecord> = (0..10)
            .rev()
            .map(|i| EvalRecord {
                index: 800 + i,
                seed: 1,
                performance: 0.0,
                normalized: i as f64 / 10.0,
            })
            .collect();
        let r = EvalReport::new(recs);
        assert_eq!(r.records[0].index, 800);
        assert!((r.mean - 0.45).abs() < 1e-15);
        assert!((r.median - 0.45).abs() < 1e-15);
        let text = r.to_text(&[("task".into(), "fold_cloth".into())]);
        assert!(text.starts_with("# task: fold_cloth\n"));
        assert!(text.contains("episodes 10\n"));
    }
}
