//! Cross-entropy method planning over a simulator with exact
//! snapshot/restore, executed as model-predictive control.

use rayon::prelude::*;

use crate::env::{EnvHandle, Policy};
use crate::error::{Error, Result};
use crate::tasks::TaskKind;
use crate::variation::{Draws, Rng};

/// Environment steps per decision at desk scale.
pub const DEFAULT_BUDGET: usize = 2100;
/// Environment steps per decision at full particle scale.
pub const FULL_SCALE_BUDGET: usize = 21000;

#[derive(Clone, Debug, PartialEq)]
pub struct CemConfig {
    pub horizon: usize,
    pub iterations: usize,
    /// Environment steps spent per decision.
    pub budget: usize,
    pub elite_fraction: f64,
    pub discount: f64,
    /// Initial standard deviation in normalized action units.
    pub init_std: f64,
    pub min_std: f64,
    /// Seed the mean with the previous plan shifted by one step.
    pub warm_start: bool,
}

impl CemConfig {
    pub fn for_task(kind: TaskKind) -> Self {
        CemConfig {
            horizon: kind.info().planning_horizon,
            iterations: 10,
            budget: DEFAULT_BUDGET,
            elite_fraction: 0.1,
            discount: 0.99,
            init_std: 0.5,
            min_std: 0.01,
            warm_start: true,
        }
    }

    pub fn candidates(&self) -> usize {
        match self.horizon * self.iterations {
            0 => 0,
            d => self.budget / d,
        }
    }

    /// `floor(candidates * elite_fraction)`, raised to 2 when the budget
    /// leaves fewer.
    pub fn elites(&self) -> usize {
        ((self.candidates() as f64 * self.elite_fraction + 1e-9).floor() as usize).max(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.iterations == 0 {
            return Err(Error::Config(
                "horizon and iterations must be positive".into(),
            ));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "elite fraction {} outside (0, 1]",
                self.elite_fraction
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config(format!(
                "discount {} outside (0, 1]",
                self.discount
            )));
        }
        if !(self.init_std >= 0.0 && self.min_std >= 0.0) {
            return Err(Error::Config(
                "standard deviations must be non-negative".into(),
            ));
        }
        if self.candidates() < 2 {
            return Err(Error::Config(format!(
                "budget {} gives {} candidates per iteration at horizon {} and {} iterations; need at least 2 elites",
                self.budget,
                self.candidates(),
                self.horizon,
                self.iterations
            )));
        }
        Ok(())
    }
}

/// A simulator the planner can branch from.
pub trait PlanningModel: Clone + Send + Sync {
    type Snapshot: Clone + Send + Sync;
    fn snapshot(&self) -> Result<Self::Snapshot>;
    fn restore(&mut self, s: &Self::Snapshot) -> Result<()>;
    /// Applies one normalized action; returns the reward and whether the
    /// episode ended.
    fn step_reward(&mut self, action: &[f64]) -> Result<(f64, bool)>;
    fn action_dim(&self) -> usize;
    fn remaining_steps(&self) -> usize;
}

/// `sum_t gamma^t r_t` of `actions` from `snap`. The model is left at
/// `snap`.
pub fn rollout_return<M: PlanningModel>(
    model: &mut M,
    snap: &M::Snapshot,
    actions: &[Vec<f64>],
    discount: f64,
) -> Result<f64> {
    model.restore(snap)?;
    let mut total = 0.0;
    let mut weight = 1.0;
    for a in actions {
        let (r, done) = model.step_reward(a)?;
        total += weight * r;
        weight *= discount;
        if done {
            break;
        }
    }
    model.restore(snap)?;
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    /// Best sampled sequence.
    pub actions: Vec<Vec<f64>>,
    pub score: f64,
    /// Final sampling mean.
    pub mean: Vec<Vec<f64>>,
    /// Best score after each iteration.
    pub best_history: Vec<f64>,
}

/// Optimizes an action sequence from the model's current state.
/// `init_mean` rows beyond the planning horizon are ignored; missing rows
/// start at 0.
pub fn cem_plan<M: PlanningModel>(
    model: &M,
    cfg: &CemConfig,
    rng: &mut Rng,
    init_mean: Option<&[Vec<f64>]>,
) -> Result<Plan> {
    cfg.validate()?;
    let h = cfg.horizon.min(model.remaining_steps());
    if h == 0 {
        return Err(Error::EpisodeFinished);
    }
    let k = model.action_dim();
    let n = cfg.candidates();
    let elites = cfg.elites().min(n);
    let snap = model.snapshot()?;

    let mut mean: Vec<Vec<f64>> = (0..h)
        .map(|t| match init_mean.and_then(|m| m.get(t)) {
            Some(row) if row.len() == k => row.clone(),
            _ => vec![0.0; k],
        })
        .collect();
    let mut std = vec![vec![cfg.init_std; k]; h];
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut best_history = Vec::with_capacity(cfg.iterations);

    for _ in 0..cfg.iterations {
        let candidates: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| {
                (0..h)
                    .map(|t| {
                        (0..k)
                            .map(|j| {
                                (mean[t][j] + std[t][j] * standard_normal(rng)).clamp(-1.0, 1.0)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let scores = candidates
            .par_iter()
            .map_init(
                || model.clone(),
                |m, seq| rollout_return(m, &snap, seq, cfg.discount),
            )
            .collect::<Result<Vec<f64>>>()?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

        let top = order[0];
        if best.as_ref().map_or(true, |(s, _)| scores[top] > *s) {
            best = Some((scores[top], candidates[top].clone()));
        }
        best_history.push(best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0));

        let elite = &order[..elites];
        for t in 0..h {
            for j in 0..k {
                let m = elite.iter().map(|&e| candidates[e][t][j]).sum::<f64>() / elites as f64;
                let var = elite
                    .iter()
                    .map(|&e| (candidates[e][t][j] - m).powi(2))
                    .sum::<f64>()
                    / elites as f64;
                mean[t][j] = m;
                std[t][j] = var.sqrt().max(cfg.min_std);
            }
        }
    }
    let (score, actions) = best.ok_or_else(|| Error::Config("no candidates evaluated".into()))?;
    Ok(Plan {
        actions,
        score,
        mean,
        best_history,
    })
}

/// Box-Muller draw; one uniform pair per sample keeps the stream layout
/// simple.
fn standard_normal(rng: &mut Rng) -> f64 {
    let u1 = 1.0 - rng.uniform(0.0, 1.0);
    let u2 = rng.uniform(0.0, 1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// MPC with CEM: plans at every step and executes the first action.
pub struct CemPolicy {
    pub cfg: CemConfig,
    rng: Rng,
    previous: Option<Vec<Vec<f64>>>,
}

impl CemPolicy {
    pub fn new(cfg: CemConfig, seed: u64, stream: u64) -> Self {
        CemPolicy {
            cfg,
            rng: Rng::new(seed, stream),
            previous: None,
        }
    }
}

impl Policy for CemPolicy {
    fn act(&mut self, env: &EnvHandle) -> Result<Vec<f64>> {
        let warm = match (&self.previous, self.cfg.warm_start) {
            (Some(p), true) => Some(p[1.min(p.len())..].to_vec()),
            _ => None,
        };
        let plan = cem_plan(env, &self.cfg, &mut self.rng, warm.as_deref())?;
        let first = plan.actions[0].clone();
        self.previous = Some(plan.mean);
        Ok(first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One-dimensional toy: reward `-(a - target)^2` per step.
    #[derive(Clone)]
    struct Quadratic {
        target: f64,
        steps: usize,
        horizon: usize,
    }

    impl PlanningModel for Quadratic {
        type Snapshot = usize;
        fn snapshot(&self) -> Result<usize> {
            Ok(self.steps)
        }
        fn restore(&mut self, s: &usize) -> Result<()> {
            self.steps = *s;
            Ok(())
        }
        fn step_reward(&mut self, a: &[f64]) -> Result<(f64, bool)> {
            self.steps += 1;
            Ok((-(a[0] - self.target).powi(2), self.steps >= self.horizon))
        }
        fn action_dim(&self) -> usize {
            1
        }
        fn remaining_steps(&self) -> usize {
            self.horizon - self.steps
        }
    }

    fn cfg(h: usize, budget: usize) -> CemConfig {
        CemConfig {
            horizon: h,
            budget,
            ..CemConfig::for_task(TaskKind::TransportWater)
        }
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(cfg(7, 2100).candidates(), 30);
        assert_eq!(cfg(7, 2100).elites(), 3);
        assert_eq!(cfg(15, 21000).candidates(), 140);
        assert_eq!(cfg(15, 21000).elites(), 14);
        assert_eq!(cfg(15, 2100).elites(), 2);
        assert!(cfg(15, 200).validate().is_err());
    }

    #[test]
    fn rollout_return_is_pure() {
        let mut m = Quadratic {
            target: 0.0,
            steps: 0,
            horizon: 5,
        };
        let snap = m.snapshot().unwrap();
        assert_eq!(rollout_return(&mut m, &snap, &[], 0.9).unwrap(), 0.0);
        let seq = vec![vec![1.0]; 3];
        let a = rollout_return(&mut m, &snap, &seq, 1.0).unwrap();
        assert_eq!(a, -3.0);
        assert_eq!(rollout_return(&mut m, &snap, &seq, 1.0).unwrap(), a);
        assert_eq!(m.steps, 0);
    }

    #[test]
    fn zero_std_returns_the_mean() {
        let m = Quadratic {
            target: 0.3,
            steps: 0,
            horizon: 3,
        };
        let c = CemConfig {
            init_std: 0.0,
            min_std: 0.0,
            ..cfg(3, 300)
        };
        let mean = vec![vec![0.25]; 3];
        let plan = cem_plan(&m, &c, &mut Rng::new(0, 0), Some(&mean)).unwrap();
        assert_eq!(plan.actions, mean);
    }

    #[test]
    fn best_score_never_decreases() {
        let m = Quadratic {
            target: -0.4,
            steps: 0,
            horizon: 4,
        };
        let plan = cem_plan(&m, &cfg(4, 800), &mut Rng::new(5, 1), None).unwrap();
        assert!(plan.best_history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn planning_is_deterministic() {
        let m = Quadratic {
            target: 0.1,
            steps: 0,
            horizon: 2,
        };
        let a = cem_plan(&m, &cfg(2, 400), &mut Rng::new(9, 0), None).unwrap();
        let b = cem_plan(&m, &cfg(2, 400), &mut Rng::new(9, 0), None).unwrap();
        assert_eq!(a, b);
    }
}
