//! Fixtures shared by the benchmarks.

use softgym_core::variation::{generate, instantiate};
use softgym_core::{ParticleScale, TaskKind, TaskState};

/// Settled initial state of a desk-scale evaluation variation.
pub fn desk_state(kind: TaskKind, index: usize) -> TaskState {
    let v = generate(kind, ParticleScale::Desk, 0, index).expect("variation generates");
    instantiate(&v).expect("variation instantiates")
}

/// Deterministic `n x n` cost matrix with entries in `[0, 1)`.
pub fn cost_matrix(n: usize, seed: u64) -> Vec<f64> {
    use softgym_core::variation::{Draws, Rng};
    let mut rng = Rng::new(seed, 0);
    (0..n * n).map(|_| rng.uniform(0.0, 1.0)).collect()
}
