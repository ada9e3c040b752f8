use ndarray::Array1;

use crate::prox::ProxResult;
use crate::{seeded_rng, Rng};

/// Everything an outer iteration reads and advances.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Current iterate `w^k`.
    pub w: Array1<f64>,
    /// Number of completed steps.
    pub k: usize,
    /// Gradient-step samples consumed so far (`N` per step).
    pub outer_samples: u64,
    /// Samples touched inside the prox so far.
    pub inner_samples: u64,
    pub rng: Rng,
    /// Stepsize and tolerance used by the last step.
    pub last_mu: Option<f64>,
    pub last_delta: Option<f64>,
    /// Prox output of the last step (absent for gradient-only methods).
    pub last_prox: Option<ProxResult>,
}

impl SolverState {
    pub fn new(w0: Array1<f64>, seed: u64) -> Self {
        SolverState {
            w: w0,
            k: 0,
            outer_samples: 0,
            inner_samples: 0,
            rng: seeded_rng(seed),
            last_mu: None,
            last_delta: None,
            last_prox: None,
        }
    }

    pub fn total_samples(&self) -> u64 {
        self.outer_samples + self.inner_samples
    }
}
