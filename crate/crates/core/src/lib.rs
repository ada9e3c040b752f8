//! Minibatch stochastic proximal gradient (SPG-M) for stochastic composite problems
//!
//! ```text
//! min_w  E[f(w; xi)] + E[h(w; xi)]
//! ```
//!
//! where every `f(.; xi)` is smooth and every `h(.; xi)` is convex but possibly
//! nonsmooth. Each outer iteration takes an averaged gradient step on a random
//! minibatch and then applies the proximal operator of the minibatch average of
//! `h`. That proximal subproblem is solved through its box-constrained concave
//! quadratic dual (see [`prox`]).
//!
//! The crate is organised as
//!
//! * [`problem`]: sample oracles, minibatch sampling and the composite model;
//! * [`prox`]: dual construction, closed forms and the inner dual solvers;
//! * [`spg`]: stepsize policies, the SPG-M / minibatch SGD steps and the run loop;
//! * [`apps`]: the hinge-loss SVM and the parametric sparse representation models;
//! * [`diagnostics`]: noise and curvature constants estimated at the optimum;
//! * [`reference`]: a full-batch accelerated proximal gradient used to obtain `w*`;
//! * [`synthetic`]: a small strongly convex test instance with an exact prox.

pub mod apps;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod reference;
pub mod spg;
pub mod synthetic;

pub use error::{Error, Result};
pub use problem::{CompositeProblem, Minibatch, NonsmoothComponent, SmoothComponent, Structure};
pub use prox::{prox, BoxQuadDual, DualSolver, ProxResult};
pub use spg::{
    method_by_name, mixed_switch_point, run, sgdm_step, spgm_step, FailurePolicy, IterateRecord, OuterMethod, RunSpec,
    Sgdm, SolverState, Spgm, StepsizePolicy, StopReason, StopRule, ToleranceSchedule, Trajectory,
};

/// Deterministic random stream used everywhere randomness is consumed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the random stream for a given seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// One draw from `N(0, 1)`.
pub fn standard_normal(rng: &mut Rng) -> f64 {
    use rand_distr::Distribution;
    rand_distr::StandardNormal.sample(rng)
}
