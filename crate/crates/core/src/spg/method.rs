use std::fmt::Debug;
use std::sync::Arc;

use super::{SolverState, StepsizePolicy, ToleranceSchedule};
use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, Minibatch};
use crate::prox::{prox, CoordinateAscent, DualSolver};

/// An outer iteration scheme.
pub trait OuterMethod: Debug + Send + Sync {
    fn name(&self) -> &str;

    fn step(
        &self,
        problem: &CompositeProblem,
        state: SolverState,
        policy: &StepsizePolicy,
        tolerance: &ToleranceSchedule,
        batch_size: usize,
    ) -> Result<SolverState>;
}

/// Minibatch stochastic proximal gradient.
#[derive(Debug, Clone)]
pub struct Spgm {
    pub solver: Arc<dyn DualSolver>,
    /// Seed the inner solver with the previous step's dual point (projected
    /// onto the new box) when the dual dimensions match.
    pub warm_start: bool,
}

impl Default for Spgm {
    fn default() -> Self {
        Spgm {
            solver: Arc::new(CoordinateAscent::default()),
            warm_start: true,
        }
    }
}

impl OuterMethod for Spgm {
    fn name(&self) -> &str {
        "spgm"
    }

    fn step(
        &self,
        problem: &CompositeProblem,
        state: SolverState,
        policy: &StepsizePolicy,
        tolerance: &ToleranceSchedule,
        batch_size: usize,
    ) -> Result<SolverState> {
        spgm_step_with(problem, state, policy, tolerance, batch_size, self.solver.as_ref(), self.warm_start)
    }
}

/// Minibatch SGD on `f + h` using the nonsmooth subgradient oracle.
#[derive(Debug, Clone, Default)]
pub struct Sgdm;

impl OuterMethod for Sgdm {
    fn name(&self) -> &str {
        "sgdm"
    }

    fn step(
        &self,
        problem: &CompositeProblem,
        state: SolverState,
        policy: &StepsizePolicy,
        _tolerance: &ToleranceSchedule,
        batch_size: usize,
    ) -> Result<SolverState> {
        sgdm_step(problem, state, policy, batch_size)
    }
}

/// Names accepted by [`method_by_name`].
pub fn method_names() -> Vec<&'static str> {
    vec!["spgm", "sgdm"]
}

/// Looks up an outer method; `solver` is used by methods that solve a prox.
pub fn method_by_name(name: &str, solver: Arc<dyn DualSolver>) -> Result<Arc<dyn OuterMethod>> {
    match name {
        "spgm" => Ok(Arc::new(Spgm { solver, warm_start: true })),
        "sgdm" => Ok(Arc::new(Sgdm)),
        _ => Err(Error::UnknownStrategy {
            kind: "outer method",
            name: name.to_string(),
            known: method_names().join(", "),
        }),
    }
}

/// One SPG-M step: `v = w - mu (1/N) sum grad f(w; i)`, then
/// `w+ = prox_{h,mu}(v; I)` to accuracy `delta_k`.
///
/// An inner failure yields [`Error::StepFailed`] carrying the state advanced
/// with the best inner iterate.
pub fn spgm_step(
    problem: &CompositeProblem,
    state: SolverState,
    policy: &StepsizePolicy,
    tolerance: &ToleranceSchedule,
    batch_size: usize,
    solver: &dyn DualSolver,
) -> Result<SolverState> {
    spgm_step_with(problem, state, policy, tolerance, batch_size, solver, false)
}

fn spgm_step_with(
    problem: &CompositeProblem,
    mut state: SolverState,
    policy: &StepsizePolicy,
    tolerance: &ToleranceSchedule,
    batch_size: usize,
    solver: &dyn DualSolver,
    warm_start: bool,
) -> Result<SolverState> {
    let mu = policy.stepsize(state.k, problem.lipschitz);
    let delta = tolerance.tolerance(mu, batch_size);
    let batch = Minibatch::sample(&mut state.rng, problem.sample_count(), batch_size)?;
    let mut v = problem.minibatch_gradient(state.w.view(), &batch)?;
    v *= -mu;
    v += &state.w;

    let warm = if warm_start {
        state.last_prox.as_ref().map(|r| r.dual.view()).filter(|d| !d.is_empty())
    } else {
        None
    };
    let outcome = prox(
        problem.nonsmooth.as_ref(),
        v.view(),
        &problem.nonsmooth_batch(&batch),
        mu,
        delta,
        solver,
        warm,
    );
    let (result, failure) = match outcome {
        Ok(r) => (r, None),
        Err(Error::InnerSolverFailure {
            best,
            iterations,
            certificate,
            target,
        }) => {
            let r = (*best).clone();
            (
                r,
                Some(Error::InnerSolverFailure {
                    best,
                    iterations,
                    certificate,
                    target,
                }),
            )
        }
        Err(e) => return Err(e),
    };

    let k = state.k;
    state.w = result.primal.clone();
    state.k += 1;
    state.outer_samples += batch_size as u64;
    state.inner_samples += result.samples_touched as u64;
    state.last_mu = Some(mu);
    state.last_delta = Some(delta);
    state.last_prox = Some(result);
    match failure {
        None => Ok(state),
        Some(source) => Err(Error::StepFailed {
            k,
            state: Box::new(state),
            source: Box::new(source),
        }),
    }
}

/// One minibatch SGD step:
/// `w+ = w - mu [(1/N) sum grad f(w; i) + (1/N) sum g_h(w; i)]`.
pub fn sgdm_step(
    problem: &CompositeProblem,
    mut state: SolverState,
    policy: &StepsizePolicy,
    batch_size: usize,
) -> Result<SolverState> {
    let mu = policy.stepsize(state.k, problem.lipschitz);
    let batch = Minibatch::sample(&mut state.rng, problem.sample_count(), batch_size)?;
    let mut g = problem.minibatch_gradient(state.w.view(), &batch)?;
    g += &problem.minibatch_subgradient(state.w.view(), &batch)?;
    state.w.scaled_add(-mu, &g);
    state.k += 1;
    state.outer_samples += batch_size as u64;
    state.last_mu = Some(mu);
    state.last_delta = None;
    state.last_prox = None;
    Ok(state)
}
