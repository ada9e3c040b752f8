use std::time::Instant;

use ndarray::Array1;

use super::{OuterMethod, SolverState, StepsizePolicy, ToleranceSchedule};
use crate::error::{invalid, Error, Result};
use crate::linalg::dist_sq;
use crate::problem::CompositeProblem;

/// When to stop a run. Any combination of the three criteria may be set; the
/// run stops as soon as one holds. At least one must be present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopRule {
    pub max_iterations: Option<usize>,
    /// Stop once `||w - reference|| <= eps`.
    pub distance: Option<(Array1<f64>, f64)>,
    /// Stop once outer plus inner samples reach the budget.
    pub sample_budget: Option<u64>,
}

impl StopRule {
    pub fn max_iterations(k: usize) -> Self {
        StopRule {
            max_iterations: Some(k),
            ..Default::default()
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.max_iterations.is_none() && self.distance.is_none() && self.sample_budget.is_none() {
            return Err(invalid("stop rule sets no criterion"));
        }
        if let Some((reference, eps)) = &self.distance {
            if !(*eps > 0.0) {
                return Err(invalid("distance tolerance must be positive"));
            }
            if reference.len() != dimension {
                return Err(invalid("reference point dimension mismatch"));
            }
        }
        Ok(())
    }

    fn reason(&self, state: &SolverState) -> Option<StopReason> {
        if let Some((reference, eps)) = &self.distance {
            if dist_sq(state.w.view(), reference.view()) <= eps * eps {
                return Some(StopReason::Distance);
            }
        }
        if self.max_iterations.is_some_and(|m| state.k >= m) {
            return Some(StopReason::MaxIterations);
        }
        if self.sample_budget.is_some_and(|b| state.total_samples() >= b) {
            return Some(StopReason::SampleBudget);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    Distance,
    SampleBudget,
}

/// What to do when an inner solve misses its accuracy target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    #[default]
    Abort,
    /// Keep the best inner iterate and flag the record.
    Continue,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub policy: StepsizePolicy,
    pub tolerance: ToleranceSchedule,
    pub batch_size: usize,
    pub stop: StopRule,
    pub seed: u64,
    /// Keep every `stride`-th iterate (the initial and final ones are always kept).
    pub stride: usize,
    pub on_failure: FailurePolicy,
}

impl RunSpec {
    pub fn new(policy: StepsizePolicy, batch_size: usize, stop: StopRule, seed: u64) -> Self {
        RunSpec {
            policy,
            tolerance: ToleranceSchedule::Theory,
            batch_size,
            stop,
            seed,
            stride: 1,
            on_failure: FailurePolicy::Abort,
        }
    }
}

/// A retained iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub w: Array1<f64>,
    pub elapsed: f64,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub outer_samples: u64,
    pub inner_samples: u64,
    pub inner_iterations: Option<usize>,
    pub certificate: Option<f64>,
    /// Set when the step producing this iterate missed its inner target.
    pub inner_failure: bool,
}

impl IterateRecord {
    fn capture(state: &SolverState, elapsed: f64, inner_failure: bool) -> Self {
        IterateRecord {
            k: state.k,
            w: state.w.clone(),
            elapsed,
            mu: state.last_mu,
            delta: state.last_delta,
            outer_samples: state.outer_samples,
            inner_samples: state.inner_samples,
            inner_iterations: state.last_prox.as_ref().map(|r| r.inner_iterations),
            certificate: state.last_prox.as_ref().map(|r| r.certified_accuracy),
            inner_failure,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<IterateRecord>,
    pub last: SolverState,
    pub stop_reason: StopReason,
    pub inner_failures: usize,
}

impl Trajectory {
    /// Iterations performed.
    pub fn iterations(&self) -> usize {
        self.last.k
    }
}

/// Runs `method` from `w0` until the stop rule holds.
pub fn run(problem: &CompositeProblem, w0: Array1<f64>, spec: &RunSpec, method: &dyn OuterMethod) -> Result<Trajectory> {
    spec.stop.validate(problem.dimension())?;
    spec.policy.validate()?;
    spec.tolerance.validate()?;
    if spec.batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if spec.stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    if w0.len() != problem.dimension() {
        return Err(invalid("initial point dimension mismatch"));
    }
    let start = Instant::now();
    let mut state = SolverState::new(w0, spec.seed);
    let mut records = vec![IterateRecord::capture(&state, 0.0, false)];
    let mut inner_failures = 0;
    loop {
        if let Some(reason) = spec.stop.reason(&state) {
            let keep = records.last().is_none_or(|r| r.k != state.k);
            if keep {
                records.push(IterateRecord::capture(&state, start.elapsed().as_secs_f64(), false));
            }
            return Ok(Trajectory {
                records,
                last: state,
                stop_reason: reason,
                inner_failures,
            });
        }
        let (next, failed) = match method.step(problem, state, &spec.policy, &spec.tolerance, spec.batch_size) {
            Ok(s) => (s, false),
            Err(Error::StepFailed { state, .. }) if spec.on_failure == FailurePolicy::Continue => (*state, true),
            Err(e) => return Err(e),
        };
        state = next;
        if failed {
            inner_failures += 1;
        }
        if state.k.is_multiple_of(spec.stride) || failed {
            records.push(IterateRecord::capture(&state, start.elapsed().as_secs_f64(), failed));
        }
    }
}
