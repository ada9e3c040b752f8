//! Full-batch accelerated proximal gradient (FISTA with adaptive restart)
//! for the empirical problem, used to obtain the reference solution `w*`.

use ndarray::{Array1, ArrayView1};

use crate::error::{invalid, Error, Result};
use crate::linalg::norm;
use crate::problem::{CompositeProblem, Minibatch};
use crate::prox::{prox, DualSolver, ProxResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Stop once the gradient mapping norm is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            tolerance: 1e-9,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub w: Array1<f64>,
    pub iterations: usize,
    /// `||y - prox(y - grad F(y) / L)|| * L` at the last extrapolated point.
    pub gradient_mapping: f64,
    /// Largest certified accuracy of the full-batch proxes in the final iteration.
    pub prox_certificate: f64,
    /// Dual point of the last full-batch prox (empty when the prox had no dual).
    pub dual: Array1<f64>,
}

/// Runs FISTA with step `1 / L_f` from `w0` (zeros when absent) until the
/// gradient mapping norm falls to `options.tolerance`.
///
/// Each full-batch prox is solved to accuracy `0.1 * tolerance / L_f`, or to
/// a few times the floating-point floor of its certificate when that is larger.
pub fn compute_reference(
    problem: &CompositeProblem,
    w0: Option<ArrayView1<f64>>,
    options: &ReferenceOptions,
    solver: &dyn DualSolver,
) -> Result<ReferenceSolution> {
    if !(options.tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let n = problem.dimension();
    let mut x = match w0 {
        Some(w) if w.len() == n => w.to_owned(),
        Some(_) => return Err(invalid("initial point dimension mismatch")),
        None => Array1::zeros(n),
    };
    let step = 1.0 / problem.lipschitz;
    let full = Minibatch::full(problem.sample_count())?;
    let h_batch = problem.nonsmooth_batch(&full);
    let inner_target = 0.1 * options.tolerance * step;

    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut dual: Option<Array1<f64>> = None;
    let mut last_mapping = f64::INFINITY;
    for it in 1..=options.max_iterations {
        let mut anchor = problem.full_gradient(y.view())?;
        anchor *= -step;
        anchor += &y;
        let r = full_prox(problem, anchor.view(), &h_batch, step, inner_target, solver, dual.as_ref())?;
        let x_next = r.primal;
        let mapping = norm((&y - &x_next).view()) / step;
        last_mapping = mapping;
        if !r.dual.is_empty() {
            dual = Some(r.dual);
        }
        if mapping <= options.tolerance {
            return Ok(ReferenceSolution {
                w: x_next,
                iterations: it,
                gradient_mapping: mapping,
                prox_certificate: r.certified_accuracy,
                dual: dual.unwrap_or_else(|| Array1::zeros(0)),
            });
        }
        // restart when the step direction and momentum disagree
        let restart = (&y - &x_next).dot(&(&x_next - &x)) > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if restart { 0.0 } else { (t - 1.0) / t_next };
        y = &x_next + &((&x_next - &x) * beta);
        x = x_next;
        t = t_next;
    }
    Err(invalid(format!(
        "reference solver hit {} iterations with gradient mapping {last_mapping:.3e} above {:.3e}",
        options.max_iterations, options.tolerance
    )))
}

/// Full-batch prox that tolerates a target below the certificate's
/// floating-point floor by falling back to the best inner iterate once the
/// certificate reaches a few times that floor.
fn full_prox(
    problem: &CompositeProblem,
    anchor: ArrayView1<f64>,
    batch: &Minibatch,
    mu: f64,
    target: f64,
    solver: &dyn DualSolver,
    warm: Option<&Array1<f64>>,
) -> Result<ProxResult> {
    let h = problem.nonsmooth.as_ref();
    let floor = match crate::prox::build_dual(h, anchor, batch, mu) {
        Ok(d) => {
            let v = warm.filter(|v| v.len() == d.dim()).map(|v| d.project(v.view()));
            let v = v.unwrap_or_else(|| d.project(Array1::zeros(d.dim()).view()));
            d.certificate_floor(v.view())
        }
        Err(_) => 0.0,
    };
    let target = target.max(4.0 * floor);
    match prox(h, anchor, batch, mu, target, solver, warm.map(|v| v.view())) {
        Ok(r) => Ok(r),
        Err(Error::InnerSolverFailure { best, certificate, .. }) if certificate <= 16.0 * floor.max(target) => Ok(*best),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use ndarray::{array, Array2};

    use super::*;
    use crate::problem::{CenteredQuadratic, LinearComposition, ScalarLoss};
    use crate::prox::FastGradient;

    #[test]
    fn one_dimensional_reference() {
        let f = CenteredQuadratic {
            centers: array![[3.0]],
            curvature: 1.0,
        };
        let h = LinearComposition::new(Array2::ones((1, 1)), ScalarLoss::abs());
        let p = CompositeProblem::new(Arc::new(f), Arc::new(h), 1.0, 1.0).unwrap();
        let r = compute_reference(&p, None, &ReferenceOptions::default(), &FastGradient::default()).unwrap();
        assert!((r.w[0] - crate::prox::soft_threshold(3.0, 1.0)).abs() < 1e-12);
        assert!(r.gradient_mapping <= 1e-9);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let f = CenteredQuadratic {
            centers: array![[3.0, -2.0]],
            curvature: 1e-3,
        };
        let h = LinearComposition::new(array![[1e-4, 0.0]], ScalarLoss::abs());
        let p = CompositeProblem::new(Arc::new(f), Arc::new(h), 1.0, 1e-3).unwrap();
        let options = ReferenceOptions {
            tolerance: 1e-12,
            max_iterations: 3,
        };
        assert!(compute_reference(&p, None, &options, &FastGradient::default()).is_err());
    }
}
