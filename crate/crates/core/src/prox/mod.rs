//! The minibatch proximal operator
//!
//! ```text
//! prox_{h,mu}(w; I) = argmin_z (1/|I|) sum_{i in I} h(z; i) + ||z - w||^2 / (2 mu)
//! ```
//!
//! computed in closed form when the structure allows it, otherwise through
//! the concave box-constrained quadratic dual ([`BoxQuadDual`]) and one of the
//! registered [`DualSolver`]s.

mod closed_form;
mod dual;
mod solvers;

use ndarray::{Array1, ArrayView1};

pub use closed_form::soft_threshold;
pub use dual::{build_dual, BoxQuadDual, DualOperator};
pub use solvers::{solver_by_name, solver_names, CoordinateAscent, DualSolver, FastGradient, ProjectedGradient};

use crate::error::{invalid, Result};
use crate::problem::{LinearComposition, Minibatch, NonsmoothComponent, ScalarLoss, Structure};

/// Outcome of a prox evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    /// Approximation of `prox_{h,mu}(w; I)`.
    pub primal: Array1<f64>,
    /// Dual point the primal was recovered from (empty when there is none).
    pub dual: Array1<f64>,
    pub inner_iterations: usize,
    /// Upper bound on the distance from `primal` to the exact prox.
    pub certified_accuracy: f64,
    /// Sample evaluations spent inside the prox.
    pub samples_touched: usize,
}

impl ProxResult {
    fn exact(primal: Array1<f64>, dual: Array1<f64>, batch: usize) -> Self {
        ProxResult {
            primal,
            dual,
            inner_iterations: 1,
            certified_accuracy: 0.0,
            samples_touched: batch,
        }
    }
}

/// Evaluates the minibatch prox to accuracy `delta`.
///
/// Batch indices are in `h`'s sample space. `warm_start` seeds the dual
/// solver when its length matches the dual dimension and is ignored otherwise.
pub fn prox(
    h: &dyn NonsmoothComponent,
    w: ArrayView1<f64>,
    batch: &Minibatch,
    mu: f64,
    delta: f64,
    solver: &dyn DualSolver,
    warm_start: Option<ArrayView1<f64>>,
) -> Result<ProxResult> {
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    if w.len() != h.dimension() {
        return Err(invalid("point dimension mismatch"));
    }
    let n = batch.len();
    match h.structure() {
        Structure::Zero => Ok(ProxResult {
            primal: w.to_owned(),
            dual: Array1::zeros(0),
            inner_iterations: 0,
            certified_accuracy: 0.0,
            samples_touched: 0,
        }),
        Structure::Indicator(b) => Ok(ProxResult::exact(b.project(w), Array1::zeros(0), n)),
        Structure::LinearComposition(lc) if batch.is_repeated_single() => {
            let (z, v) = closed_form::single_composition(lc, w, batch, mu);
            Ok(ProxResult::exact(z, v, n))
        }
        Structure::LinearComposition(lc) => match closed_form::coordinate_composition(lc, w, batch, mu) {
            Some((z, v)) => Ok(ProxResult::exact(z, v, n)),
            None => solve_dual(h, w, batch, mu, delta, solver, warm_start),
        },
        Structure::GeneralConjugate(sc) if batch.is_repeated_single() => {
            let (z, v) = closed_form::single_separable(sc, w, batch, mu);
            Ok(ProxResult::exact(z, v, n))
        }
        Structure::GeneralConjugate(_) | Structure::Opaque => solve_dual(h, w, batch, mu, delta, solver, warm_start),
    }
}

/// Solves a dual built with [`BoxQuadDual::composition`], taking the exact
/// closed forms when the batch repeats a single sample or every column has
/// at most one nonzero (and the loss has no shift).
pub fn solve_composition_dual(
    dual: &BoxQuadDual,
    delta: f64,
    solver: &dyn DualSolver,
    warm_start: Option<ArrayView1<f64>>,
) -> Result<ProxResult> {
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    if let DualOperator::Columns(columns) = &dual.operator {
        let n = dual.batch_size();
        let loss = ScalarLoss {
            lower: dual.lower[0],
            upper: dual.upper[0],
            shift: dual.shift[0],
        };
        let repeated = dual.batch.is_repeated_single();
        if repeated || loss.shift == 0.0 {
            let lc = LinearComposition::new(columns.t().to_owned(), loss);
            let anchor = dual.anchor.view();
            if repeated {
                let (z, v) = closed_form::single_composition(&lc, anchor, &Minibatch::from_indices(vec![0; n])?, dual.mu);
                return Ok(ProxResult::exact(z, v, n));
            }
            let local = Minibatch::from_indices((0..n).collect())?;
            if let Some((z, v)) = closed_form::coordinate_composition(&lc, anchor, &local, dual.mu) {
                return Ok(ProxResult::exact(z, v, n));
            }
        }
    }
    solver.solve(dual, delta, warm_start.filter(|v| v.len() == dual.dim()))
}

fn solve_dual(
    h: &dyn NonsmoothComponent,
    w: ArrayView1<f64>,
    batch: &Minibatch,
    mu: f64,
    delta: f64,
    solver: &dyn DualSolver,
    warm_start: Option<ArrayView1<f64>>,
) -> Result<ProxResult> {
    let dual = build_dual(h, w, batch, mu)?;
    let warm = warm_start.filter(|v| v.len() == dual.dim());
    solver.solve(&dual, delta, warm)
}
