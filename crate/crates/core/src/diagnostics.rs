//! Problem constants estimated at the reference solution.

use ndarray::{Array1, ArrayView1};

use crate::error::{invalid, Result};
use crate::linalg::PowerIteration;
use crate::problem::{CompositeProblem, Structure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `(1/m) sum_xi ||grad f(w*; xi) + g_h(w*; xi)||^2`.
    pub sigma_sq: f64,
    /// `(1/m) sum_xi ||g_h(w*; xi)||^2`.
    pub s_hat: f64,
    /// The per-sample Lipschitz constant `L_f` the problem was built with.
    pub lipschitz: f64,
    /// The strong convexity modulus `sigma_f` the problem was built with.
    pub strong_convexity: f64,
    /// Largest curvature of the mean of `f`, by power iteration on gradient differences at `w*`.
    pub mean_curvature: f64,
}

/// Per-sample nonsmooth subgradients at `w*`, one per sample of the problem's
/// sample space.
///
/// With the dual point of a full-batch prox at `w*` (one entry per sample for
/// a composition, one block per sample for a separable conjugate) the
/// selection is `a_xi v_xi` (resp. `v_xi`), whose mean cancels the mean
/// gradient of `f` at the optimum. Without it the component's own
/// subgradient oracle is used.
pub fn nonsmooth_selection(problem: &CompositeProblem, w_star: ArrayView1<f64>, dual: Option<ArrayView1<f64>>) -> Result<Vec<Array1<f64>>> {
    let m = problem.sample_count();
    let n = problem.dimension();
    let h = problem.nonsmooth.as_ref();
    let dual = dual.filter(|d| !d.is_empty());
    match (h.structure(), dual) {
        (Structure::LinearComposition(lc), Some(v)) => {
            if v.len() != m {
                return Err(invalid("dual length does not match the sample space"));
            }
            Ok((0..m).map(|j| lc.row(problem.nonsmooth_index(j)).mapv(|a| a * v[j])).collect())
        }
        (Structure::GeneralConjugate(_), Some(v)) => {
            if v.len() != m * n {
                return Err(invalid("dual length does not match the sample space"));
            }
            Ok((0..m).map(|j| v.slice(ndarray::s![j * n..(j + 1) * n]).to_owned()).collect())
        }
        _ => Ok((0..m).map(|j| h.subgradient(w_star, problem.nonsmooth_index(j))).collect()),
    }
}

pub fn estimate_diagnostics(problem: &CompositeProblem, w_star: ArrayView1<f64>, dual: Option<ArrayView1<f64>>) -> Result<Diagnostics> {
    let m = problem.sample_count();
    let selection = nonsmooth_selection(problem, w_star, dual)?;
    let mut sigma_sq = 0.0;
    let mut s_hat = 0.0;
    for (j, g_h) in selection.iter().enumerate() {
        let mut g = problem.smooth.gradient(w_star, problem.smooth_index(j));
        g += g_h;
        sigma_sq += g.dot(&g);
        s_hat += g_h.dot(g_h);
    }
    let base = problem.full_gradient(w_star)?;
    let mean_curvature = PowerIteration::default().largest_eigenvalue(problem.dimension(), |x| {
        let shifted = &w_star + x;
        problem.full_gradient(shifted.view()).map(|g| g - &base).unwrap_or_else(|_| x.clone())
    });
    Ok(Diagnostics {
        sigma_sq: sigma_sq / m as f64,
        s_hat: s_hat / m as f64,
        lipschitz: problem.lipschitz,
        strong_convexity: problem.strong_convexity,
        mean_curvature,
    })
}
