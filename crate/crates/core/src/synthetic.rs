//! A small strongly convex instance whose minibatch prox is exact:
//!
//! ```text
//! f(w; xi) = (1/2)(t_xi^T w - y_xi)^2 + (alpha/2)||w||^2,   h(w; xi) = lambda |w_{xi mod n}|
//! ```

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::problem::{CompositeProblem, LeastSquaresRidge, LinearComposition, ScalarLoss};
use crate::{seeded_rng, standard_normal};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    /// `m x n`, rows `t_xi`.
    pub rows: Array2<f64>,
    pub targets: Array1<f64>,
    pub alpha: f64,
    pub lambda: f64,
}

impl SyntheticInstance {
    /// Rows with i.i.d. `N(0, 1/n)` entries, targets `T w_true + 0.5 e` with
    /// standard normal `w_true` and `e`.
    pub fn generate(seed: u64, m: usize, n: usize, alpha: f64, lambda: f64) -> Self {
        let mut rng = seeded_rng(seed);
        let scale = 1.0 / (n as f64).sqrt();
        let rows = Array2::from_shape_simple_fn((m, n), || scale * standard_normal(&mut rng));
        let truth = Array1::from_shape_simple_fn(n, || standard_normal(&mut rng));
        let noise = Array1::from_shape_simple_fn(m, || 0.5 * standard_normal(&mut rng));
        let targets = rows.dot(&truth) + noise;
        SyntheticInstance {
            rows,
            targets,
            alpha,
            lambda,
        }
    }

    /// `n = 20`, `m = 50`, `alpha = 0.5`, `lambda = 0.1`.
    pub fn standard(seed: u64) -> Self {
        Self::generate(seed, 50, 20, 0.5, 0.1)
    }

    pub fn dimension(&self) -> usize {
        self.rows.ncols()
    }

    /// Composite problem with `L_f = max ||t_xi||^2 + alpha` and `sigma_f = alpha`.
    pub fn problem(&self) -> Result<CompositeProblem> {
        let (m, n) = self.rows.dim();
        let f = LeastSquaresRidge::new(self.rows.clone(), self.targets.clone(), self.alpha);
        let lipschitz = f.per_sample_lipschitz();
        let selectors = Array2::from_shape_fn((m, n), |(i, j)| if i % n == j { self.lambda } else { 0.0 });
        let h = LinearComposition::new(selectors, ScalarLoss::abs());
        CompositeProblem::new(Arc::new(f), Arc::new(h), lipschitz, self.alpha)
    }
}
