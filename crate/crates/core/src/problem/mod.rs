//! The stochastic composite model `F(w) = E[f(w; xi)] + E[h(w; xi)]` over a
//! finite, uniformly sampled sample space `[m]`.

mod nonsmooth;
mod smooth;

use std::sync::Arc;

use ndarray::{Array1, ArrayView1};
use rand::Rng as _;

pub use nonsmooth::{
    BoxIndicator, LinearComposition, NonsmoothComponent, ScalarLoss, SeparableConjugate, Structure, ZeroTerm,
};
pub use smooth::{CenteredQuadratic, LeastSquaresRidge, ScaledSquaredNorm, SmoothComponent};

use crate::error::{invalid, Result};
use crate::Rng;

/// A tuple of sample indices `I^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minibatch {
    indices: Vec<usize>,
}

impl Minibatch {
    /// Draws `size` indices i.i.d. uniformly from `[0, sample_count)`, with replacement.
    pub fn sample(rng: &mut Rng, sample_count: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        if sample_count == 0 {
            return Err(invalid("sample space is empty"));
        }
        let indices = (0..size).map(|_| rng.random_range(0..sample_count)).collect();
        Ok(Minibatch { indices })
    }

    /// Every index of `[0, sample_count)` exactly once (the full empirical batch).
    pub fn full(sample_count: usize) -> Result<Self> {
        if sample_count == 0 {
            return Err(invalid("sample space is empty"));
        }
        Ok(Minibatch {
            indices: (0..sample_count).collect(),
        })
    }

    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("batch size must be at least 1"));
        }
        Ok(Minibatch { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// True when every entry refers to the same sample.
    pub fn is_repeated_single(&self) -> bool {
        self.indices.windows(2).all(|w| w[0] == w[1])
    }
}

/// The composite problem: smooth and nonsmooth per-sample oracles plus the
/// constants `L_f` (per-sample gradient Lipschitz bound) and `sigma_f`
/// (strong convexity of the mean of `f`).
///
/// When the two components have different sample counts the sample space is
/// `[max(m_f, m_h))` and each component sees `xi mod m_component`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub smooth: Arc<dyn SmoothComponent>,
    pub nonsmooth: Arc<dyn NonsmoothComponent>,
    pub lipschitz: f64,
    pub strong_convexity: f64,
}

impl CompositeProblem {
    pub fn new(
        smooth: Arc<dyn SmoothComponent>,
        nonsmooth: Arc<dyn NonsmoothComponent>,
        lipschitz: f64,
        strong_convexity: f64,
    ) -> Result<Self> {
        if smooth.dimension() == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if smooth.dimension() != nonsmooth.dimension() {
            return Err(invalid(format!(
                "smooth dimension {} differs from nonsmooth dimension {}",
                smooth.dimension(),
                nonsmooth.dimension()
            )));
        }
        if smooth.sample_count() == 0 || nonsmooth.sample_count() == 0 {
            return Err(invalid("sample count must be positive"));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(invalid("L_f must be positive and finite"));
        }
        if !(strong_convexity >= 0.0 && strong_convexity <= lipschitz) {
            return Err(invalid("sigma_f must lie in [0, L_f]"));
        }
        Ok(CompositeProblem {
            smooth,
            nonsmooth,
            lipschitz,
            strong_convexity,
        })
    }

    pub fn dimension(&self) -> usize {
        self.smooth.dimension()
    }

    pub fn sample_count(&self) -> usize {
        self.smooth.sample_count().max(self.nonsmooth.sample_count())
    }

    pub fn smooth_index(&self, sample: usize) -> usize {
        sample % self.smooth.sample_count()
    }

    pub fn nonsmooth_index(&self, sample: usize) -> usize {
        sample % self.nonsmooth.sample_count()
    }

    /// Batch expressed in the nonsmooth component's index space.
    pub fn nonsmooth_batch(&self, batch: &Minibatch) -> Minibatch {
        let m = self.nonsmooth.sample_count();
        Minibatch {
            indices: batch.indices.iter().map(|&i| i % m).collect(),
        }
    }

    fn check_dim(&self, w: ArrayView1<f64>) -> Result<()> {
        if w.len() != self.dimension() {
            return Err(invalid(format!(
                "point has length {}, problem dimension is {}",
                w.len(),
                self.dimension()
            )));
        }
        Ok(())
    }

    /// `(1/N) sum_{i in I} grad f(w; i)`
    pub fn minibatch_gradient(&self, w: ArrayView1<f64>, batch: &Minibatch) -> Result<Array1<f64>> {
        self.check_dim(w)?;
        let scale = 1.0 / batch.len() as f64;
        let mut g = Array1::zeros(self.dimension());
        for &i in batch.indices() {
            self.smooth
                .accumulate_gradient(w, self.smooth_index(i), scale, g.view_mut());
        }
        Ok(g)
    }

    /// `(1/N) sum_{i in I} g_h(w; i)` using the component's subgradient oracle.
    pub fn minibatch_subgradient(&self, w: ArrayView1<f64>, batch: &Minibatch) -> Result<Array1<f64>> {
        self.check_dim(w)?;
        let scale = 1.0 / batch.len() as f64;
        let mut g = Array1::zeros(self.dimension());
        for &i in batch.indices() {
            g.scaled_add(scale, &self.nonsmooth.subgradient(w, self.nonsmooth_index(i)));
        }
        Ok(g)
    }

    /// Gradient of the empirical mean of `f`.
    pub fn full_gradient(&self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.minibatch_gradient(w, &Minibatch::full(self.sample_count())?)
    }

    /// Empirical mean of `f` alone.
    pub fn smooth_objective(&self, w: ArrayView1<f64>) -> Result<f64> {
        self.check_dim(w)?;
        let m = self.sample_count();
        Ok((0..m).map(|i| self.smooth.value(w, self.smooth_index(i))).sum::<f64>() / m as f64)
    }

    /// `(1/m) sum_xi [f(w; xi) + h(w; xi)]`
    pub fn empirical_objective(&self, w: ArrayView1<f64>) -> Result<f64> {
        self.check_dim(w)?;
        let m = self.sample_count();
        let total: f64 = (0..m)
            .map(|i| self.smooth.value(w, self.smooth_index(i)) + self.nonsmooth.value(w, self.nonsmooth_index(i)))
            .sum();
        Ok(total / m as f64)
    }
}
