use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, Zip};

/// Per-sample smooth loss `f(w; xi)`.
///
/// Implementations are pure functions of `(w, sample)`.
pub trait SmoothComponent: Debug + Send + Sync {
    fn dimension(&self) -> usize;

    fn sample_count(&self) -> usize;

    fn value(&self, w: ArrayView1<f64>, sample: usize) -> f64;

    /// `out += scale * grad f(w; sample)`
    fn accumulate_gradient(&self, w: ArrayView1<f64>, sample: usize, scale: f64, out: ArrayViewMut1<f64>);

    fn gradient(&self, w: ArrayView1<f64>, sample: usize) -> Array1<f64> {
        let mut g = Array1::zeros(self.dimension());
        self.accumulate_gradient(w, sample, 1.0, g.view_mut());
        g
    }
}

/// `f(w; xi) = (lambda / 2) ||w||^2` for every sample.
#[derive(Debug, Clone)]
pub struct ScaledSquaredNorm {
    pub lambda: f64,
    pub dimension: usize,
    pub samples: usize,
}

impl SmoothComponent for ScaledSquaredNorm {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn sample_count(&self) -> usize {
        self.samples
    }

    fn value(&self, w: ArrayView1<f64>, _sample: usize) -> f64 {
        0.5 * self.lambda * w.dot(&w)
    }

    fn accumulate_gradient(&self, w: ArrayView1<f64>, _sample: usize, scale: f64, mut out: ArrayViewMut1<f64>) {
        out.scaled_add(scale * self.lambda, &w);
    }
}

/// `f(w; xi) = 1/2 (t_xi^T w - y_xi)^2 + (ridge / 2) ||w||^2`
#[derive(Debug, Clone)]
pub struct LeastSquaresRidge {
    pub rows: Array2<f64>,
    pub targets: Array1<f64>,
    pub ridge: f64,
}

impl LeastSquaresRidge {
    pub fn new(rows: Array2<f64>, targets: Array1<f64>, ridge: f64) -> Self {
        assert_eq!(rows.nrows(), targets.len(), "one target per row");
        LeastSquaresRidge { rows, targets, ridge }
    }

    /// Largest per-sample curvature `max_xi ||t_xi||^2 + ridge`.
    pub fn per_sample_lipschitz(&self) -> f64 {
        self.rows
            .rows()
            .into_iter()
            .map(|r| r.dot(&r))
            .fold(0.0, f64::max)
            + self.ridge
    }
}

impl SmoothComponent for LeastSquaresRidge {
    fn dimension(&self) -> usize {
        self.rows.ncols()
    }

    fn sample_count(&self) -> usize {
        self.rows.nrows()
    }

    fn value(&self, w: ArrayView1<f64>, sample: usize) -> f64 {
        let r = self.rows.row(sample).dot(&w) - self.targets[sample];
        0.5 * r * r + 0.5 * self.ridge * w.dot(&w)
    }

    fn accumulate_gradient(&self, w: ArrayView1<f64>, sample: usize, scale: f64, mut out: ArrayViewMut1<f64>) {
        let row = self.rows.row(sample);
        let r = row.dot(&w) - self.targets[sample];
        Zip::from(&mut out).and(&row).and(&w).for_each(|o, &t, &wi| {
            *o += scale * (r * t + self.ridge * wi);
        });
    }
}

/// `f(w; xi) = (curvature / 2) ||w - c_xi||^2`
#[derive(Debug, Clone)]
pub struct CenteredQuadratic {
    pub centers: Array2<f64>,
    pub curvature: f64,
}

impl SmoothComponent for CenteredQuadratic {
    fn dimension(&self) -> usize {
        self.centers.ncols()
    }

    fn sample_count(&self) -> usize {
        self.centers.nrows()
    }

    fn value(&self, w: ArrayView1<f64>, sample: usize) -> f64 {
        let c = self.centers.row(sample);
        0.5 * self.curvature * crate::linalg::dist_sq(w, c)
    }

    fn accumulate_gradient(&self, w: ArrayView1<f64>, sample: usize, scale: f64, mut out: ArrayViewMut1<f64>) {
        let c = self.centers.row(sample);
        Zip::from(&mut out).and(&w).and(&c).for_each(|o, &wi, &ci| {
            *o += scale * self.curvature * (wi - ci);
        });
    }
}
