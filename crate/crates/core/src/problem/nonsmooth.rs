use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView1};

/// Per-sample convex term `h(w; xi)`.
pub trait NonsmoothComponent: Debug + Send + Sync {
    fn dimension(&self) -> usize;

    fn sample_count(&self) -> usize;

    fn value(&self, w: ArrayView1<f64>, sample: usize) -> f64;

    /// An element of the subdifferential of `h(.; sample)` at `w`.
    fn subgradient(&self, w: ArrayView1<f64>, sample: usize) -> Array1<f64>;

    /// Structure used by the proximal machinery.
    fn structure(&self) -> Structure<'_>;
}

/// How the minibatch prox of a nonsmooth term can be computed.
#[derive(Debug, Clone, Copy)]
pub enum Structure<'a> {
    /// `h == 0`.
    Zero,
    /// Indicator of a box shared by all samples; the prox is a projection.
    Indicator(&'a BoxIndicator),
    /// `h(w; xi) = l(a_xi^T w)`, dual of dimension N.
    LinearComposition(&'a LinearComposition),
    /// Separable `h(w; xi)` whose conjugate is linear on a box, dual of dimension N n.
    GeneralConjugate(&'a SeparableConjugate),
    /// No usable dual structure.
    Opaque,
}

/// Scalar piecewise linear loss `l(t) = max(lower (t + shift), upper (t + shift))`.
///
/// Its conjugate is `l*(s) = -shift * s` on `[lower, upper]` and `+inf` elsewhere.
/// Hinge is `(0, 1, 1)`, absolute value is `(-1, 1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLoss {
    pub lower: f64,
    pub upper: f64,
    pub shift: f64,
}

impl ScalarLoss {
    /// `max(0, 1 + t)`; composed with `a = -y x` this is the hinge loss.
    pub const fn hinge() -> Self {
        ScalarLoss {
            lower: 0.0,
            upper: 1.0,
            shift: 1.0,
        }
    }

    /// `|t|`
    pub const fn abs() -> Self {
        ScalarLoss {
            lower: -1.0,
            upper: 1.0,
            shift: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = t + self.shift;
        (self.lower * u).max(self.upper * u)
    }

    /// Derivative away from the kink; at the kink the element of
    /// `[lower, upper]` closest to zero (so `sgn(0) = 0` for `|t|`).
    pub fn derivative(&self, t: f64) -> f64 {
        let u = t + self.shift;
        if u > 0.0 {
            self.upper
        } else if u < 0.0 {
            self.lower
        } else {
            0.0f64.clamp(self.lower, self.upper)
        }
    }

    pub fn conjugate(&self, s: f64) -> f64 {
        if s < self.lower || s > self.upper {
            f64::INFINITY
        } else {
            -self.shift * s
        }
    }
}

/// `h(w; xi) = l(a_xi^T w)` with `a_xi` the rows of `rows`.
#[derive(Debug, Clone)]
pub struct LinearComposition {
    pub rows: Array2<f64>,
    pub loss: ScalarLoss,
}

impl LinearComposition {
    pub fn new(rows: Array2<f64>, loss: ScalarLoss) -> Self {
        assert!(loss.lower <= loss.upper, "empty conjugate domain");
        LinearComposition { rows, loss }
    }

    pub fn row(&self, sample: usize) -> ArrayView1<'_, f64> {
        self.rows.row(sample)
    }
}

impl NonsmoothComponent for LinearComposition {
    fn dimension(&self) -> usize {
        self.rows.ncols()
    }

    fn sample_count(&self) -> usize {
        self.rows.nrows()
    }

    fn value(&self, w: ArrayView1<f64>, sample: usize) -> f64 {
        self.loss.value(self.rows.row(sample).dot(&w))
    }

    fn subgradient(&self, w: ArrayView1<f64>, sample: usize) -> Array1<f64> {
        let a = self.rows.row(sample);
        let d = self.loss.derivative(a.dot(&w));
        a.mapv(|x| d * x)
    }

    fn structure(&self) -> Structure<'_> {
        Structure::LinearComposition(self)
    }
}

/// Separable term `h(w; xi) = sum_i max(lo_xi,i (w_i - c_xi,i), hi_xi,i (w_i - c_xi,i))`.
///
/// The conjugate is `h*(v; xi) = <c_xi, v>` on the box `[lo_xi, hi_xi]`, e.g. a
/// weighted, recentred l1 norm.
#[derive(Debug, Clone)]
pub struct SeparableConjugate {
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
    pub centers: Array2<f64>,
}

impl SeparableConjugate {
    pub fn new(lower: Array2<f64>, upper: Array2<f64>, centers: Array2<f64>) -> Self {
        assert_eq!(lower.dim(), upper.dim());
        assert_eq!(lower.dim(), centers.dim());
        assert!(lower.iter().zip(upper.iter()).all(|(l, u)| l <= u), "empty box");
        SeparableConjugate { lower, upper, centers }
    }

    /// `sum_i weight_xi,i |w_i - c_xi,i|`
    pub fn weighted_l1(weights: Array2<f64>, centers: Array2<f64>) -> Self {
        Self::new(weights.mapv(|x| -x), weights, centers)
    }

    /// Largest Euclidean diameter of a per-sample conjugate domain.
    pub fn domain_radius(&self) -> f64 {
        (&self.upper - &self.lower)
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .fold(0.0, f64::max)
    }

    fn piece(&self, sample: usize, i: usize, wi: f64) -> (f64, f64, f64) {
        (
            self.lower[(sample, i)],
            self.upper[(sample, i)],
            wi - self.centers[(sample, i)],
        )
    }
}

impl NonsmoothComponent for SeparableConjugate {
    fn dimension(&self) -> usize {
        self.lower.ncols()
    }

    fn sample_count(&self) -> usize {
        self.lower.nrows()
    }

    fn value(&self, w: ArrayView1<f64>, sample: usize) -> f64 {
        (0..w.len())
            .map(|i| {
                let (lo, hi, u) = self.piece(sample, i, w[i]);
                (lo * u).max(hi * u)
            })
            .sum()
    }

    fn subgradient(&self, w: ArrayView1<f64>, sample: usize) -> Array1<f64> {
        Array1::from_shape_fn(w.len(), |i| {
            let (lo, hi, u) = self.piece(sample, i, w[i]);
            if u > 0.0 {
                hi
            } else if u < 0.0 {
                lo
            } else {
                0.0f64.clamp(lo, hi)
            }
        })
    }

    fn structure(&self) -> Structure<'_> {
        Structure::GeneralConjugate(self)
    }
}

/// Indicator of the box `[lower, upper]`, identical for every sample.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
    pub samples: usize,
}

impl BoxIndicator {
    pub fn contains(&self, w: ArrayView1<f64>) -> bool {
        w.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    pub fn project(&self, w: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_shape_fn(w.len(), |i| w[i].clamp(self.lower[i], self.upper[i]))
    }
}

impl NonsmoothComponent for BoxIndicator {
    fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn sample_count(&self) -> usize {
        self.samples
    }

    fn value(&self, w: ArrayView1<f64>, _sample: usize) -> f64 {
        if self.contains(w) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Zero is a subgradient inside the box; outside the subdifferential is
    /// empty and zero is returned as well.
    fn subgradient(&self, w: ArrayView1<f64>, _sample: usize) -> Array1<f64> {
        Array1::zeros(w.len())
    }

    fn structure(&self) -> Structure<'_> {
        Structure::Indicator(self)
    }
}

/// `h == 0`.
#[derive(Debug, Clone)]
pub struct ZeroTerm {
    pub dimension: usize,
    pub samples: usize,
}

impl NonsmoothComponent for ZeroTerm {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn sample_count(&self) -> usize {
        self.samples
    }

    fn value(&self, _w: ArrayView1<f64>, _sample: usize) -> f64 {
        0.0
    }

    fn subgradient(&self, w: ArrayView1<f64>, _sample: usize) -> Array1<f64> {
        Array1::zeros(w.len())
    }

    fn structure(&self) -> Structure<'_> {
        Structure::Zero
    }
}
