use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{invalid, Error, Result};
use crate::linalg::PowerIteration;
use crate::problem::{Minibatch, NonsmoothComponent, ScalarLoss, Structure};

/// Linear map `A : R^d -> R^n` linking dual and primal variables.
///
/// The minibatch prox at anchor `w` is recovered from a dual point `v` as
/// `z = w - (mu / N) A v`.
#[derive(Debug, Clone)]
pub enum DualOperator {
    /// Columns `a_{xi_1}, ..., a_{xi_N}` (an `n x N` matrix).
    Columns(Array2<f64>),
    /// `A v = sum_j v_j` for `v = (v_1, ..., v_N)`, each block in `R^n`.
    BlockSum { dimension: usize, blocks: usize },
}

impl DualOperator {
    pub fn primal_dim(&self) -> usize {
        match self {
            DualOperator::Columns(a) => a.nrows(),
            DualOperator::BlockSum { dimension, .. } => *dimension,
        }
    }

    pub fn dual_dim(&self) -> usize {
        match self {
            DualOperator::Columns(a) => a.ncols(),
            DualOperator::BlockSum { dimension, blocks } => dimension * blocks,
        }
    }

    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match self {
            DualOperator::Columns(a) => a.dot(&v),
            DualOperator::BlockSum { dimension, blocks } => {
                let mut out = Array1::zeros(*dimension);
                for j in 0..*blocks {
                    out += &v.slice(ndarray::s![j * dimension..(j + 1) * dimension]);
                }
                out
            }
        }
    }

    pub fn apply_transpose(&self, z: ArrayView1<f64>) -> Array1<f64> {
        match self {
            DualOperator::Columns(a) => a.t().dot(&z),
            DualOperator::BlockSum { blocks, .. } => {
                let mut out = Array1::zeros(self.dual_dim());
                for mut block in out.exact_chunks_mut(z.len()).into_iter().take(*blocks) {
                    block.assign(&z);
                }
                out
            }
        }
    }

    /// Largest column norm (1 for the block-sum operator).
    pub fn max_column_norm(&self) -> f64 {
        match self {
            DualOperator::Columns(a) => a.columns().into_iter().map(|c| c.dot(&c).sqrt()).fold(0.0, f64::max),
            DualOperator::BlockSum { .. } => 1.0,
        }
    }

    /// `a_j^T z` for column `j`.
    pub fn column_dot(&self, j: usize, z: ArrayView1<f64>) -> f64 {
        match self {
            DualOperator::Columns(a) => a.column(j).dot(&z),
            DualOperator::BlockSum { dimension, .. } => z[j % dimension],
        }
    }

    /// `z += t a_j`
    pub fn add_column(&self, j: usize, t: f64, mut z: ndarray::ArrayViewMut1<f64>) {
        match self {
            DualOperator::Columns(a) => z.scaled_add(t, &a.column(j)),
            DualOperator::BlockSum { dimension, .. } => z[j % dimension] += t,
        }
    }

    /// `||a_j||^2` for every column.
    pub fn column_sq_norms(&self) -> Array1<f64> {
        match self {
            DualOperator::Columns(a) => a.columns().into_iter().map(|c| c.dot(&c)).collect(),
            DualOperator::BlockSum { .. } => Array1::ones(self.dual_dim()),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            DualOperator::Columns(a) => a.iter().all(|&x| x == 0.0),
            DualOperator::BlockSum { .. } => false,
        }
    }
}

/// Concave box-constrained quadratic dual of the minibatch prox:
///
/// ```text
/// maximize  D(v) = -1/2 v^T Q v + b^T v   subject to  lower <= v <= upper
/// Q = (mu / N) A^T A,   b = A^T w + shift
/// ```
///
/// `D / N` is the Lagrange dual function of
/// `P(z) = (1/N) sum_j phi_j((A^T z)_j) + ||z - w||^2 / (2 mu)` with
/// `phi_j(t) = max(lower_j (t + shift_j), upper_j (t + shift_j))`.
#[derive(Debug, Clone)]
pub struct BoxQuadDual {
    pub operator: DualOperator,
    pub linear: Array1<f64>,
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
    pub shift: Array1<f64>,
    pub mu: f64,
    pub batch: Minibatch,
    pub anchor: Array1<f64>,
}

impl BoxQuadDual {
    /// Dual of `min_z (1/N) sum_j loss(a_j^T z) + ||z - anchor||^2 / (2 mu)` with
    /// `a_j` the columns of `columns`.
    pub fn composition(
        columns: Array2<f64>,
        loss: ScalarLoss,
        mu: f64,
        batch: Minibatch,
        anchor: Array1<f64>,
    ) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(invalid("mu must be positive"));
        }
        if columns.ncols() != batch.len() || columns.nrows() != anchor.len() {
            return Err(invalid("column matrix does not match batch and anchor"));
        }
        let d = columns.ncols();
        let linear = columns.t().dot(&anchor) + loss.shift;
        Ok(BoxQuadDual {
            operator: DualOperator::Columns(columns),
            linear,
            lower: Array1::from_elem(d, loss.lower),
            upper: Array1::from_elem(d, loss.upper),
            shift: Array1::from_elem(d, loss.shift),
            mu,
            batch,
            anchor,
        })
    }

    pub fn dim(&self) -> usize {
        self.operator.dual_dim()
    }

    pub fn batch_size(&self) -> usize {
        self.batch.len()
    }

    /// `mu / N`
    pub fn weight(&self) -> f64 {
        self.mu / self.batch_size() as f64
    }

    /// Dense `Q`. Only meant for small instances (tests, diagnostics).
    pub fn quadratic_matrix(&self) -> Array2<f64> {
        let d = self.dim();
        let mut q = Array2::zeros((d, d));
        let mut e = Array1::zeros(d);
        for j in 0..d {
            e[j] = 1.0;
            let col = self.operator.apply_transpose(self.operator.apply(e.view()).view()) * self.weight();
            q.column_mut(j).assign(&col);
            e[j] = 0.0;
        }
        q
    }

    /// `lambda_max(Q)` by power iteration.
    pub fn curvature(&self) -> f64 {
        let w = self.weight();
        PowerIteration::default().largest_eigenvalue(self.dim(), |x| {
            self.operator.apply_transpose(self.operator.apply(x.view()).view()) * w
        })
    }

    /// Euclidean diameter of the box.
    pub fn domain_radius(&self) -> f64 {
        Zip::from(&self.upper)
            .and(&self.lower)
            .fold(0.0, |acc, u, l| acc + (u - l) * (u - l))
            .sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.operator.is_zero()
    }

    pub fn project(&self, v: ArrayView1<f64>) -> Array1<f64> {
        Zip::from(&v)
            .and(&self.lower)
            .and(&self.upper)
            .map_collect(|&x, &l, &u| x.clamp(l, u))
    }

    pub fn contains(&self, v: ArrayView1<f64>) -> bool {
        Zip::from(&v)
            .and(&self.lower)
            .and(&self.upper)
            .fold(true, |ok, &x, &l, &u| ok && l <= x && x <= u)
    }

    /// `grad D(v) = b - Q v` given `A v`.
    pub fn gradient_from_image(&self, image: ArrayView1<f64>) -> Array1<f64> {
        let mut g = self.operator.apply_transpose(image);
        g *= -self.weight();
        g += &self.linear;
        g
    }

    pub fn gradient(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.gradient_from_image(self.operator.apply(v).view())
    }

    /// `D(v)` given `A v`.
    pub fn objective_from_image(&self, v: ArrayView1<f64>, image: ArrayView1<f64>) -> f64 {
        -0.5 * self.weight() * image.dot(&image) + self.linear.dot(&v)
    }

    pub fn objective(&self, v: ArrayView1<f64>) -> f64 {
        self.objective_from_image(v, self.operator.apply(v).view())
    }

    /// Value of the Lagrange dual function, `D(v) / N`.
    pub fn dual_value(&self, v: ArrayView1<f64>) -> f64 {
        self.objective(v) / self.batch_size() as f64
    }

    /// `z = w - (mu / N) A v`
    pub fn recover(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let mut z = self.operator.apply(v);
        z *= -self.weight();
        z += &self.anchor;
        z
    }

    /// The prox subproblem objective `P(z)`.
    pub fn primal_objective(&self, z: ArrayView1<f64>) -> f64 {
        let t = self.operator.apply_transpose(z);
        let penalty: f64 = Zip::from(&t)
            .and(&self.lower)
            .and(&self.upper)
            .and(&self.shift)
            .fold(0.0, |acc, &t, &l, &u, &s| acc + (l * (t + s)).max(u * (t + s)));
        penalty / self.batch_size() as f64 + crate::linalg::dist_sq(z, self.anchor.view()) / (2.0 * self.mu)
    }

    /// Bound on `||z(v) - prox||` from the duality gap at `v`, given `grad D(v)`.
    ///
    /// `P(z(v)) - D(v)/N` equals the box Frank-Wolfe gap of `D` divided by `N`,
    /// and the sum of the primal and dual suboptimalities is at least
    /// `||z(v) - prox||^2 / mu`.
    pub fn certificate_from_gradient(&self, v: ArrayView1<f64>, gradient: ArrayView1<f64>) -> f64 {
        let gap = Zip::from(&v)
            .and(&gradient)
            .and(&self.lower)
            .and(&self.upper)
            .fold(0.0, |acc, &x, &g, &l, &u| acc + (g * (u - x)).max(g * (l - x)));
        (self.mu * gap.max(0.0) / self.batch_size() as f64).sqrt()
    }

    pub fn certificate(&self, v: ArrayView1<f64>) -> f64 {
        let g = self.gradient(v);
        self.certificate_from_gradient(v, g.view())
    }

    /// Size of the certificate that rounding alone can produce at `v`: the
    /// gap with every gradient entry perturbed by a few ulps of its terms.
    pub fn certificate_floor(&self, v: ArrayView1<f64>) -> f64 {
        let qv = self.operator.apply_transpose(self.operator.apply(v).view()) * self.weight();
        let scale = Zip::from(&self.linear)
            .and(&qv)
            .and(&self.lower)
            .and(&self.upper)
            .fold(0.0, |acc, &b, &q, &l, &u| acc + (b.abs() + q.abs()) * (u - l));
        (self.mu * 8.0 * f64::EPSILON * scale / self.batch_size() as f64).sqrt()
    }

    /// Primal error implied by a dual distance `||v - v*||`:
    /// `(mu / sqrt(N)) * max_j ||a_j|| * ||v - v*||` (the column factor is 1 for
    /// the block-sum operator).
    pub fn primal_bound_from_dual_distance(&self, dual_distance: f64) -> f64 {
        self.mu * self.operator.max_column_norm() * dual_distance / (self.batch_size() as f64).sqrt()
    }

    /// Maximiser when `Q = 0`: each coordinate at the bound favoured by `b`.
    pub fn vertex_maximizer(&self) -> Array1<f64> {
        Zip::from(&self.linear)
            .and(&self.lower)
            .and(&self.upper)
            .map_collect(|&b, &l, &u| {
                if b > 0.0 {
                    u
                } else if b < 0.0 {
                    l
                } else {
                    0.0f64.clamp(l, u)
                }
            })
    }
}

/// Builds the dual of `min_z (1/N) sum_{i in I} h(z; i) + ||z - w||^2 / (2 mu)`.
///
/// Batch indices are in the nonsmooth component's own sample space.
pub fn build_dual(h: &dyn NonsmoothComponent, w: ArrayView1<f64>, batch: &Minibatch, mu: f64) -> Result<BoxQuadDual> {
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    if w.len() != h.dimension() {
        return Err(invalid("anchor dimension mismatch"));
    }
    if batch.indices().iter().any(|&i| i >= h.sample_count()) {
        return Err(invalid("batch index outside the sample space"));
    }
    match h.structure() {
        Structure::LinearComposition(lc) => {
            let n = w.len();
            let mut columns = Array2::zeros((n, batch.len()));
            for (j, &i) in batch.indices().iter().enumerate() {
                columns.column_mut(j).assign(&lc.row(i));
            }
            BoxQuadDual::composition(columns, lc.loss, mu, batch.clone(), w.to_owned())
        }
        Structure::GeneralConjugate(sc) => {
            let n = w.len();
            let blocks = batch.len();
            let d = n * blocks;
            let mut lower = Array1::zeros(d);
            let mut upper = Array1::zeros(d);
            let mut shift = Array1::zeros(d);
            for (j, &s) in batch.indices().iter().enumerate() {
                for i in 0..n {
                    lower[j * n + i] = sc.lower[(s, i)];
                    upper[j * n + i] = sc.upper[(s, i)];
                    shift[j * n + i] = -sc.centers[(s, i)];
                }
            }
            let operator = DualOperator::BlockSum { dimension: n, blocks };
            let linear = operator.apply_transpose(w) + &shift;
            Ok(BoxQuadDual {
                operator,
                linear,
                lower,
                upper,
                shift,
                mu,
                batch: batch.clone(),
                anchor: w.to_owned(),
            })
        }
        Structure::Zero | Structure::Indicator(_) | Structure::Opaque => Err(Error::UnsupportedStructure),
    }
}
