//! Small dense helpers shared by the solvers.

use ndarray::{Array1, ArrayView1};

/// Settings of the power iteration used for largest-eigenvalue estimates.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            max_iterations: 30,
            tolerance: 1e-9,
        }
    }
}

impl PowerIteration {
    /// Estimates the largest eigenvalue of a symmetric positive semidefinite
    /// operator of size `dim`. The start vector is a fixed, non-uniform
    /// sequence so the result is deterministic.
    pub fn largest_eigenvalue(&self, dim: usize, apply: impl Fn(&Array1<f64>) -> Array1<f64>) -> f64 {
        if dim == 0 {
            return 0.0;
        }
        let mut x = Array1::from_shape_fn(dim, |i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666).fract());
        let norm = x.dot(&x).sqrt();
        x /= norm;
        let mut estimate = 0.0;
        for _ in 0..self.max_iterations {
            let y = apply(&x);
            let rayleigh = x.dot(&y);
            let ny = y.dot(&y).sqrt();
            if ny == 0.0 {
                return 0.0;
            }
            let converged = (rayleigh - estimate).abs() <= self.tolerance * rayleigh.abs().max(1e-300);
            estimate = rayleigh;
            x = y / ny;
            if converged {
                break;
            }
        }
        estimate.max(0.0)
    }
}

/// Euclidean norm.
pub fn norm(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

/// Squared Euclidean distance.
pub fn dist_sq(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn power_iteration_diagonal() {
        let d = array![3.0, 1.0, 0.5];
        let est = PowerIteration {
            max_iterations: 200,
            tolerance: 1e-14,
        }
        .largest_eigenvalue(3, |x| &d * x);
        assert!((est - 3.0).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_zero_operator() {
        let est = PowerIteration::default().largest_eigenvalue(4, |x| Array1::zeros(x.len()));
        assert_eq!(est, 0.0);
    }

    #[test]
    fn power_iteration_rank_one() {
        let a = array![1.0, 2.0, 2.0];
        let m: Array2<f64> = a.view().insert_axis(ndarray::Axis(1)).dot(&a.view().insert_axis(ndarray::Axis(0)));
        let est = PowerIteration::default().largest_eigenvalue(3, |x| m.dot(x));
        assert!((est - 9.0).abs() < 1e-9);
    }
}
