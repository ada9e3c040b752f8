//! Scaled experiment protocols built on `spgm`.
//!
//! * [`curves`]: seed-averaged error curves `E||w^k - w*||^2`;
//! * [`sparse`]: iterations needed to reach a target distance on the sparse
//!   representation problem, over a grid of batch sizes and stepsize policies;
//! * [`svm`]: the SPG-M versus minibatch SGD race to a target test accuracy.
//!
//! The `acceptance` test target drives these protocols and reports one
//! PASS/FAIL line per criterion.

pub mod curves;
pub mod sparse;
pub mod svm;

use ndarray::Array1;
use spgm::{seeded_rng, standard_normal};

/// Starting point for run `seed`: i.i.d. standard normal entries drawn from
/// the stream seeded with `1000 + seed`, so it never coincides with the
/// minibatch stream of the same run.
pub fn gaussian_start(seed: u64, dimension: usize) -> Array1<f64> {
    let mut rng = seeded_rng(1000 + seed);
    Array1::from_shape_simple_fn(dimension, || standard_normal(&mut rng))
}

/// Median of a non-empty list; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
