//! Exact minibatch proxes for structures that admit them.

use ndarray::{Array1, ArrayView1};

use crate::problem::{LinearComposition, Minibatch, SeparableConjugate};

/// `sign(t) * max(|t| - tau, 0)`
pub fn soft_threshold(t: f64, tau: f64) -> f64 {
    if t > tau {
        t - tau
    } else if t < -tau {
        t + tau
    } else {
        0.0
    }
}

/// Prox of `l(a^T z)` for a single sample (or a batch repeating one sample).
/// Returns the primal point and the per-entry dual values.
pub(crate) fn single_composition(
    h: &LinearComposition,
    w: ArrayView1<f64>,
    batch: &Minibatch,
    mu: f64,
) -> (Array1<f64>, Array1<f64>) {
    let a = h.row(batch.indices()[0]);
    let loss = h.loss;
    let aa = a.dot(&a);
    let s = if aa > 0.0 {
        ((a.dot(&w) + loss.shift) / (mu * aa)).clamp(loss.lower, loss.upper)
    } else {
        0.0f64.clamp(loss.lower, loss.upper)
    };
    let z = &w - &(&a * (mu * s));
    (z, Array1::from_elem(batch.len(), s))
}

/// When every sampled `a_j` has at most one nonzero and the loss has no
/// shift, the batch average is separable across coordinates: coordinate `i`
/// carries `(1/N) max(q z_i, p z_i)` with `q <= p`, whose prox is a two-sided
/// threshold.
pub(crate) fn coordinate_composition(
    h: &LinearComposition,
    w: ArrayView1<f64>,
    batch: &Minibatch,
    mu: f64,
) -> Option<(Array1<f64>, Array1<f64>)> {
    let loss = h.loss;
    if loss.shift != 0.0 {
        return None;
    }
    let n = w.len();
    let nb = batch.len() as f64;
    let mut support = Vec::with_capacity(batch.len());
    for &s in batch.indices() {
        let row = h.row(s);
        let mut nz = row.iter().enumerate().filter(|(_, &x)| x != 0.0);
        let first = nz.next().map(|(i, &x)| (i, x));
        if nz.next().is_some() {
            return None;
        }
        support.push(first);
    }
    // slope for z_i > 0 (upper) and z_i < 0 (lower), summed over the batch
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    for &(i, a) in support.iter().flatten() {
        if a > 0.0 {
            upper[i] += loss.upper * a;
            lower[i] += loss.lower * a;
        } else {
            upper[i] += loss.lower * a;
            lower[i] += loss.upper * a;
        }
    }
    let mut z = w.to_owned();
    let mut theta = vec![0.0; n];
    for i in 0..n {
        let hi = mu * upper[i] / nb;
        let lo = mu * lower[i] / nb;
        if w[i] > hi {
            z[i] = w[i] - hi;
            theta[i] = 1.0;
        } else if w[i] < lo {
            z[i] = w[i] - lo;
            theta[i] = 0.0;
        } else {
            z[i] = 0.0;
            theta[i] = if hi > lo { (w[i] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    // per-entry duals interpolating between the two slopes
    let span = loss.upper - loss.lower;
    let dual = support
        .iter()
        .map(|entry| match *entry {
            Some((i, a)) if a > 0.0 => loss.lower + theta[i] * span,
            Some((i, _)) => loss.upper - theta[i] * span,
            None => 0.0f64.clamp(loss.lower, loss.upper),
        })
        .collect();
    Some((z, dual))
}

/// Prox of a separable conjugate-box term for one repeated sample.
pub(crate) fn single_separable(
    h: &SeparableConjugate,
    w: ArrayView1<f64>,
    batch: &Minibatch,
    mu: f64,
) -> (Array1<f64>, Array1<f64>) {
    let s = batch.indices()[0];
    let n = w.len();
    let mut z = Array1::zeros(n);
    let mut v = Array1::zeros(n);
    for i in 0..n {
        let lo = h.lower[(s, i)];
        let hi = h.upper[(s, i)];
        let c = h.centers[(s, i)];
        let slope = ((w[i] - c) / mu).clamp(lo, hi);
        v[i] = slope;
        z[i] = w[i] - mu * slope;
    }
    let mut dual = Array1::zeros(n * batch.len());
    for mut block in dual.exact_chunks_mut(n) {
        block.assign(&v);
    }
    (z, dual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(2.0, 1.0), 1.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold(0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(0.75, 0.25), 0.5);
    }
}
