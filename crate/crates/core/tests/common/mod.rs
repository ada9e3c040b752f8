//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};

pub mod instances;

/// `sign(t) * max(|t| - tau, 0)`, written independently of the library.
pub fn soft(t: f64, tau: f64) -> f64 {
    t.signum() * (t.abs() - tau).max(0.0)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_linear(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = b.len();
    let mut m = a.clone();
    let mut r = b.clone();
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))?;
        if m[(pivot, col)].abs() < 1e-11 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap((pivot, k), (col, k));
            }
            r.swap(pivot, col);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / m[(col, col)];
            if f != 0.0 {
                for k in col..n {
                    m[(i, k)] -= f * m[(col, k)];
                }
                r[i] -= f * r[col];
            }
        }
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[(i, k)] * x[k]).sum();
        x[i] = (r[i] - s) / m[(i, i)];
    }
    Some(x)
}

/// Maximiser of `-1/2 v^T Q v + b^T v` over the box `[lo, hi]`, by
/// enumerating every assignment of each coordinate to its lower bound, upper
/// bound or the free set, solving the KKT system on the free set and keeping
/// the best feasible stationary point.
pub fn enumerate_box_qp(q: &Array2<f64>, b: &Array1<f64>, lo: &Array1<f64>, hi: &Array1<f64>) -> Array1<f64> {
    let d = b.len();
    let patterns = 3usize.pow(d as u32);
    let mut best: Option<(f64, Array1<f64>)> = None;
    let tol = 1e-9 * (1.0 + q.iter().fold(0.0f64, |a, x| a.max(x.abs())) + b.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    for code in 0..patterns {
        let mut state = vec![0u8; d];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut v = Array1::zeros(d);
        let free: Vec<usize> = (0..d).filter(|&j| state[j] == 2).collect();
        for j in 0..d {
            match state[j] {
                0 => v[j] = lo[j],
                1 => v[j] = hi[j],
                _ => {}
            }
        }
        if !free.is_empty() {
            let k = free.len();
            let mut qf = Array2::zeros((k, k));
            let mut rhs = Array1::zeros(k);
            for (a, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    qf[(a, c)] = q[(i, j)];
                }
                let fixed: f64 = (0..d).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * v[j]).sum();
                rhs[a] = b[i] - fixed;
            }
            let Some(sol) = solve_linear(&qf, &rhs) else { continue };
            for (a, &i) in free.iter().enumerate() {
                v[i] = sol[a];
            }
        }
        let g = b - &q.dot(&v);
        let feasible = (0..d).all(|j| match state[j] {
            0 => g[j] <= tol,
            1 => g[j] >= -tol,
            _ => v[j] >= lo[j] - tol && v[j] <= hi[j] + tol,
        });
        if !feasible {
            continue;
        }
        let value = -0.5 * v.dot(&q.dot(&v)) + b.dot(&v);
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, v));
        }
    }
    best.expect("a box QP always has a KKT point").1
}

/// `ceil(4 L / (mu0 sigma) * ln(2 r0^2 / eps))` evaluated as a difference of
/// logarithms in a different association order.
pub fn switch_point_oracle(l: f64, sigma: f64, mu0: f64, eps: f64, r0_sq: f64) -> (f64, f64) {
    let log_term = std::f64::consts::LN_2 + r0_sq.ln() - eps.ln();
    let raw = (4.0 * l * log_term) / (mu0 * sigma);
    (raw, raw.ceil().max(0.0))
}

/// Direct two-pass mean of squared norms of `f(j)` for `j < m`.
pub fn mean_sq_norm(m: usize, f: impl Fn(usize) -> Array1<f64>) -> f64 {
    let vals: Vec<f64> = (0..m).map(|j| f(j).iter().map(|x| x * x).sum()).collect();
    let mean = vals.iter().sum::<f64>() / m as f64;
    // second pass corrects the rounding of the first
    mean + vals.iter().map(|v| v - mean).sum::<f64>() / m as f64
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

pub fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn euclid(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
