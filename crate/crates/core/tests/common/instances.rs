//! Random small prox instances and their exact solutions by enumeration.

use ndarray::{Array1, Array2};
use rand::Rng as _;
use spgm::problem::{LinearComposition, ScalarLoss, SeparableConjugate};
use spgm::{standard_normal, Minibatch, NonsmoothComponent, Rng};

use super::enumerate_box_qp;

pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| scale * standard_normal(rng))
}

pub fn gaussian_vector(rng: &mut Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| scale * standard_normal(rng))
}

/// A small nonsmooth term, an anchor, a batch of distinct samples and `mu`.
pub struct Instance {
    pub h: Box<dyn NonsmoothComponent>,
    pub kind: Kind,
    pub w: Array1<f64>,
    pub batch: Minibatch,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Hinge,
    AbsComposition,
    SeparableL1,
}

pub fn random_instance(rng: &mut Rng, kind: Kind) -> Instance {
    let n = rng.random_range(1..=10);
    let batch_size = rng.random_range(1..=5);
    let m = batch_size + rng.random_range(0..4);
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..batch_size {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
    let batch = Minibatch::from_indices(pool[..batch_size].to_vec()).unwrap();
    let mu = rng.random_range(0.05..1.0);
    let w = gaussian_vector(rng, n, 1.0);
    let h: Box<dyn NonsmoothComponent> = match kind {
        Kind::Hinge => Box::new(LinearComposition::new(gaussian_matrix(rng, m, n, 0.7), ScalarLoss::hinge())),
        Kind::AbsComposition => Box::new(LinearComposition::new(gaussian_matrix(rng, m, n, 0.7), ScalarLoss::abs())),
        Kind::SeparableL1 => {
            let weights = Array2::from_shape_fn((m, n), |_| rng.random_range(0.1..1.5));
            let centers = gaussian_matrix(rng, m, n, 0.5);
            Box::new(SeparableConjugate::weighted_l1(weights, centers))
        }
    };
    Instance { h, kind, w, batch, mu }
}

/// Exact prox from the raw data, independent of the library's dual builder.
pub fn oracle_prox(inst: &Instance, rows: Option<&Array2<f64>>, sep: Option<(&Array2<f64>, &Array2<f64>)>, loss: ScalarLoss) -> Array1<f64> {
    let big_n = inst.batch.len() as f64;
    let idx = inst.batch.indices();
    match (rows, sep) {
        (Some(rows), _) => {
            // columns a_j of the batch
            let n = inst.w.len();
            let d = idx.len();
            let a = Array2::from_shape_fn((n, d), |(i, j)| rows[(idx[j], i)]);
            let q = a.t().dot(&a) * (inst.mu / big_n);
            let b = a.t().dot(&inst.w) + loss.shift;
            let v = enumerate_box_qp(&q, &b, &Array1::from_elem(d, loss.lower), &Array1::from_elem(d, loss.upper));
            &inst.w - &(a.dot(&v) * (inst.mu / big_n))
        }
        (None, Some((weights, centers))) => {
            // coordinates decouple: for each i an N-dimensional problem with Q = (mu/N) 11^T
            let d = idx.len();
            let q = Array2::from_elem((d, d), inst.mu / big_n);
            Array1::from_shape_fn(inst.w.len(), |i| {
                let b = Array1::from_shape_fn(d, |j| inst.w[i] - centers[(idx[j], i)]);
                let lo = Array1::from_shape_fn(d, |j| -weights[(idx[j], i)]);
                let hi = Array1::from_shape_fn(d, |j| weights[(idx[j], i)]);
                let v = enumerate_box_qp(&q, &b, &lo, &hi);
                inst.w[i] - inst.mu / big_n * v.sum()
            })
        }
        _ => unreachable!(),
    }
}

pub fn oracle_for(inst: &Instance) -> Array1<f64> {
    match inst.kind {
        Kind::Hinge | Kind::AbsComposition => {
            let spgm::Structure::LinearComposition(lc) = inst.h.structure() else { unreachable!() };
            oracle_prox(inst, Some(&lc.rows), None, lc.loss)
        }
        Kind::SeparableL1 => {
            let spgm::Structure::GeneralConjugate(sc) = inst.h.structure() else { unreachable!() };
            oracle_prox(inst, None, Some((&sc.upper, &sc.centers)), ScalarLoss::abs())
        }
    }
}

