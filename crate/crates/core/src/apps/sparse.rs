//! Parametric sparse representation,
//!
//! ```text
//! min_x  (1/(2m)) ||T x - y||^2 + (alpha/2) ||x||^2 + (lambda/p) ||Delta x||_1
//! ```
//!
//! split per sample as `f(x; xi) = (1/2)(T_xi x - y_xi)^2 + (alpha/2)||x||^2`
//! and `h(x; xi) = lambda |Delta_xi x|`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::problem::{CompositeProblem, LeastSquaresRidge, LinearComposition, Minibatch, ScalarLoss};
use crate::prox::{solve_composition_dual, BoxQuadDual, DualSolver, ProxResult};
use crate::{seeded_rng, Rng};

/// Parameters an instance was generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationParams {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub sparsity: usize,
    pub noise: f64,
}

impl GenerationParams {
    /// The experiment scale: `m = 400` data rows, `n = 200` atoms,
    /// `lambda = 5e-4`, with `p = m` operator rows.
    pub fn standard(seed: u64, alpha: f64) -> Self {
        GenerationParams {
            seed,
            m: 400,
            n: 200,
            p: 400,
            lambda: 5e-4,
            alpha,
            sparsity: 20,
            noise: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRepInstance {
    /// Dictionary, `m x n`.
    pub dictionary: Array2<f64>,
    /// Observation, length `m`.
    pub observation: Array1<f64>,
    /// Scaling operator, `p x n`.
    pub operator: Array2<f64>,
    pub lambda: f64,
    pub alpha: f64,
    /// The sparse code the observation was generated from.
    pub ground_truth: Array1<f64>,
    pub params: GenerationParams,
}

/// Draws an instance: standard normal dictionary columns scaled to unit norm,
/// an `s`-sparse standard normal code `x0`, `y = T x0 + noise` and `Delta`
/// equal to the identity when `p == n`, standard normal rows otherwise.
pub fn generate_instance(params: GenerationParams) -> Result<SparseRepInstance> {
    let GenerationParams { m, n, p, sparsity, .. } = params;
    if m == 0 || n == 0 || p == 0 {
        return Err(invalid("m, n and p must be positive"));
    }
    if sparsity == 0 || sparsity > n {
        return Err(invalid("sparsity must lie in [1, n]"));
    }
    if !(params.lambda >= 0.0 && params.alpha >= 0.0 && params.noise >= 0.0) {
        return Err(invalid("lambda, alpha and noise must be nonnegative"));
    }
    let mut rng = seeded_rng(params.seed);
    let mut dictionary: Array2<f64> = Array2::from_shape_simple_fn((m, n), || StandardNormal.sample(&mut rng));
    for mut col in dictionary.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let mut ground_truth = Array1::zeros(n);
    for j in index::sample(&mut rng, n, sparsity) {
        ground_truth[j] = StandardNormal.sample(&mut rng);
    }
    let mut observation = dictionary.dot(&ground_truth);
    for y in observation.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *y += params.noise * e;
    }
    let operator = if p == n {
        Array2::eye(n)
    } else {
        Array2::from_shape_simple_fn((p, n), || StandardNormal.sample(&mut rng))
    };
    Ok(SparseRepInstance {
        dictionary,
        observation,
        operator,
        lambda: params.lambda,
        alpha: params.alpha,
        ground_truth,
        params,
    })
}

impl SparseRepInstance {
    pub fn dimension(&self) -> usize {
        self.dictionary.ncols()
    }

    pub fn data_rows(&self) -> usize {
        self.dictionary.nrows()
    }

    pub fn operator_rows(&self) -> usize {
        self.operator.nrows()
    }

    /// Size of the sampled index space, `max(m, p)`.
    pub fn sample_count(&self) -> usize {
        self.data_rows().max(self.operator_rows())
    }

    /// `max_xi ||T_xi||^2 + alpha`, a Lipschitz constant of every `grad f(.; xi)`.
    pub fn lipschitz(&self) -> f64 {
        self.smooth().per_sample_lipschitz()
    }

    fn smooth(&self) -> LeastSquaresRidge {
        LeastSquaresRidge::new(self.dictionary.clone(), self.observation.clone(), self.alpha)
    }

    /// The instance as a composite problem with `L_f` as above and `sigma_f = alpha`.
    pub fn problem(&self) -> Result<CompositeProblem> {
        let h = LinearComposition::new(&self.operator * self.lambda, ScalarLoss::abs());
        CompositeProblem::new(Arc::new(self.smooth()), Arc::new(h), self.lipschitz(), self.alpha)
    }

    /// The regularised objective.
    pub fn objective(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.dictionary.dot(&x) - &self.observation;
        let l1: f64 = self.operator.dot(&x).iter().map(|v| v.abs()).sum();
        0.5 * r.dot(&r) / self.data_rows() as f64
            + 0.5 * self.alpha * x.dot(&x)
            + self.lambda * l1 / self.operator_rows() as f64
    }

    /// `y^k = [I - (mu/N)(T_I^T T_I + N alpha I)] x + (mu/N) T_I^T y_I`
    fn gradient_point(&self, x: ArrayView1<f64>, mu: f64, batch: &Minibatch) -> Array1<f64> {
        let nb = batch.len() as f64;
        let mut out = x.mapv(|v| (1.0 - mu * self.alpha) * v);
        for &i in batch.indices() {
            let row = self.dictionary.row(i % self.data_rows());
            let r = row.dot(&x) - self.observation[i % self.data_rows()];
            out.scaled_add(-mu * r / nb, &row);
        }
        out
    }

    /// One SPGM-SR step. The dual
    /// `z = argmin_{z in [-1,1]^N} (mu lambda^2/(2N^2)) ||Delta_I^T z||^2 - (lambda/N) z^T Delta_I y^k`
    /// is anchored at the gradient point `y^k`, and `x+ = y^k - (mu lambda/N) Delta_I^T z`.
    pub fn spgm_sr_step(
        &self,
        x: ArrayView1<f64>,
        mu: f64,
        batch_size: usize,
        delta: f64,
        rng: &mut Rng,
        solver: &dyn DualSolver,
    ) -> Result<ProxResult> {
        let batch = Minibatch::sample(rng, self.sample_count(), batch_size)?;
        let y = self.gradient_point(x, mu, &batch);
        let mut columns = Array2::zeros((self.dimension(), batch_size));
        for (j, &i) in batch.indices().iter().enumerate() {
            columns
                .column_mut(j)
                .assign(&(&self.operator.row(i % self.operator_rows()) * self.lambda));
        }
        let h_batch = Minibatch::from_indices(batch.indices().iter().map(|&i| i % self.operator_rows()).collect())?;
        let dual = BoxQuadDual::composition(columns, ScalarLoss::abs(), mu, h_batch, y)?;
        solve_composition_dual(&dual, delta, solver, None)
    }

    /// One SGDM-SR step:
    /// `x+ = y^k - (mu lambda/N) sum_{i in I} sgn(Delta_i x) Delta_i^T` with `sgn(0) = 0`.
    pub fn sgdm_sr_step(&self, x: ArrayView1<f64>, mu: f64, batch_size: usize, rng: &mut Rng) -> Result<Array1<f64>> {
        let batch = Minibatch::sample(rng, self.sample_count(), batch_size)?;
        let mut out = self.gradient_point(x, mu, &batch);
        let scale = mu * self.lambda / batch_size as f64;
        for &i in batch.indices() {
            let row = self.operator.row(i % self.operator_rows());
            let s = row.dot(&x);
            let sgn = if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            };
            out.scaled_add(-scale * sgn, &row);
        }
        Ok(out)
    }

    /// Writes the instance as plain text: a `key=value` parameter block, then
    /// each matrix or vector as a `name rows cols` header followed by
    /// row-major values, one row per line, in shortest round-trip decimal form.
    pub fn save(&self, mut out: impl Write) -> Result<()> {
        let p = &self.params;
        writeln!(out, "# sparse representation instance")?;
        for (k, v) in [
            ("seed", p.seed.to_string()),
            ("m", p.m.to_string()),
            ("n", p.n.to_string()),
            ("p", p.p.to_string()),
            ("lambda", self.lambda.to_string()),
            ("alpha", self.alpha.to_string()),
            ("sparsity", p.sparsity.to_string()),
            ("noise", p.noise.to_string()),
        ] {
            writeln!(out, "{k}={v}")?;
        }
        write_matrix(&mut out, "dictionary", &self.dictionary)?;
        write_matrix(&mut out, "observation", &self.observation.view().insert_axis(ndarray::Axis(0)).to_owned())?;
        write_matrix(&mut out, "operator", &self.operator)?;
        write_matrix(&mut out, "ground_truth", &self.ground_truth.view().insert_axis(ndarray::Axis(0)).to_owned())?;
        Ok(())
    }

    pub fn load(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines().enumerate().peekable();
        let mut params = std::collections::HashMap::new();
        while let Some((i, line)) = lines.peek() {
            let line = match line {
                Ok(l) => l.clone(),
                Err(_) => break,
            };
            let i = *i;
            if line.starts_with('#') || line.trim().is_empty() {
                lines.next();
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    params.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
                    lines.next();
                }
                None => break,
            }
        }
        let get = |key: &str| -> Result<(usize, String)> {
            params.get(key).cloned().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing parameter `{key}`"),
            })
        };
        fn parse<T: std::str::FromStr>((line, v): (usize, String)) -> Result<T> {
            v.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse `{v}`"),
            })
        }
        let params = GenerationParams {
            seed: parse(get("seed")?)?,
            m: parse(get("m")?)?,
            n: parse(get("n")?)?,
            p: parse(get("p")?)?,
            lambda: parse(get("lambda")?)?,
            alpha: parse(get("alpha")?)?,
            sparsity: parse(get("sparsity")?)?,
            noise: parse(get("noise")?)?,
        };
        let mut next_line = move || -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Parse {
                    line: 0,
                    message: "unexpected end of input".into(),
                }),
            }
        };
        let dictionary = read_matrix(&mut next_line, "dictionary")?;
        let observation = read_matrix(&mut next_line, "observation")?.row(0).to_owned();
        let operator = read_matrix(&mut next_line, "operator")?;
        let ground_truth = read_matrix(&mut next_line, "ground_truth")?.row(0).to_owned();
        if dictionary.dim() != (params.m, params.n)
            || observation.len() != params.m
            || operator.dim() != (params.p, params.n)
            || ground_truth.len() != params.n
        {
            return Err(invalid("stored shapes do not match the stored parameters"));
        }
        Ok(SparseRepInstance {
            dictionary,
            observation,
            operator,
            lambda: params.lambda,
            alpha: params.alpha,
            ground_truth,
            params,
        })
    }
}

fn write_matrix(out: &mut impl Write, name: &str, a: &Array2<f64>) -> Result<()> {
    writeln!(out, "{name} {} {}", a.nrows(), a.ncols())?;
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn read_matrix(next_line: &mut impl FnMut() -> Result<(usize, String)>, name: &str) -> Result<Array2<f64>> {
    let (line, header) = next_line()?;
    let bad = |line: usize, message: String| Error::Parse { line, message };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != name {
        return Err(bad(line, format!("expected `{name} rows cols` header")));
    }
    let rows: usize = parts[1].parse().map_err(|_| bad(line, "bad row count".into()))?;
    let cols: usize = parts[2].parse().map_err(|_| bad(line, "bad column count".into()))?;
    let mut a = Array2::zeros((rows, cols));
    for r in 0..rows {
        let (line, text) = next_line()?;
        let values: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(line, format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if values.len() != cols {
            return Err(bad(line, format!("expected {cols} values, found {}", values.len())));
        }
        a.row_mut(r).assign(&Array1::from(values));
    }
    Ok(a)
}
