use ndarray::{Array1, ArrayView1};
use spgm::linalg::dist_sq;
use spgm::{run, CompositeProblem, OuterMethod, Result, RunSpec, StepsizePolicy, StopRule, ToleranceSchedule};

/// A fixed-length run whose every iterate is kept.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub policy: StepsizePolicy,
    pub tolerance: ToleranceSchedule,
    pub batch_size: usize,
    pub iterations: usize,
}

impl CurveSpec {
    fn run_spec(&self, seed: u64) -> RunSpec {
        let mut spec = RunSpec::new(self.policy, self.batch_size, StopRule::max_iterations(self.iterations), seed);
        spec.tolerance = self.tolerance;
        spec
    }
}

/// `||w^k - w*||^2` for `k = 0..=iterations` of the run with `seed`.
pub fn error_curve(
    problem: &CompositeProblem,
    w_star: ArrayView1<f64>,
    w0: Array1<f64>,
    spec: &CurveSpec,
    seed: u64,
    method: &dyn OuterMethod,
) -> Result<Vec<f64>> {
    let trajectory = run(problem, w0, &spec.run_spec(seed), method)?;
    Ok(trajectory.records.iter().map(|r| dist_sq(r.w.view(), w_star)).collect())
}

/// Mean of [`error_curve`] over `seeds`, each run started from `start(seed)`.
pub fn mean_error_curve(
    problem: &CompositeProblem,
    w_star: ArrayView1<f64>,
    start: impl Fn(u64) -> Array1<f64>,
    spec: &CurveSpec,
    seeds: &[u64],
    method: &dyn OuterMethod,
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; spec.iterations + 1];
    for &seed in seeds {
        let curve = error_curve(problem, w_star, start(seed), spec, seed, method)?;
        for (s, e) in sum.iter_mut().zip(curve) {
            *s += e;
        }
    }
    let count = seeds.len().max(1) as f64;
    Ok(sum.into_iter().map(|s| s / count).collect())
}

/// Largest pointwise relative gap `|a_k - b_k| / max(a_k, b_k)` between two
/// nonnegative curves over their common prefix; zero where both vanish.
pub fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let scale = x.max(y);
            if scale > 0.0 {
                (x - y).abs() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spgm::synthetic::SyntheticInstance;
    use spgm::Sgdm;

    #[test]
    fn deviation_is_symmetric_and_scale_free() {
        let a = [1.0, 2.0, 0.0];
        let b = [1.0, 1.0, 0.0];
        assert_eq!(relative_deviation(&a, &b), 0.5);
        assert_eq!(relative_deviation(&b, &a), 0.5);
        assert_eq!(relative_deviation(&[10.0, 20.0], &[10.0, 10.0]), 0.5);
    }

    #[test]
    fn curve_has_one_entry_per_iterate_and_starts_at_initial_distance() {
        let inst = SyntheticInstance::standard(1);
        let problem = inst.problem().unwrap();
        let w_star = Array1::zeros(inst.dimension());
        let spec = CurveSpec {
            policy: StepsizePolicy::Variable { mu0: 1.0 },
            tolerance: ToleranceSchedule::Theory,
            batch_size: 2,
            iterations: 7,
        };
        let w0 = Array1::from_elem(inst.dimension(), 0.5);
        let curve = error_curve(&problem, w_star.view(), w0, &spec, 3, &Sgdm).unwrap();
        assert_eq!(curve.len(), 8);
        assert!((curve[0] - 0.25 * inst.dimension() as f64).abs() < 1e-12);
        let mean = mean_error_curve(&problem, w_star.view(), |_| Array1::from_elem(20, 0.5), &spec, &[3, 3], &Sgdm).unwrap();
        assert_eq!(mean, curve);
    }
}
