use ndarray::Array1;
use spgm::apps::sparse::{generate_instance, GenerationParams, SparseRepInstance};
use spgm::linalg::dist_sq;
use spgm::reference::{compute_reference, ReferenceOptions};
use spgm::{
    mixed_switch_point, run, CompositeProblem, DualSolver, OuterMethod, Result, RunSpec, StepsizePolicy, StopReason,
    StopRule, ToleranceSchedule,
};

use crate::gaussian_start;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Variable,
    Mixed,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Variable => "variable",
            PolicyKind::Mixed => "mixed",
        }
    }
}

/// Iterations-to-target grid on one generated sparse representation instance.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    pub params: GenerationParams,
    /// Stepsize scale; `1 / sigma_f` when absent.
    pub mu0: Option<f64>,
    /// Target on `||x - x*||`.
    pub eps: f64,
    pub seeds: Vec<u64>,
    pub batch_sizes: Vec<usize>,
    pub max_iterations: usize,
}

impl SparseGrid {
    /// The desk-scale experiment at regularisation `alpha`: `eps = 1e-3`,
    /// `N in {1, 10, 50, 100}`, five seeds.
    pub fn standard(alpha: f64) -> Self {
        SparseGrid {
            params: GenerationParams::standard(1, alpha),
            mu0: None,
            eps: 1e-3,
            seeds: (0..5).collect(),
            batch_sizes: vec![1, 10, 50, 100],
            max_iterations: 3_000_000,
        }
    }
}

/// A generated instance with its reference solution.
#[derive(Debug, Clone)]
pub struct SparseSetup {
    pub instance: SparseRepInstance,
    pub problem: CompositeProblem,
    pub reference: Array1<f64>,
    pub mu0: f64,
}

/// Iterations one run needed, or the cap when it never reached the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reach {
    pub iterations: usize,
    pub reached: bool,
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub policy: PolicyKind,
    pub method: String,
    pub batch_size: usize,
    /// One entry per seed, in the grid's seed order.
    pub runs: Vec<Reach>,
}

impl GridCell {
    pub fn iterations(&self) -> Vec<usize> {
        self.runs.iter().map(|r| r.iterations).collect()
    }

    pub fn median_iterations(&self) -> f64 {
        crate::median(&self.runs.iter().map(|r| r.iterations as f64).collect::<Vec<_>>())
    }

    pub fn all_reached(&self) -> bool {
        self.runs.iter().all(|r| r.reached)
    }
}

impl SparseGrid {
    pub fn setup(&self, solver: &dyn DualSolver) -> Result<SparseSetup> {
        let instance = generate_instance(self.params)?;
        let problem = instance.problem()?;
        let reference = compute_reference(&problem, None, &ReferenceOptions::default(), solver)?.w;
        let mu0 = self.mu0.unwrap_or(1.0 / problem.strong_convexity);
        Ok(SparseSetup {
            instance,
            problem,
            reference,
            mu0,
        })
    }

    /// The policy for run `seed`; the mixed constant phase is sized from
    /// that run's own `r0^2` and the squared target `eps^2`.
    pub fn policy(&self, setup: &SparseSetup, kind: PolicyKind, seed: u64) -> Result<StepsizePolicy> {
        Ok(match kind {
            PolicyKind::Variable => StepsizePolicy::Variable { mu0: setup.mu0 },
            PolicyKind::Mixed => {
                let w0 = gaussian_start(seed, setup.problem.dimension());
                let r0_sq = dist_sq(w0.view(), setup.reference.view());
                let p = &setup.problem;
                let switch = mixed_switch_point(p.lipschitz, p.strong_convexity, setup.mu0, self.eps * self.eps, r0_sq)?;
                StepsizePolicy::Mixed { mu0: setup.mu0, switch }
            }
        })
    }

    pub fn reach(
        &self,
        setup: &SparseSetup,
        kind: PolicyKind,
        method: &dyn OuterMethod,
        batch_size: usize,
        seed: u64,
    ) -> Result<Reach> {
        let stop = StopRule {
            max_iterations: Some(self.max_iterations),
            distance: Some((setup.reference.clone(), self.eps)),
            sample_budget: None,
        };
        let mut spec = RunSpec::new(self.policy(setup, kind, seed)?, batch_size, stop, seed);
        spec.tolerance = ToleranceSchedule::Theory;
        spec.stride = usize::MAX;
        let w0 = gaussian_start(seed, setup.problem.dimension());
        let t = run(&setup.problem, w0, &spec, method)?;
        Ok(Reach {
            iterations: t.iterations(),
            reached: t.stop_reason == StopReason::Distance,
        })
    }

    /// One cell per (policy, method, batch size), in that nesting order.
    pub fn run_grid(
        &self,
        setup: &SparseSetup,
        policies: &[PolicyKind],
        methods: &[&dyn OuterMethod],
    ) -> Result<Vec<GridCell>> {
        let mut cells = Vec::new();
        for &kind in policies {
            for &method in methods {
                for &n in &self.batch_sizes {
                    let runs = self.seeds.iter().map(|&s| self.reach(setup, kind, method, n, s)).collect::<Result<_>>()?;
                    cells.push(GridCell {
                        policy: kind,
                        method: method.name().to_string(),
                        batch_size: n,
                        runs,
                    });
                }
            }
        }
        Ok(cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spgm::prox::CoordinateAscent;
    use spgm::Spgm;

    fn tiny() -> SparseGrid {
        SparseGrid {
            params: GenerationParams {
                seed: 2,
                m: 40,
                n: 10,
                p: 40,
                lambda: 1e-2,
                alpha: 0.7,
                sparsity: 3,
                noise: 1e-3,
            },
            mu0: None,
            eps: 1e-2,
            seeds: vec![0, 1],
            batch_sizes: vec![1, 8],
            max_iterations: 200_000,
        }
    }

    #[test]
    fn grid_reaches_target_and_reports_every_cell() {
        let grid = tiny();
        let setup = grid.setup(&CoordinateAscent::default()).unwrap();
        assert!((setup.mu0 - 1.0 / 0.7).abs() < 1e-12);
        let spgm = Spgm::default();
        let cells = grid.run_grid(&setup, &[PolicyKind::Variable, PolicyKind::Mixed], &[&spgm]).unwrap();
        assert_eq!(cells.len(), 4);
        for c in &cells {
            assert!(c.all_reached(), "{:?}", c);
            assert_eq!(c.runs.len(), 2);
        }
        assert_eq!(cells[0].policy, PolicyKind::Variable);
        assert_eq!(cells[3].batch_size, 8);
    }

    #[test]
    fn capped_runs_are_marked_unreached() {
        let mut grid = tiny();
        grid.max_iterations = 3;
        let setup = grid.setup(&CoordinateAscent::default()).unwrap();
        let r = grid.reach(&setup, PolicyKind::Variable, &Spgm::default(), 1, 0).unwrap();
        assert_eq!(r, Reach { iterations: 3, reached: false });
    }

    #[test]
    fn mixed_switch_is_sized_from_the_runs_start() {
        let grid = tiny();
        let setup = grid.setup(&CoordinateAscent::default()).unwrap();
        let StepsizePolicy::Mixed { switch, .. } = grid.policy(&setup, PolicyKind::Mixed, 0).unwrap() else {
            panic!("expected a mixed policy")
        };
        let w0 = gaussian_start(0, 10);
        let r0_sq = dist_sq(w0.view(), setup.reference.view());
        let p = &setup.problem;
        let raw = 4.0 * p.lipschitz / (setup.mu0 * p.strong_convexity) * (2.0 * r0_sq / 1e-4).ln();
        assert!((switch as f64 - raw.ceil()).abs() <= 1.0);
    }
}
