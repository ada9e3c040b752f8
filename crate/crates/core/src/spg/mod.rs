//! The SPG-M outer loop, stepsize policies and the minibatch SGD baseline.

mod method;
mod run;
mod state;
mod stepsize;
mod tolerance;

pub use method::{method_by_name, method_names, sgdm_step, spgm_step, OuterMethod, Sgdm, Spgm};
pub use run::{run, FailurePolicy, IterateRecord, RunSpec, StopReason, StopRule, Trajectory};
pub use state::SolverState;
pub use stepsize::{mixed_switch_point, StepsizePolicy};
pub use tolerance::ToleranceSchedule;

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use ndarray::{array, Array2};

    use super::*;
    use crate::problem::{CenteredQuadratic, CompositeProblem, LinearComposition, ScalarLoss, ZeroTerm};
    use crate::prox::{soft_threshold, FastGradient};

    fn one_dim() -> CompositeProblem {
        let f = CenteredQuadratic {
            centers: array![[3.0]],
            curvature: 1.0,
        };
        let h = LinearComposition::new(Array2::ones((1, 1)), ScalarLoss::abs());
        CompositeProblem::new(Arc::new(f), Arc::new(h), 1.0, 1.0).unwrap()
    }

    #[test]
    fn one_step_on_one_dimensional_problem() {
        let p = one_dim();
        let policy = StepsizePolicy::Constant { mu0: 0.25, run_length: 2 };
        let state = SolverState::new(array![0.0], 1);
        let next = spgm_step(&p, state, &policy, &ToleranceSchedule::Exact, 1, &FastGradient::default()).unwrap();
        assert_eq!(next.k, 1);
        assert!((next.w[0] - soft_threshold(0.75, 0.25)).abs() < 1e-15);
        assert_eq!(next.w[0], 0.5);
        assert_eq!(next.outer_samples, 1);
        assert_eq!(next.inner_samples, 1);
    }

    #[test]
    fn sgdm_is_stationary_at_optimum() {
        let f = CenteredQuadratic {
            centers: array![[0.0]],
            curvature: 1.0,
        };
        let h = LinearComposition::new(Array2::ones((1, 1)), ScalarLoss::abs());
        let p = CompositeProblem::new(Arc::new(f), Arc::new(h), 1.0, 1.0).unwrap();
        for mu0 in [0.01, 0.1, 1.0] {
            let policy = StepsizePolicy::Variable { mu0 };
            let next = sgdm_step(&p, SolverState::new(array![0.0], 3), &policy, 1).unwrap();
            assert_eq!(next.w[0], 0.0);
        }
    }

    #[test]
    fn max_iter_zero_keeps_initial_state() {
        let p = one_dim();
        let spec = RunSpec::new(StepsizePolicy::Variable { mu0: 0.1 }, 1, StopRule::max_iterations(0), 7);
        let t = run(&p, array![1.5], &spec, &Spgm::default()).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].k, 0);
        assert_eq!(t.records[0].w, array![1.5]);
    }

    #[test]
    fn empty_stop_rule_is_rejected() {
        let p = one_dim();
        let spec = RunSpec::new(StepsizePolicy::Variable { mu0: 0.1 }, 1, StopRule::default(), 7);
        assert!(matches!(run(&p, array![0.0], &spec, &Spgm::default()), Err(crate::Error::InvalidArgument(_))));
        let bad = StopRule {
            distance: Some((array![2.0], 0.0)),
            ..Default::default()
        };
        let spec = RunSpec::new(StepsizePolicy::Variable { mu0: 0.1 }, 1, bad, 7);
        assert!(run(&p, array![0.0], &spec, &Spgm::default()).is_err());
    }

    #[test]
    fn distance_rule_stops_near_reference() {
        let p = one_dim();
        let stop = StopRule {
            max_iterations: Some(10_000),
            distance: Some((array![2.0], 1e-3)),
            sample_budget: None,
        };
        let spec = RunSpec::new(StepsizePolicy::Constant { mu0: 0.25, run_length: 2 }, 1, stop, 0);
        let t = run(&p, array![0.0], &spec, &Spgm::default()).unwrap();
        assert_eq!(t.stop_reason, StopReason::Distance);
        assert!((t.last.w[0] - 2.0).abs() <= 1e-3);
    }

    #[test]
    fn sample_budget_counts_inner_samples() {
        let p = one_dim();
        let stop = StopRule {
            sample_budget: Some(10),
            ..Default::default()
        };
        let spec = RunSpec::new(StepsizePolicy::Variable { mu0: 0.1 }, 1, stop, 0);
        let t = run(&p, array![0.0], &spec, &Spgm::default()).unwrap();
        assert_eq!(t.stop_reason, StopReason::SampleBudget);
        assert_eq!(t.iterations(), 5);
    }

    #[test]
    fn stride_thins_records() {
        let p = one_dim();
        let mut spec = RunSpec::new(StepsizePolicy::Variable { mu0: 0.1 }, 1, StopRule::max_iterations(10), 0);
        spec.stride = 4;
        let t = run(&p, array![0.0], &spec, &Spgm::default()).unwrap();
        let ks: Vec<usize> = t.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![0, 4, 8, 10]);
    }

    #[test]
    fn zero_nonsmooth_matches_sgd_bitwise() {
        let f = CenteredQuadratic {
            centers: array![[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]],
            curvature: 1.0,
        };
        let h = ZeroTerm { dimension: 2, samples: 3 };
        let p = CompositeProblem::new(Arc::new(f), Arc::new(h), 1.0, 1.0).unwrap();
        let policy = StepsizePolicy::Variable { mu0: 0.2 };
        let mut a = SolverState::new(array![5.0, -5.0], 11);
        let mut b = a.clone();
        for _ in 0..20 {
            a = spgm_step(&p, a, &policy, &ToleranceSchedule::Theory, 2, &FastGradient::default()).unwrap();
            b = sgdm_step(&p, b, &policy, 2).unwrap();
            assert_eq!(a.w, b.w);
        }
    }

    #[test]
    fn registry_lookup() {
        let solver: Arc<dyn crate::DualSolver> = Arc::new(FastGradient::default());
        assert_eq!(method_by_name("spgm", solver.clone()).unwrap().name(), "spgm");
        assert_eq!(method_by_name("sgdm", solver.clone()).unwrap().name(), "sgdm");
        assert!(method_by_name("adam", solver).is_err());
    }
}
