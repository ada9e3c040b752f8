use ndarray::Array1;
use spgm::apps::svm::{accuracy, build_bow_features, svm_problem, synthetic_corpus, SvmDataset};
use spgm::reference::{compute_reference, ReferenceOptions};
use spgm::{
    mixed_switch_point, run, CompositeProblem, DualSolver, FailurePolicy, OuterMethod, Result, RunSpec, StepsizePolicy,
    StopRule,
};

/// SPG-M against minibatch SGD on a synthetic separable bag-of-words corpus:
/// both start from zero under the same mixed policy and race to a test
/// accuracy within `accuracy_slack` of the reference solution's.
#[derive(Debug, Clone)]
pub struct SvmRace {
    pub samples: usize,
    /// Distinct words in the corpus; also the feature dimension.
    pub vocabulary: usize,
    pub margin: f64,
    pub lambda: f64,
    /// Stepsize scale; `1 / sigma_f = 1 / lambda` when absent.
    pub mu0: Option<f64>,
    /// Target on `||w - w*||^2` used to size the constant phase.
    pub eps: f64,
    pub train_fraction: f64,
    pub accuracy_slack: f64,
    pub max_iterations: usize,
}

impl Default for SvmRace {
    fn default() -> Self {
        SvmRace {
            samples: 2000,
            vocabulary: 50,
            margin: 0.05,
            lambda: 0.01,
            mu0: None,
            eps: 1e-3,
            train_fraction: 0.8,
            accuracy_slack: 0.01,
            max_iterations: 3000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmSetup {
    pub train: SvmDataset,
    pub test: SvmDataset,
    pub problem: CompositeProblem,
    pub reference: Array1<f64>,
    pub reference_accuracy: f64,
    pub policy: StepsizePolicy,
}

/// First retained iterate meeting the accuracy target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    pub k: usize,
    pub outer_samples: u64,
    pub inner_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceResult {
    pub batch_size: usize,
    pub spgm: Option<Hit>,
    pub sgdm: Option<Hit>,
}

impl RaceResult {
    /// SPG-M reached the target and did so with strictly fewer sample
    /// evaluations `N * T` than SGD (or SGD never reached it).
    pub fn spgm_wins(&self) -> bool {
        match (self.spgm, self.sgdm) {
            (Some(a), Some(b)) => a.outer_samples < b.outer_samples,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

impl SvmRace {
    /// Corpus, 80/20 split and reference for `seed`.
    pub fn setup(&self, seed: u64, solver: &dyn DualSolver) -> Result<SvmSetup> {
        let corpus = synthetic_corpus(self.samples, self.vocabulary, self.margin, seed);
        let data = build_bow_features(&corpus, self.vocabulary)?;
        let (train, test) = data.split(self.train_fraction, seed)?;
        let problem = svm_problem(&train, self.lambda)?;
        let reference = compute_reference(&problem, None, &ReferenceOptions::default(), solver)?.w;
        let reference_accuracy = accuracy(&test, reference.view());
        let mu0 = self.mu0.unwrap_or(1.0 / problem.strong_convexity);
        let r0_sq = reference.dot(&reference);
        let switch = mixed_switch_point(problem.lipschitz, problem.strong_convexity, mu0, self.eps, r0_sq)?;
        Ok(SvmSetup {
            train,
            test,
            problem,
            reference,
            reference_accuracy,
            policy: StepsizePolicy::Mixed { mu0, switch },
        })
    }

    /// First iterate of `method` whose test accuracy is within the slack.
    pub fn first_hit(&self, setup: &SvmSetup, method: &dyn OuterMethod, batch_size: usize, seed: u64) -> Result<Option<Hit>> {
        let mut spec = RunSpec::new(setup.policy, batch_size, StopRule::max_iterations(self.max_iterations), seed);
        spec.on_failure = FailurePolicy::Continue;
        let w0 = Array1::zeros(setup.problem.dimension());
        let t = run(&setup.problem, w0, &spec, method)?;
        let target = setup.reference_accuracy - self.accuracy_slack;
        Ok(t.records.iter().find(|r| accuracy(&setup.test, r.w.view()) >= target).map(|r| Hit {
            k: r.k,
            outer_samples: r.outer_samples,
            inner_samples: r.inner_samples,
        }))
    }

    pub fn race(
        &self,
        setup: &SvmSetup,
        spgm: &dyn OuterMethod,
        sgdm: &dyn OuterMethod,
        batch_size: usize,
        seed: u64,
    ) -> Result<RaceResult> {
        Ok(RaceResult {
            batch_size,
            spgm: self.first_hit(setup, spgm, batch_size, seed)?,
            sgdm: self.first_hit(setup, sgdm, batch_size, seed)?,
        })
    }
}
