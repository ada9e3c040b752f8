//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::error::Error;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::instances::{oracle_for, random_instance, Kind};
use common::{max_abs_diff, soft, switch_point_oracle};
use ndarray::{Array1, Array2};
use rand::Rng as _;
use spgm::diagnostics::estimate_diagnostics;
use spgm::problem::{BoxIndicator, LeastSquaresRidge, LinearComposition, ScalarLoss, ScaledSquaredNorm, SeparableConjugate, ZeroTerm};
use spgm::prox::{build_dual, CoordinateAscent, FastGradient, ProjectedGradient};
use spgm::reference::{compute_reference, ReferenceOptions};
use spgm::synthetic::SyntheticInstance;
use spgm::{
    mixed_switch_point, prox, seeded_rng, sgdm_step, spgm_step, standard_normal, CompositeProblem, DualSolver, Minibatch,
    Sgdm, SolverState, Spgm, StepsizePolicy, ToleranceSchedule,
};
use spgm_validation::curves::{error_curve, mean_error_curve, relative_deviation, CurveSpec};
use spgm_validation::sparse::{GridCell, PolicyKind, SparseGrid};
use spgm_validation::svm::SvmRace;
use spgm_validation::gaussian_start;

type Check = Result<Verdict, Box<dyn Error>>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Check {
    Ok(Verdict { pass, detail })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("dual solvers match the enumeration oracle", prox_oracle_equivalence),
        ("closed-form proxes", closed_forms),
        ("reduction identities", reductions),
        ("one-step recurrence bound", recurrence),
        ("constant-stepsize plateau scales like 1/N", plateau),
        ("variable-stepsize O(1/k) decay", variable_decay),
        ("sparse representation iterations to target", sparse_grids),
        ("SPG-M against SGD on sparse representation", sparse_versus_sgd),
        ("SVM pipeline sample counts", svm_pipeline),
        ("mixed-policy switch point", switch_point),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => Verdict {
                pass: false,
                detail: format!("error: {e}"),
            },
            Err(_) => Verdict {
                pass: false,
                detail: "panicked".into(),
            },
        };
        if outcome.pass {
            passed += 1;
        }
        println!(
            "criterion {:>2}: {} {name} [{:.1}s] {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn prox_oracle_equivalence() -> Check {
    let start = Instant::now();
    let kinds = [Kind::Hinge, Kind::AbsComposition, Kind::SeparableL1];
    let solvers: [&dyn DualSolver; 2] = [&FastGradient::default(), &ProjectedGradient::default()];
    let mut rng = seeded_rng(2024);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let inst = random_instance(&mut rng, kinds[t % 3]);
        let exact = oracle_for(&inst);
        let dual = build_dual(inst.h.as_ref(), inst.w.view(), &inst.batch, inst.mu)?;
        for solver in solvers {
            let r = solver.solve(&dual, 1e-7, None)?;
            worst = worst.max(max_abs_diff(&r.primal, &exact));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-6 && secs < 10.0, format!("max deviation {worst:.2e} (limit 1e-6), {secs:.2}s (limit 10s)"))
}

fn closed_forms() -> Check {
    let mut rng = seeded_rng(77);
    let (mut l1_err, mut box_err) = (0.0f64, 0.0f64);
    let solver = FastGradient::default();
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=6);
        let mu = rng.random_range(0.01..3.0);
        let w = Array1::from_shape_fn(n, |_| 3.0 * standard_normal(&mut rng));
        let sample = rng.random_range(0..m);
        let batch = Minibatch::from_indices(vec![sample])?;

        let weights = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..2.0));
        let l1 = SeparableConjugate::weighted_l1(weights.clone(), Array2::zeros((m, n)));
        let z = prox(&l1, w.view(), &batch, mu, 1e-12, &solver, None)?.primal;
        let expected = Array1::from_shape_fn(n, |i| soft(w[i], mu * weights[(sample, i)]));
        l1_err = l1_err.max(max_abs_diff(&z, &expected));

        let lower = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..0.5));
        let upper = Array1::from_shape_fn(n, |i| lower[i] + rng.random_range(0.0..2.5));
        let indicator = BoxIndicator {
            lower: lower.clone(),
            upper: upper.clone(),
            samples: m,
        };
        let z = prox(&indicator, w.view(), &batch, mu, 1e-12, &solver, None)?.primal;
        let expected = Array1::from_shape_fn(n, |i| if w[i] < lower[i] { lower[i] } else if w[i] > upper[i] { upper[i] } else { w[i] });
        box_err = box_err.max(max_abs_diff(&z, &expected));
    }
    verdict(
        l1_err <= 1e-10 && box_err <= 1e-10,
        format!("1000 points: soft-threshold deviation {l1_err:.1e}, projection deviation {box_err:.1e} (limit 1e-10)"),
    )
}

fn reductions() -> Check {
    let solver = FastGradient::default();
    // h == 0: SPG-M against minibatch SGD
    let mut rng = seeded_rng(5);
    let (m, n) = (64, 6);
    let rows = Array2::from_shape_simple_fn((m, n), || standard_normal(&mut rng) / (n as f64).sqrt());
    let targets = Array1::from_shape_simple_fn(m, || standard_normal(&mut rng));
    let f = LeastSquaresRidge::new(rows, targets, 0.1);
    let lipschitz = f.per_sample_lipschitz();
    let smooth_only = CompositeProblem::new(Arc::new(f), Arc::new(ZeroTerm { dimension: n, samples: m }), lipschitz, 0.1)?;
    let policy = StepsizePolicy::Variable { mu0: 0.5 };
    let mut sgd_gap = 0.0f64;
    for big_n in [1, 4, 32] {
        let mut a = SolverState::new(Array1::from_elem(n, 0.3), 9);
        let mut b = a.clone();
        for _ in 0..50 {
            a = spgm_step(&smooth_only, a, &policy, &ToleranceSchedule::Exact, big_n, &solver)?;
            b = sgdm_step(&smooth_only, b, &policy, big_n)?;
            sgd_gap = sgd_gap.max(max_abs_diff(&a.w, &b.w));
        }
    }
    // f == 0 and h(w; xi) = lambda |w_{xi mod d}|: the minibatch proximal point
    // soft-thresholds each coordinate by its share of the batch
    let (m, d, lambda) = (12, 4, 0.4);
    let selectors = Array2::from_shape_fn((m, d), |(i, j)| if i % d == j { lambda } else { 0.0 });
    let h = LinearComposition::new(selectors, ScalarLoss::abs());
    let f = ScaledSquaredNorm {
        lambda: 0.0,
        dimension: d,
        samples: m,
    };
    let nonsmooth_only = CompositeProblem::new(Arc::new(f), Arc::new(h), 1.0, 0.0)?;
    let policy = StepsizePolicy::Constant { mu0: 1.0, run_length: 10 };
    let mut pp_gap = 0.0f64;
    for big_n in [1, 4, 32] {
        let mut state = SolverState::new(Array1::from_vec(vec![0.9, -0.4, 0.05, -1.3]), 4);
        for _ in 0..8 {
            let mu = policy.stepsize(state.k, 1.0);
            let mut probe = state.rng.clone();
            let batch = Minibatch::sample(&mut probe, m, big_n)?;
            let mut counts = vec![0usize; d];
            for &i in batch.indices() {
                counts[i % d] += 1;
            }
            let expected = Array1::from_shape_fn(d, |j| soft(state.w[j], mu * lambda * counts[j] as f64 / big_n as f64));
            state = spgm_step(&nonsmooth_only, state, &policy, &ToleranceSchedule::Exact, big_n, &solver)?;
            pp_gap = pp_gap.max(max_abs_diff(&state.w, &expected));
        }
    }
    verdict(
        sgd_gap <= 1e-12 && pp_gap <= 1e-12,
        format!("N in {{1,4,32}}: |SPG-M - SGD| {sgd_gap:.1e}, |SPG-M - proximal point| {pp_gap:.1e} (limit 1e-12)"),
    )
}

struct Synthetic {
    problem: CompositeProblem,
    w_star: Array1<f64>,
    sigma_sq: f64,
}

fn synthetic() -> Result<Synthetic, Box<dyn Error>> {
    let inst = SyntheticInstance::standard(0);
    let problem = inst.problem()?;
    let reference = compute_reference(&problem, None, &ReferenceOptions::default(), &CoordinateAscent::default())?;
    let diagnostics = estimate_diagnostics(&problem, reference.w.view(), Some(reference.dual.view()))?;
    Ok(Synthetic {
        problem,
        w_star: reference.w,
        sigma_sq: diagnostics.sigma_sq,
    })
}

fn recurrence() -> Check {
    let start = Instant::now();
    let s = synthetic()?;
    let p = &s.problem;
    let sigma = p.strong_convexity;
    let seeds: Vec<u64> = (0..1000).collect();
    let (mut held, mut total) = (0, 0);
    for big_n in [1, 4] {
        let spec = CurveSpec {
            policy: StepsizePolicy::Variable { mu0: 1.0 / sigma },
            tolerance: ToleranceSchedule::Exact,
            batch_size: big_n,
            iterations: 100,
        };
        let curve = mean_error_curve(p, s.w_star.view(), |seed| gaussian_start(seed, p.dimension()), &spec, &seeds, &Spgm::default())?;
        for k in 0..spec.iterations {
            let mu = spec.policy.stepsize(k, p.lipschitz);
            let delta = spec.tolerance.tolerance(mu, big_n);
            let bound = (1.0 - sigma * mu / 2.0) * curve[k]
                + mu * mu * s.sigma_sq / big_n as f64
                + (3.0 + 2.0 / (sigma * mu)) * delta * delta;
            total += 1;
            if curve[k + 1] <= bound {
                held += 1;
            }
        }
    }
    let share = held as f64 / total as f64;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        share >= 0.95 && secs < 60.0,
        format!("bound held on {held}/{total} iterations ({:.1}%, need 95%), N in {{1,4}}, 1000 seeds, {secs:.1}s (limit 60s)", 100.0 * share),
    )
}

fn plateau() -> Check {
    let s = synthetic()?;
    let p = &s.problem;
    let iterations = 400;
    let mu = StepsizePolicy::cap(p.lipschitz);
    let seeds: Vec<u64> = (0..200).collect();
    let mut levels = Vec::new();
    for big_n in [1, 16] {
        let spec = CurveSpec {
            policy: StepsizePolicy::Constant {
                mu0: mu * iterations as f64 / 2.0,
                run_length: iterations,
            },
            tolerance: ToleranceSchedule::Exact,
            batch_size: big_n,
            iterations,
        };
        let curve = mean_error_curve(p, s.w_star.view(), |_| s.w_star.clone(), &spec, &seeds, &Spgm::default())?;
        let window = &curve[iterations / 2..];
        levels.push(window.iter().sum::<f64>() / window.len() as f64);
    }
    let ratio = levels[1] / levels[0];
    verdict(
        (1.0 / 32.0..=0.25).contains(&ratio),
        format!(
            "plateau N=1 {:.3e}, N=16 {:.3e}, ratio {ratio:.4} (need [0.03125, 0.25]), mu = 1/(4L), 200 seeds from w*",
            levels[0], levels[1]
        ),
    )
}

fn variable_decay() -> Check {
    let s = synthetic()?;
    let p = &s.problem;
    let seeds: Vec<u64> = (0..500).collect();
    let mut at = Vec::new();
    for big_n in [1, 10] {
        let spec = CurveSpec {
            policy: StepsizePolicy::Variable { mu0: 1.0 / p.strong_convexity },
            tolerance: ToleranceSchedule::Theory,
            batch_size: big_n,
            iterations: 400,
        };
        let curve = mean_error_curve(p, s.w_star.view(), |seed| gaussian_start(seed, p.dimension()), &spec, &seeds, &Spgm::default())?;
        at.push((curve[200], curve[400]));
    }
    let ratio = at[0].1 / at[0].0;
    let ordered = at[1].0 < at[0].0 && at[1].1 < at[0].1;
    verdict(
        (0.35..=0.75).contains(&ratio) && ordered,
        format!(
            "N=1 error k=200 {:.3e}, k=400 {:.3e}, ratio {ratio:.3} (need [0.35, 0.75]); N=10 error k=200 {:.3e}, k=400 {:.3e} (ratio {:.3}); 500 seeds",
            at[0].0,
            at[0].1,
            at[1].0,
            at[1].1,
            at[1].1 / at[1].0
        ),
    )
}

fn strictly_decreasing(cells: &[&GridCell]) -> bool {
    cells.windows(2).all(|w| w[1].median_iterations() < w[0].median_iterations())
}

fn describe(cells: &[&GridCell]) -> String {
    cells
        .iter()
        .map(|c| format!("N={} median {}", c.batch_size, c.median_iterations()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn sparse_grids() -> Check {
    let spgm = Spgm::default();
    let mut pass = true;
    let mut details = Vec::new();
    for alpha in [0.2, 0.7] {
        let start = Instant::now();
        let grid = SparseGrid::standard(alpha);
        let setup = grid.setup(&CoordinateAscent::default())?;
        let cells = grid.run_grid(&setup, &[PolicyKind::Variable, PolicyKind::Mixed], &[&spgm])?;
        let secs = start.elapsed().as_secs_f64();
        let mut sums = Vec::new();
        for kind in [PolicyKind::Variable, PolicyKind::Mixed] {
            let row: Vec<&GridCell> = cells.iter().filter(|c| c.policy == kind).collect();
            let reached = row.iter().all(|c| c.all_reached());
            let decreasing = strictly_decreasing(&row);
            pass &= reached && decreasing;
            sums.push(row.iter().map(|c| c.median_iterations()).sum::<f64>());
            details.push(format!(
                "alpha={alpha} {}: {} [{}]",
                kind.name(),
                describe(&row),
                if !reached {
                    "cap hit"
                } else if decreasing {
                    "strictly decreasing"
                } else {
                    "not strictly decreasing"
                }
            ));
        }
        if alpha == 0.7 {
            let mixed_faster = sums[1] < sums[0];
            pass &= mixed_faster;
            details.push(format!(
                "alpha=0.7 summed medians mixed {} vs variable {} [{}]",
                sums[1],
                sums[0],
                if mixed_faster { "mixed fewer" } else { "mixed not fewer" }
            ));
        }
        pass &= secs < 300.0;
        details.push(format!("alpha={alpha} grid {secs:.1}s (limit 300s), mu0 = 1/sigma_f = {:.4}", setup.mu0));
    }
    verdict(pass, details.join("; "))
}

fn sparse_versus_sgd() -> Check {
    let grid = SparseGrid::standard(0.7);
    let setup = grid.setup(&CoordinateAscent::default())?;
    let spgm = Spgm::default();
    let mut good = 0;
    let mut details = Vec::new();
    for &seed in &grid.seeds {
        let a = grid.reach(&setup, PolicyKind::Variable, &spgm, 1, seed)?;
        let b = grid.reach(&setup, PolicyKind::Variable, &Sgdm, 1, seed)?;
        let ordered = a.reached && b.iterations > a.iterations;
        let curves = grid
            .batch_sizes
            .iter()
            .map(|&n| {
                let spec = CurveSpec {
                    policy: StepsizePolicy::Variable { mu0: setup.mu0 },
                    tolerance: ToleranceSchedule::Theory,
                    batch_size: n,
                    iterations: 100,
                };
                error_curve(&setup.problem, setup.reference.view(), gaussian_start(seed, setup.problem.dimension()), &spec, seed, &Sgdm)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut deviation = 0.0f64;
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                deviation = deviation.max(relative_deviation(&curves[i], &curves[j]));
            }
        }
        let clustered = deviation <= 0.2;
        if ordered && clustered {
            good += 1;
        }
        details.push(format!(
            "seed {seed}: N=1 iterations SGD {} vs SPG-M {} [{}], SGD curve deviation {:.1}% [{}]",
            b.iterations,
            a.iterations,
            if ordered { "SGD more" } else { "SGD not more" },
            100.0 * deviation,
            if clustered { "clustered" } else { "spread" }
        ));
    }
    details.push(format!("{good}/5 seeds hold both (need 4)"));
    verdict(good >= 4, details.join("; "))
}

fn svm_pipeline() -> Check {
    let race = SvmRace::default();
    let spgm = Spgm::default();
    let mut good = 0;
    let mut details = Vec::new();
    for seed in 0..5u64 {
        let setup = race.setup(seed, &CoordinateAscent::default())?;
        let mut wins = true;
        let mut parts = Vec::new();
        for n in [32, 128] {
            let r = race.race(&setup, &spgm, &Sgdm, n, seed)?;
            wins &= r.spgm_wins();
            let show = |h: Option<spgm_validation::svm::Hit>| match h {
                Some(h) => format!("{} (k={}, with inner {})", h.outer_samples, h.k, h.outer_samples + h.inner_samples),
                None => "never".into(),
            };
            parts.push(format!("N={n} SPG-M {} vs SGD {}", show(r.spgm), show(r.sgdm)));
        }
        if wins {
            good += 1;
        }
        details.push(format!(
            "seed {seed} (reference accuracy {:.4}): {} [{}]",
            setup.reference_accuracy,
            parts.join(", "),
            if wins { "SPG-M fewer" } else { "SPG-M not fewer" }
        ));
    }
    details.push(format!("{good}/5 seeds (need 4), samples counted as N*T"));
    verdict(good >= 4, details.join("; "))
}

fn switch_point() -> Check {
    let mut rng = seeded_rng(31);
    let mut exact = 0;
    let mut details = Vec::new();
    for _ in 0..20 {
        let l = rng.random_range(0.1..10.0);
        let sigma = rng.random_range(0.01..1.0) * l;
        let mu0 = rng.random_range(0.1..5.0);
        let eps = 10f64.powf(rng.random_range(-6.0..-1.0));
        let r0_sq = 10f64.powf(rng.random_range(-2.0..3.0));
        let (raw, ceil) = switch_point_oracle(l, sigma, mu0, eps, r0_sq);
        let got = mixed_switch_point(l, sigma, mu0, eps, r0_sq)? as f64;
        // within an ulp of an integer the two evaluation orders may round to
        // either side of it
        let near_integer = (raw - raw.round()).abs() <= 4.0 * f64::EPSILON * raw.abs().max(1.0);
        if got == ceil || (near_integer && (got - ceil).abs() <= 1.0) {
            exact += 1;
        } else {
            details.push(format!("mismatch {got} vs {ceil}"));
        }
    }
    details.insert(0, format!("{exact}/20 tuples agree with the direct evaluation"));
    verdict(exact == 20, details.join("; "))
}
