//! Workload preparation, reference solutions and the multi-seed run grid.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use ndarray::Array1;
use rayon::prelude::*;
use spgm::apps::sparse::{generate_instance, GenerationParams, SparseRepInstance};
use spgm::apps::svm::{
    accuracy, build_bow_features, mean_hinge, read_labeled_text, read_sparse, svm_problem, synthetic_corpus, SvmDataset,
};
use spgm::diagnostics::{estimate_diagnostics, Diagnostics};
use spgm::linalg::dist_sq;
use spgm::prox::solver_by_name;
use spgm::reference::{compute_reference, ReferenceOptions, ReferenceSolution};
use spgm::{
    method_by_name, mixed_switch_point, run, CompositeProblem, DualSolver, IterateRecord, RunSpec, StepsizePolicy, StopReason,
    StopRule,
};

use crate::cache::{CacheStatus, ContentHasher, ReferenceCache};
use crate::config::{Application, DatasetFormat, ExperimentConfig, PolicyChoice, StartPoint};
use crate::error::{BenchError, Result};
use crate::record::{seed_average, write_rows, RunRow, INNER_FAILURE};

#[derive(Debug, Clone)]
pub enum Workload {
    Svm { train: SvmDataset, test: SvmDataset },
    Sparse(SparseRepInstance),
}

/// A workload with its composite problem and reference solution.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub workload: Workload,
    pub problem: CompositeProblem,
    pub instance_hash: String,
    pub reference: ReferenceSolution,
    pub cache_status: CacheStatus,
    pub solver: Arc<dyn DualSolver>,
}

fn dataset_error(path: &Path, e: impl ToString) -> BenchError {
    BenchError::Dataset {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn load_svm(cfg: &ExperimentConfig) -> Result<SvmDataset> {
    let Some(path) = &cfg.dataset else {
        let corpus = synthetic_corpus(cfg.samples, cfg.vocab, cfg.margin, cfg.data_seed);
        return Ok(build_bow_features(&corpus, cfg.vocab)?);
    };
    let reader = BufReader::new(File::open(path).map_err(|e| dataset_error(path, e))?);
    let data = match cfg.dataset_format {
        DatasetFormat::Text => {
            let corpus = read_labeled_text(reader).map_err(|e| dataset_error(path, e))?;
            build_bow_features(&corpus, cfg.vocab).map_err(|e| dataset_error(path, e))?
        }
        DatasetFormat::Sparse => read_sparse(reader, None).map_err(|e| dataset_error(path, e))?,
    };
    if data.len() < 2 {
        return Err(dataset_error(path, "fewer than two examples"));
    }
    Ok(data)
}

fn load_sparse(cfg: &ExperimentConfig) -> Result<SparseRepInstance> {
    match &cfg.dataset {
        Some(path) => {
            let reader = BufReader::new(File::open(path).map_err(|e| dataset_error(path, e))?);
            SparseRepInstance::load(reader).map_err(|e| dataset_error(path, e))
        }
        None => Ok(generate_instance(GenerationParams {
            seed: cfg.data_seed,
            m: cfg.m,
            n: cfg.n,
            p: cfg.p,
            lambda: cfg.lambda_or_default(),
            alpha: cfg.alpha,
            sparsity: cfg.sparsity,
            noise: cfg.noise,
        })?),
    }
}

/// Loads or generates the workload and builds its problem, without a reference.
pub fn load_workload(cfg: &ExperimentConfig) -> Result<(Workload, CompositeProblem, String)> {
    let mut hasher = ContentHasher::new();
    let (workload, problem) = match cfg.application {
        Application::Svm => {
            let data = load_svm(cfg)?;
            let (train, test) = data.split(cfg.train_fraction, cfg.data_seed)?;
            let lambda = cfg.lambda_or_default();
            let problem = svm_problem(&train, lambda)?;
            hasher
                .tag("svm")
                .matrix(train.features.view())
                .vector(train.labels.view())
                .scalar(lambda);
            (Workload::Svm { train, test }, problem)
        }
        Application::Sparse => {
            let instance = load_sparse(cfg)?;
            let problem = instance.problem()?;
            hasher
                .tag("sparse")
                .matrix(instance.dictionary.view())
                .vector(instance.observation.view())
                .matrix(instance.operator.view())
                .scalar(instance.lambda)
                .scalar(instance.alpha);
            (Workload::Sparse(instance), problem)
        }
    };
    let options = ReferenceOptions::default();
    hasher
        .tag(&cfg.solver)
        .scalar(options.tolerance)
        .count(options.max_iterations as u64);
    Ok((workload, problem, hasher.finish()))
}

/// The workload with its reference, taken from `cache` when present.
pub fn prepare(cfg: &ExperimentConfig, cache: &ReferenceCache) -> Result<Prepared> {
    let solver = solver_by_name(&cfg.solver)?;
    let (workload, problem, instance_hash) = load_workload(cfg)?;
    let (reference, cache_status) = cache.get_or_compute(&instance_hash, || {
        info!("computing reference for {instance_hash}");
        Ok(compute_reference(&problem, None, &ReferenceOptions::default(), solver.as_ref())?)
    })?;
    info!(
        "reference {} ({}), {} iterations, gradient mapping {:.3e}",
        instance_hash,
        cache_status.name(),
        reference.iterations,
        reference.gradient_mapping
    );
    Ok(Prepared {
        workload,
        problem,
        instance_hash,
        reference,
        cache_status,
        solver,
    })
}

impl Prepared {
    pub fn diagnostics(&self) -> Result<Diagnostics> {
        Ok(estimate_diagnostics(
            &self.problem,
            self.reference.w.view(),
            Some(self.reference.dual.view()),
        )?)
    }
}

/// Standard normal start drawn from the stream seeded with `1000 + seed`.
pub fn gaussian_start(seed: u64, dimension: usize) -> Array1<f64> {
    let mut rng = spgm::seeded_rng(1000 + seed);
    Array1::from_shape_fn(dimension, |_| spgm::standard_normal(&mut rng))
}

pub fn start_point(cfg: &ExperimentConfig, seed: u64, dimension: usize) -> Array1<f64> {
    match cfg.start {
        StartPoint::Zeros => Array1::zeros(dimension),
        StartPoint::Gaussian => gaussian_start(seed, dimension),
    }
}

/// Per-seed quantities derived from the start point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedPlan {
    pub seed: u64,
    pub r0_sq: f64,
    pub policy: StepsizePolicy,
    /// `(K / (sigma_f mu0)) ln(2 r0^2 / eps^2)` for the constant policy with a target.
    pub constant_horizon: Option<f64>,
}

pub fn plan_seed(cfg: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<SeedPlan> {
    let p = &prepared.problem;
    let w0 = start_point(cfg, seed, p.dimension());
    let r0_sq = dist_sq(w0.view(), prepared.reference.w.view());
    let mu0 = cfg.mu0.unwrap_or(1.0 / p.strong_convexity);
    if !mu0.is_finite() {
        return Err(BenchError::Invalid("sigma_f is zero; set mu0 explicitly".into()));
    }
    let mut constant_horizon = None;
    let policy = match cfg.policy {
        PolicyChoice::Variable => StepsizePolicy::Variable { mu0 },
        PolicyChoice::Constant => {
            let run_length = cfg.run_length.or(cfg.max_iter).unwrap_or(1).max(1);
            if let Some(eps) = cfg.eps {
                constant_horizon =
                    Some(run_length as f64 / (p.strong_convexity * mu0) * (2.0 * r0_sq / (eps * eps)).ln());
            }
            StepsizePolicy::Constant { mu0, run_length }
        }
        PolicyChoice::Mixed => {
            let switch = match cfg.switch {
                Some(s) => s,
                None => {
                    let eps = cfg.eps.expect("validated: mixed needs switch or eps");
                    mixed_switch_point(p.lipschitz, p.strong_convexity, mu0, eps * eps, r0_sq.max(f64::MIN_POSITIVE))?
                }
            };
            StepsizePolicy::Mixed { mu0, switch }
        }
    };
    Ok(SeedPlan {
        seed,
        r0_sq,
        policy,
        constant_horizon,
    })
}

/// Outcome of one `(method, N, seed)` run.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub method: String,
    pub batch_size: usize,
    pub seed: u64,
    pub rows: Vec<RunRow>,
    pub iterations: usize,
    pub outer_samples: u64,
    pub inner_samples: u64,
    pub inner_failures: usize,
    pub stop_reason: StopReason,
}

fn row_for(prepared: &Prepared, run_id: &str, method: &str, batch_size: usize, seed: u64, r: &IterateRecord) -> Result<RunRow> {
    let (acc, loss) = match &prepared.workload {
        Workload::Svm { train, test } => (Some(accuracy(test, r.w.view())), Some(mean_hinge(train, r.w.view()))),
        Workload::Sparse(_) => (None, None),
    };
    Ok(RunRow {
        run_id: run_id.to_string(),
        method: method.to_string(),
        batch_size,
        seed: Some(seed),
        k: r.k,
        time_s: r.elapsed,
        mu_k: r.mu,
        delta_k: r.delta,
        outer_samples: r.outer_samples as f64,
        inner_samples: r.inner_samples as f64,
        dist_sq: Some(dist_sq(r.w.view(), prepared.reference.w.view())),
        objective: Some(prepared.problem.empirical_objective(r.w.view())?),
        accuracy: acc,
        loss,
        inner_iters: r.inner_iterations.map(|i| i as f64),
        certificate: r.certificate,
        flag: if r.inner_failure { INNER_FAILURE.to_string() } else { String::new() },
    })
}

pub fn run_cell(cfg: &ExperimentConfig, prepared: &Prepared, plan: &SeedPlan, method: &str, batch_size: usize) -> Result<CellRun> {
    let outer = method_by_name(method, prepared.solver.clone())?;
    let stop = StopRule {
        max_iterations: cfg.max_iter,
        distance: cfg.eps.map(|e| (prepared.reference.w.clone(), e)),
        sample_budget: cfg.sample_budget,
    };
    let mut spec = RunSpec::new(plan.policy, batch_size, stop, plan.seed);
    spec.tolerance = cfg.tolerance;
    spec.stride = cfg.stride;
    spec.on_failure = cfg.on_failure;
    let w0 = start_point(cfg, plan.seed, prepared.problem.dimension());
    let t = match run(&prepared.problem, w0, &spec, outer.as_ref()) {
        Ok(t) => t,
        Err(e @ spgm::Error::StepFailed { .. }) => {
            return Err(BenchError::InnerFailure(format!("{method} N={batch_size} seed={}: {e}", plan.seed)))
        }
        Err(e) => return Err(e.into()),
    };
    let run_id = format!("{method}_N{batch_size}_s{}", plan.seed);
    let rows = t
        .records
        .iter()
        .map(|r| row_for(prepared, &run_id, method, batch_size, plan.seed, r))
        .collect::<Result<_>>()?;
    Ok(CellRun {
        method: method.to_string(),
        batch_size,
        seed: plan.seed,
        rows,
        iterations: t.iterations(),
        outer_samples: t.last.outer_samples,
        inner_samples: t.last.inner_samples,
        inner_failures: t.inner_failures,
        stop_reason: t.stop_reason,
    })
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub csv_files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub cells: Vec<CellRun>,
}

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::MaxIterations => "max_iterations",
        StopReason::Distance => "distance",
        StopReason::SampleBudget => "sample_budget",
    }
}

fn write_csv(path: &Path, rows: &[RunRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_rows(&mut out, rows)?;
    out.flush()?;
    Ok(())
}

/// Key-value lines shared by every manifest: config, instance and reference.
pub fn manifest_header(cfg: &ExperimentConfig, prepared: &Prepared) -> Vec<(String, String)> {
    let mut lines: Vec<(String, String)> =
        cfg.to_pairs().into_iter().map(|(k, v)| (format!("config.{k}"), v)).collect();
    let p = &prepared.problem;
    let r = &prepared.reference;
    lines.extend([
        ("instance_hash".to_string(), prepared.instance_hash.clone()),
        ("dimension".into(), p.dimension().to_string()),
        ("sample_count".into(), p.sample_count().to_string()),
        ("reference.cache".into(), prepared.cache_status.name().into()),
        ("reference.iterations".into(), r.iterations.to_string()),
        ("reference.gradient_mapping".into(), r.gradient_mapping.to_string()),
        ("reference.prox_certificate".into(), r.prox_certificate.to_string()),
        ("reference.objective".into(), p.empirical_objective(r.w.view()).map(|o| o.to_string()).unwrap_or_default()),
    ]);
    if let Workload::Svm { test, .. } = &prepared.workload {
        lines.push(("reference.test_accuracy".into(), accuracy(test, r.w.view()).to_string()));
    }
    lines
}

pub fn diagnostics_lines(d: &Diagnostics) -> Vec<(String, String)> {
    vec![
        ("diagnostics.sigma_sq".into(), d.sigma_sq.to_string()),
        ("diagnostics.s_hat".into(), d.s_hat.to_string()),
        ("diagnostics.lipschitz".into(), d.lipschitz.to_string()),
        ("diagnostics.strong_convexity".into(), d.strong_convexity.to_string()),
        ("diagnostics.mean_curvature".into(), d.mean_curvature.to_string()),
    ]
}

pub fn write_key_values(path: &Path, lines: &[(String, String)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (k, v) in lines {
        writeln!(out, "{k} = {v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Runs every `(method, N, seed)` cell in parallel and writes, under
/// `cfg.out`, `{method}_N{N}.csv` with the per-seed rows,
/// `{method}_N{N}_mean.csv` with their seed average, and `manifest.txt`.
pub fn run_experiment(cfg: &ExperimentConfig, cache: &ReferenceCache) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let prepared = prepare(cfg, cache)?;
    let diagnostics = prepared.diagnostics()?;
    let plans = cfg
        .seeds
        .iter()
        .map(|&s| plan_seed(cfg, &prepared, s))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs: Vec<(&str, usize, &SeedPlan)> = Vec::new();
    for m in &cfg.methods {
        for &n in &cfg.batch_sizes {
            jobs.extend(plans.iter().map(|p| (m.as_str(), n, p)));
        }
    }
    info!("running {} cells", jobs.len());
    let cells = jobs
        .par_iter()
        .map(|&(m, n, plan)| run_cell(cfg, &prepared, plan, m, n))
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&cfg.out)?;
    let mut groups: BTreeMap<(usize, usize), Vec<&CellRun>> = BTreeMap::new();
    for c in &cells {
        let mi = cfg.methods.iter().position(|m| *m == c.method).unwrap_or(0);
        groups.entry((mi, c.batch_size)).or_default().push(c);
    }
    let mut csv_files = Vec::new();
    for ((mi, n), group) in &groups {
        let stem = format!("{}_N{n}", cfg.methods[*mi]);
        let rows: Vec<RunRow> = group.iter().flat_map(|c| c.rows.iter().cloned()).collect();
        let path = cfg.out.join(format!("{stem}.csv"));
        write_csv(&path, &rows)?;
        csv_files.push(path);
        let path = cfg.out.join(format!("{stem}_mean.csv"));
        write_csv(&path, &seed_average(&format!("{stem}_mean"), &rows))?;
        csv_files.push(path);
    }

    let mut lines = manifest_header(cfg, &prepared);
    lines.extend(diagnostics_lines(&diagnostics));
    for plan in &plans {
        let s = plan.seed;
        lines.push((format!("seed.{s}.r0_sq"), plan.r0_sq.to_string()));
        if let StepsizePolicy::Mixed { switch, .. } = plan.policy {
            lines.push((format!("seed.{s}.switch"), switch.to_string()));
        }
        if let Some(t) = plan.constant_horizon {
            lines.push((format!("seed.{s}.constant_horizon"), t.to_string()));
        }
    }
    lines.push(("mu0".into(), plans[0].policy.mu0().to_string()));
    for c in &cells {
        let key = format!("cell.{}_N{}.seed.{}", c.method, c.batch_size, c.seed);
        lines.extend([
            (format!("{key}.iterations"), c.iterations.to_string()),
            (format!("{key}.outer_samples"), c.outer_samples.to_string()),
            (format!("{key}.inner_samples"), c.inner_samples.to_string()),
            (format!("{key}.inner_failures"), c.inner_failures.to_string()),
            (format!("{key}.stop"), stop_name(c.stop_reason).to_string()),
        ]);
    }
    let manifest = cfg.out.join("manifest.txt");
    write_key_values(&manifest, &lines)?;
    Ok(ExperimentOutput {
        csv_files,
        manifest,
        cells,
    })
}
