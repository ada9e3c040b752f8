//! Experiment configuration in `key = value` text form.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Unknown or repeated keys are errors.

use std::path::PathBuf;
use std::str::FromStr;

use spgm::{FailurePolicy, ToleranceSchedule};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Application {
    Svm,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Constant,
    Variable,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartPoint {
    Zeros,
    /// Standard normal entries from the stream seeded with `1000 + seed`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `label<TAB>text` lines, turned into bag-of-words features.
    Text,
    /// `label idx:value ...` lines.
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub application: Application,
    pub methods: Vec<String>,
    pub batch_sizes: Vec<usize>,
    pub policy: PolicyChoice,
    /// Stepsize scale; `1 / sigma_f` when absent.
    pub mu0: Option<f64>,
    /// Run length `K` of the constant policy; the iteration cap when absent.
    pub run_length: Option<usize>,
    /// Length of the mixed policy's constant phase; derived from `eps` when absent.
    pub switch: Option<usize>,
    pub seeds: Vec<u64>,
    /// Target on `||w - w*||`.
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub sample_budget: Option<u64>,
    /// Dataset file; a synthetic instance is generated when absent.
    pub dataset: Option<PathBuf>,
    pub dataset_format: DatasetFormat,
    pub data_seed: u64,
    pub lambda: Option<f64>,
    /// SVM: corpus size of the synthetic corpus.
    pub samples: usize,
    /// SVM: vocabulary size, which is also the feature dimension.
    pub vocab: usize,
    pub margin: f64,
    pub train_fraction: f64,
    /// Sparse representation: data rows, atoms, operator rows.
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub sparsity: usize,
    pub noise: f64,
    pub solver: String,
    pub tolerance: ToleranceSchedule,
    pub on_failure: FailurePolicy,
    pub stride: usize,
    pub start: StartPoint,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            application: Application::Sparse,
            methods: vec!["spgm".into()],
            batch_sizes: vec![1],
            policy: PolicyChoice::Variable,
            mu0: None,
            run_length: None,
            switch: None,
            seeds: vec![0],
            eps: None,
            max_iter: Some(1000),
            sample_budget: None,
            dataset: None,
            dataset_format: DatasetFormat::Text,
            data_seed: 1,
            lambda: None,
            samples: 2000,
            vocab: 50,
            margin: 0.05,
            train_fraction: 0.8,
            m: 400,
            n: 200,
            p: 400,
            alpha: 0.7,
            sparsity: 20,
            noise: 1e-3,
            solver: "coordinate-ascent".into(),
            tolerance: ToleranceSchedule::Theory,
            on_failure: FailurePolicy::Abort,
            stride: 1,
            start: StartPoint::Zeros,
            out: PathBuf::from("results"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub batch_sizes: Option<Vec<usize>>,
    pub methods: Option<Vec<String>>,
    pub policy: Option<PolicyChoice>,
    pub mu0: Option<f64>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| BenchError::Config {
        line,
        message: format!("bad value `{value}` for `{key}`"),
    })
}

pub fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad list element `{s}`")))
        .collect()
}

impl FromStr for Application {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "svm" => Ok(Application::Svm),
            "sparse" => Ok(Application::Sparse),
            _ => Err(format!("unknown application `{s}` (svm, sparse)")),
        }
    }
}

impl FromStr for PolicyChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" => Ok(PolicyChoice::Constant),
            "variable" => Ok(PolicyChoice::Variable),
            "mixed" => Ok(PolicyChoice::Mixed),
            _ => Err(format!("unknown policy `{s}` (constant, variable, mixed)")),
        }
    }
}

impl Application {
    pub fn name(self) -> &'static str {
        match self {
            Application::Svm => "svm",
            Application::Sparse => "sparse",
        }
    }
}

impl PolicyChoice {
    pub fn name(self) -> &'static str {
        match self {
            PolicyChoice::Constant => "constant",
            PolicyChoice::Variable => "variable",
            PolicyChoice::Mixed => "mixed",
        }
    }
}

fn parse_tolerance(value: &str) -> Option<ToleranceSchedule> {
    match value {
        "theory" => Some(ToleranceSchedule::Theory),
        "exact" => Some(ToleranceSchedule::Exact),
        other => other.strip_prefix("fixed:").and_then(|v| v.parse().ok()).map(ToleranceSchedule::Fixed),
    }
}

fn tolerance_text(t: &ToleranceSchedule) -> String {
    match t {
        ToleranceSchedule::Theory => "theory".into(),
        ToleranceSchedule::Exact => "exact".into(),
        ToleranceSchedule::Fixed(d) => format!("fixed:{d}"),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn optional<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ExperimentConfig {
    /// Parses the text form, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| BenchError::Config {
                line,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(BenchError::Config {
                    line,
                    message: format!("`{key}` given twice"),
                });
            }
            cfg.set(key, value, line)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let list_err = |message: String| BenchError::Config { line, message };
        // an empty value clears an optional setting
        let opt = |value: &str| -> Result<Option<String>> { Ok((!value.is_empty()).then(|| value.to_string())) };
        match key {
            "application" => self.application = value.parse().map_err(list_err)?,
            "methods" => self.methods = parse_list(value).map_err(list_err)?,
            "batch_sizes" => self.batch_sizes = parse_list(value).map_err(list_err)?,
            "policy" => self.policy = value.parse().map_err(list_err)?,
            "mu0" => self.mu0 = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "run_length" => self.run_length = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "switch" => self.switch = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "seeds" => self.seeds = parse_list(value).map_err(list_err)?,
            "eps" => self.eps = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "max_iter" => self.max_iter = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "sample_budget" => self.sample_budget = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "dataset" => self.dataset = opt(value)?.map(PathBuf::from),
            "dataset_format" => {
                self.dataset_format = match value {
                    "text" => DatasetFormat::Text,
                    "sparse" => DatasetFormat::Sparse,
                    _ => return Err(list_err(format!("unknown dataset format `{value}` (text, sparse)"))),
                }
            }
            "data_seed" => self.data_seed = parse_value(key, value, line)?,
            "lambda" => self.lambda = opt(value)?.map(|v| parse_value(key, &v, line)).transpose()?,
            "samples" => self.samples = parse_value(key, value, line)?,
            "vocab" => self.vocab = parse_value(key, value, line)?,
            "margin" => self.margin = parse_value(key, value, line)?,
            "train_fraction" => self.train_fraction = parse_value(key, value, line)?,
            "m" => self.m = parse_value(key, value, line)?,
            "n" => self.n = parse_value(key, value, line)?,
            "p" => self.p = parse_value(key, value, line)?,
            "alpha" => self.alpha = parse_value(key, value, line)?,
            "sparsity" => self.sparsity = parse_value(key, value, line)?,
            "noise" => self.noise = parse_value(key, value, line)?,
            "solver" => self.solver = value.to_string(),
            "tolerance" => {
                self.tolerance = parse_tolerance(value)
                    .ok_or_else(|| list_err(format!("bad tolerance `{value}` (theory, exact, fixed:<delta>)")))?
            }
            "on_failure" => {
                self.on_failure = match value {
                    "abort" => FailurePolicy::Abort,
                    "continue" => FailurePolicy::Continue,
                    _ => return Err(list_err(format!("bad failure policy `{value}` (abort, continue)"))),
                }
            }
            "stride" => self.stride = parse_value(key, value, line)?,
            "start" => {
                self.start = match value {
                    "zeros" => StartPoint::Zeros,
                    "gaussian" => StartPoint::Gaussian,
                    _ => return Err(list_err(format!("bad start `{value}` (zeros, gaussian)"))),
                }
            }
            "out" => self.out = PathBuf::from(value),
            _ => {
                return Err(BenchError::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.seeds {
            self.seeds = v.clone();
        }
        if let Some(v) = &o.batch_sizes {
            self.batch_sizes = v.clone();
        }
        if let Some(v) = &o.methods {
            self.methods = v.clone();
        }
        if let Some(v) = o.policy {
            self.policy = v;
        }
        if let Some(v) = o.mu0 {
            self.mu0 = Some(v);
        }
        if let Some(v) = o.eps {
            self.eps = Some(v);
        }
        if let Some(v) = o.max_iter {
            self.max_iter = Some(v);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Invalid(m.to_string()));
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.batch_sizes.is_empty() {
            return bad("at least one batch size is required");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.batch_sizes.contains(&0) {
            return bad("batch sizes must be at least 1");
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return bad("eps must be positive");
            }
        }
        if self.max_iter.is_none() && self.eps.is_none() && self.sample_budget.is_none() {
            return bad("set at least one of max_iter, eps, sample_budget");
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0) {
                return bad("mu0 must be positive");
            }
        }
        if self.policy == PolicyChoice::Constant && self.run_length.or(self.max_iter).is_none() {
            return bad("the constant policy needs run_length or max_iter");
        }
        if self.policy == PolicyChoice::Mixed && self.switch.is_none() && self.eps.is_none() {
            return bad("the mixed policy needs switch or eps");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        for m in &self.methods {
            if !spgm::spg::method_names().contains(&m.as_str()) {
                return Err(BenchError::Invalid(format!(
                    "unknown method `{m}` (known: {})",
                    spgm::spg::method_names().join(", ")
                )));
            }
        }
        if !spgm::prox::solver_names().contains(&self.solver.as_str()) {
            return Err(BenchError::Invalid(format!(
                "unknown solver `{}` (known: {})",
                self.solver,
                spgm::prox::solver_names().join(", ")
            )));
        }
        Ok(())
    }

    /// Every setting as `(key, value)` in a fixed order; [`ExperimentConfig::parse`]
    /// of [`ExperimentConfig::to_text`] reproduces the configuration.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("application", self.application.name().into()),
            ("methods", self.methods.join(",")),
            ("batch_sizes", join(&self.batch_sizes)),
            ("policy", self.policy.name().into()),
            ("mu0", optional(&self.mu0)),
            ("run_length", optional(&self.run_length)),
            ("switch", optional(&self.switch)),
            ("seeds", join(&self.seeds)),
            ("eps", optional(&self.eps)),
            ("max_iter", optional(&self.max_iter)),
            ("sample_budget", optional(&self.sample_budget)),
            ("dataset", self.dataset.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            (
                "dataset_format",
                match self.dataset_format {
                    DatasetFormat::Text => "text".into(),
                    DatasetFormat::Sparse => "sparse".into(),
                },
            ),
            ("data_seed", self.data_seed.to_string()),
            ("lambda", optional(&self.lambda)),
            ("samples", self.samples.to_string()),
            ("vocab", self.vocab.to_string()),
            ("margin", self.margin.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("m", self.m.to_string()),
            ("n", self.n.to_string()),
            ("p", self.p.to_string()),
            ("alpha", self.alpha.to_string()),
            ("sparsity", self.sparsity.to_string()),
            ("noise", self.noise.to_string()),
            ("solver", self.solver.clone()),
            ("tolerance", tolerance_text(&self.tolerance)),
            (
                "on_failure",
                match self.on_failure {
                    FailurePolicy::Abort => "abort".into(),
                    FailurePolicy::Continue => "continue".into(),
                },
            ),
            ("stride", self.stride.to_string()),
            (
                "start",
                match self.start {
                    StartPoint::Zeros => "zeros".into(),
                    StartPoint::Gaussian => "gaussian".into(),
                },
            ),
            ("out", self.out.display().to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// `lambda` with the application's default: `0.01` for the SVM,
    /// `5e-4` for sparse representation.
    pub fn lambda_or_default(&self) -> f64 {
        self.lambda.unwrap_or(match self.application {
            Application::Svm => 0.01,
            Application::Sparse => 5e-4,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_lists() {
        let cfg = ExperimentConfig::parse(
            "# sparse comparison\napplication = sparse\nmethods = spgm, sgdm\nbatch_sizes = 1,10,50,100\n\nseeds=3,4\neps = 1e-3\ntolerance = fixed:1e-6\n",
        )
        .unwrap();
        assert_eq!(cfg.methods, vec!["spgm", "sgdm"]);
        assert_eq!(cfg.batch_sizes, vec![1, 10, 50, 100]);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.eps, Some(1e-3));
        assert_eq!(cfg.tolerance, ToleranceSchedule::Fixed(1e-6));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_repeated_and_malformed_lines() {
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(BenchError::Config { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("seeds = 1\nseeds = 2"), Err(BenchError::Config { line: 2, .. })));
        assert!(matches!(ExperimentConfig::parse("\nno equals sign"), Err(BenchError::Config { line: 2, .. })));
        assert!(ExperimentConfig::parse("mu0 = fast").is_err());
    }

    #[test]
    fn validation_catches_empty_lists_and_bad_eps() {
        let mut cfg = ExperimentConfig::default();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            eps: Some(0.0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig {
            policy: PolicyChoice::Mixed,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.switch = Some(10);
        cfg.validate().unwrap();
        cfg.methods = vec!["adam".into()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::parse("seeds = 1,2\nmax_iter = 50").unwrap();
        cfg.apply(&Overrides {
            seeds: Some(vec![7]),
            max_iter: Some(0),
            policy: Some(PolicyChoice::Constant),
            ..Default::default()
        });
        assert_eq!(cfg.seeds, vec![7]);
        assert_eq!(cfg.max_iter, Some(0));
        assert_eq!(cfg.policy, PolicyChoice::Constant);
    }

    #[test]
    fn text_form_round_trips() {
        let cfg = ExperimentConfig {
            application: Application::Svm,
            mu0: Some(0.1 + 0.2),
            eps: Some(1e-3),
            dataset: Some(PathBuf::from("data/corpus.tsv")),
            tolerance: ToleranceSchedule::Fixed(3e-7),
            on_failure: FailurePolicy::Continue,
            start: StartPoint::Gaussian,
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        let plain = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&plain.to_text()).unwrap(), plain);
    }
}
