//! Hinge-loss l2-regularised linear SVM,
//!
//! ```text
//! min_w  (lambda/2) ||w||^2 + (1/m) sum_i max(0, 1 - y_i x_i^T w)
//! ```
//!
//! with the text ingestion pipeline producing raw word-count features.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::problem::{CompositeProblem, LinearComposition, Minibatch, ScalarLoss, ScaledSquaredNorm};
use crate::prox::{solve_composition_dual, BoxQuadDual, DualSolver, ProxResult};
use crate::{seeded_rng, Rng};

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmDataset {
    /// `m x n`, one sample per row.
    pub features: Array2<f64>,
    /// Entries in `{-1, +1}`.
    pub labels: Array1<f64>,
    /// Column names, empty for numeric input.
    pub vocabulary: Vec<String>,
}

impl SvmDataset {
    pub fn new(features: Array2<f64>, labels: Array1<f64>, vocabulary: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(invalid("one label per feature row is required"));
        }
        if features.nrows() == 0 {
            return Err(invalid("dataset is empty"));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(invalid("labels must be +1 or -1"));
        }
        Ok(SvmDataset {
            features,
            labels,
            vocabulary,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.features.ncols()
    }

    /// `X~` (`n x m`): column `i` is `y_i x_i`.
    pub fn signed_features(&self) -> Array2<f64> {
        let mut t = self.features.t().to_owned();
        for (mut col, &y) in t.columns_mut().into_iter().zip(&self.labels) {
            col *= y;
        }
        t
    }

    pub fn subset(&self, rows: &[usize]) -> SvmDataset {
        SvmDataset {
            features: self.features.select(Axis(0), rows),
            labels: self.labels.select(Axis(0), rows),
            vocabulary: self.vocabulary.clone(),
        }
    }

    /// Shuffles the rows with `seed` and splits them into a training part of
    /// `round(train_fraction * m)` rows and a test part.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(SvmDataset, SvmDataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(invalid("train fraction must lie in (0, 1)"));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut seeded_rng(seed));
        let cut = ((train_fraction * self.len() as f64).round() as usize).clamp(1, self.len().max(2) - 1);
        Ok((self.subset(&order[..cut]), self.subset(&order[cut..])))
    }
}

/// Fraction of the data used for training by default.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn parse_label(token: &str, line: usize) -> Result<f64> {
    match token.trim() {
        "+1" | "1" => Ok(1.0),
        "-1" => Ok(-1.0),
        other => Err(Error::Parse {
            line,
            message: format!("label must be +1 or -1, found `{other}`"),
        }),
    }
}

/// Reads `label<TAB>text` lines. Blank lines are skipped.
pub fn read_labeled_text(reader: impl BufRead) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `label<TAB>text`".into(),
        })?;
        out.push((text.to_string(), parse_label(label, i + 1)?));
    }
    Ok(out)
}

/// Reads `label idx:value ...` lines with 0-based indices. The dimension is
/// `dimension` when given, otherwise one past the largest index seen.
pub fn read_sparse(reader: impl BufRead, dimension: Option<usize>) -> Result<SvmDataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        labels.push(parse_label(label, i + 1)?);
        let mut row = Vec::new();
        for tok in tokens {
            let bad = |message: String| Error::Parse { line: i + 1, message };
            let (idx, val) = tok.split_once(':').ok_or_else(|| bad(format!("expected idx:value, found `{tok}`")))?;
            let idx: usize = idx.parse().map_err(|_| bad(format!("bad index `{idx}`")))?;
            let val: f64 = val.parse().map_err(|_| bad(format!("bad value `{val}`")))?;
            width = width.max(idx + 1);
            row.push((idx, val));
        }
        rows.push(row);
    }
    let n = match dimension {
        Some(d) if d < width => return Err(invalid(format!("feature index {} exceeds dimension {d}", width - 1))),
        Some(d) => d,
        None => width,
    };
    let mut features = Array2::zeros((rows.len(), n));
    for (r, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[(r, j)] = v;
        }
    }
    SvmDataset::new(features, Array1::from(labels), Vec::new())
}

/// Bag-of-words features over the `vocab_size` most frequent words of the
/// corpus (ties broken lexicographically); entry `(i, j)` counts word `j` in text `i`.
pub fn build_bow_features(corpus: &[(String, f64)], vocab_size: usize) -> Result<SvmDataset> {
    if corpus.is_empty() {
        return Err(invalid("corpus is empty"));
    }
    if vocab_size == 0 {
        return Err(invalid("vocabulary size must be at least 1"));
    }
    let documents: Vec<Vec<String>> = corpus.iter().map(|(text, _)| tokenize(text)).collect();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for word in documents.iter().flatten() {
        *counts.entry(word.as_str()).or_default() += 1;
    }
    if counts.len() < vocab_size {
        return Err(Error::VocabularyTooSmall {
            found: counts.len(),
            requested: vocab_size,
        });
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let vocabulary: Vec<String> = ranked[..vocab_size].iter().map(|(w, _)| w.to_string()).collect();
    let column: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(j, w)| (w.as_str(), j)).collect();

    let mut features = Array2::zeros((corpus.len(), vocab_size));
    for (i, doc) in documents.iter().enumerate() {
        for word in doc {
            if let Some(&j) = column.get(word.as_str()) {
                features[(i, j)] += 1.0;
            }
        }
    }
    let labels = corpus.iter().map(|(_, y)| *y).collect();
    SvmDataset::new(features, labels, vocabulary)
}

/// The SVM as a composite problem over the training set:
/// `f(w; i) = (lambda/2)||w||^2`, `h(w; i) = max(0, 1 - y_i x_i^T w)`,
/// with `L_f = sigma_f = lambda`.
pub fn svm_problem(train: &SvmDataset, lambda: f64) -> Result<CompositeProblem> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let m = train.len();
    let n = train.dimension();
    let rows = -train.signed_features().reversed_axes();
    let f = ScaledSquaredNorm {
        lambda,
        dimension: n,
        samples: m,
    };
    let h = LinearComposition::new(rows, ScalarLoss::hinge());
    CompositeProblem::new(Arc::new(f), Arc::new(h), lambda, lambda)
}

/// One SPG-M step written in the SVM's own variables:
///
/// ```text
/// v = (1 - lambda mu) w
/// u = argmax_{u in [0,1]^N} -(mu/(2N)) ||X~_I u||^2 + u^T (e - X~_I^T v)
/// w+ = v + (mu/N) X~_I u
/// ```
///
/// The batch is drawn from `rng` exactly as the generic step draws it.
#[allow(clippy::too_many_arguments)]
pub fn svm_spgm_step(
    train: &SvmDataset,
    lambda: f64,
    w: ArrayView1<f64>,
    mu: f64,
    batch_size: usize,
    delta: f64,
    rng: &mut Rng,
    solver: &dyn DualSolver,
) -> Result<ProxResult> {
    let batch = Minibatch::sample(rng, train.len(), batch_size)?;
    let v = w.mapv(|x| (1.0 - lambda * mu) * x);
    let mut xt = Array2::zeros((train.dimension(), batch_size));
    for (j, &i) in batch.indices().iter().enumerate() {
        let y = train.labels[i];
        xt.column_mut(j).assign(&train.features.row(i).mapv(|x| y * x));
    }
    // the composition dual with a_j = -x~_j has b = e - X~^T v and recovers v + (mu/N) X~ u
    let dual = BoxQuadDual::composition(-xt, ScalarLoss::hinge(), mu, batch, v)?;
    solve_composition_dual(&dual, delta, solver, None)
}

/// Prediction `sign(x^T w)` with `sign(0) = +1`.
pub fn predict(x: ArrayView1<f64>, w: ArrayView1<f64>) -> f64 {
    if x.dot(&w) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn accuracy(data: &SvmDataset, w: ArrayView1<f64>) -> f64 {
    let correct = data
        .features
        .rows()
        .into_iter()
        .zip(&data.labels)
        .filter(|(x, &y)| predict(x.view(), w) == y)
        .count();
    correct as f64 / data.len() as f64
}

pub fn mean_hinge(data: &SvmDataset, w: ArrayView1<f64>) -> f64 {
    let margins = data.features.dot(&w);
    margins
        .iter()
        .zip(&data.labels)
        .map(|(&s, &y)| (1.0 - y * s).max(0.0))
        .sum::<f64>()
        / data.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmMetrics {
    /// Test-set accuracy.
    pub accuracy: f64,
    /// Mean hinge loss over the training set.
    pub hinge_loss: f64,
    /// `||w - w_ref||^2`, when a reference is given.
    pub error: Option<f64>,
}

pub fn svm_metrics(train: &SvmDataset, test: &SvmDataset, w: ArrayView1<f64>, w_ref: Option<ArrayView1<f64>>) -> SvmMetrics {
    SvmMetrics {
        accuracy: accuracy(test, w),
        hinge_loss: mean_hinge(train, w),
        error: w_ref.map(|r| crate::linalg::dist_sq(w, r)),
    }
}

/// Generates a labelled text corpus over the words `word0 .. word{vocab-1}`.
///
/// Documents have 20 to 60 words drawn from a Zipf-like distribution; the
/// label is the sign of a hidden linear score of the word counts, and
/// documents whose normalised score falls within `margin` of zero are
/// discarded so the corpus is linearly separable.
pub fn synthetic_corpus(samples: usize, vocab: usize, margin: f64, seed: u64) -> Vec<(String, f64)> {
    let mut rng = seeded_rng(seed);
    let truth: Vec<f64> = (0..vocab).map(|_| StandardNormal.sample(&mut rng)).collect();
    let weights: Vec<f64> = (0..vocab).map(|j| 1.0 / (j as f64 + 5.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut corpus = Vec::with_capacity(samples);
    while corpus.len() < samples {
        let len = rng.random_range(20..=60);
        let mut counts = vec![0.0; vocab];
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let mut r = rng.random::<f64>() * total;
            let mut j = 0;
            while j + 1 < vocab && r >= weights[j] {
                r -= weights[j];
                j += 1;
            }
            counts[j] += 1.0;
            words.push(format!("word{j}"));
        }
        let score: f64 = counts.iter().zip(&truth).map(|(c, t)| c * t).sum::<f64>() / len as f64;
        if score.abs() < margin {
            continue;
        }
        corpus.push((words.join(" "), if score >= 0.0 { 1.0 } else { -1.0 }));
    }
    corpus
}
