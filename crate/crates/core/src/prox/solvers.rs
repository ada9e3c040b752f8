use std::fmt::Debug;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use super::{BoxQuadDual, ProxResult};
use crate::error::{invalid, Error, Result};

/// An inner solver for [`BoxQuadDual`].
///
/// `target` is the required accuracy on the recovered primal point; a solver
/// returns only once its certificate is at or below it, and reports
/// [`Error::InnerSolverFailure`] otherwise.
pub trait DualSolver: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, dual: &BoxQuadDual, target: f64, warm_start: Option<ArrayView1<f64>>) -> Result<ProxResult>;
}

type SolverFactory = fn() -> Arc<dyn DualSolver>;

const REGISTRY: &[(&str, SolverFactory)] = &[
    ("fast-gradient", || Arc::new(FastGradient::default())),
    ("prox-gradient", || Arc::new(ProjectedGradient::default())),
    ("coordinate-ascent", || Arc::new(CoordinateAscent::default())),
];

/// Names accepted by [`solver_by_name`].
pub fn solver_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn solver_by_name(name: &str) -> Result<Arc<dyn DualSolver>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make())
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "dual solver",
            name: name.to_string(),
            known: solver_names().join(", "),
        })
}

const MAX_ITERATIONS: usize = 1_000_000;
const MIN_ITERATIONS: usize = 100;

fn iteration_cap(bound: f64) -> usize {
    if !bound.is_finite() {
        return MAX_ITERATIONS;
    }
    let cap = 10.0 * bound.max(1.0).ceil();
    (cap.min(MAX_ITERATIONS as f64) as usize).max(MIN_ITERATIONS)
}

/// Iterate bookkeeping common to both solvers.
struct Progress<'a> {
    dual: &'a BoxQuadDual,
    target: f64,
    best: Array1<f64>,
    best_certificate: f64,
    last_improvement: usize,
    patience: usize,
}

impl<'a> Progress<'a> {
    fn new(dual: &'a BoxQuadDual, target: f64, start: &Array1<f64>, certificate: f64) -> Self {
        Progress {
            dual,
            target,
            best: start.clone(),
            best_certificate: certificate,
            last_improvement: 0,
            patience: 5_000,
        }
    }

    /// Records a candidate; returns true when the target is met.
    fn offer(&mut self, iteration: usize, v: &Array1<f64>, certificate: f64) -> bool {
        if certificate < self.best_certificate {
            self.last_improvement = iteration;
            self.best_certificate = certificate;
            self.best.assign(v);
        }
        self.best_certificate <= self.target
    }

    fn stalled(&self, iteration: usize) -> bool {
        iteration - self.last_improvement > self.patience
    }

    fn result(&self, iterations: usize) -> ProxResult {
        let n = self.dual.batch_size();
        ProxResult {
            primal: self.dual.recover(self.best.view()),
            dual: self.best.clone(),
            inner_iterations: iterations,
            certified_accuracy: self.best_certificate,
            samples_touched: n * (iterations + 1),
        }
    }

    fn finish(self, iterations: usize) -> Result<ProxResult> {
        let result = self.result(iterations);
        if result.certified_accuracy <= self.target {
            Ok(result)
        } else {
            Err(Error::InnerSolverFailure {
                certificate: result.certified_accuracy,
                best: Box::new(result),
                iterations,
                target: self.target,
            })
        }
    }
}

fn start_point(dual: &BoxQuadDual, warm_start: Option<ArrayView1<f64>>) -> Result<Array1<f64>> {
    match warm_start {
        Some(v) if v.len() == dual.dim() => Ok(dual.project(v)),
        Some(v) => Err(invalid(format!("warm start has length {}, dual has {}", v.len(), dual.dim()))),
        None => Ok(dual.project(Array1::zeros(dual.dim()).view())),
    }
}

fn degenerate_result(dual: &BoxQuadDual, target: f64) -> Result<ProxResult> {
    let v = dual.vertex_maximizer();
    let certificate = dual.certificate(v.view());
    let mut progress = Progress::new(dual, target, &v, certificate);
    progress.offer(1, &v, certificate);
    progress.finish(1)
}

/// Projected step from `from` (whose image is `from_image`) along `gradient`,
/// increasing `lipschitz` until the step satisfies the descent condition.
/// Returns the new point and its image.
fn projected_step(
    dual: &BoxQuadDual,
    from: &Array1<f64>,
    from_image: &Array1<f64>,
    gradient: &Array1<f64>,
    lipschitz: &mut f64,
) -> (Array1<f64>, Array1<f64>) {
    loop {
        let next = dual.project((from + &(gradient / *lipschitz)).view());
        let image = dual.operator.apply(next.view());
        let step = &next - from;
        let step_sq = step.dot(&step);
        let image_step = &image - from_image;
        let curvature = dual.weight() * image_step.dot(&image_step);
        if curvature <= *lipschitz * step_sq * (1.0 + 1e-10) || step_sq == 0.0 {
            return (next, image);
        }
        *lipschitz = 1.5 * curvature / step_sq;
    }
}

/// `weight * ||A d||^2 / ||d||^2`, the curvature of `D` along `d`.
fn directional_curvature(dual: &BoxQuadDual, d: &Array1<f64>) -> f64 {
    let dd = d.dot(d);
    if dd == 0.0 {
        return 0.0;
    }
    let image = dual.operator.apply(d.view());
    dual.weight() * image.dot(&image) / dd
}

/// Step-size and iteration-cap bookkeeping shared by both solvers.
///
/// The first step uses the curvature along the initial gradient (checked by
/// backtracking), so a warm start that is one step from the target never pays
/// for the power iteration. From the second step on the curvature is at least
/// `lambda_max(Q)` and the iteration cap follows the rate bound.
struct Schedule {
    lipschitz: f64,
    cap: usize,
    calibrated: bool,
    override_cap: Option<usize>,
}

impl Schedule {
    fn new(dual: &BoxQuadDual, gradient: &Array1<f64>, override_cap: Option<usize>) -> Self {
        Schedule {
            lipschitz: directional_curvature(dual, gradient).max(f64::MIN_POSITIVE),
            cap: override_cap.unwrap_or(usize::MAX),
            calibrated: false,
            override_cap,
        }
    }

    /// Calibrates before iteration `it`; returns false once the cap is exceeded.
    fn admit(&mut self, it: usize, dual: &BoxQuadDual, bound: impl Fn(f64) -> f64) -> bool {
        if it >= 2 && !self.calibrated {
            self.calibrated = true;
            self.lipschitz = self.lipschitz.max(dual.curvature());
            self.cap = self.override_cap.unwrap_or_else(|| iteration_cap(bound(self.lipschitz)));
        }
        it <= self.cap
    }
}

/// Accelerated projected gradient ascent (FISTA-type) with function-value
/// restart. Stops on the duality-gap certificate.
#[derive(Debug, Clone, Default)]
pub struct FastGradient {
    /// Overrides the default iteration cap.
    pub max_iterations: Option<usize>,
}

impl DualSolver for FastGradient {
    fn name(&self) -> &'static str {
        "fast-gradient"
    }

    fn solve(&self, dual: &BoxQuadDual, target: f64, warm_start: Option<ArrayView1<f64>>) -> Result<ProxResult> {
        if !(target > 0.0) {
            return Err(invalid("target accuracy must be positive"));
        }
        if dual.is_degenerate() {
            return degenerate_result(dual, target);
        }
        let radius = dual.domain_radius();
        let n = dual.batch_size() as f64;
        let bound = |l: f64| (4.0 * l * radius * radius * dual.mu / (n * target * target)).sqrt();

        let mut x = start_point(dual, warm_start)?;
        let mut image = dual.operator.apply(x.view());
        let grad = dual.gradient_from_image(image.view());
        let mut progress = Progress::new(dual, target, &x, dual.certificate_from_gradient(x.view(), grad.view()));
        if progress.best_certificate <= target {
            return progress.finish(0);
        }
        let mut schedule = Schedule::new(dual, &grad, self.max_iterations);
        let mut value = dual.objective_from_image(x.view(), image.view());
        let mut y = x.clone();
        let mut y_image = image.clone();
        let mut theta = 1.0f64;

        let mut it = 1;
        while schedule.admit(it, dual, bound) {
            let grad_y = dual.gradient_from_image(y_image.view());
            let (next, next_image) = projected_step(dual, &y, &y_image, &grad_y, &mut schedule.lipschitz);
            let grad_next = dual.gradient_from_image(next_image.view());
            let certificate = dual.certificate_from_gradient(next.view(), grad_next.view());
            if progress.offer(it, &next, certificate) || progress.stalled(it) {
                return progress.finish(it);
            }
            let next_value = dual.objective_from_image(next.view(), next_image.view());
            if next_value < value {
                theta = 1.0;
                y.assign(&next);
                y_image.assign(&next_image);
            } else {
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let beta = (theta - 1.0) / theta_next;
                y = &next + &((&next - &x) * beta);
                y_image = &next_image + &((&next_image - &image) * beta);
                theta = theta_next;
            }
            x = next;
            image = next_image;
            value = next_value;
            it += 1;
        }
        progress.finish(it - 1)
    }
}

/// Plain projected gradient ascent with step `1 / lambda_max(Q)`; converges
/// linearly on these polyhedral duals. Stops on the duality-gap certificate,
/// which comes for free with the next gradient.
#[derive(Debug, Clone, Default)]
pub struct ProjectedGradient {
    pub max_iterations: Option<usize>,
}

impl DualSolver for ProjectedGradient {
    fn name(&self) -> &'static str {
        "prox-gradient"
    }

    fn solve(&self, dual: &BoxQuadDual, target: f64, warm_start: Option<ArrayView1<f64>>) -> Result<ProxResult> {
        if !(target > 0.0) {
            return Err(invalid("target accuracy must be positive"));
        }
        if dual.is_degenerate() {
            return degenerate_result(dual, target);
        }
        let radius = dual.domain_radius();
        let n = dual.batch_size() as f64;
        let bound = |l: f64| l * radius * radius * dual.mu / (n * target * target);

        let mut x = start_point(dual, warm_start)?;
        let mut image = dual.operator.apply(x.view());
        let mut grad = dual.gradient_from_image(image.view());
        let mut progress = Progress::new(dual, target, &x, dual.certificate_from_gradient(x.view(), grad.view()));
        if progress.best_certificate <= target {
            return progress.finish(0);
        }
        let mut schedule = Schedule::new(dual, &grad, self.max_iterations);
        let mut it = 1;
        while schedule.admit(it, dual, bound) {
            let (next, next_image) = projected_step(dual, &x, &image, &grad, &mut schedule.lipschitz);
            x = next;
            image = next_image;
            grad = dual.gradient_from_image(image.view());
            let certificate = dual.certificate_from_gradient(x.view(), grad.view());
            if progress.offer(it, &x, certificate) || progress.stalled(it) {
                return progress.finish(it);
            }
            it += 1;
        }
        progress.finish(it - 1)
    }
}

/// Cyclic exact coordinate maximisation. One iteration is a sweep over all
/// coordinates, `O(N n)` like a gradient step; the certificate is checked
/// after every sweep. Copes well with the rank-deficient duals of large
/// batches, where the gradient methods slow down.
#[derive(Debug, Clone, Default)]
pub struct CoordinateAscent {
    pub max_iterations: Option<usize>,
}

impl DualSolver for CoordinateAscent {
    fn name(&self) -> &'static str {
        "coordinate-ascent"
    }

    fn solve(&self, dual: &BoxQuadDual, target: f64, warm_start: Option<ArrayView1<f64>>) -> Result<ProxResult> {
        if !(target > 0.0) {
            return Err(invalid("target accuracy must be positive"));
        }
        if dual.is_degenerate() {
            return degenerate_result(dual, target);
        }
        let weight = dual.weight();
        let diagonal = dual.operator.column_sq_norms() * weight;
        let mut x = start_point(dual, warm_start)?;
        let mut image = dual.operator.apply(x.view());
        let grad = dual.gradient_from_image(image.view());
        let mut progress = Progress::new(dual, target, &x, dual.certificate_from_gradient(x.view(), grad.view()));
        if progress.best_certificate <= target {
            return progress.finish(0);
        }
        let radius = dual.domain_radius();
        let n = dual.batch_size() as f64;
        let cap = self.max_iterations.unwrap_or_else(|| {
            let lipschitz = diagonal.sum();
            iteration_cap(lipschitz * radius * radius * dual.mu / (n * target * target))
        });
        for it in 1..=cap {
            for j in 0..x.len() {
                let g = dual.linear[j] - weight * dual.operator.column_dot(j, image.view());
                let next = if diagonal[j] > 0.0 {
                    (x[j] + g / diagonal[j]).clamp(dual.lower[j], dual.upper[j])
                } else if g > 0.0 {
                    dual.upper[j]
                } else if g < 0.0 {
                    dual.lower[j]
                } else {
                    x[j]
                };
                let step = next - x[j];
                if step != 0.0 {
                    dual.operator.add_column(j, step, image.view_mut());
                    x[j] = next;
                }
            }
            // refresh the image to keep rounding from accumulating
            image = dual.operator.apply(x.view());
            let grad = dual.gradient_from_image(image.view());
            let certificate = dual.certificate_from_gradient(x.view(), grad.view());
            if progress.offer(it, &x, certificate) || progress.stalled(it) {
                return progress.finish(it);
            }
        }
        progress.finish(cap)
    }
}
