use crate::error::{invalid, Error, Result};

/// Stepsize rule `mu_k`, indexed by the 0-based iteration counter `k`.
///
/// Every emitted value is clamped to `1 / (4 L_f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizePolicy {
    /// `mu = 2 mu0 / K` for a run-length parameter `K`.
    Constant { mu0: f64, run_length: usize },
    /// `mu_k = 2 mu0 / (k + 1)`.
    Variable { mu0: f64 },
    /// `mu0 / (4 L_f)` for the first `switch` iterations, then `2 mu0 / (k + 1)`.
    Mixed { mu0: f64, switch: usize },
}

impl StepsizePolicy {
    pub fn validate(&self) -> Result<()> {
        let mu0 = self.mu0();
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(invalid("mu0 must be positive and finite"));
        }
        if let StepsizePolicy::Constant { run_length: 0, .. } = self {
            return Err(invalid("constant policy needs K >= 1"));
        }
        Ok(())
    }

    pub fn mu0(&self) -> f64 {
        match *self {
            StepsizePolicy::Constant { mu0, .. } | StepsizePolicy::Variable { mu0 } | StepsizePolicy::Mixed { mu0, .. } => mu0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepsizePolicy::Constant { .. } => "constant",
            StepsizePolicy::Variable { .. } => "variable",
            StepsizePolicy::Mixed { .. } => "mixed",
        }
    }

    /// Largest admissible stepsize, `1 / (4 L_f)`.
    pub fn cap(lipschitz: f64) -> f64 {
        0.25 / lipschitz
    }

    /// Stepsize for iteration `k` (the step producing `w^{k+1}`).
    pub fn stepsize(&self, k: usize, lipschitz: f64) -> f64 {
        let raw = match *self {
            StepsizePolicy::Constant { mu0, run_length } => 2.0 * mu0 / run_length as f64,
            StepsizePolicy::Variable { mu0 } => 2.0 * mu0 / (k + 1) as f64,
            StepsizePolicy::Mixed { mu0, switch } if k < switch => mu0 / (4.0 * lipschitz),
            StepsizePolicy::Mixed { mu0, .. } => 2.0 * mu0 / (k + 1) as f64,
        };
        raw.min(Self::cap(lipschitz))
    }
}

/// Length of the constant phase of the mixed policy:
/// `ceil(4 L_f / (mu0 sigma_f) * ln(2 r0^2 / eps))`, with `r0^2` an estimate of
/// `||w^0 - w*||^2`. Returns 0 when the logarithm is not positive.
pub fn mixed_switch_point(lipschitz: f64, sigma: f64, mu0: f64, eps: f64, r0_squared: f64) -> Result<usize> {
    if sigma == 0.0 {
        return Err(Error::PolicyInapplicable(
            "the mixed policy needs a strongly convex smooth part (sigma_f > 0)".into(),
        ));
    }
    for (name, x) in [("L_f", lipschitz), ("sigma_f", sigma), ("mu0", mu0), ("eps", eps), ("r0^2", r0_squared)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(invalid(format!("{name} must be positive and finite")));
        }
    }
    let t = 4.0 * lipschitz / (mu0 * sigma) * (2.0 * r0_squared / eps).ln();
    Ok(if t > 0.0 { t.ceil() as usize } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_point_examples() {
        let eps = 1e-3;
        assert_eq!(mixed_switch_point(1.0, 1.0, 1.0, eps, std::f64::consts::E / 2.0 * eps).unwrap(), 4);
        assert_eq!(mixed_switch_point(4.0, 0.2, 1.0, 1e-3, 1.0).unwrap(), 609);
        assert!(matches!(
            mixed_switch_point(1.0, 0.0, 1.0, 1e-3, 1.0),
            Err(Error::PolicyInapplicable(_))
        ));
        assert_eq!(mixed_switch_point(1.0, 1.0, 1.0, 1.0, 0.1).unwrap(), 0);
    }

    #[test]
    fn variable_starts_at_two_mu0_and_is_capped() {
        let p = StepsizePolicy::Variable { mu0: 0.01 };
        assert_eq!(p.stepsize(0, 1.0), 0.02);
        assert_eq!(p.stepsize(3, 1.0), 0.005);
        let big = StepsizePolicy::Variable { mu0: 10.0 };
        assert_eq!(big.stepsize(0, 2.0), 0.125);
    }

    #[test]
    fn mixed_switches_once() {
        let p = StepsizePolicy::Mixed { mu0: 0.5, switch: 3 };
        let l = 2.0;
        for k in 0..3 {
            assert_eq!(p.stepsize(k, l), 0.5 / 8.0);
        }
        assert_eq!(p.stepsize(3, l), 0.125f64.min(1.0 / 4.0));
        assert_eq!(p.stepsize(9, l), 0.1);
    }

    #[test]
    fn constant_uses_run_length() {
        let p = StepsizePolicy::Constant { mu0: 0.3, run_length: 6 };
        assert!((p.stepsize(0, 1.0) - 0.1).abs() < 1e-16);
        assert_eq!(p.stepsize(0, 1.0), p.stepsize(1000, 1.0));
        assert!(StepsizePolicy::Constant { mu0: 0.3, run_length: 0 }.validate().is_err());
    }

    #[test]
    fn every_stepsize_is_admissible() {
        let policies = [
            StepsizePolicy::Constant { mu0: 5.0, run_length: 2 },
            StepsizePolicy::Variable { mu0: 3.0 },
            StepsizePolicy::Mixed { mu0: 2.0, switch: 10 },
        ];
        for p in policies {
            for k in 0..100 {
                let mu = p.stepsize(k, 1.7);
                assert!(mu > 0.0 && mu <= 0.25 / 1.7);
            }
        }
    }
}
