use crate::error::{invalid, Result};

/// Inner accuracy `delta_k` requested from the prox at each step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ToleranceSchedule {
    /// `delta_k = mu_k^{3/2} / sqrt(N)`.
    #[default]
    Theory,
    /// `delta_k = 1e-12`, for problems whose prox is solved exactly.
    Exact,
    Fixed(f64),
}

impl ToleranceSchedule {
    pub const EXACT: f64 = 1e-12;

    pub fn validate(&self) -> Result<()> {
        match *self {
            ToleranceSchedule::Fixed(d) if !(d > 0.0 && d.is_finite()) => Err(invalid("fixed tolerance must be positive")),
            _ => Ok(()),
        }
    }

    pub fn tolerance(&self, mu: f64, batch_size: usize) -> f64 {
        match *self {
            ToleranceSchedule::Theory => mu.powf(1.5) / (batch_size as f64).sqrt(),
            ToleranceSchedule::Exact => Self::EXACT,
            ToleranceSchedule::Fixed(d) => d,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ToleranceSchedule::Theory => "theory".into(),
            ToleranceSchedule::Exact => "exact".into(),
            ToleranceSchedule::Fixed(d) => format!("fixed:{d}"),
        }
    }
}
