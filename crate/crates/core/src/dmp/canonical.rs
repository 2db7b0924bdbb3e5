use super::DmpError;

/// Linear phase clock `ẋ = 1/τ`, `x(0) = 0`, held at 1 once reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalSystem {
    tau: f64,
    duration: f64,
}

impl CanonicalSystem {
    /// Clock whose phase reaches 1 exactly at `duration` (`τ = T_f`).
    pub fn new(duration: f64) -> Result<Self, DmpError> {
        Self::with_tau(duration, duration)
    }

    pub fn with_tau(tau: f64, duration: f64) -> Result<Self, DmpError> {
        if !(tau.is_finite() && tau > 0.0 && duration.is_finite() && duration > 0.0) {
            return Err(DmpError::InvalidModel(format!(
                "tau and duration must be positive, got tau={tau}, duration={duration}"
            )));
        }
        Ok(Self { tau, duration })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// `min(t/τ, 1)`; negative times map to 0.
    pub fn phase_at(&self, t: f64) -> f64 {
        (t / self.tau).clamp(0.0, 1.0)
    }

    /// Phase rate at `t`: `1/τ` while the phase is below 1, zero afterwards.
    pub fn phase_rate(&self, t: f64) -> f64 {
        if t / self.tau < 1.0 {
            1.0 / self.tau
        } else {
            0.0
        }
    }
}
