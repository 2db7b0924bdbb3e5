use nalgebra::DVector;

use super::{CanonicalSystem, DmpError, DmpModel, ScalingPolicy};
use crate::trajectory::{Frame, Trajectory};

/// An additive acceleration term evaluated at `(t, y, ẏ)`.
pub trait Coupling {
    fn acceleration(&self, t: f64, y: &DVector<f64>, yd: &DVector<f64>) -> DVector<f64>;
}

impl<F> Coupling for F
where
    F: Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    fn acceleration(&self, t: f64, y: &DVector<f64>, yd: &DVector<f64>) -> DVector<f64> {
        self(t, y, yd)
    }
}

/// Fixed-step RK4 roll-out settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt: f64,
    /// Simulated time span; defaults to the canonical system's duration.
    pub horizon: Option<f64>,
    pub policy: ScalingPolicy,
    /// Frame tag of the produced trajectory.
    pub frame: Frame,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: None,
            policy: ScalingPolicy::IdentityFallback,
            frame: Frame::ImagePx,
        }
    }
}

/// Output of [`Integrator::run`].
#[derive(Debug, Clone)]
pub struct Rollout {
    /// Positions at every step, timestamped.
    pub trajectory: Trajectory,
    pub velocities: Vec<DVector<f64>>,
    /// Axes on which the spatial scaling fell back to identity.
    pub degenerate_axes: Vec<usize>,
}

impl Integrator {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn run(
        &self,
        model: &DmpModel,
        cs: &CanonicalSystem,
        coupling: Option<&dyn Coupling>,
    ) -> Result<Rollout, DmpError> {
        let horizon = self.horizon.unwrap_or(cs.duration());
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(DmpError::InvalidIntegration(format!("dt must be positive, got {}", self.dt)));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(DmpError::InvalidIntegration(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let reference = model.reference(self.policy)?;
        let stiffness = model.stiffness();
        let damping = model.damping();

        // State derivative (ẏ, ÿ) at time t.
        let deriv = |t: f64, y: &DVector<f64>, yd: &DVector<f64>| {
            let r = reference.state(cs.phase_at(t), cs.phase_rate(t));
            let mut ydd = r.acceleration - damping * (yd - &r.velocity) - stiffness * (y - &r.position);
            if let Some(c) = coupling {
                ydd += c.acceleration(t, y, yd);
            }
            (yd.clone(), ydd)
        };

        let steps = (horizon / self.dt).round().max(1.0) as usize;
        let start = reference.state(0.0, cs.phase_rate(0.0));
        let mut y = start.position;
        let mut yd = start.velocity;
        let mut points = Vec::with_capacity(steps + 1);
        let mut times = Vec::with_capacity(steps + 1);
        let mut velocities = Vec::with_capacity(steps + 1);
        points.push(y.as_slice().to_vec());
        times.push(0.0);
        velocities.push(yd.clone());

        let h = self.dt;
        for step in 1..=steps {
            let t = (step - 1) as f64 * h;
            let (k1y, k1v) = deriv(t, &y, &yd);
            let (k2y, k2v) = deriv(t + 0.5 * h, &(&y + &k1y * (0.5 * h)), &(&yd + &k1v * (0.5 * h)));
            let (k3y, k3v) = deriv(t + 0.5 * h, &(&y + &k2y * (0.5 * h)), &(&yd + &k2v * (0.5 * h)));
            let (k4y, k4v) = deriv(t + h, &(&y + &k3y * h), &(&yd + &k3v * h));
            y += (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (h / 6.0);
            yd += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            if y.iter().chain(yd.iter()).any(|v| !v.is_finite()) {
                return Err(DmpError::NonFiniteState { step });
            }
            points.push(y.as_slice().to_vec());
            times.push(step as f64 * h);
            velocities.push(yd.clone());
        }

        let trajectory = Trajectory::new(self.frame, points)?.with_timestamps(times)?;
        Ok(Rollout {
            trajectory,
            velocities,
            degenerate_axes: reference.degenerate_axes().to_vec(),
        })
    }
}
