use nalgebra::{DMatrix, DVector};

use super::{DmpError, GaussianBasis, DEFAULT_SCALING_EPS, DEFAULT_STIFFNESS};

/// How to treat an axis whose learned start→goal displacement is (near) zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalingPolicy {
    /// Fail with [`DmpError::DegenerateScaling`].
    Strict,
    /// Use a unit scale on the offending axis and report it.
    #[default]
    IdentityFallback,
}

/// Spatial scaling matrix plus the axes that fell back to identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub matrix: DMatrix<f64>,
    pub degenerate_axes: Vec<usize>,
}

/// Reference position, velocity and acceleration at one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
    pub acceleration: DVector<f64>,
}

/// A DMP: shape weights, basis, tracking gains and the commanded start/goal.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpModel {
    weights: DMatrix<f64>,
    basis: GaussianBasis,
    stiffness: DMatrix<f64>,
    damping: DMatrix<f64>,
    start: DVector<f64>,
    goal: DVector<f64>,
    scaling_eps: f64,
}

impl DmpModel {
    /// Builds a model that reproduces its own learned anchors
    /// (`y0 = Wφ(0)`, `g = Wφ(1)`) with critically damped default gains.
    pub fn new(weights: DMatrix<f64>, basis: GaussianBasis) -> Result<Self, DmpError> {
        if weights.ncols() != basis.num_kernels() {
            return Err(DmpError::InvalidModel(format!(
                "weights have {} columns, basis has {} kernels",
                weights.ncols(),
                basis.num_kernels()
            )));
        }
        if weights.nrows() == 0 {
            return Err(DmpError::InvalidModel("model needs at least one dof".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(DmpError::InvalidModel("non-finite weight".into()));
        }
        let n = weights.nrows();
        let stiffness = DMatrix::identity(n, n) * DEFAULT_STIFFNESS;
        let damping = DMatrix::identity(n, n) * (2.0 * DEFAULT_STIFFNESS.sqrt());
        let mut model = Self {
            weights,
            basis,
            stiffness,
            damping,
            start: DVector::zeros(n),
            goal: DVector::zeros(n),
            scaling_eps: DEFAULT_SCALING_EPS,
        };
        model.start = model.learned_start();
        model.goal = model.learned_goal();
        Ok(model)
    }

    pub fn with_start_goal(
        mut self,
        start: DVector<f64>,
        goal: DVector<f64>,
    ) -> Result<Self, DmpError> {
        let n = self.dofs();
        if start.len() != n || goal.len() != n {
            return Err(DmpError::InvalidModel(format!(
                "start/goal must have {n} components"
            )));
        }
        if start.iter().chain(goal.iter()).any(|v| !v.is_finite()) {
            return Err(DmpError::InvalidModel("non-finite start or goal".into()));
        }
        self.start = start;
        self.goal = goal;
        Ok(self)
    }

    /// Replaces the tracking gains. Both must be symmetric positive definite.
    pub fn with_gains(
        mut self,
        stiffness: DMatrix<f64>,
        damping: DMatrix<f64>,
    ) -> Result<Self, DmpError> {
        let n = self.dofs();
        for (name, m) in [("stiffness", &stiffness), ("damping", &damping)] {
            if m.shape() != (n, n) {
                return Err(DmpError::InvalidModel(format!("{name} must be {n}×{n}")));
            }
            let sym = (m - m.transpose()).amax() <= 1e-12 * (1.0 + m.amax());
            if !sym || m.clone().cholesky().is_none() {
                return Err(DmpError::InvalidModel(format!(
                    "{name} must be symmetric positive definite"
                )));
            }
        }
        self.stiffness = stiffness;
        self.damping = damping;
        Ok(self)
    }

    pub fn with_scaling_eps(mut self, eps: f64) -> Self {
        self.scaling_eps = eps;
        self
    }

    pub fn dofs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn basis(&self) -> &GaussianBasis {
        &self.basis
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn goal(&self) -> &DVector<f64> {
        &self.goal
    }

    /// `W φ(x)`: the unscaled shape at phase `x`.
    pub fn shape_at(&self, x: f64) -> DVector<f64> {
        &self.weights * DVector::from_vec(self.basis.eval(x))
    }

    /// `ŷ0 = W φ(0)`.
    pub fn learned_start(&self) -> DVector<f64> {
        self.shape_at(0.0)
    }

    /// `ĝ = W φ(1)`.
    pub fn learned_goal(&self) -> DVector<f64> {
        self.shape_at(1.0)
    }

    /// `Ks = diag((g − y0) ./ (ĝ − ŷ0))`, failing on a degenerate axis.
    pub fn scaling_matrix(&self) -> Result<DMatrix<f64>, DmpError> {
        self.scaling(ScalingPolicy::Strict).map(|s| s.matrix)
    }

    pub fn scaling(&self, policy: ScalingPolicy) -> Result<Scaling, DmpError> {
        let learned = self.learned_goal() - self.learned_start();
        let commanded = &self.goal - &self.start;
        let n = self.dofs();
        let mut matrix = DMatrix::zeros(n, n);
        let mut degenerate_axes = Vec::new();
        for i in 0..n {
            let gap = learned[i];
            if gap.abs() > self.scaling_eps {
                matrix[(i, i)] = commanded[i] / gap;
            } else {
                match policy {
                    ScalingPolicy::Strict => {
                        return Err(DmpError::DegenerateScaling { axis: i, gap })
                    }
                    ScalingPolicy::IdentityFallback => {
                        matrix[(i, i)] = 1.0;
                        degenerate_axes.push(i);
                    }
                }
            }
        }
        Ok(Scaling {
            matrix,
            degenerate_axes,
        })
    }

    /// Reference state at phase `x` with phase rate `x_dot`, computing the
    /// scaling on the fly (strict policy).
    pub fn reference_state(&self, x: f64, x_dot: f64) -> Result<ReferenceState, DmpError> {
        let ks = self.scaling_matrix()?;
        let (phi, dphi, ddphi) = self.basis.eval_with_derivatives(x);
        let shape = &self.weights * DVector::from_vec(phi);
        let position = &ks * (shape - self.learned_start()) + &self.start;
        let velocity = &ks * (&self.weights * DVector::from_vec(dphi)) * x_dot;
        let acceleration = &ks * (&self.weights * DVector::from_vec(ddphi)) * (x_dot * x_dot);
        Ok(ReferenceState {
            position,
            velocity,
            acceleration,
        })
    }

    /// Precomputes the scaling under `policy` for repeated evaluation.
    pub fn reference(&self, policy: ScalingPolicy) -> Result<Reference<'_>, DmpError> {
        let scaling = self.scaling(policy)?;
        let ks = scaling.matrix;
        // Ks W and the constant offset y0 − Ks ŷ0 are all that vary with (y0, g).
        let scaled_weights = &ks * &self.weights;
        let offset = &self.start - &ks * self.learned_start();
        Ok(Reference {
            model: self,
            scaled_weights,
            offset,
            degenerate_axes: scaling.degenerate_axes,
        })
    }
}

/// A model with its scaling resolved: `y_x = (Ks W) φ(x) + (y0 − Ks ŷ0)`.
#[derive(Debug, Clone)]
pub struct Reference<'a> {
    model: &'a DmpModel,
    scaled_weights: DMatrix<f64>,
    offset: DVector<f64>,
    degenerate_axes: Vec<usize>,
}

impl Reference<'_> {
    pub fn model(&self) -> &DmpModel {
        self.model
    }

    pub fn degenerate_axes(&self) -> &[usize] {
        &self.degenerate_axes
    }

    pub fn position(&self, x: f64) -> DVector<f64> {
        &self.scaled_weights * DVector::from_vec(self.model.basis.eval(x)) + &self.offset
    }

    pub fn state(&self, x: f64, x_dot: f64) -> ReferenceState {
        let (phi, dphi, ddphi) = self.model.basis.eval_with_derivatives(x);
        ReferenceState {
            position: &self.scaled_weights * DVector::from_vec(phi) + &self.offset,
            velocity: &self.scaled_weights * DVector::from_vec(dphi) * x_dot,
            acceleration: &self.scaled_weights * DVector::from_vec(ddphi) * (x_dot * x_dot),
        }
    }
}
