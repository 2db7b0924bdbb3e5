use super::DmpError;

/// Normalized Gaussian kernels over the phase interval `[0, 1]`.
///
/// Centers are equally spaced with `c_1 = 0` and `c_K = 1`. The inverse
/// widths are `h_i = 1 / (a_h (c_{i+1} − c_i))²`, with the last kernel
/// reusing its neighbour's width.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBasis {
    centers: Vec<f64>,
    inv_widths: Vec<f64>,
    overlap: f64,
}

impl GaussianBasis {
    pub fn new(num_kernels: usize, overlap: f64) -> Result<Self, DmpError> {
        if num_kernels < 2 {
            return Err(DmpError::InvalidBasis(format!(
                "need at least 2 kernels, got {num_kernels}"
            )));
        }
        if !(overlap.is_finite() && overlap > 0.0) {
            return Err(DmpError::InvalidBasis(format!(
                "overlap must be positive, got {overlap}"
            )));
        }
        let last = (num_kernels - 1) as f64;
        let centers: Vec<f64> = (0..num_kernels).map(|i| i as f64 / last).collect();
        let mut inv_widths: Vec<f64> = centers
            .windows(2)
            .map(|w| 1.0 / (overlap * (w[1] - w[0])).powi(2))
            .collect();
        inv_widths.push(inv_widths[num_kernels - 2]);
        Ok(Self {
            centers,
            inv_widths,
            overlap,
        })
    }

    pub fn num_kernels(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn inv_widths(&self) -> &[f64] {
        &self.inv_widths
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    // Exponents are shifted by their maximum so the sum never underflows,
    // even far outside [0, 1]. The shift cancels in the normalization.
    fn unnormalized(&self, x: f64, out: &mut [f64]) {
        let mut max_e = f64::NEG_INFINITY;
        for (k, o) in out.iter_mut().enumerate() {
            let d = x - self.centers[k];
            *o = -self.inv_widths[k] * d * d;
            max_e = max_e.max(*o);
        }
        for o in out.iter_mut() {
            *o = (*o - max_e).exp();
        }
    }

    /// Writes `φ(x)` into `out` (length K).
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.num_kernels());
        self.unnormalized(x, out);
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|o| *o /= sum);
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_kernels()];
        self.eval_into(x, &mut out);
        out
    }

    /// Returns `(φ, dφ/dx, d²φ/dx²)` at `x`.
    pub fn eval_with_derivatives(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = self.num_kernels();
        let mut psi = vec![0.0; k];
        self.unnormalized(x, &mut psi);
        let mut dpsi = vec![0.0; k];
        let mut ddpsi = vec![0.0; k];
        for i in 0..k {
            let h = self.inv_widths[i];
            let d = x - self.centers[i];
            dpsi[i] = -2.0 * h * d * psi[i];
            ddpsi[i] = (4.0 * h * h * d * d - 2.0 * h) * psi[i];
        }
        let s: f64 = psi.iter().sum();
        let ds: f64 = dpsi.iter().sum();
        let dds: f64 = ddpsi.iter().sum();
        let phi = psi.iter().map(|p| p / s).collect();
        let dphi = (0..k).map(|i| dpsi[i] / s - psi[i] * ds / (s * s)).collect();
        let ddphi = (0..k)
            .map(|i| {
                ddpsi[i] / s - 2.0 * dpsi[i] * ds / (s * s) - psi[i] * dds / (s * s)
                    + 2.0 * psi[i] * ds * ds / (s * s * s)
            })
            .collect();
        (phi, dphi, ddphi)
    }

    /// Basis matrix with one row per phase (`phases.len() × K`, row-major).
    pub fn design_matrix(&self, phases: &[f64]) -> Vec<f64> {
        let k = self.num_kernels();
        let mut out = vec![0.0; phases.len() * k];
        for (row, &x) in out.chunks_exact_mut(k).zip(phases) {
            self.eval_into(x, row);
        }
        out
    }
}
