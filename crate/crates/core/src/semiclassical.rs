//! Mean-field steady states of the noiseless scaled Langevin equations
//!
//! ```text
//! γ dã/dτ = −ã + ã*·b̃
//!   db̃/dτ = −b̃ − ã² + ε
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::ScaledParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    BelowThreshold,
    AboveThresholdPlus,
    AboveThresholdMinus,
}

/// Scaled mean-field amplitudes on one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub branch: Branch,
}

impl MeanFieldState {
    /// Unscaled amplitudes `(α, β) = (√x·α̃, √y·β̃)`.
    pub fn unscaled(&self, p: &ScaledParams) -> (Complex64, Complex64) {
        (self.alpha * p.x.sqrt(), self.beta * p.y.sqrt())
    }
}

/// All real fixed points for the dimensionless drive `eps`.
///
/// The trivial branch `(0, ε)` is always present. For `ε > 1` the bifurcated
/// pair `(±√(ε−1), 1)` follows it. At `ε = 1` the pair coincides with the
/// trivial branch and is not repeated.
pub fn fixed_points(eps: f64) -> Vec<MeanFieldState> {
    let mut out = vec![MeanFieldState {
        alpha: Complex64::new(0.0, 0.0),
        beta: Complex64::new(eps, 0.0),
        branch: Branch::BelowThreshold,
    }];
    if eps > 1.0 {
        let amp = (eps - 1.0).sqrt();
        for (sign, branch) in [(1.0, Branch::AboveThresholdPlus), (-1.0, Branch::AboveThresholdMinus)] {
            out.push(MeanFieldState {
                alpha: Complex64::new(sign * amp, 0.0),
                beta: Complex64::new(1.0, 0.0),
                branch,
            });
        }
    }
    out
}

/// Euclidean norm of the deterministic right-hand side at `state`.
pub fn qle_residual(state: &MeanFieldState, eps: f64) -> f64 {
    let a = state.alpha;
    let b = state.beta;
    let ra = -a + a.conj() * b;
    let rb = -b - a * a + eps;
    (ra.norm_sqr() + rb.norm_sqr()).sqrt()
}

/// Scaled pump amplitude on the stable branch, `min(ε, 1)`.
pub fn stable_beta(eps: f64) -> f64 {
    eps.min(1.0)
}

/// Scaled photon number `|α̃|²` on the stable branch, `max(0, ε − 1)`.
pub fn stable_photon_number(eps: f64) -> f64 {
    (eps - 1.0).max(0.0)
}
