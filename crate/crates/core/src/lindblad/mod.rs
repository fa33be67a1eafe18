//! Truncated Fock-space steady state of the two-mode master equation.
//!
//! The photon mode is kept in its number basis. The phonon mode is expanded
//! around a real displacement `s` (by default the stable mean-field
//! amplitude), so that a handful of phonon levels captures a pump that
//! carries several quanta. `PhononFrame::Fixed(0.0)` gives the plain number
//! basis.

mod liouvillian;
pub mod operators;
mod qfunc;
mod shanks;
mod solver;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{require, Result};
use crate::params::PhysicalParams;

pub use liouvillian::{build_liouvillian, Liouvillian};
pub use operators::{build_operators, Operators};
pub use qfunc::{q_function, GridSpec, QGrid, OUTER_MASS_LIMIT};
pub use shanks::{shanks, ShanksResult};
pub use solver::{steady_state, truncation_study, Method, SolverOptions, TruncationStudy};
pub use state::{DensityMatrix, Diagnostics, Observables};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhononFrame {
    /// `min(2E/Γ, κ/(4g))`, the stable mean-field pump amplitude.
    MeanField,
    Fixed(f64),
}

impl PhononFrame {
    pub fn shift(&self, p: &PhysicalParams) -> f64 {
        match *self {
            PhononFrame::Fixed(s) => s,
            PhononFrame::MeanField => {
                let below = 2.0 * p.drive / p.gamma_m;
                if p.g > 0.0 {
                    below.min(p.kappa / (4.0 * p.g))
                } else {
                    below
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertConfig {
    /// Photon levels |0⟩..|n_phot − 1⟩.
    pub n_phot: usize,
    pub n_phon: usize,
    pub frame: PhononFrame,
}

impl HilbertConfig {
    pub fn new(n_phot: usize, n_phon: usize) -> Result<Self> {
        require(n_phot >= 2, "n_phot", n_phot as f64, "must be >= 2")?;
        require(n_phon >= 2, "n_phon", n_phon as f64, "must be >= 2")?;
        Ok(Self {
            n_phot,
            n_phon,
            frame: PhononFrame::MeanField,
        })
    }

    /// The `2N × N` truncation.
    pub fn paired(n: usize) -> Result<Self> {
        Self::new(2 * n, n)
    }

    pub fn with_frame(self, frame: PhononFrame) -> Self {
        Self { frame, ..self }
    }

    pub fn total(&self) -> usize {
        self.n_phot * self.n_phon
    }
}
