use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::HilbertConfig;

/// Steady state in the displaced product basis.
///
/// The generator is real in this basis, so ρ is stored as a real symmetric
/// matrix. Diagnostics are those of the raw solver output, before
/// symmetrization, clipping and normalization.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub hilbert: HilbertConfig,
    pub shift: f64,
    pub rho: DMatrix<f64>,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// `‖L(ρ)‖_F / ‖ρ‖_F` of the returned (processed) matrix.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Unscaled ⟨a†a⟩.
    pub n_phot: f64,
    pub a_mean: f64,
    pub a_sq: f64,
    pub b_mean: f64,
    /// ⟨X²⟩ − ⟨X⟩², X = a† + a.
    pub var_x: f64,
    /// ⟨Y²⟩ − ⟨Y⟩², Y = i(a† − a).
    pub var_y: f64,
}

/// Solver-side quality figures of one steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub trace: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl DensityMatrix {
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            trace: self.trace(),
            hermiticity_defect: self.hermiticity_defect,
            min_eigenvalue: self.min_eigenvalue,
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace()
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Smallest eigenvalue of the stored ρ.
    pub fn stored_min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.rho.clone()).eigenvalues.min()
    }

    pub fn observables(&self) -> Observables {
        let nb = self.hilbert.n_phon;
        let d = self.dim();
        let (mut n, mut a1, mut a2, mut c1) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..d {
            let (na, kb) = (i / nb, i % nb);
            n += na as f64 * self.rho[(i, i)];
            // tr(Oρ) = Σ O_ij ρ_ji; a|n⟩ = √n|n−1⟩ gives O_{i−nb, i}
            if na >= 1 {
                a1 += (na as f64).sqrt() * self.rho[(i, i - nb)];
            }
            if na >= 2 {
                a2 += ((na * (na - 1)) as f64).sqrt() * self.rho[(i, i - 2 * nb)];
            }
            if kb >= 1 {
                c1 += (kb as f64).sqrt() * self.rho[(i, i - 1)];
            }
        }
        let x_mean = 2.0 * a1;
        Observables {
            n_phot: n,
            a_mean: a1,
            a_sq: a2,
            b_mean: self.shift + c1,
            var_x: 1.0 + 2.0 * n + 2.0 * a2 - x_mean * x_mean,
            // ⟨Y⟩ = 2 Im⟨a⟩ vanishes for real ρ
            var_y: 1.0 + 2.0 * n - 2.0 * a2,
        }
    }

    /// Phonon ⟨c†c⟩ in the displaced frame.
    pub fn phonon_fluctuation_number(&self) -> f64 {
        let nb = self.hilbert.n_phon;
        (0..self.dim()).map(|i| (i % nb) as f64 * self.rho[(i, i)]).sum()
    }

    pub fn partial_trace_photon(&self) -> DMatrix<f64> {
        partial_trace_photon(&self.rho, &self.hilbert)
    }
}

/// Traces out the phonon factor of a product-basis matrix.
pub fn partial_trace_photon(rho: &DMatrix<f64>, h: &HilbertConfig) -> DMatrix<f64> {
    let (na, nb) = (h.n_phot, h.n_phon);
    DMatrix::from_fn(na, na, |m, n| (0..nb).map(|k| rho[(m * nb + k, n * nb + k)]).sum())
}
