//! The master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + κ𝓛(a)ρ + Γn̄_B𝓛(b†)ρ + Γ(n̄_B+1)𝓛(b)ρ
//! H = ig(a†a†b − aab†) + iE(b† − b)
//! ```
//!
//! written in a displaced phonon frame `b = s + c` with real `s`. In that
//! frame `H = iK` for a real antisymmetric
//!
//! ```text
//! K = g(a†²c − a²c†) + gs(a†² − a²) + (E − Γs/2)(c† − c)
//! ```
//!
//! (the displacement moves a drive term out of the dissipators and into K,
//! independently of n̄_B), so the generator is real:
//!
//! ```text
//! L(ρ) = Aρ + ρAᵀ + Σ_j J_j ρ J_jᵀ,    A = K − ½ Σ_j J_jᵀ J_j
//! ```
//!
//! Vectorization stacks columns, `vec(ρ)[i + j·d] = ρ_ij`, so
//! `vec(XρY) = (Yᵀ ⊗ X) vec(ρ)`.

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use super::operators::{build_operators, kron, prune, Operators};
use super::HilbertConfig;
use crate::error::Result;
use crate::params::PhysicalParams;

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub hilbert: HilbertConfig,
    pub params: PhysicalParams,
    /// Phonon displacement `s`; `⟨b⟩ = s + ⟨c⟩`.
    pub shift: f64,
    pub ops: Operators,
    /// `H = iK`.
    pub k: CsrMatrix<f64>,
    /// Jump operators with their rates folded in.
    pub jumps: Vec<CsrMatrix<f64>>,
    /// `K − ½ Σ JᵀJ`.
    pub a_eff: CsrMatrix<f64>,
}

pub fn build_liouvillian(p: &PhysicalParams, h: &HilbertConfig) -> Result<Liouvillian> {
    p.validate_allow_uncoupled()?;
    let s = h.frame.shift(p);
    let ops = build_operators(h);
    let (a, c) = (&ops.a, &ops.b);
    let (ad, cd) = (a.transpose(), c.transpose());
    let a2 = a * a;
    let ad2 = &ad * &ad;

    let k = &(&(&ad2 * c) - &(&a2 * &cd)) * p.g
        + &(&ad2 - &a2) * (p.g * s)
        + &(&cd - c) * (p.drive - p.gamma_m * s / 2.0);
    let k = prune(&k);

    let mut jumps = Vec::new();
    for (rate, op) in [
        (p.kappa, a.clone()),
        (p.gamma_m * p.nbar_b, cd.clone()),
        (p.gamma_m * (p.nbar_b + 1.0), c.clone()),
    ] {
        if rate > 0.0 {
            jumps.push(op * rate.sqrt());
        }
    }
    let mut a_eff = k.clone();
    for j in &jumps {
        a_eff = &a_eff - &(&(&j.transpose() * j) * 0.5);
    }
    let a_eff = prune(&a_eff);

    Ok(Liouvillian {
        hilbert: *h,
        params: *p,
        shift: s,
        ops,
        k,
        jumps,
        a_eff,
    })
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.hilbert.total()
    }

    /// `L(ρ)` without forming the superoperator.
    pub fn apply(&self, rho: &DMatrix<f64>) -> DMatrix<f64> {
        let ar = &self.a_eff * rho;
        let mut out = &ar + (&self.a_eff * rho.transpose()).transpose();
        for j in &self.jumps {
            let jr = j * rho;
            out += (j * jr.transpose()).transpose();
        }
        out
    }

    /// Explicit `d² × d²` superoperator.
    pub fn to_superoperator(&self) -> CsrMatrix<f64> {
        let d = self.dim();
        let id = CsrMatrix::identity(d);
        let mut l = &kron(&id, &self.a_eff) + &kron(&self.a_eff, &id);
        for j in &self.jumps {
            l = &l + &kron(j, j);
        }
        l
    }

    /// `max_col |(tᵀL)_col|` with `t = vec(1)`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let l = self.to_superoperator();
        let mut acc = vec![0.0f64; d * d];
        for i in 0..d {
            let row = l.row(i + i * d);
            for (&col, &v) in row.col_indices().iter().zip(row.values()) {
                acc[col] += v;
            }
        }
        acc.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense copy of a sparse superoperator, for the direct solver and tests.
pub(crate) fn dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    super::operators::to_dense(m)
}

#[cfg(test)]
mod tests {
    use super::super::PhononFrame;
    use super::*;

    fn vec_cols(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_column_slice(m.as_slice())
    }

    #[test]
    fn superoperator_matches_action() {
        let p = PhysicalParams::new(1.0, 0.7, 0.3, 0.4, 0.2).unwrap();
        for frame in [PhononFrame::MeanField, PhononFrame::Fixed(0.0)] {
            let h = HilbertConfig::new(4, 3).unwrap().with_frame(frame);
            let l = build_liouvillian(&p, &h).unwrap();
            let d = l.dim();
            let rho = DMatrix::from_fn(d, d, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
            let lhs = dense(&l.to_superoperator()) * vec_cols(&rho);
            let rhs = vec_cols(&l.apply(&rho));
            assert!((lhs - rhs).amax() < 1e-12);
        }
    }

    #[test]
    fn trace_preserving() {
        let p = PhysicalParams::new(1.0, 1.0, 0.1, 2.0, 0.3).unwrap();
        let h = HilbertConfig::new(8, 5).unwrap();
        assert!(build_liouvillian(&p, &h).unwrap().trace_defect() <= 1e-12);
    }

    #[test]
    fn k_is_antisymmetric() {
        let p = PhysicalParams::new(1.0, 1.0, 0.1, 2.0, 0.0).unwrap();
        let h = HilbertConfig::new(6, 4).unwrap();
        let k = dense(&build_liouvillian(&p, &h).unwrap().k);
        assert!((&k + k.transpose()).amax() == 0.0);
    }

    #[test]
    fn vacuum_is_stationary_without_drive() {
        let p = PhysicalParams::new(1.0, 1.0, 0.1, 0.0, 0.0).unwrap();
        let h = HilbertConfig::new(6, 4).unwrap();
        let l = build_liouvillian(&p, &h).unwrap();
        let mut vac = DMatrix::zeros(24, 24);
        vac[(0, 0)] = 1.0;
        assert_eq!(l.apply(&vac).amax(), 0.0);
        assert_eq!((dense(&l.to_superoperator()) * vec_cols(&vac)).amax(), 0.0);
    }

    #[test]
    fn mean_field_shift() {
        let h = HilbertConfig::new(4, 4).unwrap();
        // below threshold 2E/Γ, above it the saturated κ/(4g)
        let below = PhysicalParams::new(1.0, 1.0, 0.1, 0.5, 0.0).unwrap();
        assert!((build_liouvillian(&below, &h).unwrap().shift - 1.0).abs() < 1e-15);
        let above = below.with_drive(3.0);
        assert!((build_liouvillian(&above, &h).unwrap().shift - 2.5).abs() < 1e-15);
        let plain = h.with_frame(PhononFrame::Fixed(0.0));
        assert_eq!(build_liouvillian(&above, &plain).unwrap().shift, 0.0);
    }
}
