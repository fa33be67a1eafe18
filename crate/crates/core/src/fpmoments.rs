//! Moments of the steady-state complex-P distribution.
//!
//! Normally ordered moments reduce to the series
//!
//! ```text
//! S(n, m) = Σ_k (2x)^k / k! · ε^{k + (n+m)/2} · F(−(k+m)) · F(−(k+n))
//! ```
//!
//! with `F(−j) = ₂F₁(−j, x; 2x; 2)`, normalized by `S(0, 0)`. Odd `F` vanish,
//! so only `k ≡ n (mod 2)` contributes and the power of ε is an integer.
//! Surviving terms are products of even-order `F`, all positive, so nothing
//! cancels; terms are accumulated in log space because `S` itself leaves the
//! f64 range for large `x·ε`.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::specialfns::{HypTable, DEFAULT_K_MAX};

pub const DEFAULT_TOL: f64 = 1e-12;
const STOP_RUN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub eps: f64,
    pub x: f64,
    /// Scaled ⟨ã†ã⟩.
    pub n_phot: f64,
    /// Scaled ⟨ã²⟩.
    pub a_sq: f64,
    /// ε − ⟨ã²⟩.
    pub beta_ss: f64,
    /// Unscaled ⟨X²⟩.
    pub var_x: f64,
    /// Unscaled ⟨Y²⟩.
    pub var_y: f64,
    /// ln S(0,0); the normalization itself overflows f64 for large x·ε.
    pub ln_norm: f64,
    pub k_used: usize,
    /// Largest last-term to partial-sum ratio over the three series.
    pub trunc_err: f64,
}

impl MomentSet {
    pub fn norm(&self) -> f64 {
        self.ln_norm.exp()
    }
}

/// Result of one series summation in log form.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    /// ln of the sum, `-inf` for an empty sum.
    ln: f64,
    k_used: usize,
    last_rel: f64,
}

/// Series evaluator bound to one `x`, reusable across drives and orders.
#[derive(Debug, Clone)]
pub struct FpSeries {
    table: HypTable,
    k_max: usize,
    /// ln k! for k = 0..=k_max.
    ln_fact: Vec<f64>,
}

/// Highest moment order the default evaluator supports.
pub const MAX_ORDER: usize = 8;

impl FpSeries {
    pub fn new(x: f64) -> Result<Self> {
        Self::with_k_max(x, DEFAULT_K_MAX)
    }

    pub fn with_k_max(x: f64, k_max: usize) -> Result<Self> {
        let table = HypTable::new(x, k_max + MAX_ORDER)?;
        let mut ln_fact = Vec::with_capacity(k_max + 1);
        let mut acc = 0.0;
        ln_fact.push(0.0);
        for k in 1..=k_max {
            acc += (k as f64).ln();
            ln_fact.push(acc);
        }
        Ok(Self {
            table,
            k_max,
            ln_fact,
        })
    }

    pub fn x(&self) -> f64 {
        self.table.x()
    }

    fn check(&self, n: usize, m: usize, eps: f64, tol: f64) -> Result<()> {
        require(eps >= 0.0 && eps.is_finite(), "eps", eps, "must be >= 0")?;
        require(tol > 0.0, "tol", tol, "must be > 0")?;
        let order = n.max(m);
        if order > MAX_ORDER {
            return Err(Error::OrderOverflow {
                k: order,
                k_max: MAX_ORDER,
            });
        }
        Ok(())
    }

    fn log_series(&self, n: usize, m: usize, eps: f64, tol: f64) -> Result<LogSum> {
        let x = self.x();
        let ln_2x = (2.0 * x).ln();
        let ln_eps = eps.ln();
        let half = (n + m) / 2;

        // partial sum = mant · e^scale
        let mut scale = f64::NEG_INFINITY;
        let mut mant = 0.0f64;
        let mut run = 0;
        let mut last_rel = f64::INFINITY;
        let mut k = n % 2;
        while k <= self.k_max {
            let lt = k as f64 * ln_2x - self.ln_fact[k]
                + (k + half) as f64 * ln_eps
                + self.table.ln_abs(k + m)?
                + self.table.ln_abs(k + n)?;
            if lt > scale {
                mant = mant * (scale - lt).exp() + 1.0;
                scale = lt;
            } else {
                mant += (lt - scale).exp();
            }
            last_rel = (lt - scale).exp() / mant;
            if last_rel < tol {
                run += 1;
                if run >= STOP_RUN {
                    return Ok(LogSum {
                        ln: scale + mant.ln(),
                        k_used: k + 1,
                        last_rel,
                    });
                }
            } else {
                run = 0;
            }
            k += 2;
        }
        log::debug!("series stalled with last relative term {last_rel}");
        Err(Error::SeriesNonConvergence {
            eps,
            x,
            k_max: self.k_max,
        })
    }

    /// Normalized `⟨ã†ⁿ ãᵐ⟩` in scaled units.
    pub fn moment(&self, n: usize, m: usize, eps: f64, tol: f64) -> Result<f64> {
        self.check(n, m, eps, tol)?;
        if (n + m) % 2 == 1 {
            return Ok(0.0);
        }
        if eps == 0.0 {
            return Ok(if n + m == 0 { 1.0 } else { 0.0 });
        }
        if n + m == 0 {
            return Ok(1.0);
        }
        // S(n,m) is symmetric; fix the order so both calls give identical bits.
        let (n, m) = (n.min(m), n.max(m));
        let s = self.log_series(n, m, eps, tol)?;
        let s0 = self.log_series(0, 0, eps, tol)?;
        Ok((s.ln - s0.ln).exp())
    }

    pub fn observables(&self, eps: f64, tol: f64) -> Result<MomentSet> {
        self.check(0, 2, eps, tol)?;
        let x = self.x();
        let (n_phot, a_sq, ln_norm, k_used, trunc_err) = if eps == 0.0 {
            (0.0, 0.0, 0.0, 1, 0.0)
        } else {
            let s0 = self.log_series(0, 0, eps, tol)?;
            let s11 = self.log_series(1, 1, eps, tol)?;
            let s02 = self.log_series(0, 2, eps, tol)?;
            (
                (s11.ln - s0.ln).exp(),
                (s02.ln - s0.ln).exp(),
                s0.ln,
                s0.k_used.max(s11.k_used).max(s02.k_used),
                s0.last_rel.max(s11.last_rel).max(s02.last_rel),
            )
        };
        let (n_u, a2_u) = (x * n_phot, x * a_sq);
        Ok(MomentSet {
            eps,
            x,
            n_phot,
            a_sq,
            beta_ss: eps - a_sq,
            var_x: 1.0 + 2.0 * n_u + 2.0 * a2_u,
            var_y: 1.0 + 2.0 * n_u - 2.0 * a2_u,
            ln_norm,
            k_used,
            trunc_err,
        })
    }
}

/// One-shot `⟨ã†ⁿ ãᵐ⟩`; builds a fresh hypergeometric table, so sweeps
/// should hold an [`FpSeries`] instead.
pub fn moment(n: usize, m: usize, eps: f64, x: f64, tol: f64) -> Result<f64> {
    FpSeries::new(x)?.moment(n, m, eps, tol)
}

pub fn observables(eps: f64, x: f64, tol: f64) -> Result<MomentSet> {
    FpSeries::new(x)?.observables(eps, tol)
}
