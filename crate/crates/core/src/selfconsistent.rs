//! Self-consistently linearized steady state.
//!
//! The pump is linearized around `β̃ = ε − ⟨ã²⟩` and the photon mode solved
//! exactly in that linear model, which closes into the scalar relation
//!
//! ```text
//! β̃ = ε − β̃ / (2x(1 − β̃²))
//! ```
//!
//! The left minus right side is strictly increasing on `[0, 1)`, negative at
//! zero and unbounded at one, so bisection always brackets the single
//! admissible root.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfConsistentSolution {
    pub eps: f64,
    pub x: f64,
    /// Scaled mechanical amplitude β̃.
    pub beta_ss: f64,
    /// Scaled ⟨ã†ã⟩.
    pub n_phot: f64,
    /// Scaled ⟨ã²⟩.
    pub a_sq: f64,
    /// Unscaled ⟨X²⟩, X = a† + a.
    pub var_x: f64,
    /// Unscaled ⟨Y²⟩, Y = i(a† − a).
    pub var_y: f64,
}

impl SelfConsistentSolution {
    pub fn solve(eps: f64, x: f64) -> Result<Self> {
        let beta_ss = solve_beta(eps, x)?;
        let (n_phot, a_sq) = moments(beta_ss, x)?;
        let (var_x, var_y) = quadrature_variances(beta_ss, x)?;
        Ok(Self {
            eps,
            x,
            beta_ss,
            n_phot,
            a_sq,
            var_x,
            var_y,
        })
    }

    /// Quadrature variances built from the scaled field ã, i.e. ⟨X̃²⟩ = ⟨X²⟩/x.
    pub fn scaled_variances(&self) -> (f64, f64) {
        (self.var_x / self.x, self.var_y / self.x)
    }
}

fn relation(beta: f64, eps: f64, x: f64) -> f64 {
    beta - eps + beta / (2.0 * x * (1.0 - beta * beta))
}

/// Residual of the self-consistency relation at `beta`.
pub fn residual(beta: f64, eps: f64, x: f64) -> f64 {
    relation(beta, eps, x).abs()
}

pub fn solve_beta(eps: f64, x: f64) -> Result<f64> {
    require(eps >= 0.0 && eps.is_finite(), "eps", eps, "must be >= 0")?;
    require(x > 0.0 && x.is_finite(), "x", x, "must be > 0")?;
    if eps == 0.0 {
        return Ok(0.0);
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if relation(mid, eps, x) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = if residual(lo, eps, x) <= residual(hi, eps, x) || hi >= 1.0 {
        lo
    } else {
        hi
    };

    // Near β = 1 the slope 1/(4x(1−β)²) can exceed 1e6, so one ulp of β
    // already moves the residual past RESIDUAL_TOL. Accept that floor.
    let slope = 1.0 + (1.0 + beta * beta) / (2.0 * x * (1.0 - beta * beta).powi(2));
    let floor = 4.0 * slope * f64::EPSILON * beta.max(f64::MIN_POSITIVE);
    if !(0.0..1.0).contains(&beta) || residual(beta, eps, x) > RESIDUAL_TOL.max(floor) {
        return Err(Error::NoRoot { eps, x });
    }
    if let Some(closed) = beta_radical(eps, x) {
        if (closed - beta).abs() > 1e-6 {
            log::warn!("radical root {closed} disagrees with bisection root {beta} (eps = {eps}, x = {x})");
        }
    }
    Ok(beta)
}

/// Cardano form of the root with `ℵ = ε² + 3/(2x) + 3` and
/// `ℶ = ε² + 9/(4x) − 9`, using principal cube and square roots.
///
/// Returns `None` when the principal branches give a visibly complex number.
pub fn beta_radical(eps: f64, x: f64) -> Option<f64> {
    let aleph = eps * eps + 1.5 / x + 3.0;
    let beth = eps * eps + 2.25 / x - 9.0;
    let disc = Complex64::new(aleph.powi(3) - eps * eps * beth * beth, 0.0).sqrt();
    let w = (Complex64::new(eps * beth, 0.0) + Complex64::i() * disc).cbrt();
    if w.norm() == 0.0 {
        return None;
    }
    let s3 = 3f64.sqrt();
    let root = Complex64::new(eps / 3.0, 0.0)
        - Complex64::new(1.0, -s3) * aleph / (6.0 * w)
        - Complex64::new(1.0, s3) / 6.0 * w;
    (root.im.abs() <= 1e-8 * root.re.abs().max(1.0)).then_some(root.re)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain {
            what: "beta_ss",
            detail: format!("{beta} not in [0, 1)"),
        });
    }
    Ok(())
}

/// Linearized scaled moments `(⟨ã†ã⟩, ⟨ã²⟩)` at pump amplitude `beta`.
pub fn moments(beta: f64, x: f64) -> Result<(f64, f64)> {
    check_beta(beta)?;
    let a_sq = beta / (2.0 * x * (1.0 - beta * beta));
    Ok((beta * a_sq, a_sq))
}

/// Unscaled `(⟨X²⟩, ⟨Y²⟩)` of the linearized Gaussian state (`⟨a⟩ = 0`).
pub fn quadrature_variances(beta: f64, x: f64) -> Result<(f64, f64)> {
    let (n, a2) = moments(beta, x)?;
    let (n, a2) = (x * n, x * a2);
    Ok((1.0 + 2.0 * n + 2.0 * a2, 1.0 + 2.0 * n - 2.0 * a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::stable_beta;
    use proptest::prelude::*;

    #[test]
    fn undriven_is_zero() {
        for x in [0.125, 12.5, 1e6] {
            assert_eq!(solve_beta(0.0, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn large_x_below_threshold() {
        assert!((solve_beta(0.5, 1e6).unwrap() - 0.5).abs() <= 1e-3);
    }

    #[test]
    fn saturation_gap_above_threshold() {
        // 1 - beta ~ 1/(4x(eps-1)) from the relation near beta = 1
        let delta = 1.0 - solve_beta(2.0, 1e4).unwrap();
        assert!((delta - 2.5e-5).abs() <= 0.2 * 2.5e-5, "delta = {delta}");
    }

    #[test]
    fn residual_and_monotonicity_grid() {
        for x in [0.125, 12.5, 50.0] {
            let mut prev = 0.0;
            for i in 0..=300 {
                let eps = i as f64 * 0.01;
                let b = solve_beta(eps, x).unwrap();
                assert!(residual(b, eps, x) <= RESIDUAL_TOL);
                assert!(b >= prev);
                assert!((0.0..1.0).contains(&b));
                prev = b;
            }
        }
    }

    #[test]
    fn matches_radical_where_real() {
        let mut checked = 0;
        for x in [0.125, 12.5, 50.0] {
            for i in 1..=30 {
                let eps = i as f64 * 0.1;
                if let Some(r) = beta_radical(eps, x) {
                    assert!((r - solve_beta(eps, x).unwrap()).abs() < 1e-9, "eps {eps} x {x}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 60);
    }

    #[test]
    fn large_x_tracks_semiclassical() {
        for eps in [0.5, 2.0] {
            assert!((solve_beta(eps, 1e6).unwrap() - stable_beta(eps)).abs() <= 1e-3);
        }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moments(0.0, 12.5).unwrap(), (0.0, 0.0));
        let (n, _) = moments(0.5, 12.5).unwrap();
        assert!((n - 0.25 / (25.0 * 0.75)).abs() < 1e-15);
        for i in 1..=9 {
            let b = i as f64 / 10.0;
            let (n, a2) = moments(b, 12.5).unwrap();
            assert_eq!(n, b * a2);
        }
        assert!(moments(1.0, 12.5).is_err());
        assert!(moments(-0.1, 12.5).is_err());
    }

    #[test]
    fn vacuum_quadratures() {
        assert_eq!(quadrature_variances(0.0, 12.5).unwrap(), (1.0, 1.0));
    }

    proptest! {
        #[test]
        fn squeezed_and_uncertainty_bounded(beta in 1e-6f64..0.999, x in 0.01f64..100.0) {
            let (vx, vy) = quadrature_variances(beta, x).unwrap();
            prop_assert!(vy < 1.0);
            prop_assert!(vx * vy >= 1.0 - 1e-12);
        }

        #[test]
        fn root_in_unit_interval(eps in 0.0f64..5.0, x in 0.01f64..1e4) {
            let b = solve_beta(eps, x).unwrap();
            prop_assert!((0.0..1.0).contains(&b));
            prop_assert!(residual(b, eps, x) <= RESIDUAL_TOL);
        }
    }
}
