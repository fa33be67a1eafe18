//! Terminating Gauss hypergeometric values `₂F₁(−k, x; 2x; 2)`.
//!
//! The series
//!
//! ```text
//! Σ_{j=0}^{k} (−k)_j (x)_j / (2x)_j · 2^j / j!
//! ```
//!
//! alternates in sign and its largest terms exceed the result by up to
//! thirty orders of magnitude for `k ≈ 60`, so no fixed-width floating
//! accumulation survives it. Every finite `f64` is a dyadic rational
//! `P/Q`, which makes each Pochhammer ratio a ratio of integers; the sum is
//! evaluated exactly in nested form and rounded once. Odd `k` give an exact
//! zero.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{require, Error, Result};

pub const DEFAULT_K_MAX: usize = 500;

/// Exact rational representation `num/den` (`den > 0`) of a finite f64.
pub(crate) fn dyadic(x: f64) -> (BigInt, BigInt) {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return (BigInt::zero(), BigInt::from(1));
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let tz = mant.trailing_zeros() as i64;
    mant >>= tz;
    e += tz;
    let num = BigInt::from(sign) * BigInt::from(mant);
    if e >= 0 {
        (num << e as usize, BigInt::from(1))
    } else {
        (num, BigInt::from(1) << (-e) as usize)
    }
}

fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

/// Rounds `num/den` to f64 and returns it with `ln|num/den|`.
pub(crate) fn ratio_to_f64(num: &BigInt, den: &BigInt) -> (f64, f64) {
    if num.is_zero() {
        return (0.0, f64::NEG_INFINITY);
    }
    let negative = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let n = num.magnitude();
    let d = den.magnitude();
    // Scale so the integer quotient carries 64+ significant bits.
    let shift = 65 - (n.bits() as i64 - d.bits() as i64);
    let (q, r) = if shift >= 0 {
        (n << shift as usize).div_rem(d)
    } else {
        n.div_rem(&(d << (-shift) as usize))
    };
    // Sticky bit so the final rounding to 53 bits sees a nonzero remainder.
    let q = if r.is_zero() { q } else { q | num_bigint::BigUint::from(1u8) };
    let qf = q.to_f64().expect("quotient fits in f64");
    let ln = qf.ln() - shift as f64 * std::f64::consts::LN_2;
    let v = ldexp(qf, -shift);
    (if negative { -v } else { v }, ln)
}

/// Exact `₂F₁(−k, x; 2x; 2)` as an unreduced fraction.
fn exact_value(k: usize, p: &BigInt, q: &BigInt) -> (BigInt, BigInt) {
    // F = 1 + r_0(1 + r_1(1 + ... (1 + r_{k-1}))) with
    // r_j = 2(j - k)(x + j) / ((2x + j)(j + 1)),  x = p/q.
    let mut acc_num = BigInt::from(1);
    let mut acc_den = BigInt::from(1);
    let two_p = p * 2;
    for j in (0..k).rev() {
        let jb = BigInt::from(j);
        let step_num = BigInt::from(2 * (j as i64 - k as i64)) * (p + &jb * q);
        let step_den = (&two_p + &jb * q) * BigInt::from(j + 1);
        acc_num = &step_den * &acc_den + step_num * acc_num;
        acc_den *= step_den;
    }
    (acc_num, acc_den)
}

fn check_x(x: f64) -> Result<()> {
    require(x > 0.0 && x.is_finite(), "x", x, "must be > 0 and finite")
}

/// `₂F₁(−k, x; 2x; 2)` for `k ≤ DEFAULT_K_MAX`.
pub fn hyp2f1_terminating(k: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    if k > DEFAULT_K_MAX {
        return Err(Error::OrderOverflow {
            k,
            k_max: DEFAULT_K_MAX,
        });
    }
    let (p, q) = dyadic(x);
    let (n, d) = exact_value(k, &p, &q);
    Ok(ratio_to_f64(&n, &d).0)
}

/// Values `F(−k, x; 2x; 2)` for `k = 0..=k_max` at fixed `x`.
///
/// Immutable once built; the moment series reads the same table for every
/// `(n, m, k)` combination.
#[derive(Debug, Clone)]
pub struct HypTable {
    x: f64,
    values: Vec<f64>,
    ln_abs: Vec<f64>,
}

impl HypTable {
    pub fn new(x: f64, k_max: usize) -> Result<Self> {
        check_x(x)?;
        let (p, q) = dyadic(x);
        let (values, ln_abs) = (0..=k_max)
            .map(|k| {
                let (n, d) = exact_value(k, &p, &q);
                ratio_to_f64(&n, &d)
            })
            .unzip();
        Ok(Self { x, values, ln_abs })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> Result<f64> {
        self.values.get(k).copied().ok_or(Error::OrderOverflow {
            k,
            k_max: self.k_max(),
        })
    }

    /// `ln|F(−k)|`, `-inf` for the vanishing odd orders.
    pub fn ln_abs(&self, k: usize) -> Result<f64> {
        self.ln_abs.get(k).copied().ok_or(Error::OrderOverflow {
            k,
            k_max: self.k_max(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_is_exact() {
        for x in [0.125, 12.5, 50.0, 0.1, 1e-300, 3.0e300, 5e-324] {
            let (n, d) = dyadic(x);
            assert_eq!(ratio_to_f64(&n, &d).0, x);
        }
    }

    #[test]
    fn ratio_rounding_and_log() {
        let (v, ln) = ratio_to_f64(&BigInt::from(1), &BigInt::from(3));
        assert_eq!(v, 1.0 / 3.0);
        assert!((ln - (1.0f64 / 3.0).ln()).abs() < 1e-13);
        let (v, _) = ratio_to_f64(&BigInt::from(-7), &BigInt::from(2));
        assert_eq!(v, -3.5);
        // far below the f64 range: value underflows, log does not
        let tiny_den = BigInt::from(1) << 5000usize;
        let (v, ln) = ratio_to_f64(&BigInt::from(1), &tiny_den);
        assert_eq!(v, 0.0);
        assert!((ln + 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn low_orders() {
        for x in [0.125, 1.0, 12.5, 50.0] {
            assert_eq!(hyp2f1_terminating(0, x).unwrap(), 1.0);
            assert_eq!(hyp2f1_terminating(1, x).unwrap(), 0.0);
            let f2 = hyp2f1_terminating(2, x).unwrap();
            assert!((f2 - 1.0 / (2.0 * x + 1.0)).abs() <= 1e-15 * f2);
        }
        assert!((hyp2f1_terminating(2, 12.5).unwrap() - 1.0 / 26.0).abs() < 1e-16);
    }

    #[test]
    fn order_limit() {
        assert!(matches!(
            hyp2f1_terminating(DEFAULT_K_MAX + 1, 1.0),
            Err(Error::OrderOverflow { .. })
        ));
        let t = HypTable::new(12.5, 10).unwrap();
        assert!(t.get(11).is_err());
        assert_eq!(t.get(0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_nonpositive_x() {
        assert!(hyp2f1_terminating(2, 0.0).is_err());
        assert!(HypTable::new(-1.0, 4).is_err());
    }
}
