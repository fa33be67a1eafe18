//! Shanks transformation against geometric truncation transients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShanksResult {
    pub value: f64,
    /// Some triple had a vanishing second difference; its last term was
    /// passed through unchanged.
    pub degenerate: bool,
    /// Successive transformed sequences, the input first.
    pub table: Vec<Vec<f64>>,
}

/// `(A_{n+1}A_{n−1} − A_n²) / (A_{n+1} + A_{n−1} − 2A_n)` on each
/// consecutive triple, repeated while at least three terms remain.
pub fn shanks(seq: &[f64]) -> Result<ShanksResult> {
    if seq.len() < 3 {
        return Err(Error::Domain {
            what: "shanks input",
            detail: format!("need at least 3 terms, got {}", seq.len()),
        });
    }
    let mut table = vec![seq.to_vec()];
    let mut degenerate = false;
    while table.last().unwrap().len() >= 3 {
        let cur = table.last().unwrap();
        let next: Vec<f64> = cur
            .windows(3)
            .map(|w| {
                let (a0, a1, a2) = (w[0], w[1], w[2]);
                let den = a2 + a0 - 2.0 * a1;
                let scale = a0.abs().max(a1.abs()).max(a2.abs()).max(f64::MIN_POSITIVE);
                if den.abs() < 1e-14 * scale {
                    degenerate = true;
                    a2
                } else {
                    (a2 * a0 - a1 * a1) / den
                }
            })
            .collect();
        table.push(next);
    }
    let last = table.last().unwrap();
    Ok(ShanksResult {
        value: last[last.len() - 1],
        degenerate,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometric_limit() {
        let seq: Vec<f64> = (1..=3).map(|n| 1.0 + 0.5f64.powi(n)).collect();
        let r = shanks(&seq).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(!r.degenerate);
    }

    #[test]
    fn constant_is_degenerate() {
        let r = shanks(&[0.7; 4]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.value, 0.7);
    }

    #[test]
    fn noisy_transient() {
        let noise = [1e-9, -2e-9, 0.5e-9, 1.5e-9, -1e-9];
        let seq: Vec<f64> = (0..5).map(|n| 2.0 + 3.0 * 0.8f64.powi(n as i32 + 10) + noise[n]).collect();
        let r = shanks(&seq).unwrap();
        assert!((r.value - 2.0).abs() < 1e-3);
        assert_eq!(r.table.len(), 3);
    }

    #[test]
    fn too_short() {
        assert!(shanks(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn exact_for_any_geometric_tail(c in -10.0f64..10.0, a in 0.1f64..5.0, q in -0.9f64..0.9) {
            prop_assume!(q.abs() > 0.05);
            let seq: Vec<f64> = (1..=3).map(|n| c + a * q.powi(n)).collect();
            let r = shanks(&seq).unwrap();
            prop_assert!((r.value - c).abs() <= 1e-9 * (1.0 + c.abs() + a));
        }
    }
}
