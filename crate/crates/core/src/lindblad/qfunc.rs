//! Husimi function of a single truncated mode.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl GridSpec {
    /// Square grid over `[−half, half]²` with spacing `step`; contains the
    /// origin and is symmetric under α → −α.
    pub fn symmetric(half: f64, step: f64) -> Self {
        let n = 2 * (half / step).round() as usize + 1;
        let half = step * ((n - 1) / 2) as f64;
        Self {
            re_min: -half,
            re_max: half,
            im_min: -half,
            im_max: half,
            n_re: n,
            n_im: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.n_re >= 2, "n_re", self.n_re as f64, "must be >= 2")?;
        require(self.n_im >= 2, "n_im", self.n_im as f64, "must be >= 2")?;
        require(self.re_max > self.re_min, "re_max", self.re_max, "must exceed re_min")?;
        require(self.im_max > self.im_min, "im_max", self.im_max, "must exceed im_min")
    }

    pub fn step_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn step_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    pub fn point(&self, ir: usize, ii: usize) -> Complex64 {
        Complex64::new(
            self.re_min + ir as f64 * self.step_re(),
            self.im_min + ii as f64 * self.step_im(),
        )
    }
}

pub const OUTER_MASS_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    pub spec: GridSpec,
    /// `values[ii * n_re + ir]`
    pub values: Vec<f64>,
    /// Share of the grid mass where `|α|² > dim/2`, the region where the
    /// truncated coherent states are unreliable.
    pub outer_mass: f64,
    /// `outer_mass` exceeds [`OUTER_MASS_LIMIT`].
    pub truncation_warning: bool,
}

impl QGrid {
    pub fn at(&self, ir: usize, ii: usize) -> f64 {
        self.values[ii * self.spec.n_re + ir]
    }

    /// `Σ Q ΔRe ΔIm`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.step_re() * self.spec.step_im()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Interior grid points strictly above their eight neighbours, largest
    /// first.
    pub fn maxima(&self) -> Vec<(Complex64, f64)> {
        let (nr, ni) = (self.spec.n_re, self.spec.n_im);
        let mut out = Vec::new();
        for ii in 1..ni.saturating_sub(1) {
            for ir in 1..nr.saturating_sub(1) {
                let v = self.at(ir, ii);
                let peak = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dr| {
                        (di == 0 && dr == 0)
                            || v > self.at((ir as i64 + dr) as usize, (ii as i64 + di) as usize)
                    })
                });
                if peak {
                    out.push((self.spec.point(ir, ii), v));
                }
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out
    }

    /// `max |Q(α) − Q(−α)|`, meaningful on grids symmetric about 0.
    pub fn inversion_defect(&self) -> f64 {
        let (nr, ni) = (self.spec.n_re, self.spec.n_im);
        let mut m = 0.0f64;
        for ii in 0..ni {
            for ir in 0..nr {
                m = m.max((self.at(ir, ii) - self.at(nr - 1 - ir, ni - 1 - ii)).abs());
            }
        }
        m
    }
}

/// `Q(α) = ⟨α|ρ|α⟩/π` with coherent states truncated to the dimension of ρ
/// and renormalized there.
pub fn q_function(rho: &DMatrix<f64>, spec: &GridSpec) -> Result<QGrid> {
    spec.validate()?;
    let dim = rho.nrows();
    let mut values = Vec::with_capacity(spec.n_re * spec.n_im);
    let mut coh = vec![Complex64::new(0.0, 0.0); dim];
    let mut rc = vec![Complex64::new(0.0, 0.0); dim];
    for ii in 0..spec.n_im {
        for ir in 0..spec.n_re {
            let alpha = spec.point(ir, ii);
            coh[0] = Complex64::new(1.0, 0.0);
            for n in 1..dim {
                coh[n] = coh[n - 1] * alpha / (n as f64).sqrt();
            }
            let norm2: f64 = coh.iter().map(|c| c.norm_sqr()).sum();
            for (m, out) in rc.iter_mut().enumerate() {
                *out = (0..dim).map(|n| coh[n] * rho[(m, n)]).sum();
            }
            let q: f64 = coh.iter().zip(&rc).map(|(c, r)| (c.conj() * r).re).sum();
            values.push(q / (norm2 * std::f64::consts::PI));
        }
    }
    let (mut outer, mut total) = (0.0, 0.0);
    for ii in 0..spec.n_im {
        for ir in 0..spec.n_re {
            let q = values[ii * spec.n_re + ir].max(0.0);
            total += q;
            if spec.point(ir, ii).norm_sqr() > dim as f64 / 2.0 {
                outer += q;
            }
        }
    }
    let outer_mass = if total > 0.0 { outer / total } else { 0.0 };
    let truncation_warning = outer_mass > OUTER_MASS_LIMIT;
    if truncation_warning {
        log::warn!(
            "{:.1}% of the Q-function mass lies beyond |α|² = {}; truncation too small",
            100.0 * outer_mass,
            dim as f64 / 2.0
        );
    }
    Ok(QGrid {
        spec: *spec,
        values,
        outer_mass,
        truncation_warning,
    })
}
