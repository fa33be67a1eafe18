//! Physical and dimensionless parameter sets.
//!
//! All rates are angular frequencies; no factors of 2π appear anywhere in the
//! library. The scaled parameterization is
//!
//! ```text
//! x = κΓ/(8g²),  y = κ²/(16g²),  γ = Γ/κ,  ε = E/E_c,  E_c = κΓ/(8g)
//! a = √x·ã,      b = √y·b̃,      τ = Γt/2
//! ```
//!
//! The three ratios are not independent (`x = 2γy`), so unscaling needs one
//! reference rate. κ is used as that anchor.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};

/// Ratio `x_zpf / d0` above which the linearized capacitance model is suspect.
pub const SMALL_DISPLACEMENT_LIMIT: f64 = 0.1;

/// Unscaled rates of the two-mode model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Photonic decay rate κ.
    pub kappa: f64,
    /// Phononic decay rate Γ.
    pub gamma_m: f64,
    /// Single-photon coupling rate g.
    pub g: f64,
    /// Mechanical drive amplitude E.
    pub drive: f64,
    /// Mean thermal phonon number.
    #[serde(default)]
    pub nbar_b: f64,
}

impl PhysicalParams {
    pub fn new(kappa: f64, gamma_m: f64, g: f64, drive: f64, nbar_b: f64) -> Result<Self> {
        let p = Self {
            kappa,
            gamma_m,
            g,
            drive,
            nbar_b,
        };
        p.validate()?;
        Ok(p)
    }

    /// The decoupled limit g = 0. Only the master equation accepts it; every
    /// scaled quantity divides by g.
    pub fn uncoupled(kappa: f64, gamma_m: f64, drive: f64, nbar_b: f64) -> Result<Self> {
        let p = Self {
            kappa,
            gamma_m,
            g: 0.0,
            drive,
            nbar_b,
        };
        p.validate_allow_uncoupled()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.g > 0.0, "g", self.g, "must be > 0")?;
        self.validate_allow_uncoupled()
    }

    /// As [`validate`](Self::validate) but with `g ≥ 0`.
    pub fn validate_allow_uncoupled(&self) -> Result<()> {
        require(self.kappa > 0.0 && self.kappa.is_finite(), "kappa", self.kappa, "must be > 0")?;
        require(
            self.gamma_m > 0.0 && self.gamma_m.is_finite(),
            "gamma_m",
            self.gamma_m,
            "must be > 0",
        )?;
        require(self.g >= 0.0 && self.g.is_finite(), "g", self.g, "must be >= 0")?;
        require(self.drive >= 0.0 && self.drive.is_finite(), "drive", self.drive, "must be >= 0")?;
        require(self.nbar_b >= 0.0 && self.nbar_b.is_finite(), "nbar_b", self.nbar_b, "must be >= 0")
    }

    /// Threshold drive `E_c = κΓ/(8g)`.
    pub fn critical_drive(&self) -> f64 {
        critical_drive(self)
    }

    pub fn scale(&self) -> ScaledParams {
        scale(self)
    }

    /// Same rates with a different drive amplitude.
    pub fn with_drive(&self, drive: f64) -> Self {
        Self { drive, ..*self }
    }

    /// Drive amplitude that corresponds to the dimensionless drive `eps`.
    pub fn drive_for_eps(&self, eps: f64) -> f64 {
        eps * self.critical_drive()
    }
}

/// Lumped-element geometry of the capacitively coupled LC circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitGeometry {
    pub omega_lc: f64,
    pub x_zpf: f64,
    pub d0: f64,
}

impl CircuitGeometry {
    pub fn new(omega_lc: f64, x_zpf: f64, d0: f64) -> Result<Self> {
        let geom = Self { omega_lc, x_zpf, d0 };
        geom.validate()?;
        Ok(geom)
    }

    /// A zero zero-point length is accepted: it describes the decoupled circuit.
    pub fn validate(&self) -> Result<()> {
        require(self.omega_lc > 0.0, "omega_lc", self.omega_lc, "must be > 0")?;
        require(self.x_zpf >= 0.0, "x_zpf", self.x_zpf, "must be >= 0")?;
        require(self.d0 > 0.0, "d0", self.d0, "must be > 0")
    }

    /// True when `x_zpf/d0` is large enough that C(x) = C₀d₀/(d₀+x) should not
    /// be linearized.
    pub fn large_displacement(&self) -> bool {
        self.x_zpf / self.d0 > SMALL_DISPLACEMENT_LIMIT
    }
}

/// Coupling rate `g = ω_LC·x_ZPF/(4d₀)`.
pub fn coupling_from_circuit(geom: &CircuitGeometry) -> f64 {
    if geom.large_displacement() {
        log::warn!(
            "x_zpf/d0 = {} exceeds {}; the linearized capacitance model is unreliable",
            geom.x_zpf / geom.d0,
            SMALL_DISPLACEMENT_LIMIT
        );
    }
    geom.omega_lc * geom.x_zpf / (4.0 * geom.d0)
}

pub fn critical_drive(p: &PhysicalParams) -> f64 {
    p.kappa * p.gamma_m / (8.0 * p.g)
}

pub fn scale(p: &PhysicalParams) -> ScaledParams {
    let g2 = p.g * p.g;
    ScaledParams {
        x: p.kappa * p.gamma_m / (8.0 * g2),
        y: p.kappa * p.kappa / (16.0 * g2),
        gamma_ratio: p.gamma_m / p.kappa,
        eps: p.drive / critical_drive(p),
    }
}

/// Dimensionless parameters `(x, y, γ, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub x: f64,
    pub y: f64,
    pub gamma_ratio: f64,
    pub eps: f64,
}

impl ScaledParams {
    /// Checked constructor; `x`, `y` and `gamma_ratio` must satisfy `x = 2γy`.
    pub fn new(x: f64, y: f64, gamma_ratio: f64, eps: f64) -> Result<Self> {
        let s = Self {
            x,
            y,
            gamma_ratio,
            eps,
        };
        s.validate()?;
        Ok(s)
    }

    /// Builds the set from `x` and `γ`, deriving `y = x/(2γ)`.
    pub fn from_x_gamma(x: f64, gamma_ratio: f64, eps: f64) -> Result<Self> {
        Self::new(x, x / (2.0 * gamma_ratio), gamma_ratio, eps)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.x > 0.0 && self.x.is_finite(), "x", self.x, "must be > 0")?;
        require(self.y > 0.0 && self.y.is_finite(), "y", self.y, "must be > 0")?;
        require(
            self.gamma_ratio > 0.0 && self.gamma_ratio.is_finite(),
            "gamma_ratio",
            self.gamma_ratio,
            "must be > 0",
        )?;
        require(self.eps >= 0.0 && self.eps.is_finite(), "eps", self.eps, "must be >= 0")?;
        let implied = 2.0 * self.gamma_ratio * self.y;
        if ((implied - self.x) / self.x).abs() > 1e-12 {
            return Err(Error::Domain {
                what: "scaled parameters",
                detail: format!("x = {} but 2*gamma_ratio*y = {}", self.x, implied),
            });
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }

    /// Physical rates reproducing these ratios, anchored at `kappa`.
    pub fn unscale(&self, kappa: f64, nbar_b: f64) -> Result<PhysicalParams> {
        let g = kappa / (4.0 * self.y.sqrt());
        let gamma_m = self.gamma_ratio * kappa;
        let drive = self.eps * kappa * gamma_m / (8.0 * g);
        PhysicalParams::new(kappa, gamma_m, g, drive, nbar_b)
    }

    /// `a = √x·ã`
    pub fn photon_amplitude(&self, scaled: f64) -> f64 {
        self.x.sqrt() * scaled
    }

    /// `b = √y·b̃`
    pub fn phonon_amplitude(&self, scaled: f64) -> f64 {
        self.y.sqrt() * scaled
    }

    /// Converts a scaled photonic moment `⟨ã†ⁿãᵐ⟩` of total order `n + m`
    /// to the unscaled `⟨a†ⁿaᵐ⟩`.
    pub fn photon_moment_unscaled(&self, scaled: f64, order: u32) -> f64 {
        scaled * self.x.powf(order as f64 / 2.0)
    }

    pub fn photon_moment_scaled(&self, unscaled: f64, order: u32) -> f64 {
        unscaled / self.x.powf(order as f64 / 2.0)
    }
}
