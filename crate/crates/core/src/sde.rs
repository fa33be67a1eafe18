//! Complex-P stochastic trajectories.
//!
//! Full mode integrates the four variables `(α̃₁, α̃₂, β̃₁, β̃₂)` in pump time
//! τ. The photonic equations carry `1/γ`:
//!
//! ```text
//! dα̃₁ = (α̃₂β̃₁ − α̃₁) dτ/γ + √(β̃₁/(γx)) dW₁
//! dβ̃₁ = (ε − α̃₁² − β̃₁) dτ + [√M · dW_B]₁,   M = [[0, 2n̄_B/y], [2n̄_B/y, 0]]
//! ```
//!
//! and symmetrically for index 2. Reduced mode substitutes `β̃ᵢ = ε − α̃ᵢ²`
//! and runs in photonic time τ/γ, which drops γ from the problem. The noise
//! amplitude is the one whose Fokker–Planck equation has the stationary
//! solution summed in [`crate::fpmoments`].
//!
//! Every trajectory seeds its own generator from `(seed, index)`, so
//! ensembles are bit-identical for a given seed whatever the thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::params::ScaledParams;

/// Ensembles fail when more than this fraction of trajectories escape.
pub const MAX_DIVERGED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdeMode {
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub mode: SdeMode,
    pub params: ScaledParams,
    pub nbar_b: f64,
    /// τ units in full mode, τ/γ units in reduced mode.
    pub dt: f64,
    pub t_burn: f64,
    pub t_total: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub divergence_radius: f64,
}

impl SdeConfig {
    pub fn reduced(params: ScaledParams, seed: u64) -> Self {
        Self {
            mode: SdeMode::Reduced,
            params,
            nbar_b: 0.0,
            dt: 1e-3,
            t_burn: 20.0,
            t_total: 120.0,
            n_traj: 10_000,
            seed,
            divergence_radius: 50.0,
        }
    }

    /// Full-mode defaults with the largest admissible step, `γ/50`.
    pub fn full(params: ScaledParams, seed: u64) -> Self {
        Self {
            mode: SdeMode::Full,
            dt: (params.gamma_ratio / 50.0).min(1e-3),
            ..Self::reduced(params, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        require(self.dt > 0.0 && self.dt.is_finite(), "dt", self.dt, "must be > 0")?;
        require(self.t_burn >= 0.0, "t_burn", self.t_burn, "must be >= 0")?;
        require(self.t_total > self.t_burn, "t_total", self.t_total, "must exceed t_burn")?;
        require(self.t_total / self.dt >= 1.0, "t_total", self.t_total, "shorter than one step")?;
        require(self.n_traj >= 1, "n_traj", self.n_traj as f64, "must be >= 1")?;
        require(self.nbar_b >= 0.0, "nbar_b", self.nbar_b, "must be >= 0")?;
        require(
            self.divergence_radius > 0.0,
            "divergence_radius",
            self.divergence_radius,
            "must be > 0",
        )?;
        if self.mode == SdeMode::Full {
            require(
                self.dt <= self.params.gamma_ratio / 50.0 * (1.0 + 1e-12),
                "dt",
                self.dt,
                "full mode needs dt <= gamma_ratio/50",
            )?;
        }
        Ok(())
    }

    fn steps(&self) -> (usize, usize) {
        let total = (self.t_total / self.dt).round() as usize;
        let burn = (self.t_burn / self.dt).round() as usize;
        (burn, total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeState {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    /// Ignored in reduced mode.
    pub beta1: Complex64,
    pub beta2: Complex64,
}

impl SdeState {
    /// Below-threshold fixed point `(0, 0, ε, ε)`.
    pub fn origin(eps: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let b = Complex64::new(eps, 0.0);
        Self {
            alpha1: z,
            alpha2: z,
            beta1: b,
            beta2: b,
        }
    }

    fn escaped(&self, radius: f64) -> bool {
        let r2 = radius * radius;
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
            .iter()
            .any(|c| !(c.norm_sqr() <= r2))
    }
}

/// Principal square root without the polar round trip; the sign of a zero
/// imaginary part picks the side of the cut, as for `Complex64::sqrt`.
#[inline]
fn csqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re >= 0.0 {
        return Complex64::new(z.re.sqrt(), z.im);
    }
    let t = ((z.norm() + z.re.abs()) * 0.5).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}

/// Principal square root of `[[0, c], [c, 0]]`, applied to `(z₁, z₂)`.
fn phonon_noise(c: f64, z: [f64; 2]) -> (Complex64, Complex64) {
    if c == 0.0 {
        let zero = Complex64::new(0.0, 0.0);
        return (zero, zero);
    }
    let h = c.sqrt() / 2.0;
    let p = Complex64::new(h, h);
    let m = Complex64::new(h, -h);
    (p * z[0] + m * z[1], m * z[0] + p * z[1])
}

/// One Euler–Maruyama step of the four-variable system. `za` and `zb` are
/// standard normal draws; zero draws give the deterministic flow. Returns
/// `None` once any component leaves the divergence radius.
pub fn step_full(s: &SdeState, cfg: &SdeConfig, za: [f64; 2], zb: [f64; 2]) -> Option<SdeState> {
    let p = &cfg.params;
    let (eps, g, x, dt) = (p.eps, p.gamma_ratio, p.x, cfg.dt);
    let sq = dt.sqrt();
    let amp = |b: Complex64| csqrt(b / (g * x)) * sq;
    let (nb1, nb2) = phonon_noise(2.0 * cfg.nbar_b / p.y, zb);
    let next = SdeState {
        alpha1: s.alpha1 + (s.alpha2 * s.beta1 - s.alpha1) * (dt / g) + amp(s.beta1) * za[0],
        alpha2: s.alpha2 + (s.alpha1 * s.beta2 - s.alpha2) * (dt / g) + amp(s.beta2) * za[1],
        beta1: s.beta1 + (eps - s.alpha1 * s.alpha1 - s.beta1) * dt + nb1 * sq,
        beta2: s.beta2 + (eps - s.alpha2 * s.alpha2 - s.beta2) * dt + nb2 * sq,
    };
    (!next.escaped(cfg.divergence_radius)).then_some(next)
}

/// One step of the pump-eliminated pair; the returned betas hold `ε − α̃ᵢ²`.
pub fn step_reduced(s: &SdeState, cfg: &SdeConfig, za: [f64; 2]) -> Option<SdeState> {
    let p = &cfg.params;
    let (eps, x, dt) = (p.eps, p.x, cfg.dt);
    let sq = dt.sqrt();
    let b1 = eps - s.alpha1 * s.alpha1;
    let b2 = eps - s.alpha2 * s.alpha2;
    let a1 = s.alpha1 + (s.alpha2 * b1 - s.alpha1) * dt + csqrt(b1 / x) * sq * za[0];
    let a2 = s.alpha2 + (s.alpha1 * b2 - s.alpha2) * dt + csqrt(b2 / x) * sq * za[1];
    let next = SdeState {
        alpha1: a1,
        alpha2: a2,
        beta1: eps - a1 * a1,
        beta2: eps - a2 * a2,
    };
    (!next.escaped(cfg.divergence_radius)).then_some(next)
}

fn trajectory_rng(seed: u64, index: usize) -> Xoshiro256PlusPlus {
    // odd multiplier: distinct indices give distinct SplitMix64 seeds
    let mut sm = SplitMix64::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    Xoshiro256PlusPlus::from_rng(&mut sm)
}

fn normals<R: Rng>(rng: &mut R) -> [f64; 2] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

/// Time averages over one trajectory. Both replicas α̃₁, α̃₂ share one
/// stationary marginal, so each average pools them.
#[derive(Debug, Clone, Copy, Default)]
struct TrajMeans {
    alpha: Complex64,
    pair: Complex64,
    square: Complex64,
    beta: Complex64,
}

#[derive(Default)]
struct Accum {
    alpha: Complex64,
    pair: Complex64,
    square: Complex64,
    beta: Complex64,
    count: usize,
}

impl Accum {
    #[inline]
    fn add(&mut self, s: &SdeState) {
        self.alpha += (s.alpha1 + s.alpha2) * 0.5;
        self.pair += s.alpha1 * s.alpha2;
        self.square += (s.alpha1 * s.alpha1 + s.alpha2 * s.alpha2) * 0.5;
        self.beta += (s.beta1 + s.beta2) * 0.5;
        self.count += 1;
    }

    #[inline]
    fn add_real(&mut self, a1: f64, a2: f64, b1: f64, b2: f64) {
        self.alpha.re += 0.5 * (a1 + a2);
        self.pair.re += a1 * a2;
        self.square.re += 0.5 * (a1 * a1 + a2 * a2);
        self.beta.re += 0.5 * (b1 + b2);
        self.count += 1;
    }

    fn means(&self) -> TrajMeans {
        let n = self.count as f64;
        TrajMeans {
            alpha: self.alpha / n,
            pair: self.pair / n,
            square: self.square / n,
            beta: self.beta / n,
        }
    }
}

/// One trajectory in flight.
struct Walker {
    rng: Xoshiro256PlusPlus,
    state: SdeState,
    acc: Accum,
    step: usize,
    /// Still on the real-valued reduced path.
    real: bool,
}

impl Walker {
    fn new(cfg: &SdeConfig, index: usize) -> Self {
        Self {
            rng: trajectory_rng(cfg.seed, index),
            state: SdeState::origin(cfg.params.eps),
            acc: Accum::default(),
            step: 0,
            real: cfg.mode == SdeMode::Reduced,
        }
    }

    /// One real-valued reduced step, valid while both `ε − α̃ᵢ²` stay
    /// nonnegative: the square roots are then real and the state never
    /// leaves the real axis. Returns false once the complex path has to
    /// take over.
    #[inline(always)]
    fn real_step(&mut self, cfg: &SdeConfig, burn: usize) -> bool {
        if !self.real {
            return false;
        }
        let p = &cfg.params;
        let (eps, dt) = (p.eps, cfg.dt);
        let (a1, a2) = (self.state.alpha1.re, self.state.alpha2.re);
        let b1 = eps - a1 * a1;
        let b2 = eps - a2 * a2;
        if b1 < 0.0 || b2 < 0.0 {
            self.real = false;
            return false;
        }
        let sq_over_x = (dt / p.x).sqrt();
        let z = normals(&mut self.rng);
        let n1 = a1 + (a2 * b1 - a1) * dt + b1.sqrt() * sq_over_x * z[0];
        let n2 = a2 + (a1 * b2 - a2) * dt + b2.sqrt() * sq_over_x * z[1];
        let (c1, c2) = (eps - n1 * n1, eps - n2 * n2);
        self.state = SdeState {
            alpha1: Complex64::new(n1, 0.0),
            alpha2: Complex64::new(n2, 0.0),
            beta1: Complex64::new(c1, 0.0),
            beta2: Complex64::new(c2, 0.0),
        };
        self.step += 1;
        let r = cfg.divergence_radius;
        if !(n1.abs() <= r && n2.abs() <= r) {
            // the complex path reports the escape
            self.real = false;
            return false;
        }
        if self.step > burn {
            self.acc.add_real(n1, n2, c1, c2);
        }
        true
    }

    fn finish(mut self, cfg: &SdeConfig) -> Option<TrajMeans> {
        let (burn, total) = cfg.steps();
        if self.real {
            while self.step < total && self.real_step(cfg, burn) {}
            if self.state.escaped(cfg.divergence_radius) {
                return None;
            }
        }
        while self.step < total {
            let za = normals(&mut self.rng);
            self.state = match cfg.mode {
                SdeMode::Reduced => step_reduced(&self.state, cfg, za)?,
                SdeMode::Full => {
                    let zb = normals(&mut self.rng);
                    step_full(&self.state, cfg, za, zb)?
                }
            };
            self.step += 1;
            if self.step > burn {
                self.acc.add(&self.state);
            }
        }
        Some(self.acc.means())
    }
}

fn run_trajectory(cfg: &SdeConfig, index: usize) -> Option<TrajMeans> {
    Walker::new(cfg, index).finish(cfg)
}

/// Ensemble mean of a trajectory-averaged observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Imaginary part of the ensemble mean; zero in expectation.
    pub mean_im: f64,
    /// Standard error of `mean` across trajectories.
    pub se: f64,
}

impl Estimate {
    fn from_samples(samples: impl Iterator<Item = Complex64> + Clone) -> Self {
        let n = samples.clone().count() as f64;
        let sum: Complex64 = samples.clone().sum();
        let mean = sum / n;
        let var = if n > 1.0 {
            samples.map(|s| (s.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::NAN
        };
        Self {
            mean: mean.re,
            mean_im: mean.im,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub mode: SdeMode,
    pub eps: f64,
    pub x: f64,
    /// ⟨α̃₁⟩
    pub alpha: Estimate,
    /// ⟨α̃₂α̃₁⟩, the scaled photon number.
    pub n_phot: Estimate,
    /// ⟨α̃₁²⟩
    pub a_sq: Estimate,
    /// ⟨β̃⟩
    pub beta: Estimate,
    pub n_traj: usize,
    pub n_diverged: usize,
    pub seed: u64,
}

/// Integrates `cfg.n_traj` trajectories on the current rayon pool.
pub fn run_ensemble(cfg: &SdeConfig) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    let results: Vec<Option<TrajMeans>> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| run_trajectory(cfg, i))
        .collect();
    let kept: Vec<TrajMeans> = results.iter().flatten().copied().collect();
    let n_diverged = cfg.n_traj - kept.len();
    if n_diverged as f64 > MAX_DIVERGED_FRACTION * cfg.n_traj as f64 || kept.is_empty() {
        return Err(Error::TooManyDiverged {
            diverged: n_diverged,
            total: cfg.n_traj,
        });
    }
    if n_diverged > 0 {
        log::warn!("{n_diverged} of {} trajectories diverged and were excluded", cfg.n_traj);
    }
    let est = |f: fn(&TrajMeans) -> Complex64| Estimate::from_samples(kept.iter().map(f));
    Ok(TrajectoryEnsemble {
        mode: cfg.mode,
        eps: cfg.params.eps,
        x: cfg.params.x,
        alpha: est(|m| m.alpha),
        n_phot: est(|m| m.pair),
        a_sq: est(|m| m.square),
        beta: est(|m| m.beta),
        n_traj: cfg.n_traj,
        n_diverged,
        seed: cfg.seed,
    })
}

/// One sampled point of a trajectory trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub state: SdeState,
}

/// Replays trajectory `index` of the ensemble and keeps every `stride`-th
/// state, starting with the initial one. The replay uses the generic
/// complex steps, so it agrees with the ensemble to rounding only. Stops
/// early if the trajectory escapes.
pub fn trace(cfg: &SdeConfig, index: usize, stride: usize) -> Result<Vec<TracePoint>> {
    cfg.validate()?;
    require(stride >= 1, "stride", stride as f64, "must be >= 1")?;
    let mut rng = trajectory_rng(cfg.seed, index);
    let (_, total) = cfg.steps();
    let mut state = SdeState::origin(cfg.params.eps);
    let mut out = vec![TracePoint { t: 0.0, state }];
    for i in 1..=total {
        let za = normals(&mut rng);
        let next = match cfg.mode {
            SdeMode::Reduced => step_reduced(&state, cfg, za),
            SdeMode::Full => step_full(&state, cfg, za, normals(&mut rng)),
        };
        match next {
            Some(s) => state = s,
            None => break,
        }
        if i % stride == 0 {
            out.push(TracePoint {
                t: i as f64 * cfg.dt,
                state,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csqrt_matches_principal_branch() {
        for &(re, im) in &[(4.0, 0.0), (-4.0, 0.0), (-4.0, -0.0), (0.3, -2.0), (-1.5, 0.7), (-2.0, -1e-300), (0.0, 0.0)] {
            let z = Complex64::new(re, im);
            let (got, want) = (csqrt(z), z.sqrt());
            assert!((got - want).norm() <= 1e-15 * want.norm().max(1.0), "{z}: {got} vs {want}");
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn cfg(mode: SdeMode, eps: f64) -> SdeConfig {
        let p = ScaledParams::from_x_gamma(12.5, 1.0, eps).unwrap();
        match mode {
            SdeMode::Reduced => SdeConfig::reduced(p, 7),
            SdeMode::Full => SdeConfig::full(p, 7),
        }
    }

    fn flow(mode: SdeMode, eps: f64, start: SdeState, t: f64) -> SdeState {
        let cfg = cfg(mode, eps);
        let mut s = start;
        for _ in 0..(t / cfg.dt) as usize {
            s = match mode {
                SdeMode::Full => step_full(&s, &cfg, [0.0; 2], [0.0; 2]),
                SdeMode::Reduced => step_reduced(&s, &cfg, [0.0; 2]),
            }
            .unwrap();
        }
        s
    }

    #[test]
    fn noiseless_flow_below_threshold() {
        let start = SdeState {
            alpha1: c(0.1),
            alpha2: c(-0.05),
            beta1: c(0.2),
            beta2: c(0.3),
        };
        let s = flow(SdeMode::Full, 0.5, start, 50.0);
        for (v, want) in [(s.alpha1, 0.0), (s.alpha2, 0.0), (s.beta1, 0.5), (s.beta2, 0.5)] {
            assert!((v - want).norm() <= 1e-6);
        }
        let s = flow(SdeMode::Reduced, 0.5, start, 50.0);
        assert!(s.alpha1.norm() <= 1e-6 && s.alpha2.norm() <= 1e-6);
    }

    #[test]
    fn noiseless_flow_above_threshold() {
        let start = SdeState {
            alpha1: c(1.1),
            alpha2: c(0.9),
            beta1: c(1.0),
            beta2: c(1.0),
        };
        let s = flow(SdeMode::Full, 2.0, start, 50.0);
        assert!((s.alpha1 * s.alpha2 - 1.0).norm() <= 1e-6);
        assert!((s.beta1 - 1.0).norm() <= 1e-6 && (s.beta2 - 1.0).norm() <= 1e-6);
    }

    #[test]
    fn phonon_noise_matrix() {
        let (a, b) = phonon_noise(0.0, [1.3, -0.4]);
        assert_eq!((a, b), (c(0.0), c(0.0)));
        // columns of √M squared give M = [[0, c], [c, 0]]
        let (c11, c21) = phonon_noise(0.8, [1.0, 0.0]);
        let (c12, c22) = phonon_noise(0.8, [0.0, 1.0]);
        assert!((c11 * c11 + c12 * c21).norm() < 1e-15);
        assert!((c11 * c12 + c12 * c22 - 0.8).norm() < 1e-15);
        assert!((c21 * c11 + c22 * c21 - 0.8).norm() < 1e-15);
    }

    #[test]
    fn divergence_is_flagged() {
        let mut cfg = cfg(SdeMode::Reduced, 0.5);
        cfg.divergence_radius = 1.0;
        let s = SdeState {
            alpha1: c(0.99),
            ..SdeState::origin(0.5)
        };
        assert!(step_reduced(&s, &cfg, [40.0, 0.0]).is_none());
    }

    #[test]
    fn config_validation() {
        let mut full = cfg(SdeMode::Full, 0.5);
        assert!(full.validate().is_ok());
        full.dt = 2.0 * full.params.gamma_ratio / 50.0;
        assert!(full.validate().is_err());
        let mut red = cfg(SdeMode::Reduced, 0.5);
        red.t_burn = red.t_total;
        assert!(red.validate().is_err());
        red = cfg(SdeMode::Reduced, 0.5);
        red.n_traj = 0;
        assert!(red.validate().is_err());
    }

    #[test]
    fn real_prefix_matches_complex_steps() {
        let mut c = cfg(SdeMode::Reduced, 0.5);
        c.t_total = 2.0;
        c.t_burn = 0.0;
        let (burn, total) = c.steps();
        let mut w = Walker::new(&c, 3);
        while w.step < total && w.real_step(&c, burn) {}
        let tr = trace(&c, 3, 1).unwrap();
        let t = tr[w.step].state;
        let s = w.state;
        assert!((t.alpha1 - s.alpha1).norm() < 1e-12 && (t.alpha2 - s.alpha2).norm() < 1e-12);
    }

    #[test]
    fn small_ensemble_shape() {
        let mut c = cfg(SdeMode::Reduced, 0.0);
        c.n_traj = 64;
        c.t_burn = 2.0;
        c.t_total = 10.0;
        let e = run_ensemble(&c).unwrap();
        assert_eq!(e.n_traj, 64);
        assert_eq!(e.n_diverged, 0);
        // eps = 0 has no noise at all: the origin never moves
        assert_eq!(e.n_phot.mean, 0.0);
    }
}
