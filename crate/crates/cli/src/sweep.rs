use std::io::Write;

use dpo_core::fpmoments::{FpSeries, DEFAULT_TOL};
use dpo_core::lindblad::{
    build_liouvillian, steady_state, truncation_study, HilbertConfig, PhononFrame, SolverOptions,
};
use dpo_core::sde::{run_ensemble, SdeConfig, SdeMode};
use dpo_core::selfconsistent::{self, SelfConsistentSolution};
use dpo_core::semiclassical::{fixed_points, qle_residual, stable_beta, stable_photon_number};
use dpo_core::{PhysicalParams, ScaledParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{write_records, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Semiclassical,
    SelfConsistent,
    FpMoments,
    Sde,
    Lindblad,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Semiclassical => "semiclassical",
            Self::SelfConsistent => "self-consistent",
            Self::FpMoments => "fp-moments",
            Self::Sde => "sde",
            Self::Lindblad => "lindblad",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        <Self as clap::ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| CliError::config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SdeModeArg {
    #[default]
    Reduced,
    Full,
}

/// `start, start + step, …` up to `stop` inclusive (with a relative slack
/// of 1e-9 steps so that decimal steps land on `stop`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EpsGrid {
    pub fn single(eps: f64) -> Self {
        Self {
            start: eps,
            stop: eps,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let ok = self.start.is_finite() && self.stop.is_finite() && self.step.is_finite();
        if !ok || self.step <= 0.0 {
            return Err(CliError::config(format!("grid step must be > 0, got {}", self.step)));
        }
        if self.start < 0.0 || self.stop < self.start {
            return Err(CliError::config(format!(
                "empty or negative grid [{}, {}]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Physical rates without the drive; the drive follows from ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalBase {
    pub kappa: f64,
    pub gamma_m: f64,
    pub g: f64,
    pub nbar_b: f64,
}

impl PhysicalBase {
    pub fn at_drive(&self, drive: f64) -> CliResult<PhysicalParams> {
        PhysicalParams::new(self.kappa, self.gamma_m, self.g, drive, self.nbar_b)
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn critical_drive(&self) -> f64 {
        self.kappa * self.gamma_m / (8.0 * self.g)
    }

    pub fn at_eps(&self, eps: f64) -> CliResult<PhysicalParams> {
        self.at_drive(eps * self.critical_drive())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SdeSettings {
    pub mode: SdeModeArg,
    /// Thermal phonons; enter the full-mode pump noise.
    pub nbar_b: f64,
    pub n_traj: usize,
    pub dt: Option<f64>,
    pub t_burn: Option<f64>,
    pub t_total: Option<f64>,
    pub divergence_radius: Option<f64>,
}

impl Default for SdeSettings {
    fn default() -> Self {
        Self {
            mode: SdeModeArg::Reduced,
            nbar_b: 0.0,
            n_traj: 10_000,
            dt: None,
            t_burn: None,
            t_total: None,
            divergence_radius: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LindbladSettings {
    pub nphot_dim: usize,
    pub nphon_dim: usize,
    /// Truncations N (2N × N) for a Shanks study; replaces the dims.
    pub shanks: Option<Vec<usize>>,
    pub plain_phonon_basis: bool,
}

impl Default for LindbladSettings {
    fn default() -> Self {
        Self {
            nphot_dim: 30,
            nphon_dim: 15,
            shanks: None,
            plain_phonon_basis: false,
        }
    }
}

impl LindbladSettings {
    fn frame(&self) -> PhononFrame {
        if self.plain_phonon_basis {
            PhononFrame::Fixed(0.0)
        } else {
            PhononFrame::MeanField
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub method: Method,
    pub grid: EpsGrid,
    /// Scaled coupling; derived from `physical` when absent.
    pub x: Option<f64>,
    pub gamma_ratio: f64,
    pub physical: Option<PhysicalBase>,
    pub tol: f64,
    pub sde: SdeSettings,
    pub lindblad: LindbladSettings,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(method: Method, grid: EpsGrid) -> Self {
        Self {
            method,
            grid,
            x: None,
            gamma_ratio: 1.0,
            physical: None,
            tol: DEFAULT_TOL,
            sde: SdeSettings::default(),
            lindblad: LindbladSettings::default(),
            seed: 0,
        }
    }

    /// `x` from the flag or from the physical rates; both present must agree.
    pub fn resolve_x(&self) -> CliResult<f64> {
        let derived = self.physical.map(|p| p.kappa * p.gamma_m / (8.0 * p.g * p.g));
        match (self.x, derived) {
            (Some(x), Some(d)) if ((x - d) / d).abs() > 1e-12 => Err(CliError::config(format!(
                "x = {x} contradicts the physical rates (x = {d})"
            ))),
            (Some(x), _) | (None, Some(x)) => Ok(x),
            (None, None) => Err(CliError::config("x (or kappa, gamma, g) is required")),
        }
    }

    fn resolve_physical(&self) -> CliResult<PhysicalBase> {
        self.physical
            .ok_or_else(|| CliError::config("kappa, gamma and g are required for the master equation"))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.grid.validate()?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        match self.method {
            Method::Semiclassical => {}
            Method::SelfConsistent | Method::FpMoments => {
                self.resolve_x()?;
            }
            Method::Sde => {
                self.resolve_x()?;
                if self.sde.n_traj == 0 {
                    return Err(CliError::config("n_traj must be >= 1"));
                }
                if !(self.gamma_ratio > 0.0) {
                    return Err(CliError::config("gamma_ratio must be > 0"));
                }
            }
            Method::Lindblad => {
                self.resolve_physical()?;
                self.resolve_x()?;
                let l = &self.lindblad;
                match &l.shanks {
                    Some(ns) if ns.is_empty() || ns.iter().any(|&n| n < 2) => {
                        return Err(CliError::config("shanks truncations must be >= 2"));
                    }
                    None if l.nphot_dim < 2 || l.nphon_dim < 2 => {
                        return Err(CliError::config("Fock dimensions must be >= 2"));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalRow {
    pub eps: f64,
    pub beta_ss: f64,
    pub n_phot: f64,
    /// Positive bifurcated amplitude, 0 below threshold.
    pub alpha_plus: f64,
    pub n_fixed_points: usize,
    /// Largest residual over all fixed points.
    pub qle_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfConsistentRow {
    pub eps: f64,
    pub x: f64,
    pub beta_ss: f64,
    pub n_phot: f64,
    pub a_sq: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpRow {
    pub eps: f64,
    pub x: f64,
    pub n_phot: f64,
    pub a_sq: f64,
    pub beta_ss: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub k_used: usize,
    pub trunc_err: f64,
    /// `ε > 1` and `n_phot < ε − 1`.
    pub undershoot: bool,
    /// `β̃ > 1`.
    pub overshoot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeRow {
    pub eps: f64,
    pub x: f64,
    pub mode: SdeModeArg,
    pub n_phot: f64,
    pub n_phot_se: f64,
    pub a_sq: f64,
    pub a_sq_se: f64,
    pub alpha: f64,
    pub alpha_se: f64,
    pub beta_ss: f64,
    pub beta_se: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub n_traj: usize,
    pub n_diverged: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LindbladRow {
    pub eps: f64,
    pub drive: f64,
    /// `raw` for a solve, `shanks` for the extrapolated photon number.
    pub kind: &'static str,
    pub nphot_dim: Option<usize>,
    pub nphon_dim: Option<usize>,
    /// Scaled ⟨ã†ã⟩.
    pub n_phot: f64,
    pub n_phot_unscaled: f64,
    pub a_mean: Option<f64>,
    /// Unscaled ⟨a²⟩.
    pub a_sq: Option<f64>,
    /// Scaled pump amplitude ⟨b⟩/√y.
    pub beta_ss: Option<f64>,
    pub var_x: Option<f64>,
    pub var_y: Option<f64>,
    pub trace: Option<f64>,
    pub hermiticity_defect: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub shanks_degenerate: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTable {
    Semiclassical(Vec<SemiclassicalRow>),
    SelfConsistent(Vec<SelfConsistentRow>),
    FpMoments(Vec<FpRow>),
    Sde(Vec<SdeRow>),
    Lindblad(Vec<LindbladRow>),
}

impl SweepTable {
    pub fn write(&self, format: Format, out: &mut dyn Write) -> CliResult<()> {
        match self {
            Self::Semiclassical(r) => write_records(r, format, out),
            Self::SelfConsistent(r) => write_records(r, format, out),
            Self::FpMoments(r) => write_records(r, format, out),
            Self::Sde(r) => write_records(r, format, out),
            Self::Lindblad(r) => write_records(r, format, out),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Semiclassical(r) => r.len(),
            Self::SelfConsistent(r) => r.len(),
            Self::FpMoments(r) => r.len(),
            Self::Sde(r) => r.len(),
            Self::Lindblad(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV header, for plot hints.
    pub fn header(&self) -> Vec<String> {
        let mut buf = Vec::new();
        if self.write(Format::Csv, &mut buf).is_err() {
            return Vec::new();
        }
        let text = String::from_utf8_lossy(&buf);
        text.lines()
            .next()
            .map(|l| l.split(',').map(str::to_string).collect())
            .unwrap_or_default()
    }

    /// Columns worth plotting against ε.
    pub fn plot_columns(&self) -> &'static [&'static str] {
        match self {
            Self::Semiclassical(_) => &["beta_ss", "n_phot"],
            Self::Sde(_) => &["n_phot", "a_sq"],
            _ => &["n_phot", "beta_ss"],
        }
    }
}

/// Evaluates `f` on every grid point on the worker pool; results come back
/// in grid order and the first failure in grid order wins.
pub(crate) fn per_point<T: Send>(grid: &[f64], f: impl Fn(f64) -> CliResult<T> + Sync) -> CliResult<Vec<T>> {
    let out: Vec<CliResult<T>> = grid.par_iter().map(|&e| f(e)).collect();
    out.into_iter().collect()
}

pub fn run_sweep(spec: &SweepSpec) -> CliResult<SweepTable> {
    spec.validate()?;
    let grid = spec.grid.points();
    Ok(match spec.method {
        Method::Semiclassical => SweepTable::Semiclassical(per_point(&grid, |e| Ok(semiclassical_row(e)))?),
        Method::SelfConsistent => {
            let x = spec.resolve_x()?;
            SweepTable::SelfConsistent(per_point(&grid, |e| self_consistent_row(e, x))?)
        }
        Method::FpMoments => {
            let fp = FpSeries::new(spec.resolve_x()?).map_err(|e| CliError::config(e.to_string()))?;
            SweepTable::FpMoments(per_point(&grid, |e| fp_row(&fp, e, spec.tol))?)
        }
        Method::Sde => SweepTable::Sde(per_point(&grid, |e| sde_row(spec, e))?),
        Method::Lindblad => {
            let rows = per_point(&grid, |e| lindblad_rows(spec, e))?;
            SweepTable::Lindblad(rows.into_iter().flatten().collect())
        }
    })
}

pub fn semiclassical_row(eps: f64) -> SemiclassicalRow {
    let fps = fixed_points(eps);
    SemiclassicalRow {
        eps,
        beta_ss: stable_beta(eps),
        n_phot: stable_photon_number(eps),
        alpha_plus: stable_photon_number(eps).sqrt(),
        n_fixed_points: fps.len(),
        qle_residual: fps.iter().map(|s| qle_residual(s, eps)).fold(0.0, f64::max),
    }
}

pub fn self_consistent_row(eps: f64, x: f64) -> CliResult<SelfConsistentRow> {
    let s = SelfConsistentSolution::solve(eps, x).map_err(CliError::at(eps))?;
    Ok(SelfConsistentRow {
        eps,
        x,
        beta_ss: s.beta_ss,
        n_phot: s.n_phot,
        a_sq: s.a_sq,
        var_x: s.var_x,
        var_y: s.var_y,
        residual: selfconsistent::residual(s.beta_ss, eps, x),
    })
}

pub fn fp_row(fp: &FpSeries, eps: f64, tol: f64) -> CliResult<FpRow> {
    let m = fp.observables(eps, tol).map_err(CliError::at(eps))?;
    Ok(FpRow {
        eps,
        x: m.x,
        n_phot: m.n_phot,
        a_sq: m.a_sq,
        beta_ss: m.beta_ss,
        var_x: m.var_x,
        var_y: m.var_y,
        k_used: m.k_used,
        trunc_err: m.trunc_err,
        undershoot: eps > 1.0 && m.n_phot < eps - 1.0,
        overshoot: m.beta_ss > 1.0,
    })
}

pub fn sde_config(spec: &SweepSpec, eps: f64) -> CliResult<SdeConfig> {
    let x = spec.resolve_x()?;
    let p = ScaledParams::from_x_gamma(x, spec.gamma_ratio, eps).map_err(|e| CliError::config(e.to_string()))?;
    let s = &spec.sde;
    let mut cfg = match s.mode {
        SdeModeArg::Reduced => SdeConfig::reduced(p, spec.seed),
        SdeModeArg::Full => SdeConfig::full(p, spec.seed),
    };
    cfg.n_traj = s.n_traj;
    cfg.nbar_b = s.nbar_b;
    if let Some(v) = s.dt {
        cfg.dt = v;
    }
    if let Some(v) = s.t_burn {
        cfg.t_burn = v;
    }
    if let Some(v) = s.t_total {
        cfg.t_total = v;
    }
    if let Some(v) = s.divergence_radius {
        cfg.divergence_radius = v;
    }
    cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(cfg)
}

pub fn sde_row(spec: &SweepSpec, eps: f64) -> CliResult<SdeRow> {
    let cfg = sde_config(spec, eps)?;
    let e = run_ensemble(&cfg).map_err(CliError::at(eps))?;
    let x = cfg.params.x;
    Ok(SdeRow {
        eps,
        x,
        mode: match e.mode {
            SdeMode::Reduced => SdeModeArg::Reduced,
            SdeMode::Full => SdeModeArg::Full,
        },
        n_phot: e.n_phot.mean,
        n_phot_se: e.n_phot.se,
        a_sq: e.a_sq.mean,
        a_sq_se: e.a_sq.se,
        alpha: e.alpha.mean,
        alpha_se: e.alpha.se,
        beta_ss: e.beta.mean,
        beta_se: e.beta.se,
        var_x: 1.0 + 2.0 * x * (e.n_phot.mean + e.a_sq.mean),
        var_y: 1.0 + 2.0 * x * (e.n_phot.mean - e.a_sq.mean),
        n_traj: e.n_traj,
        n_diverged: e.n_diverged,
        seed: e.seed,
    })
}

/// One raw row per solve, plus a `shanks` row when a study was requested.
pub fn lindblad_rows(spec: &SweepSpec, eps: f64) -> CliResult<Vec<LindbladRow>> {
    let base = spec.resolve_physical()?;
    let p = base.at_eps(eps)?;
    lindblad_rows_at(&p, eps, &spec.lindblad)
}

pub fn lindblad_rows_at(p: &PhysicalParams, eps: f64, l: &LindbladSettings) -> CliResult<Vec<LindbladRow>> {
    let sp = p.scale();
    let opts = SolverOptions::default();
    let raw = |o: &dpo_core::lindblad::Observables, d: &dpo_core::lindblad::Diagnostics, na, nb| LindbladRow {
        eps,
        drive: p.drive,
        kind: "raw",
        nphot_dim: Some(na),
        nphon_dim: Some(nb),
        n_phot: sp.photon_moment_scaled(o.n_phot, 2),
        n_phot_unscaled: o.n_phot,
        a_mean: Some(o.a_mean),
        a_sq: Some(o.a_sq),
        beta_ss: Some(o.b_mean / sp.y.sqrt()),
        var_x: Some(o.var_x),
        var_y: Some(o.var_y),
        trace: Some(d.trace),
        hermiticity_defect: Some(d.hermiticity_defect),
        min_eigenvalue: Some(d.min_eigenvalue),
        residual: Some(d.residual),
        iterations: Some(d.iterations),
        shanks_degenerate: None,
    };
    match &l.shanks {
        None => {
            let h = HilbertConfig::new(l.nphot_dim, l.nphon_dim)
                .map_err(|e| CliError::config(e.to_string()))?
                .with_frame(l.frame());
            let lv = build_liouvillian(p, &h).map_err(CliError::at(eps))?;
            let rho = steady_state(&lv, &opts).map_err(CliError::at(eps))?;
            Ok(vec![raw(&rho.observables(), &rho.diagnostics(), h.n_phot, h.n_phon)])
        }
        Some(ns) => {
            let study = truncation_study(p, ns, l.frame(), &opts).map_err(CliError::at(eps))?;
            let mut rows: Vec<LindbladRow> = study
                .observables
                .iter()
                .zip(&study.diagnostics)
                .zip(ns)
                .map(|((o, d), &n)| raw(o, d, 2 * n, n))
                .collect();
            if let Some(s) = study.shanks_n_phot {
                rows.push(LindbladRow {
                    eps,
                    drive: p.drive,
                    kind: "shanks",
                    nphot_dim: None,
                    nphon_dim: None,
                    n_phot: sp.photon_moment_scaled(s.value, 2),
                    n_phot_unscaled: s.value,
                    a_mean: None,
                    a_sq: None,
                    beta_ss: None,
                    var_x: None,
                    var_y: None,
                    trace: None,
                    hermiticity_defect: None,
                    min_eigenvalue: None,
                    residual: None,
                    iterations: None,
                    shanks_degenerate: Some(s.degenerate),
                });
            }
            Ok(rows)
        }
    }
}
