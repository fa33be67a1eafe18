//! Orchestration behind the `dpo` binary: settings resolution, ε sweeps
//! over every method, Q-function grids and cross-method reports.

pub mod args;
pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use std::io::Write;
use std::path::{Path, PathBuf};

use dpo_core::lindblad::{
    build_liouvillian, q_function, steady_state, GridSpec, HilbertConfig, SolverOptions,
};
use serde::Serialize;

use args::{Cli, Command, GridArgs, PhysArgs, ScaledArgs, SdeArgs, TruncArgs};
use compare::{compare, CompareSpec};
use config::Config;
pub use error::{CliError, CliResult};
use output::{sink, write_plot_hint, Format};
use sweep::{
    lindblad_rows_at, run_sweep, EpsGrid, LindbladSettings, Method, PhysicalBase, SdeSettings,
    SweepSpec, SweepTable,
};

/// Grid used when neither flags nor config give one.
pub const DEFAULT_GRID: EpsGrid = EpsGrid {
    start: 0.0,
    stop: 3.0,
    step: 0.05,
};

/// Global settings after merging flags and the config file.
#[derive(Debug, Clone)]
pub struct Globals {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
    pub plot_hint: Option<PathBuf>,
}

pub fn resolve_globals(cli: &Cli, cfg: &Config) -> Globals {
    Globals {
        out: cli.out.clone().or_else(|| cfg.out.clone()),
        format: cli.format.or(cfg.format).unwrap_or_default(),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        // clap already folded DPO_THREADS into the flag
        threads: cli.threads.or(cfg.threads),
        plot_hint: cli.plot_hint.clone(),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let g = resolve_globals(&cli, &cfg);
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::config("threads must be >= 1"));
        }
        // a second call (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if g.plot_hint.is_some() && (g.out.is_none() || g.format != Format::Csv) {
        return Err(CliError::config("--plot-hint needs --out and CSV output"));
    }
    match &cli.command {
        Command::Qfunc {
            phys,
            trunc,
            half_width,
            step,
        } => {
            let report = qfunc(&cfg, phys, trunc, *half_width, *step)?;
            let mut out = sink(g.out.as_deref())?;
            report.write(g.format, &mut *out)?;
            Ok(())
        }
        Command::Compare {
            methods,
            exclude,
            grid,
            scaled,
            phys,
            sde,
            trunc,
        } => {
            let names = methods
                .clone()
                .or_else(|| cfg.compare.methods.clone())
                .ok_or_else(|| CliError::config("--methods is required"))?;
            let methods = names.iter().map(|s| Method::parse(s)).collect::<CliResult<Vec<_>>>()?;
            let exclude = match exclude {
                Some(v) if v.len() == 2 => Some([v[0], v[1]]),
                Some(_) => return Err(CliError::config("--exclude takes lo,hi")),
                None => cfg.compare.exclude,
            };
            let mut base = SweepSpec::new(methods[0], resolve_grid(grid, &cfg)?);
            fill_scaled(&mut base, scaled, &cfg);
            base.physical = resolve_physical(phys, &cfg, false)?;
            base.sde = resolve_sde(sde, &cfg);
            base.sde.nbar_b = base.physical.map_or(0.0, |p| p.nbar_b);
            base.lindblad = resolve_trunc(trunc, &cfg);
            base.seed = g.seed;
            let report = compare(&CompareSpec {
                methods,
                base,
                exclude,
            })?;
            let mut out = sink(g.out.as_deref())?;
            report.write(g.format, &mut *out)?;
            out.flush()?;
            drop(out);
            if g.format == Format::Csv {
                let summary = serde_json::to_string_pretty(&report.summary_json())?;
                match &g.out {
                    Some(p) => std::fs::write(summary_path(p), summary + "\n")?,
                    None => eprintln!("{summary}"),
                }
            }
            if let (Some(hint), Some(data)) = (&g.plot_hint, &g.out) {
                let h = report.header();
                let cols: Vec<&str> = h.iter().filter(|c| c.ends_with("n_phot")).map(String::as_str).collect();
                write_plot_hint(hint, data, &h, &cols)?;
            }
            Ok(())
        }
        cmd => {
            let spec = sweep_spec(cmd, &cfg, &g)?;
            let table = match (&spec, cmd) {
                (s, Command::LindbladSs { phys, .. }) if phys.drive.or(cfg.physical.drive).is_some() => {
                    let drive = phys.drive.or(cfg.physical.drive).unwrap_or_default();
                    s.validate()?;
                    let base = s.physical.expect("validated");
                    let p = base.at_drive(drive)?;
                    let eps = drive / base.critical_drive();
                    SweepTable::Lindblad(lindblad_rows_at(&p, eps, &s.lindblad)?)
                }
                (s, _) => run_sweep(s)?,
            };
            let mut out = sink(g.out.as_deref())?;
            table.write(g.format, &mut *out)?;
            out.flush()?;
            if let (Some(hint), Some(data)) = (&g.plot_hint, &g.out) {
                write_plot_hint(hint, data, &table.header(), table.plot_columns())?;
            }
            Ok(())
        }
    }
}

/// `report.csv` → `report.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn resolve_grid(a: &GridArgs, cfg: &Config) -> CliResult<EpsGrid> {
    let grid = EpsGrid {
        start: a.eps_start.or(cfg.grid.start).unwrap_or(DEFAULT_GRID.start),
        stop: a.eps_stop.or(cfg.grid.stop).unwrap_or(DEFAULT_GRID.stop),
        step: a.eps_step.or(cfg.grid.step).unwrap_or(DEFAULT_GRID.step),
    };
    grid.validate()?;
    Ok(grid)
}

fn fill_scaled(spec: &mut SweepSpec, a: &ScaledArgs, cfg: &Config) {
    spec.x = a.x.or(cfg.scaled.x);
    spec.gamma_ratio = a.gamma_ratio.or(cfg.scaled.gamma_ratio).unwrap_or(1.0);
    if let Some(t) = cfg.scaled.tol {
        spec.tol = t;
    }
}

/// Physical rates when any of κ, Γ, g is given; all three are then needed.
fn resolve_physical(a: &PhysArgs, cfg: &Config, required: bool) -> CliResult<Option<PhysicalBase>> {
    let c = &cfg.physical;
    let (kappa, gamma, g) = (a.kappa.or(c.kappa), a.gamma.or(c.gamma), a.g.or(c.g));
    let nbar_b = a.nbar_b.or(c.nbar_b).unwrap_or(0.0);
    match (kappa, gamma, g) {
        (None, None, None) if !required => Ok(None),
        (Some(kappa), Some(gamma_m), Some(g)) => {
            // validate once with a dummy drive
            let base = PhysicalBase {
                kappa,
                gamma_m,
                g,
                nbar_b,
            };
            base.at_drive(0.0)?;
            Ok(Some(base))
        }
        _ => Err(CliError::config("kappa, gamma and g must be given together")),
    }
}

fn resolve_sde(a: &SdeArgs, cfg: &Config) -> SdeSettings {
    let c = &cfg.sde;
    let d = SdeSettings::default();
    SdeSettings {
        mode: a.mode.or(c.mode).unwrap_or(d.mode),
        nbar_b: d.nbar_b,
        n_traj: a.n_traj.or(c.n_traj).unwrap_or(d.n_traj),
        dt: a.dt.or(c.dt),
        t_burn: a.t_burn.or(c.t_burn),
        t_total: a.t_total.or(c.t_total),
        divergence_radius: a.divergence_radius.or(c.divergence_radius),
    }
}

fn resolve_trunc(a: &TruncArgs, cfg: &Config) -> LindbladSettings {
    let c = &cfg.lindblad;
    let d = LindbladSettings::default();
    let dims_on_cli = a.nphot_dim.is_some() || a.nphon_dim.is_some();
    LindbladSettings {
        nphot_dim: a.nphot_dim.or(c.nphot_dim).unwrap_or(d.nphot_dim),
        nphon_dim: a.nphon_dim.or(c.nphon_dim).unwrap_or(d.nphon_dim),
        // explicit dimensions on the command line switch a configured study off
        shanks: a.shanks.clone().or_else(|| if dims_on_cli { None } else { c.shanks.clone() }),
        plain_phonon_basis: a.plain_phonon_basis || c.plain_phonon_basis.unwrap_or(false),
    }
}

fn sweep_spec(cmd: &Command, cfg: &Config, g: &Globals) -> CliResult<SweepSpec> {
    let (method, grid) = match cmd {
        Command::Semiclassical { grid } => (Method::Semiclassical, grid),
        Command::SelfConsistent { grid, .. } => (Method::SelfConsistent, grid),
        Command::FpMoments { grid, .. } => (Method::FpMoments, grid),
        Command::Sde { grid, .. } => (Method::Sde, grid),
        Command::LindbladSs { grid, .. } => (Method::Lindblad, grid),
        Command::Qfunc { .. } | Command::Compare { .. } => unreachable!("handled by run"),
    };
    let mut spec = SweepSpec::new(method, resolve_grid(grid, cfg)?);
    spec.seed = g.seed;
    match cmd {
        Command::SelfConsistent { scaled, .. } => fill_scaled(&mut spec, scaled, cfg),
        Command::FpMoments { scaled, tol, .. } => {
            fill_scaled(&mut spec, scaled, cfg);
            if let Some(t) = tol {
                spec.tol = *t;
            }
        }
        Command::Sde {
            scaled, sde, nbar_b, ..
        } => {
            fill_scaled(&mut spec, scaled, cfg);
            spec.sde = resolve_sde(sde, cfg);
            spec.sde.nbar_b = nbar_b.or(cfg.physical.nbar_b).unwrap_or(0.0);
        }
        Command::LindbladSs { phys, trunc, .. } => {
            spec.physical = resolve_physical(phys, cfg, true)?;
            spec.lindblad = resolve_trunc(trunc, cfg);
        }
        _ => {}
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Serialize)]
pub struct QfuncReport {
    pub drive: f64,
    pub eps: f64,
    pub nphot_dim: usize,
    pub nphon_dim: usize,
    pub spec: GridSpec,
    /// `q[ii][ir]`: rows of constant Im α, increasing.
    pub q: Vec<Vec<f64>>,
    /// Local maxima, largest first, as `[re, im, Q]`.
    pub maxima: Vec<[f64; 3]>,
    pub inversion_defect: f64,
    pub outer_mass: f64,
    pub truncation_warning: bool,
}

pub fn qfunc(
    cfg: &Config,
    phys: &PhysArgs,
    trunc: &TruncArgs,
    half: Option<f64>,
    step: Option<f64>,
) -> CliResult<QfuncReport> {
    let base = resolve_physical(phys, cfg, true)?.expect("required");
    let drive = phys
        .drive
        .or(cfg.physical.drive)
        .ok_or_else(|| CliError::config("--drive is required"))?;
    let p = base.at_drive(drive)?;
    let eps = drive / base.critical_drive();
    let l = resolve_trunc(trunc, cfg);
    if l.shanks.is_some() {
        return Err(CliError::config("qfunc takes --nphot-dim/--nphon-dim, not --shanks"));
    }
    let half = half.or(cfg.qfunc.half_width).unwrap_or(6.0);
    let step = step.or(cfg.qfunc.step).unwrap_or(0.25);
    if !(half > 0.0 && step > 0.0 && step <= half) {
        return Err(CliError::config(format!("bad Q grid: half-width {half}, step {step}")));
    }
    let h = HilbertConfig::new(l.nphot_dim, l.nphon_dim)
        .map_err(|e| CliError::config(e.to_string()))?
        .with_frame(if l.plain_phonon_basis {
            dpo_core::lindblad::PhononFrame::Fixed(0.0)
        } else {
            dpo_core::lindblad::PhononFrame::MeanField
        });
    let lv = build_liouvillian(&p, &h).map_err(CliError::at(eps))?;
    let rho = steady_state(&lv, &SolverOptions::default()).map_err(CliError::at(eps))?;
    let spec = GridSpec::symmetric(half, step);
    let q = q_function(&rho.partial_trace_photon(), &spec).map_err(CliError::at(eps))?;
    Ok(QfuncReport {
        drive,
        eps,
        nphot_dim: h.n_phot,
        nphon_dim: h.n_phon,
        spec,
        q: q.values.chunks(spec.n_re).map(<[f64]>::to_vec).collect(),
        maxima: q.maxima().iter().map(|(a, v)| [a.re, a.im, *v]).collect(),
        inversion_defect: q.inversion_defect(),
        outer_mass: q.outer_mass,
        truncation_warning: q.truncation_warning,
    })
}

impl QfuncReport {
    /// CSV: a `#` line with the grid spec and diagnostics, then `re,im,q`
    /// rows with Re α varying fastest.
    pub fn write(&self, format: Format, out: &mut dyn Write) -> CliResult<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let s = &self.spec;
                writeln!(
                    out,
                    "# re_min={} re_max={} im_min={} im_max={} n_re={} n_im={} drive={} eps={} nphot_dim={} nphon_dim={} truncation_warning={} outer_mass={}",
                    s.re_min, s.re_max, s.im_min, s.im_max, s.n_re, s.n_im, self.drive, self.eps,
                    self.nphot_dim, self.nphon_dim, self.truncation_warning, self.outer_mass
                )?;
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(["re", "im", "q"])?;
                for (ii, row) in self.q.iter().enumerate() {
                    for (ir, v) in row.iter().enumerate() {
                        let a = s.point(ir, ii);
                        w.write_record([format!("{:?}", a.re), format!("{:?}", a.im), format!("{v:?}")])?;
                    }
                }
                w.flush()?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
