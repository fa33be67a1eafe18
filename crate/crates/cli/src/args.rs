use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;
use crate::sweep::SdeModeArg;

/// Steady states of the driven degenerate parametric oscillator: mean
/// field, self-consistent, Fokker–Planck series, stochastic trajectories
/// and the truncated master equation.
#[derive(Debug, Parser)]
#[command(name = "dpo", version)]
pub struct Cli {
    /// TOML settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Master seed for stochastic runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (flag > DPO_THREADS > config > all cores).
    #[arg(long, global = true, env = "DPO_THREADS")]
    pub threads: Option<usize>,

    /// Also write a gnuplot script for the emitted CSV (needs --out).
    #[arg(long, global = true)]
    pub plot_hint: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-field fixed points over an ε grid.
    Semiclassical {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Self-consistent pump amplitude and moments.
    SelfConsistent {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        scaled: ScaledArgs,
    },
    /// Exact stationary moments of the reduced Fokker–Planck equation.
    FpMoments {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        scaled: ScaledArgs,
        /// Relative series tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Complex-P trajectory ensembles.
    Sde {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        scaled: ScaledArgs,
        #[command(flatten)]
        sde: SdeArgs,
        /// Thermal phonons (full mode).
        #[arg(long)]
        nbar_b: Option<f64>,
    },
    /// Steady state of the master equation at one drive, or over an ε grid
    /// when --drive is absent.
    LindbladSs {
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        trunc: TruncArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Photon Q-function of the master-equation steady state.
    Qfunc {
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        trunc: TruncArgs,
        /// Grid covers [-half, half] on both axes.
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Aligned table, pairwise deviations and undershoot/overshoot flags.
    Compare {
        /// Comma-separated methods: semiclassical, self-consistent,
        /// fp-moments, sde, lindblad.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Leave the open interval lo,hi out of the deviation summary.
        #[arg(long, value_delimiter = ',')]
        exclude: Option<Vec<f64>>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        scaled: ScaledArgs,
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        sde: SdeArgs,
        #[command(flatten)]
        trunc: TruncArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub eps_start: Option<f64>,
    #[arg(long)]
    pub eps_stop: Option<f64>,
    #[arg(long)]
    pub eps_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScaledArgs {
    /// Scaled coupling x = κΓ/(8g²).
    #[arg(long)]
    pub x: Option<f64>,
    /// γ = Γ/κ (full-mode trajectories only).
    #[arg(long)]
    pub gamma_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PhysArgs {
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Phononic decay rate Γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    /// Mechanical drive E.
    #[arg(long)]
    pub drive: Option<f64>,
    #[arg(long)]
    pub nbar_b: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SdeArgs {
    #[arg(long, value_enum)]
    pub mode: Option<SdeModeArg>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_burn: Option<f64>,
    #[arg(long)]
    pub t_total: Option<f64>,
    #[arg(long)]
    pub divergence_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TruncArgs {
    /// Photon Fock dimension.
    #[arg(long)]
    pub nphot_dim: Option<usize>,
    /// Phonon Fock dimension.
    #[arg(long)]
    pub nphon_dim: Option<usize>,
    /// Truncations N (2N photons × N phonons) for a Shanks study.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["nphot_dim", "nphon_dim"])]
    pub shanks: Option<Vec<usize>>,
    /// Expand the phonon in the plain Fock basis instead of the displaced one.
    #[arg(long)]
    pub plain_phonon_basis: bool,
}
