//! TOML settings file. Every key is optional and command-line flags win.
//!
//! ```toml
//! threads = 4
//! seed = 7
//! format = "csv"
//!
//! [grid]
//! start = 0.0
//! stop = 3.0
//! step = 0.05
//!
//! [scaled]
//! x = 12.5
//! gamma_ratio = 1.0
//!
//! [physical]
//! kappa = 1.0
//! gamma = 1.0
//! g = 0.1
//! nbar_b = 0.0
//!
//! [sde]
//! mode = "reduced"
//! n_traj = 10000
//!
//! [lindblad]
//! nphot_dim = 30
//! nphon_dim = 15
//! shanks = [11, 12, 13, 14, 15]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::output::Format;
use crate::sweep::SdeModeArg;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub scaled: ScaledConfig,
    #[serde(default)]
    pub physical: PhysicalConfig,
    #[serde(default)]
    pub sde: SdeConfigFile,
    #[serde(default)]
    pub lindblad: LindbladConfig,
    #[serde(default)]
    pub qfunc: QfuncConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledConfig {
    pub x: Option<f64>,
    pub gamma_ratio: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub g: Option<f64>,
    pub drive: Option<f64>,
    pub nbar_b: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfigFile {
    pub mode: Option<SdeModeArg>,
    pub n_traj: Option<usize>,
    pub dt: Option<f64>,
    pub t_burn: Option<f64>,
    pub t_total: Option<f64>,
    pub divergence_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladConfig {
    pub nphot_dim: Option<usize>,
    pub nphon_dim: Option<usize>,
    pub shanks: Option<Vec<usize>>,
    pub plain_phonon_basis: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfuncConfig {
    pub half_width: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub methods: Option<Vec<String>>,
    pub exclude: Option<[f64; 2]>,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let doc = include_str!("config.rs");
        let body: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start().to_string() + "\n")
            .collect();
        let c = Config::parse(&body).unwrap();
        assert_eq!(c.threads, Some(4));
        assert_eq!(c.lindblad.shanks, Some(vec![11, 12, 13, 14, 15]));
        assert_eq!(c.sde.mode, Some(SdeModeArg::Reduced));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(Config::parse("thread = 2"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("[grid]\nstart = \"a\""), Err(CliError::Config(_))));
    }
}
