use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} outside its domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("no admissible root in [0, 1) for eps = {eps}, x = {x}")]
    NoRoot { eps: f64, x: f64 },

    #[error("hypergeometric order k = {k} exceeds the table limit k_max = {k_max}")]
    OrderOverflow { k: usize, k_max: usize },

    #[error("moment series did not converge within {k_max} terms (eps = {eps}, x = {x})")]
    SeriesNonConvergence { eps: f64, x: f64, k_max: usize },

    #[error("{diverged} of {total} trajectories diverged (limit 20%)")]
    TooManyDiverged { diverged: usize, total: usize },

    #[error("steady-state solver failed: {0}")]
    Solver(String),
}

pub(crate) fn require(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
