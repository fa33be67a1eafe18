use serde_json::json;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing settings; exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// A module failed at one grid point; exit code 3.
    #[error("numerical failure at eps = {eps}: {source}")]
    Numerical {
        eps: f64,
        #[source]
        source: dpo_core::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn at(eps: f64) -> impl FnOnce(dpo_core::Error) -> Self {
        move |source| Self::Numerical { eps, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Io(_) => 1,
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let v = match self {
            Self::Config(msg) => json!({ "error": "config", "message": msg }),
            Self::Numerical { eps, source } => json!({
                "error": "numerical",
                "eps": eps,
                "message": source.to_string(),
            }),
            Self::Io(e) => json!({ "error": "io", "message": e.to_string() }),
        };
        v.to_string()
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}
