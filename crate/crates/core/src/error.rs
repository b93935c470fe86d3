//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or constructor argument is outside its physical domain.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// A fitted parameter set implies a negative internal loss rate.
    #[error("unphysical fit: {0}")]
    UnphysicalFit(String),

    /// No resonance dip could be located in a trace.
    #[error("no resonance found: {0}")]
    NoResonance(String),

    /// Invalid or inconsistent configuration (windows, grids, run setup).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Measured data is unusable (e.g. SNR at or below the noise floor).
    #[error("data quality error: {0}")]
    DataQuality(String),

    /// A data set does not contain the feature being extracted.
    #[error("data error: {0}")]
    Data(String),

    /// A lookup (e.g. temperature grid point) failed.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// A numerical routine failed to produce a usable result.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An optimizer exhausted its iteration budget. Carries the best point
    /// reached so the caller can inspect or reseed.
    #[error("fit did not converge after {iterations} iterations (best cost {best_cost:.6e})")]
    FitDidNotConverge {
        iterations: usize,
        best_cost: f64,
        best_params: Vec<f64>,
    },

    /// Malformed input file; `line` is 1-based.
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
