use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("{module}: {message}")]
    Parameter { module: &'static str, message: String },

    #[error("{module}: insufficient data: {message}")]
    InsufficientData { module: &'static str, message: String },

    #[error("rank-deficient design: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("{module}: fit failed: {message}")]
    Fit { module: &'static str, message: String },

    #[error("quadratic: observation {index} has leverage 1; studentized residual undefined")]
    UnitLeverage { index: usize },

    #[error("additive: fit did not converge; confidence bands are unavailable")]
    NotConverged,

    #[error("eval: no replicated (road rank, home rank) pairs; pure error undefined")]
    NoReplication,

    #[error("eval: {groups} distinct rank pairs is not more than {params} model parameters")]
    InsufficientGroups { groups: usize, params: usize },

    #[error("eval: model SSE {fit_sse} is below pure-error SS {ss_pe}")]
    Inconsistent { fit_sse: f64, ss_pe: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{label} / {model}: {source}")]
    Benchmark {
        label: String,
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(module: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn insufficient(module: &'static str, message: impl Into<String>) -> Self {
        Error::InsufficientData {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Whether the failure stems from user input or configuration rather than
    /// an internal numerical problem.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::EmptyInput
            | Error::MissingColumn(_)
            | Error::Row { .. }
            | Error::InvalidSplit(_)
            | Error::Parameter { .. }
            | Error::InsufficientData { .. }
            | Error::NoReplication
            | Error::InsufficientGroups { .. }
            | Error::ModelFile(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Fold { source, .. } | Error::Benchmark { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
