use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] pmwell_core::Error),
    #[error("target energy unreachable: wanted {target}, attainable range [{min}, {max}]")]
    TargetUnreachable { target: f64, min: f64, max: f64 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serialize(String),
}

impl LabError {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical(pmwell_core::Error::InvalidParams { .. }) => 2,
            LabError::Numerical(_) | LabError::TargetUnreachable { .. } => 3,
            LabError::Io { .. } | LabError::Serialize(_) => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
