use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },

    #[error("timestep {t} out of range for schedule of {steps} steps")]
    TimestepOutOfRange { t: usize, steps: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic bytes, expected {expected}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("{path}: unsupported format version {found}")]
    BadVersion { path: PathBuf, found: u8 },

    #[error("{path}: truncated payload ({detail})")]
    Truncated { path: PathBuf, detail: String },

    #[error("{path}: malformed payload ({detail})")]
    Malformed { path: PathBuf, detail: String },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainingDiverged {
        epoch: usize,
        loss: f64,
        trace: Vec<f64>,
    },

    #[error(
        "trojan quality not met after {attempts} attempts \
         (best clean accuracy {clean_acc:.1}%, attack success {asr:.1}%)"
    )]
    TrojanQualityNotMet {
        attempts: usize,
        clean_acc: f64,
        asr: f64,
    },

    #[error("gradient unavailable: {0}")]
    GradientUnavailable(&'static str),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
