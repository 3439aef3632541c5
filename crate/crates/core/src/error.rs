//! Error types shared across the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// WAV decode failures, reported distinctly so callers can tell a broken
/// file from an unsupported one.
#[derive(Debug, Error)]
pub enum WavError {
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported WAV codec: format tag {format_tag}, {bits} bits/sample")]
    UnsupportedCodec { format_tag: u16, bits: u16 },
    #[error("truncated data chunk: header declares {declared} bytes, {available} available")]
    TruncatedData { declared: usize, available: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] WavError),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("config: {0}")]
    Config(String),

    #[error("dsp: {0}")]
    Dsp(String),

    /// Feature extraction failure, tagged with the plane that produced it.
    #[error("feature plane `{plane}`: {message}")]
    Feature { plane: String, message: String },

    #[error("architecture: {0}")]
    Arch(String),

    #[error("shape: {0}")]
    Shape(String),

    #[error("tensor format: {0}")]
    TensorFormat(String),

    #[error("data: {0}")]
    Data(String),

    #[error("training diverged in fold {fold} at epoch {epoch}: {detail}")]
    Divergence {
        fold: usize,
        epoch: usize,
        detail: String,
    },
}

impl Error {
    pub fn feature(plane: &str, message: impl Into<String>) -> Self {
        Error::Feature {
            plane: plane.to_string(),
            message: message.into(),
        }
    }
}
