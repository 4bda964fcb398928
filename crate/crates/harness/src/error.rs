use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("source {index}: {source}")]
    Source {
        index: usize,
        #[source]
        source: rfmix_core::Error,
    },

    #[error(transparent)]
    Core(#[from] rfmix_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: checksum mismatch (expected {expected}, found {actual})", path.display())]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("{}: expected {expected} samples, file holds {actual_bytes} bytes", path.display())]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual_bytes: u64,
    },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("no sample with id {0:?} in manifest")]
    NotFound(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl HarnessError {
    pub fn validation(msg: impl Into<String>) -> Self {
        HarnessError::Validation(msg.into())
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn json(path: impl AsRef<Path>, source: serde_json::Error) -> Self {
        HarnessError::Json {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Process exit status: 1 validation, 2 I/O or integrity, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Json { .. } | HarnessError::NotFound(_) => 1,
            HarnessError::Source { source, .. } | HarnessError::Core(source) => core_code(source),
            HarnessError::Io { .. }
            | HarnessError::Checksum { .. }
            | HarnessError::Truncated { .. }
            | HarnessError::Integrity(_) => 2,
            HarnessError::Numeric(_) => 3,
        }
    }
}

fn core_code(e: &rfmix_core::Error) -> i32 {
    use rfmix_core::Error as E;
    match e {
        E::ZeroPower | E::RankDeficient => 3,
        _ => 1,
    }
}
