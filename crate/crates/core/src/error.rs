use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid block partition: {0}")]
    Partition(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A matrix that must be invertible (or positive definite) was not.
    #[error("numerical degeneracy{}: {what}", block.map(|b| format!(" in block {b}")).unwrap_or_default())]
    Degenerate {
        block: Option<usize>,
        what: &'static str,
    },

    #[error("PRD is undefined for a reference signal with zero norm")]
    ZeroReference,

    #[error("malformed data: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn degenerate(block: Option<usize>, what: &'static str) -> Self {
        Error::Degenerate { block, what }
    }

    /// Attaches a block id to a degeneracy error raised by a block-local kernel.
    pub fn in_block(self, block: usize) -> Self {
        match self {
            Error::Degenerate { block: None, what } => Error::Degenerate {
                block: Some(block),
                what,
            },
            other => other,
        }
    }
}
