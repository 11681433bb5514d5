use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] rfim_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}:{line}: {message}", path.display())]
    Records { path: PathBuf, line: usize, message: String },

    #[error("summary in {} differs from the one recomputed from its records", path.display())]
    SummaryMismatch { path: PathBuf },

    #[error("{failed} of {total} acceptance criteria failed")]
    Verify { failed: usize, total: usize },
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> Self {
        let path = path.as_ref().to_path_buf();
        move |source| HarnessError::Io { path, source }
    }

    /// 0 success, 1 validation, 2 invariant violation, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Core(e) if e.is_invariant_violation() => 2,
            HarnessError::Core(_) => 1,
            HarnessError::SummaryMismatch { .. } | HarnessError::Verify { .. } => 2,
            HarnessError::Io { .. } | HarnessError::Records { .. } => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rfim_core::{Error, Invariant};

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Validation("x".into()).exit_code(), 1);
        assert_eq!(HarnessError::Core(Error::Parameter("x".into())).exit_code(), 1);
        assert_eq!(HarnessError::Core(Error::violation(Invariant::Coupling, "x")).exit_code(), 2);
        let io = HarnessError::io("/nowhere")(io::Error::from(io::ErrorKind::NotFound));
        assert_eq!(io.exit_code(), 3);
    }
}
