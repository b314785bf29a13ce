use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] hioco::Error),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("acceptance failed: {0}")]
    Acceptance(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::BoundViolation(_) | CliError::Acceptance(_) => 3,
            CliError::Core(hioco::Error::Convergence { .. }) => 4,
            CliError::Core(
                hioco::Error::InvalidParameter(_)
                | hioco::Error::InvalidSet(_)
                | hioco::Error::DimensionMismatch { .. },
            ) => 2,
            CliError::Core(_) | CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::BoundViolation("x".into()).exit_code(), 3);
        let conv = hioco::Error::Convergence {
            solver: "pgd",
            iterations: 10,
            residual: 1.0,
            context: String::new(),
        };
        assert_eq!(CliError::from(conv).exit_code(), 4);
        assert_eq!(CliError::from(hioco::Error::InvalidParameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(hioco::Error::Protocol("x".into())).exit_code(), 1);
    }
}
