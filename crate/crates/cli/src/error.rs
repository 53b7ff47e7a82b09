use hybrid_swap::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    /// 2 for configuration and I/O problems, 3 for physics or domain
    /// violations, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Model(e) => match e {
                Error::Numerical(_) => 4,
                Error::Csv(_) | Error::Json(_) | Error::Io(_) => 2,
                _ => 3,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Model(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(Error::Cutoff { cutoff: 2, reason: "r" }).exit_code(), 3);
        assert_eq!(CliError::from(Error::HeraldImpossible(0.0)).exit_code(), 3);
        assert_eq!(CliError::from(Error::Numerical("x".into())).exit_code(), 4);
    }
}
