use netwave_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("rational dependence: {0}")]
    RationalDependence(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("cluster ambiguity: {0}")]
    Ambiguity(String),

    #[error("{} check(s) failed: {}", .0.len(), .0.join(", "))]
    ChecksFailed(Vec<String>),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::RationalDependence(_) => 3,
            CliError::Assembly(_) => 4,
            CliError::Ambiguity(_) => 5,
            CliError::ChecksFailed(_) | CliError::Runtime(_) => 1,
        }
    }

    /// Classify a core error raised while processing `field`.
    pub fn from_core(field: &str, e: Error) -> CliError {
        let msg = format!("{field}: {e}");
        match e {
            Error::RationalDependenceViolated(_) => CliError::RationalDependence(msg),
            Error::ClusterAmbiguity { .. } => CliError::Ambiguity(msg),
            Error::InvalidFunction(_) => CliError::Parse(msg),
            Error::InvalidGraph(_)
            | Error::DimensionMismatch(_)
            | Error::NonDiagonalizable { .. }
            | Error::ZeroEigenvalue { .. }
            | Error::SignChange { .. }
            | Error::NonzeroLowerOrder { .. }
            | Error::SinkDetected { .. }
            | Error::WrongConditionCount { .. }
            | Error::ConditionShape { .. }
            | Error::SingularOutgoingMatrix { .. }
            | Error::NonPositiveVelocity { .. } => CliError::Assembly(msg),
            _ => CliError::Runtime(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
