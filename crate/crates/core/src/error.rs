use thiserror::Error;

/// Errors raised across the crate. Each variant maps to a stable
/// machine-readable code used by the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TsError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("argument outside the domain of the transform: {0}")]
    Domain(String),

    #[error("legs are not convolvable: {0}")]
    Mismatch(String),

    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObs { needed: usize, got: usize },

    #[error("sample cumulants are infeasible: {0}")]
    Infeasible(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("density inversion failed: {0}")]
    Inversion(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("invalid input: {0}")]
    Input(String),
}

impl TsError {
    pub fn code(&self) -> &'static str {
        match self {
            TsError::ParamDomain(_) => "PARAM_DOMAIN",
            TsError::Domain(_) => "DOMAIN_ERROR",
            TsError::Mismatch(_) => "PARAM_MISMATCH",
            TsError::TooFewObs { .. } => "TOO_FEW_OBS",
            TsError::Infeasible(_) => "INFEASIBLE_CUMULANTS",
            TsError::NonConvergence { .. } => "NON_CONVERGENCE",
            TsError::Inversion(_) => "INVERSION_FAILURE",
            TsError::Simulation(_) => "SIMULATION_FAILURE",
            TsError::Input(_) => "INVALID_INPUT",
        }
    }

    /// True for numerical failures (as opposed to rejected inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TsError::NonConvergence { .. } | TsError::Inversion(_) | TsError::Simulation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, TsError>;
