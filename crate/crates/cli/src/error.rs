use lmkit_core::design::DesignError;
use lmkit_core::diagnostics::DiagnosticsError;
use lmkit_core::lmm::LmmError;
use lmkit_core::Error as CoreError;
use thiserror::Error;

/// A failed command, carrying its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, formulas or model specifications (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or unusable data, and IO failures (exit 3).
    #[error("{0}")]
    Data(String),
    /// The optimizer gave up (exit 4).
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }

    pub fn io(what: &str, path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("cannot {what} {}: {e}", path.display()))
    }
}

fn from_lmm(e: LmmError) -> CliError {
    match e {
        LmmError::Convergence { .. } => CliError::Convergence(e.to_string()),
        LmmError::NoRandomEffects | LmmError::ThetaDimension { .. } => CliError::Usage(e.to_string()),
        LmmError::Singular { .. } | LmmError::InsufficientData { .. } => CliError::Data(e.to_string()),
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Formula(e) => CliError::Usage(e.to_string()),
            CoreError::Design(d @ (DesignError::UnknownVariable(_) | DesignError::NoResponse)) => {
                CliError::Usage(d.to_string())
            }
            CoreError::Inference(e) => CliError::Usage(e.to_string()),
            CoreError::Lmm(e) => from_lmm(e),
            CoreError::Diagnostics(DiagnosticsError::Lmm(e)) => from_lmm(e),
            CoreError::Diagnostics(e @ DiagnosticsError::CoefficientIndex { .. }) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CoreError::from(e).into()
            }
        }
    )*};
}

via_core!(
    lmkit_core::dataframe::DataError,
    lmkit_core::formula::FormulaError,
    DesignError,
    lmkit_core::ols::OlsError,
    LmmError,
    lmkit_core::inference::InferenceError,
    DiagnosticsError
);
