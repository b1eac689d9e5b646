use thiserror::Error;

use crate::dataframe::DataError;
use crate::design::DesignError;
use crate::diagnostics::DiagnosticsError;
use crate::formula::FormulaError;
use crate::inference::InferenceError;
use crate::lmm::LmmError;
use crate::numstat::DomainError;
use crate::ols::OlsError;

/// Any error the pipeline can produce.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error(transparent)]
    Lmm(#[from] LmmError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
