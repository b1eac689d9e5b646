//! Likelihood-ratio comparison of nested mixed-model fits.

use thiserror::Error;

use crate::lmm::LmmFit;
use crate::numstat::chisq_upper_p;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("likelihood ratio test requires ML fits")]
    RemlFit,
    #[error("models were fitted to different numbers of observations ({null} vs {full})")]
    ObservationMismatch { null: usize, full: usize },
    #[error("models were fitted to different rows of the data")]
    RowMismatch,
    #[error("models have different random-effect structures")]
    RandomStructureMismatch,
    #[error("null model must have fewer parameters than the full model ({null} vs {full})")]
    NotNested { null: usize, full: usize },
}

/// One model's row of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSummary {
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub log_likelihood: f64,
    pub deviance: f64,
}

impl ModelSummary {
    pub fn of(fit: &LmmFit) -> Self {
        Self {
            n_params: fit.n_params,
            aic: fit.aic,
            bic: fit.bic,
            log_likelihood: fit.log_likelihood,
            deviance: fit.criterion,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrtResult {
    pub null: ModelSummary,
    pub full: ModelSummary,
    pub chisq: f64,
    pub chi_df: usize,
    pub p_value: f64,
    /// The null's fixed terms are not all present in the full model.
    pub terms_not_nested: bool,
}

pub fn lrt_compare(null_fit: &LmmFit, full_fit: &LmmFit) -> Result<LrtResult, InferenceError> {
    if null_fit.reml || full_fit.reml {
        return Err(InferenceError::RemlFit);
    }
    if null_fit.n_obs != full_fit.n_obs {
        return Err(InferenceError::ObservationMismatch {
            null: null_fit.n_obs,
            full: full_fit.n_obs,
        });
    }
    if null_fit.frame.kept_rows != full_fit.frame.kept_rows {
        return Err(InferenceError::RowMismatch);
    }
    if null_fit.frame.formula.random_specs != full_fit.frame.formula.random_specs {
        return Err(InferenceError::RandomStructureMismatch);
    }
    if null_fit.n_params >= full_fit.n_params {
        return Err(InferenceError::NotNested {
            null: null_fit.n_params,
            full: full_fit.n_params,
        });
    }
    let chi_df = full_fit.n_params - null_fit.n_params;
    // optimizer slack can leave the difference slightly negative
    let chisq = (null_fit.criterion - full_fit.criterion).max(0.0);
    let p_value = chisq_upper_p(chisq, chi_df as f64).unwrap_or(1.0);
    let full_terms = &full_fit.frame.formula.fixed_terms;
    let terms_not_nested = null_fit
        .frame
        .formula
        .fixed_terms
        .iter()
        .any(|t| !full_terms.contains(t));
    Ok(LrtResult {
        null: ModelSummary::of(null_fit),
        full: ModelSummary::of(full_fit),
        chisq,
        chi_df,
        p_value,
        terms_not_nested,
    })
}
