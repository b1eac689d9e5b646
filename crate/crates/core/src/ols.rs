//! Ordinary least squares on a [`ModelFrame`].

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::design::ModelFrame;
use crate::linalg::{dot, Matrix, Qr};
use crate::numstat::{f_upper_p, t_two_sided_p};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("design matrix is singular: column `{column}` is linearly dependent on earlier columns")]
    Singular { column: String },
    #[error("insufficient data: {n} observations for {p} coefficients")]
    InsufficientData { n: usize, p: usize },
    #[error("new data has {found} columns, model has {expected}")]
    ColumnMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Residual standard error.
    pub sigma: f64,
    pub df_resid: usize,
    pub r2: f64,
    pub adj_r2: f64,
    /// Overall F test; `None` for an intercept-only model.
    pub f_stat: Option<f64>,
    pub f_df: (usize, usize),
    pub f_p: Option<f64>,
    /// `(XᵀX)⁻¹`.
    pub unscaled_cov: Matrix,
    pub frame: ModelFrame,
}

impl OlsFit {
    pub fn rss(&self) -> f64 {
        dot(&self.residuals, &self.residuals)
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.coefficients[i])
    }
}

pub fn fit_ols(frame: &ModelFrame) -> Result<OlsFit, OlsError> {
    let (n, p) = (frame.n(), frame.p());
    if n <= p {
        return Err(OlsError::InsufficientData { n, p });
    }
    let qr = Qr::new(&frame.x).map_err(|j| OlsError::Singular {
        column: frame.x_labels[j].clone(),
    })?;
    let coefficients = qr.solve(&frame.y);
    let fitted = frame.x.matvec(&coefficients);
    let residuals: Vec<f64> = frame.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();

    let df_resid = n - p;
    let rss = dot(&residuals, &residuals);
    let sigma2 = rss / df_resid as f64;
    let unscaled_cov = qr.unscaled_covariance();
    let std_errors: Vec<f64> = (0..p)
        .map(|j| libm::sqrt(sigma2 * unscaled_cov[(j, j)]))
        .collect();
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    let p_values = t_values
        .iter()
        .map(|&t| t_two_sided_p(t, df_resid as f64).unwrap_or(f64::NAN))
        .collect();

    let mean = frame.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = frame.y.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = if p == 1 || tss == 0.0 { 0.0 } else { (1.0 - rss / tss).max(0.0) };
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / df_resid as f64;
    let (f_stat, f_p) = if p > 1 {
        let f = ((tss - rss) / (p - 1) as f64) / sigma2;
        (Some(f), f_upper_p(f, (p - 1) as f64, df_resid as f64).ok())
    } else {
        (None, None)
    };

    Ok(OlsFit {
        labels: frame.x_labels.clone(),
        coefficients,
        std_errors,
        t_values,
        p_values,
        fitted,
        residuals,
        sigma: libm::sqrt(sigma2),
        df_resid,
        r2,
        adj_r2,
        f_stat,
        f_df: (p - 1, df_resid),
        f_p,
        unscaled_cov,
        frame: frame.clone(),
    })
}

/// `new_x · β̂`.
pub fn predict_ols(fit: &OlsFit, new_x: &Matrix) -> Result<Vec<f64>, OlsError> {
    if new_x.ncols() != fit.coefficients.len() {
        return Err(OlsError::ColumnMismatch {
            expected: fit.coefficients.len(),
            found: new_x.ncols(),
        });
    }
    Ok(new_x.matvec(&fit.coefficients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataframe::{derive_center, read_csv, DataFrame};
    use crate::design::build_model_frame;
    use crate::formula::parse_formula;

    const SEX: &str = "sex,pitch\nfemale,233\nfemale,204\nfemale,242\nmale,130\nmale,112\nmale,142\n";
    const AGE: &str = "age,pitch\n14,252\n23,244\n35,240\n48,233\n52,212\n67,204\n";

    fn fit(df: &DataFrame, f: &str) -> Result<OlsFit, OlsError> {
        fit_ols(&build_model_frame(df, &parse_formula(f).unwrap()).unwrap())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sex_summary() {
        let f = fit(&read_csv(SEX.as_bytes()).unwrap(), "pitch ~ sex").unwrap();
        assert!(close(f.coefficients[0], 226.3333, 1e-3));
        assert!(close(f.coefficients[1], -98.3333, 1e-3));
        assert!(close(f.std_errors[0], 10.18, 5e-3));
        assert!(close(f.std_errors[1], 14.40, 5e-3));
        assert!(close(f.t_values[0], 22.224, 1e-3));
        assert!(close(f.t_values[1], -6.827, 1e-3));
        assert!(close(f.p_values[1], 0.00241, 1e-5));
        assert!(close(f.r2, 0.921, 5e-4));
        assert!(close(f.adj_r2, 0.9012, 5e-5));
        assert!(close(f.sigma, 17.64, 5e-3));
        assert_eq!(f.df_resid, 4);
        assert!(close(f.f_stat.unwrap(), 46.61, 5e-3));
        assert_eq!(f.f_df, (1, 4));
        assert!(close(f.f_p.unwrap(), 0.002407, 1e-6));
        assert!(close(f.f_p.unwrap(), f.p_values[1], 1e-10));
        let want = [6.667, -22.333, 15.667, 2.0, -16.0, 14.0];
        for (r, w) in f.residuals.iter().zip(want) {
            assert!(close(*r, w, 1e-3));
        }
        // intercept + slope is the male mean
        assert!(close(f.coefficients[0] + f.coefficients[1], 128.0, 1e-9));
    }

    #[test]
    fn age_summary_and_prediction() {
        let df = read_csv(AGE.as_bytes()).unwrap();
        let f = fit(&df, "pitch ~ age").unwrap();
        assert!(close(f.coefficients[0], 267.0765, 1e-4));
        assert!(close(f.std_errors[0], 6.8522, 1e-4));
        assert!(close(f.t_values[0], 38.98, 5e-3));
        assert!(close(f.p_values[0], 2.59e-6, 5e-9));
        assert!(close(f.coefficients[1], -0.9099, 1e-4));
        assert!(close(f.std_errors[1], 0.1569, 1e-4));
        assert!(close(f.t_values[1], -5.80, 5e-3));
        assert!(close(f.p_values[1], 0.00439, 1e-5));
        let at0 = predict_ols(&f, &Matrix::from_rows(&[vec![1.0, 0.0]])).unwrap();
        assert!(close(at0[0], f.coefficients[0], 1e-12));
        let mean_age = 239.0 / 6.0;
        let at_mean = predict_ols(&f, &Matrix::from_rows(&[vec![1.0, mean_age]])).unwrap();
        let centered = fit(&derive_center(&df, "age").unwrap(), "pitch ~ age.c").unwrap();
        assert!(close(at_mean[0], centered.coefficients[0], 1e-9));
        assert!(close(at_mean[0], 230.8333, 1e-4));
        assert_eq!(predict_ols(&f, &f.frame.x).unwrap(), f.fitted);
        assert!(matches!(
            predict_ols(&f, &Matrix::zeros(1, 3)),
            Err(OlsError::ColumnMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn intercept_only() {
        let f = fit(&read_csv(AGE.as_bytes()).unwrap(), "pitch ~ 1").unwrap();
        assert!(close(f.coefficients[0], 1385.0 / 6.0, 1e-9));
        assert_eq!(f.r2, 0.0);
        assert!(f.f_stat.is_none());
    }

    #[test]
    fn errors() {
        let df = read_csv(b"y,a,b\n1,1,2\n2,2,4\n3,3,6\n5,4,8\n").unwrap();
        assert_eq!(
            fit(&df, "y ~ a + b"),
            Err(OlsError::Singular { column: "b".into() })
        );
        let df = read_csv(b"y,a\n1,1\n2,2\n").unwrap();
        assert_eq!(
            fit(&df, "y ~ a"),
            Err(OlsError::InsufficientData { n: 2, p: 2 })
        );
    }
}
