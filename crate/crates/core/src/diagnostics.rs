//! Assumption checks: residual plots, normality, influence, collinearity.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::design::ModelFrame;
use crate::linalg::{dot, Matrix, Qr};
use crate::lmm::{fit_lmm, LmmError, LmmFit};
use crate::numstat::normal_quantile;
use crate::ols::{fit_ols, OlsError, OlsFit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("need at least {needed} observations, have {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("design is singular without row {}", row + 1)]
    LeaveOneOutSingular { row: usize },
    #[error("column `{0}` is constant; its correlation is undefined")]
    ConstantColumn(String),
    #[error("coefficient index {index} out of range for {p} coefficients")]
    CoefficientIndex { index: usize, p: usize },
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error(transparent)]
    Lmm(#[from] LmmError),
}

/// Fitted values and residuals of either model kind.
pub trait Fitted {
    fn fitted(&self) -> &[f64];
    fn residuals(&self) -> &[f64];
}

impl Fitted for OlsFit {
    fn fitted(&self) -> &[f64] {
        &self.fitted
    }
    fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

impl Fitted for LmmFit {
    fn fitted(&self) -> &[f64] {
        &self.fitted
    }
    fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    Histogram,
    Qq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    Points(Vec<(f64, f64)>),
    /// `edges.len() == counts.len() + 1`.
    Bins { edges: Vec<f64>, counts: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub kind: PlotKind,
    pub data: PlotData,
    pub x_label: String,
    pub y_label: String,
}

impl PlotSeries {
    pub fn points(&self) -> &[(f64, f64)] {
        match &self.data {
            PlotData::Points(p) => p,
            PlotData::Bins { .. } => &[],
        }
    }
}

pub fn residual_fitted(fit: &impl Fitted) -> PlotSeries {
    PlotSeries {
        kind: PlotKind::Scatter,
        data: PlotData::Points(
            fit.fitted()
                .iter()
                .copied()
                .zip(fit.residuals().iter().copied())
                .collect(),
        ),
        x_label: "fitted".into(),
        y_label: "residual".into(),
    }
}

/// `⌈log₂ n⌉ + 1`.
pub fn sturges_bins(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    (usize::BITS - (n - 1).leading_zeros()) as usize + 1
}

/// Equal-width bins over `[min, max]`; the last bin includes its right edge.
pub fn histogram(values: &[f64], n_bins: usize) -> PlotSeries {
    let n_bins = n_bins.max(1);
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if values.is_empty() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|k| if k == n_bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let mut k = ((v - lo) / width) as usize;
        if k >= n_bins {
            k = n_bins - 1;
        }
        // floating edges: keep the bin consistent with the stored edges
        while k > 0 && v < edges[k] {
            k -= 1;
        }
        while k + 1 < n_bins && v >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    PlotSeries {
        kind: PlotKind::Histogram,
        data: PlotData::Bins { edges, counts },
        x_label: "residual".into(),
        y_label: "count".into(),
    }
}

/// Histogram of the residuals; `None` picks the Sturges bin count.
pub fn histogram_residuals(fit: &impl Fitted, n_bins: Option<usize>) -> PlotSeries {
    let r = fit.residuals();
    histogram(r, n_bins.unwrap_or_else(|| sturges_bins(r.len())))
}

/// Normal plotting positions: `(i − a)/(n + 1 − 2a)` with `a = 3/8` for
/// `n ≤ 10` and `1/2` above.
pub fn plotting_positions(n: usize) -> Vec<f64> {
    let a = if n <= 10 { 0.375 } else { 0.5 };
    (1..=n)
        .map(|i| (i as f64 - a) / (n as f64 + 1.0 - 2.0 * a))
        .collect()
}

/// `(theoretical, sample)` pairs, sorted.
pub fn qq_series(values: &[f64]) -> Result<PlotSeries, DiagnosticsError> {
    if values.len() < 2 {
        return Err(DiagnosticsError::TooFewRows { needed: 2, found: values.len() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let points = plotting_positions(sorted.len())
        .into_iter()
        .map(|p| normal_quantile(p).expect("position in (0, 1)"))
        .zip(sorted)
        .collect();
    Ok(PlotSeries {
        kind: PlotKind::Qq,
        data: PlotData::Points(points),
        x_label: "theoretical quantile".into(),
        y_label: "sample quantile".into(),
    })
}

pub fn qq_points(fit: &impl Fitted) -> Result<PlotSeries, DiagnosticsError> {
    qq_series(fit.residuals())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    pub labels: Vec<String>,
    /// `n × p`: full-fit coefficient minus the coefficient without row `i`.
    pub dfbeta: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluenceReason {
    HalfMagnitude,
    SignChange,
}

impl InfluenceReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InfluenceReason::HalfMagnitude => "half-magnitude",
            InfluenceReason::SignChange => "sign-change",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfluenceFlag {
    pub row: usize,
    pub coefficient: usize,
    pub reason: InfluenceReason,
}

/// Coefficient differences for one held-out row.
pub fn dfbeta_row(frame: &ModelFrame, full: &[f64], row: usize) -> Result<Vec<f64>, DiagnosticsError> {
    let loo = fit_ols(&frame.without_row(row)).map_err(|e| match e {
        OlsError::Singular { .. } => DiagnosticsError::LeaveOneOutSingular { row },
        e => e.into(),
    })?;
    Ok(full.iter().zip(&loo.coefficients).map(|(a, b)| a - b).collect())
}

fn dfbeta_precheck(frame: &ModelFrame) -> Result<OlsFit, DiagnosticsError> {
    let (n, p) = (frame.n(), frame.p());
    if n <= p + 1 {
        return Err(DiagnosticsError::TooFewRows { needed: p + 2, found: n });
    }
    Ok(fit_ols(frame)?)
}

/// Assembles a report from per-row results computed by any scheduler.
pub fn dfbeta_from_rows(
    frame: &ModelFrame,
    rows: Vec<Result<Vec<f64>, DiagnosticsError>>,
) -> Result<InfluenceReport, DiagnosticsError> {
    let p = frame.p();
    let mut dfbeta = Matrix::zeros(rows.len(), p);
    for (i, r) in rows.into_iter().enumerate() {
        dfbeta.row_mut(i).copy_from_slice(&r?);
    }
    Ok(InfluenceReport { labels: frame.x_labels.clone(), dfbeta })
}

/// DFbeta by literal refits, one per held-out row.
pub fn dfbeta_ols(frame: &ModelFrame) -> Result<InfluenceReport, DiagnosticsError> {
    dfbeta_ols_with(frame, |n, f| (0..n).map(f).collect())
}

/// [`dfbeta_ols`] with a caller-supplied map over row indices, which must
/// return results in index order (a parallel map, for instance).
pub fn dfbeta_ols_with<M>(frame: &ModelFrame, map: M) -> Result<InfluenceReport, DiagnosticsError>
where
    M: FnOnce(usize, &(dyn Fn(usize) -> Result<Vec<f64>, DiagnosticsError> + Sync)) -> Vec<Result<Vec<f64>, DiagnosticsError>>,
{
    let full = dfbeta_precheck(frame)?;
    let rows = map(frame.n(), &|i| dfbeta_row(frame, &full.coefficients, i));
    dfbeta_from_rows(frame, rows)
}

/// Hat-matrix form `(XᵀX)⁻¹ xᵢ eᵢ / (1 − hᵢᵢ)`, no refits.
pub fn dfbeta_closed_form(fit: &OlsFit) -> Matrix {
    let x = &fit.frame.x;
    let c = &fit.unscaled_cov;
    let (n, p) = (x.nrows(), x.ncols());
    let mut out = Matrix::zeros(n, p);
    for i in 0..n {
        let cx = c.matvec(x.row(i));
        let h = dot(x.row(i), &cx);
        let scale = fit.residuals[i] / (1.0 - h);
        for j in 0..p {
            out[(i, j)] = cx[j] * scale;
        }
    }
    out
}

/// Flags `|dfbeta| ≥ fraction·|β|` and held-out fits that flip the sign.
pub fn influence_flags(report: &InfluenceReport, coefficients: &[f64], fraction: f64) -> Vec<InfluenceFlag> {
    let mut flags = Vec::new();
    for row in 0..report.dfbeta.nrows() {
        for (j, &beta) in coefficients.iter().enumerate() {
            let d = report.dfbeta[(row, j)];
            if libm::fabs(d) >= fraction * libm::fabs(beta) {
                flags.push(InfluenceFlag { row, coefficient: j, reason: InfluenceReason::HalfMagnitude });
            }
            if beta * (beta - d) < 0.0 {
                flags.push(InfluenceFlag { row, coefficient: j, reason: InfluenceReason::SignChange });
            }
        }
    }
    flags
}

/// The chosen fixed effect refitted without row `row`; `None` if that fit fails.
pub fn loo_estimate(frame: &ModelFrame, reml: bool, coef_index: usize, row: usize) -> Option<f64> {
    fit_lmm(&frame.without_row(row), reml)
        .ok()
        .map(|f| f.fixed[coef_index].estimate)
}

/// Leave-one-out estimates of one fixed effect, one entry per frame row.
pub fn loo_fixed_effect(
    frame: &ModelFrame,
    reml: bool,
    coef_index: usize,
) -> Result<Vec<Option<f64>>, DiagnosticsError> {
    loo_fixed_effect_with(frame, reml, coef_index, |n, f| (0..n).map(f).collect())
}

/// [`loo_fixed_effect`] with a caller-supplied ordered map over rows.
pub fn loo_fixed_effect_with<M>(
    frame: &ModelFrame,
    reml: bool,
    coef_index: usize,
    map: M,
) -> Result<Vec<Option<f64>>, DiagnosticsError>
where
    M: FnOnce(usize, &(dyn Fn(usize) -> Option<f64> + Sync)) -> Vec<Option<f64>>,
{
    if coef_index >= frame.p() {
        return Err(DiagnosticsError::CoefficientIndex { index: coef_index, p: frame.p() });
    }
    fit_lmm(frame, reml)?;
    Ok(map(frame.n(), &|i| loo_estimate(frame, reml, coef_index, i)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    pub r: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vif {
    pub label: String,
    /// Infinite when the column is an exact combination of the others.
    pub vif: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollinearityReport {
    pub pairs: Vec<PairCorrelation>,
    pub vifs: Vec<Vif>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollinearityThresholds {
    pub r: f64,
    pub vif: f64,
}

impl Default for CollinearityThresholds {
    fn default() -> Self {
        Self { r: 0.8, vif: 5.0 }
    }
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// Pairwise correlations and variance inflation factors of the non-intercept
/// design columns.
pub fn collinearity_report(
    frame: &ModelFrame,
    thresholds: CollinearityThresholds,
) -> Result<CollinearityReport, DiagnosticsError> {
    let (n, p) = (frame.n(), frame.p());
    let cols: Vec<usize> = (1..p).collect();
    let data: Vec<Vec<f64>> = cols.iter().map(|&j| centered(&frame.x.column(j))).collect();
    for (k, c) in data.iter().enumerate() {
        if c.iter().all(|v| *v == 0.0) {
            return Err(DiagnosticsError::ConstantColumn(frame.x_labels[cols[k]].clone()));
        }
    }
    let mut pairs = Vec::new();
    for a in 0..cols.len() {
        for b in (a + 1)..cols.len() {
            let r = dot(&data[a], &data[b])
                / libm::sqrt(dot(&data[a], &data[a]) * dot(&data[b], &data[b]));
            pairs.push(PairCorrelation {
                a: frame.x_labels[cols[a]].clone(),
                b: frame.x_labels[cols[b]].clone(),
                r,
                flagged: libm::fabs(r) >= thresholds.r,
            });
        }
    }
    if cols.len() >= 2 && n <= p {
        return Err(DiagnosticsError::TooFewRows { needed: p + 1, found: n });
    }
    let vifs = cols
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let vif = if cols.len() == 1 {
                1.0
            } else {
                let others: Vec<usize> = (0..p).filter(|&c| c != j).collect();
                let xo = frame.x.select_columns(&others);
                let target = frame.x.column(j);
                match Qr::new(&xo) {
                    Ok(qr) => {
                        let beta = qr.solve(&target);
                        let fit = xo.matvec(&beta);
                        let rss: f64 = target.iter().zip(&fit).map(|(t, f)| (t - f) * (t - f)).sum();
                        let tss = dot(&data[k], &data[k]);
                        let r2 = 1.0 - rss / tss;
                        if r2 >= 1.0 - 1e-12 { f64::INFINITY } else { 1.0 / (1.0 - r2) }
                    }
                    Err(_) => f64::INFINITY,
                }
            };
            Vif {
                label: frame.x_labels[j].clone(),
                vif,
                flagged: vif >= thresholds.vif,
            }
        })
        .collect();
    Ok(CollinearityReport { pairs, vifs })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Res(Vec<f64>);
    impl Fitted for Res {
        fn fitted(&self) -> &[f64] {
            &self.0
        }
        fn residuals(&self) -> &[f64] {
            &self.0
        }
    }

    #[test]
    fn histogram_basics() {
        let h = histogram(&[-1.0, 0.0, 1.0], 2);
        assert_eq!(
            h.data,
            PlotData::Bins { edges: vec![-1.0, 0.0, 1.0], counts: vec![1, 2] }
        );
        assert_eq!(sturges_bins(83), 8);
        assert_eq!(sturges_bins(64), 7);
        assert_eq!(sturges_bins(65), 8);
        let h = histogram_residuals(&Res((0..83).map(|i| (i as f64 * 0.37).sin()).collect()), None);
        match h.data {
            PlotData::Bins { counts, .. } => {
                assert_eq!(counts.len(), 8);
                assert_eq!(counts.iter().sum::<usize>(), 83);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn qq_two_points() {
        let q = qq_points(&Res(vec![1.0, -1.0])).unwrap();
        let z = normal_quantile((2.0 - 0.375) / 2.25).unwrap();
        let pts = q.points();
        assert!((pts[0].0 + z).abs() < 1e-12 && (pts[1].0 - z).abs() < 1e-12);
        assert_eq!((pts[0].1, pts[1].1), (-1.0, 1.0));
        assert!(qq_series(&[1.0]).is_err());
    }

    #[test]
    fn flags() {
        let report = InfluenceReport {
            labels: vec!["x".into()],
            dfbeta: Matrix::from_rows(&[vec![1.0], vec![0.2], vec![3.0]]),
        };
        let f = influence_flags(&report, &[2.0], 0.5);
        assert_eq!(
            f,
            [
                InfluenceFlag { row: 0, coefficient: 0, reason: InfluenceReason::HalfMagnitude },
                InfluenceFlag { row: 2, coefficient: 0, reason: InfluenceReason::HalfMagnitude },
                InfluenceFlag { row: 2, coefficient: 0, reason: InfluenceReason::SignChange },
            ]
        );
    }
}
