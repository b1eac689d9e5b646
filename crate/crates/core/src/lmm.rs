//! Linear mixed-effects models fitted by profiled maximum likelihood or REML.
//!
//! Random effects are `b = Λθ u` with `u ~ N(0, σ²I)`, where `Λθ` is block
//! diagonal: every level of a grouping factor shares one lower-triangular
//! relative covariance factor `T`. For fixed `θ` the penalised least-squares
//! problem is solved through Cholesky factors, which profiles out `β` and `σ²`
//! and leaves a criterion in `θ` alone.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use thiserror::Error;

use crate::design::ModelFrame;
use crate::linalg::{
    cholesky, cholesky_inverse, dot, log_det_from_cholesky, solve_lower, solve_lower_matrix,
    solve_lower_transpose, Matrix, Qr,
};
use crate::optim::{nelder_mead, Settings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmmError {
    #[error("No random effects terms specified in formula")]
    NoRandomEffects,
    #[error("covariance parameter vector has length {found}, model needs {expected}")]
    ThetaDimension { expected: usize, found: usize },
    #[error("fixed-effects design is singular: column `{column}` is linearly dependent on earlier columns")]
    Singular { column: String },
    #[error("insufficient data: {n} observations for {p} fixed effects")]
    InsufficientData { n: usize, p: usize },
    #[error("optimizer did not converge after {evaluations} evaluations")]
    Convergence { theta: Vec<f64>, evaluations: usize },
}

/// Something odd about a fit that did not stop it.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// A random-effect correlation estimated within 1e-3 of ±1.
    DegenerateCorrelation { grouping: String, value: f64 },
    /// A random-effect variance estimated at zero.
    BoundaryVariance { grouping: String, name: String },
    /// Convergence needed the fallback start.
    Restarted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedEffect {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarComp {
    pub grouping: String,
    /// `"(Intercept)"` then slope labels.
    pub names: Vec<String>,
    pub variances: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// `q × q`, unit diagonal.
    pub correlations: Matrix,
}

/// Per-level values for one random-effect term, one row per level.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTable {
    pub grouping: String,
    pub group_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub values: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmmFit {
    pub fixed: Vec<FixedEffect>,
    pub fixed_cov: Matrix,
    pub fixed_correlation: Matrix,
    pub varcomps: Vec<VarComp>,
    pub residual_variance: f64,
    pub blups: Vec<GroupTable>,
    /// Optimum of the relative covariance factors, diagonals non-negative.
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    /// `-2 logLik` of the criterion that was optimised (ML or REML).
    pub criterion: f64,
    /// The ML deviance evaluated at the reported estimates.
    pub ml_deviance_at_estimate: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    /// Number of levels per random-effect term.
    pub group_sizes: Vec<usize>,
    pub reml: bool,
    pub n_params: usize,
    /// Conditional fitted values `Xβ + Zb`, frame order.
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub evaluations: usize,
    pub warnings: Vec<FitWarning>,
    pub frame: ModelFrame,
}

impl LmmFit {
    pub fn fixed_estimates(&self) -> Vec<f64> {
        self.fixed.iter().map(|f| f.estimate).collect()
    }

    pub fn fixed_effect(&self, label: &str) -> Option<&FixedEffect> {
        self.fixed.iter().find(|f| f.label == label)
    }

    pub fn sigma(&self) -> f64 {
        libm::sqrt(self.residual_variance)
    }
}

/// Number of covariance parameters for a `q`-column term.
fn tri(q: usize) -> usize {
    q * (q + 1) / 2
}

/// Length of `θ` for the frame's random-effect terms.
pub fn theta_len(frame: &ModelFrame) -> usize {
    frame.z_blocks.iter().map(|z| tri(z.q())).sum()
}

/// `θ` for identity relative factors.
pub fn theta_identity(frame: &ModelFrame) -> Vec<f64> {
    let mut theta = Vec::with_capacity(theta_len(frame));
    for z in &frame.z_blocks {
        let q = z.q();
        for j in 0..q {
            for i in j..q {
                theta.push(if i == j { 1.0 } else { 0.0 });
            }
        }
    }
    theta
}

/// Lower-triangular factor from its column-major packed entries; diagonal
/// entries enter by absolute value.
fn factor(packed: &[f64], q: usize) -> Matrix {
    let mut t = Matrix::zeros(q, q);
    let mut k = 0;
    for j in 0..q {
        for i in j..q {
            t[(i, j)] = if i == j { libm::fabs(packed[k]) } else { packed[k] };
            k += 1;
        }
    }
    t
}

/// The penalised least-squares system in canonical row order.
struct Problem {
    n: usize,
    p: usize,
    y: Vec<f64>,
    x: Matrix,
    z: Matrix,
    /// (q, levels, column offset) per term.
    blocks: Vec<(usize, usize, usize)>,
    ztz: Matrix,
    ztx: Matrix,
    zty: Vec<f64>,
    xtx: Matrix,
    xty: Vec<f64>,
    /// Frame row stored at each canonical position.
    order: Vec<usize>,
}

/// Everything computed at one `θ`.
struct Solution {
    beta: Vec<f64>,
    /// Spherical random effects.
    u: Vec<f64>,
    lambda: Matrix,
    pwrss: f64,
    ld_l2: f64,
    ld_rx2: f64,
    rx: Matrix,
}

impl Problem {
    fn new(frame: &ModelFrame) -> Self {
        let n = frame.n();
        // canonical row order so that results do not depend on input order
        let key = |r: usize| {
            let mut k: Vec<f64> = Vec::new();
            for z in &frame.z_blocks {
                k.push(z.groups[r] as f64);
            }
            k.extend_from_slice(frame.x.row(r));
            for z in &frame.z_blocks {
                k.extend_from_slice(z.values.row(r));
            }
            k.push(frame.y[r]);
            k
        };
        let keys: Vec<Vec<f64>> = (0..n).map(key).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            keys[a]
                .iter()
                .zip(&keys[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });

        let x = frame.x.select_rows(&order);
        let y: Vec<f64> = order.iter().map(|&r| frame.y[r]).collect();
        let mut blocks = Vec::new();
        let mut offset = 0;
        for zb in &frame.z_blocks {
            blocks.push((zb.q(), zb.n_groups(), offset));
            offset += zb.width();
        }
        let mut z = Matrix::zeros(n, offset);
        for (zb, &(q, _, off)) in frame.z_blocks.iter().zip(&blocks) {
            for (i, &r) in order.iter().enumerate() {
                let g = zb.groups[r];
                for k in 0..q {
                    z[(i, off + g * q + k)] = zb.values[(r, k)];
                }
            }
        }
        let zt = z.transpose();
        Problem {
            n,
            p: frame.p(),
            ztz: z.gram(),
            ztx: zt.matmul(&x),
            zty: z.tr_matvec(&y),
            xtx: x.gram(),
            xty: x.tr_matvec(&y),
            y,
            x,
            z,
            blocks,
            order,
        }
    }

    fn lambda(&self, theta: &[f64]) -> Matrix {
        let qt = self.z.ncols();
        let mut lambda = Matrix::zeros(qt, qt);
        let mut k = 0;
        for &(q, levels, off) in &self.blocks {
            let t = factor(&theta[k..k + tri(q)], q);
            k += tri(q);
            for g in 0..levels {
                let base = off + g * q;
                for i in 0..q {
                    for j in 0..=i {
                        lambda[(base + i, base + j)] = t[(i, j)];
                    }
                }
            }
        }
        lambda
    }

    fn solve(&self, theta: &[f64]) -> Option<Solution> {
        let qt = self.z.ncols();
        let lambda = self.lambda(theta);
        let lt = lambda.transpose();
        let mut a = lt.matmul(&self.ztz).matmul(&lambda);
        for i in 0..qt {
            a[(i, i)] += 1.0;
        }
        let l = cholesky(&a)?;
        let cu = solve_lower(&l, &lt.matvec(&self.zty));
        let rzx = solve_lower_matrix(&l, &lt.matmul(&self.ztx));
        let mut xtx = self.xtx.clone();
        let rzx_gram = rzx.gram();
        for i in 0..self.p {
            for j in 0..self.p {
                xtx[(i, j)] -= rzx_gram[(i, j)];
            }
        }
        let rx = cholesky(&xtx)?;
        let rhs: Vec<f64> = self
            .xty
            .iter()
            .zip(rzx.tr_matvec(&cu))
            .map(|(a, b)| a - b)
            .collect();
        let beta = solve_lower_transpose(&rx, &solve_lower(&rx, &rhs));
        let rzx_beta = rzx.matvec(&beta);
        let cu_adj: Vec<f64> = cu.iter().zip(&rzx_beta).map(|(c, r)| c - r).collect();
        let u = solve_lower_transpose(&l, &cu_adj);
        let b = lambda.matvec(&u);
        let xb = self.x.matvec(&beta);
        let zb = self.z.matvec(&b);
        let rss: f64 = (0..self.n)
            .map(|i| {
                let r = self.y[i] - xb[i] - zb[i];
                r * r
            })
            .sum();
        Some(Solution {
            pwrss: rss + dot(&u, &u),
            ld_l2: log_det_from_cholesky(&l),
            ld_rx2: log_det_from_cholesky(&rx),
            beta,
            u,
            lambda,
            rx,
        })
    }

    fn criterion(&self, s: &Solution, reml: bool) -> f64 {
        let n = self.n as f64;
        if reml {
            let nmp = (self.n - self.p) as f64;
            s.ld_l2 + s.ld_rx2 + nmp * (1.0 + libm::log(2.0 * PI * s.pwrss / nmp))
        } else {
            s.ld_l2 + n * (1.0 + libm::log(2.0 * PI * s.pwrss / n))
        }
    }

    fn objective(&self, theta: &[f64], reml: bool) -> f64 {
        match self.solve(theta) {
            Some(s) => self.criterion(&s, reml),
            None => f64::INFINITY,
        }
    }
}

fn check_frame(frame: &ModelFrame) -> Result<(), LmmError> {
    if frame.z_blocks.is_empty() {
        return Err(LmmError::NoRandomEffects);
    }
    let (n, p) = (frame.n(), frame.p());
    if n <= p {
        return Err(LmmError::InsufficientData { n, p });
    }
    Qr::new(&frame.x).map_err(|j| LmmError::Singular {
        column: frame.x_labels[j].clone(),
    })?;
    Ok(())
}

/// The profiled deviance (ML) or REML criterion at `theta`.
pub fn profiled_objective(theta: &[f64], frame: &ModelFrame, reml: bool) -> Result<f64, LmmError> {
    let expected = theta_len(frame);
    if theta.len() != expected {
        return Err(LmmError::ThetaDimension { expected, found: theta.len() });
    }
    check_frame(frame)?;
    Ok(Problem::new(frame).objective(theta, reml))
}

fn optimize(problem: &Problem, start: &[f64], reml: bool) -> (Vec<f64>, usize, bool) {
    let f = |t: &[f64]| problem.objective(t, reml);
    let first = nelder_mead(f, start, Settings::default());
    if !first.converged {
        return (first.x, first.evals, false);
    }
    // restart from the optimum to guard against premature collapse
    let polish = nelder_mead(
        f,
        &first.x,
        Settings { step: 0.05, ..Settings::default() },
    );
    let evals = first.evals + polish.evals;
    if polish.f < first.f {
        (polish.x, evals, polish.converged)
    } else {
        (first.x, evals, true)
    }
}

pub fn fit_lmm(frame: &ModelFrame, reml: bool) -> Result<LmmFit, LmmError> {
    check_frame(frame)?;
    let problem = Problem::new(frame);
    let start = theta_identity(frame);
    let mut warnings = Vec::new();
    let (mut theta, mut evaluations, converged) = optimize(&problem, &start, reml);
    if !converged {
        let small: Vec<f64> = start.iter().map(|t| 0.1 * t).collect();
        let (t2, e2, c2) = optimize(&problem, &small, reml);
        evaluations += e2;
        if !c2 {
            let best = if problem.objective(&t2, reml) < problem.objective(&theta, reml) {
                t2
            } else {
                theta
            };
            return Err(LmmError::Convergence { theta: normalize(frame, &best), evaluations });
        }
        theta = t2;
        warnings.push(FitWarning::Restarted);
    }
    let theta = normalize(frame, &theta);
    let sol = problem.solve(&theta).ok_or(LmmError::Convergence {
        theta: theta.clone(),
        evaluations,
    })?;
    Ok(assemble(frame, &problem, sol, theta, reml, evaluations, warnings))
}

/// Takes absolute values of the packed diagonal entries.
fn normalize(frame: &ModelFrame, theta: &[f64]) -> Vec<f64> {
    let mut out = theta.to_vec();
    let mut k = 0;
    for z in &frame.z_blocks {
        let q = z.q();
        for j in 0..q {
            out[k] = libm::fabs(out[k]);
            k += q - j;
        }
    }
    out
}

fn assemble(
    frame: &ModelFrame,
    problem: &Problem,
    sol: Solution,
    theta: Vec<f64>,
    reml: bool,
    evaluations: usize,
    mut warnings: Vec<FitWarning>,
) -> LmmFit {
    let (n, p) = (problem.n, problem.p);
    let criterion = problem.criterion(&sol, reml);
    let denom = if reml { (n - p) as f64 } else { n as f64 };
    let sigma2 = sol.pwrss / denom;
    let ml_deviance_at_estimate =
        sol.ld_l2 + n as f64 * libm::log(2.0 * PI * sigma2) + sol.pwrss / sigma2;

    let fixed_cov = {
        let mut c = cholesky_inverse(&sol.rx);
        for v in c.as_mut_slice() {
            *v *= sigma2;
        }
        c
    };
    let fixed: Vec<FixedEffect> = (0..p)
        .map(|j| {
            let se = libm::sqrt(fixed_cov[(j, j)]);
            FixedEffect {
                label: frame.x_labels[j].clone(),
                estimate: sol.beta[j],
                std_error: se,
                t_value: sol.beta[j] / se,
            }
        })
        .collect();
    let fixed_correlation = correlation(&fixed_cov);

    let mut varcomps = Vec::new();
    let mut blups = Vec::new();
    let b = sol.lambda.matvec(&sol.u);
    let mut k = 0;
    for (zb, &(q, levels, off)) in frame.z_blocks.iter().zip(&problem.blocks) {
        let t = factor(&theta[k..k + tri(q)], q);
        k += tri(q);
        let mut cov = t.matmul(&t.transpose());
        for v in cov.as_mut_slice() {
            *v *= sigma2;
        }
        let variances: Vec<f64> = (0..q).map(|i| cov[(i, i)]).collect();
        let correlations = correlation(&cov);
        for (i, v) in variances.iter().enumerate() {
            if *v == 0.0 {
                warnings.push(FitWarning::BoundaryVariance {
                    grouping: zb.grouping.clone(),
                    name: zb.column_labels[i].clone(),
                });
            }
        }
        for i in 0..q {
            for j in 0..i {
                let r = correlations[(i, j)];
                if r.is_finite() && 1.0 - libm::fabs(r) < 1e-3 {
                    warnings.push(FitWarning::DegenerateCorrelation {
                        grouping: zb.grouping.clone(),
                        value: r,
                    });
                }
            }
        }
        varcomps.push(VarComp {
            grouping: zb.grouping.clone(),
            names: zb.column_labels.clone(),
            std_devs: variances.iter().map(|v| libm::sqrt(*v)).collect(),
            variances,
            correlations,
        });
        blups.push(GroupTable {
            grouping: zb.grouping.clone(),
            group_labels: zb.group_labels.clone(),
            column_labels: zb.column_labels.clone(),
            values: Matrix::from_fn(levels, q, |g, c| b[off + g * q + c]),
        });
    }

    // back to frame order
    let xb = problem.x.matvec(&sol.beta);
    let zb = problem.z.matvec(&b);
    let mut fitted = vec![0.0; n];
    let mut residuals = vec![0.0; n];
    for (i, &r) in problem.order.iter().enumerate() {
        fitted[r] = xb[i] + zb[i];
        residuals[r] = problem.y[i] - fitted[r];
    }

    let n_params = p + frame.z_blocks.iter().map(|z| tri(z.q())).sum::<usize>() + 1;
    LmmFit {
        fixed,
        fixed_cov,
        fixed_correlation,
        varcomps,
        residual_variance: sigma2,
        blups,
        theta,
        log_likelihood: -criterion / 2.0,
        criterion,
        ml_deviance_at_estimate,
        aic: criterion + 2.0 * n_params as f64,
        bic: criterion + n_params as f64 * libm::log(n as f64),
        n_obs: n,
        group_sizes: frame.z_blocks.iter().map(|z| z.n_groups()).collect(),
        reml,
        n_params,
        fitted,
        residuals,
        evaluations,
        warnings,
        frame: frame.clone(),
    }
}

fn correlation(cov: &Matrix) -> Matrix {
    let q = cov.nrows();
    Matrix::from_fn(q, q, |i, j| {
        if i == j {
            1.0
        } else {
            cov[(i, j)] / libm::sqrt(cov[(i, i)] * cov[(j, j)])
        }
    })
}

/// Per-level coefficients: fixed estimates with the term's columns shifted
/// by that level's BLUPs.
pub fn coef_by_group(fit: &LmmFit) -> Vec<GroupTable> {
    let beta = fit.fixed_estimates();
    let labels: Vec<String> = fit.fixed.iter().map(|f| f.label.clone()).collect();
    fit.blups
        .iter()
        .map(|t| {
            let cols: Vec<Option<usize>> = labels
                .iter()
                .map(|l| t.column_labels.iter().position(|c| c == l))
                .collect();
            GroupTable {
                grouping: t.grouping.clone(),
                group_labels: t.group_labels.clone(),
                column_labels: labels.clone(),
                values: Matrix::from_fn(t.group_labels.len(), beta.len(), |g, j| match cols[j] {
                    Some(c) => beta[j] + t.values[(g, c)],
                    None => beta[j],
                }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataframe::read_csv;
    use crate::design::build_model_frame;
    use crate::formula::parse_formula;
    use crate::ols::fit_ols;

    fn frame(csv: &str, f: &str) -> ModelFrame {
        build_model_frame(&read_csv(csv.as_bytes()).unwrap(), &parse_formula(f).unwrap()).unwrap()
    }

    const TOY: &str = "y,g\n1.0,a\n2.5,a\n0.3,a\n1.9,a\n3.1,b\n4.4,b\n2.2,b\n5.0,b\n";

    #[test]
    fn theta_zero_is_ols() {
        let m = frame(TOY, "y ~ 1 + (1|g)");
        let ols = fit_ols(&m).unwrap();
        let n = 8.0;
        let want = n * (2.0 * PI * ols.rss() / n).ln() + n;
        let got = profiled_objective(&[0.0], &m, false).unwrap();
        assert!((got - want).abs() < 1e-8);
    }

    #[test]
    fn errors() {
        let m = frame(TOY, "y ~ 1");
        assert_eq!(fit_lmm(&m, true).unwrap_err(), LmmError::NoRandomEffects);
        assert_eq!(
            fit_lmm(&m, true).unwrap_err().to_string(),
            "No random effects terms specified in formula"
        );
        let m = frame(TOY, "y ~ 1 + (1|g)");
        assert_eq!(
            profiled_objective(&[1.0, 0.0], &m, true),
            Err(LmmError::ThetaDimension { expected: 1, found: 2 })
        );
    }

    #[test]
    fn invariants() {
        let m = frame(TOY, "y ~ 1 + (1|g)");
        let fit = fit_lmm(&m, true).unwrap();
        assert_eq!(fit.n_params, 3);
        assert!((fit.aic - (fit.criterion + 6.0)).abs() < 1e-12);
        assert!((fit.bic - (fit.criterion + 3.0 * 8f64.ln())).abs() < 1e-12);
        for f in &fit.fixed {
            assert!((f.t_value - f.estimate / f.std_error).abs() < 1e-10);
        }
        let vc = &fit.varcomps[0];
        assert!((vc.std_devs[0] - vc.variances[0].sqrt()).abs() < 1e-12);
        assert_eq!(fit.group_sizes, [2]);
    }

    #[test]
    fn packed_factor_layout() {
        let t = factor(&[-2.0, 0.5, 3.0], 2);
        assert_eq!(t.as_slice(), [2.0, 0.0, 0.5, 3.0]);
    }
}
