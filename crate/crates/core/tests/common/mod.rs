#![allow(dead_code)]

use lmkit_core::dataframe::{Column, DataFrame};
use lmkit_core::design::{build_model_frame, ModelFrame};
use lmkit_core::formula::parse_formula;
use lmkit_core::numstat::Rng;

pub type Dense = Vec<Vec<f64>>;

/// LU with partial pivoting. Returns (lu, perm, sign) or `None` if singular.
pub fn lu(a: &Dense) -> Option<(Dense, Vec<usize>, f64)> {
    let n = a.len();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[piv][k] == 0.0 {
            return None;
        }
        if piv != k {
            m.swap(piv, k);
            perm.swap(piv, k);
            sign = -sign;
        }
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            m[i][k] = f;
            for j in (k + 1)..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    Some((m, perm, sign))
}

pub fn log_abs_det(a: &Dense) -> f64 {
    let (m, _, _) = lu(a).expect("nonsingular");
    (0..a.len()).map(|i| m[i][i].abs().ln()).sum()
}

pub fn solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    let (m, perm, _) = lu(a).expect("nonsingular");
    let n = a.len();
    let mut x: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            x[i] -= m[i][j] * x[j];
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            x[i] -= m[i][j] * x[j];
        }
        x[i] /= m[i][i];
    }
    x
}

pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            solve(a, &e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub fn mat_mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Dense) -> Dense {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_vec(a: &Dense, v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Golden-section minimisation on `[a, b]`.
pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// −2 log-likelihood (or REML criterion) of `y ~ N(Xβ, σ²V0)` with
/// `V0 = I + Z G Zᵀ`, with β at its GLS value and σ² profiled by a 1-D
/// golden-section search on log σ².
pub fn dense_criterion(y: &[f64], x: &Dense, z: &Dense, g: &Dense, reml: bool) -> f64 {
    let n = y.len();
    let p = x[0].len();
    let zg = mat_mul(z, g);
    let zgz = mat_mul(&zg, &transpose(z));
    let v0: Dense = (0..n)
        .map(|i| (0..n).map(|j| zgz[i][j] + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let vinv = inverse(&v0);
    let xt = transpose(x);
    let xtvx = mat_mul(&mat_mul(&xt, &vinv), x);
    let xtvy = mat_vec(&mat_mul(&xt, &vinv), y);
    let beta = solve(&xtvx, &xtvy);
    let xb = mat_vec(x, &beta);
    let r: Vec<f64> = y.iter().zip(&xb).map(|(a, b)| a - b).collect();
    let q: f64 = r.iter().zip(mat_vec(&vinv, &r)).map(|(a, b)| a * b).sum();
    let ld_v = log_abs_det(&v0);
    let ld_x = if reml { log_abs_det(&xtvx) } else { 0.0 };
    let m = if reml { (n - p) as f64 } else { n as f64 };
    let crit = |log_s2: f64| {
        let s2 = log_s2.exp();
        m * (2.0 * std::f64::consts::PI * s2).ln() + ld_v + ld_x + q / s2
    };
    // bracket around the closed-form optimum, searched numerically
    let guess = (q / m).ln();
    let best = golden(crit, guess - 5.0, guess + 5.0, 1e-12);
    crit(best)
}

/// Dense random-effects design for one grouping factor with covariate
/// columns `cov` (first is the intercept); group-major column layout.
pub fn dense_z(groups: &[usize], n_groups: usize, cov: &[Vec<f64>]) -> Dense {
    let q = cov[0].len();
    groups
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut row = vec![0.0; n_groups * q];
            for k in 0..q {
                row[g * q + k] = cov[i][k];
            }
            row
        })
        .collect()
}

/// Block-diagonal `I_g ⊗ (T Tᵀ)`.
pub fn block_cov(t: &Dense, n_groups: usize) -> Dense {
    let q = t.len();
    let s = mat_mul(t, &transpose(t));
    let mut g = vec![vec![0.0; n_groups * q]; n_groups * q];
    for b in 0..n_groups {
        for i in 0..q {
            for j in 0..q {
                g[b * q + i][b * q + j] = s[i][j];
            }
        }
    }
    g
}

pub fn frame(df: &DataFrame, f: &str) -> ModelFrame {
    build_model_frame(df, &parse_formula(f).unwrap()).unwrap()
}

/// Two groups of four observations, intercept only.
pub fn toy() -> DataFrame {
    let g = ["a", "a", "a", "a", "b", "b", "b", "b"].map(Some);
    DataFrame::new(vec![
        Column::from_values("y", &[1.0, 2.5, 0.3, 1.9, 3.1, 4.4, 2.2, 5.0]),
        Column::categorical("g", &g),
    ])
    .unwrap()
}

/// Crossed subjects × items with a binary condition, a between-subject
/// factor and per-subject condition slopes. All values from the seeded
/// generator.
pub fn crossed(seed: u64, n_subj: usize, n_item: usize) -> DataFrame {
    let mut rng = Rng::seed_from(seed);
    let subj_int: Vec<f64> = (0..n_subj).map(|_| 30.0 * rng.next_normal()).collect();
    let subj_slope: Vec<f64> = (0..n_subj).map(|_| 5.0 * rng.next_normal()).collect();
    let item_int: Vec<f64> = (0..n_item).map(|_| 12.0 * rng.next_normal()).collect();
    let (mut y, mut s, mut it, mut c, mut grp) = (vec![], vec![], vec![], vec![], vec![]);
    for si in 0..n_subj {
        let gval = if si % 2 == 0 { "F" } else { "M" };
        for ii in 0..n_item {
            for (ci, cval) in ["inf", "pol"].iter().enumerate() {
                let mu = 250.0 - if gval == "M" { 100.0 } else { 0.0 } - 20.0 * ci as f64;
                y.push(mu + subj_int[si] + item_int[ii] + subj_slope[si] * ci as f64 + 25.0 * rng.next_normal());
                s.push(Some(format!("S{si:02}")));
                it.push(Some(format!("I{ii:02}")));
                c.push(Some(cval.to_string()));
                grp.push(Some(gval.to_string()));
            }
        }
    }
    DataFrame::new(vec![
        Column::categorical("subject", &s),
        Column::categorical("gender", &grp),
        Column::categorical("item", &it),
        Column::categorical("cond", &c),
        Column::from_values("y", &y),
    ])
    .unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
