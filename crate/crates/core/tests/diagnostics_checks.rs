mod common;

use common::*;
use lmkit_core::dataframe::{read_csv, Column, DataFrame};
use lmkit_core::diagnostics::*;
use lmkit_core::linalg::Matrix;
use lmkit_core::lmm::fit_lmm;
use lmkit_core::numstat::{normal_quantile, rng_normal, Rng};
use lmkit_core::ols::fit_ols;

const AGE: &str = "age,pitch\n14,252\n23,244\n35,240\n48,233\n52,212\n67,204\n";
const SEX: &str = "sex,pitch\nfemale,233\nfemale,204\nfemale,242\nmale,130\nmale,112\nmale,142\n";

const AGE_DFBETA: [[f64; 2]; 6] = [
    [-3.3645662, 0.06437573],
    [-1.6119656, 0.02736278],
    [1.5481303, -0.01456709],
    [-0.0259835, 0.05092767],
    [0.8707699, -0.06479736],
    [1.8551808, -0.06622744],
];

#[test]
fn age_dfbeta_table() {
    let m = frame(&read_csv(AGE.as_bytes()).unwrap(), "pitch ~ age");
    let report = dfbeta_ols(&m).unwrap();
    assert_eq!(report.labels, ["(Intercept)", "age"]);
    for (i, row) in AGE_DFBETA.iter().enumerate() {
        for j in 0..2 {
            assert!((report.dfbeta[(i, j)] - row[j]).abs() < 1e-6, "row {i} col {j}");
        }
    }
    let fit = fit_ols(&m).unwrap();
    let without_first = fit.coefficients[1] - report.dfbeta[(0, 1)];
    assert!((without_first - -0.9742451).abs() < 1e-7);
    let flags = influence_flags(&report, &fit.coefficients, 0.5);
    assert!(flags.iter().all(|f| f.coefficient != 1));
}

#[test]
fn closed_form_agrees_with_refits() {
    for seed in 0..8 {
        let mut rng = Rng::seed_from(seed);
        let n = 12 + seed as usize;
        let x: Vec<f64> = rng_normal(&mut rng, n);
        let z: Vec<f64> = rng_normal(&mut rng, n);
        let y: Vec<f64> = (0..n).map(|i| 2.0 + 3.0 * x[i] - z[i] + rng.next_normal()).collect();
        let g: Vec<Option<&str>> = (0..n).map(|i| Some(if i % 3 == 0 { "u" } else { "v" })).collect();
        let df = DataFrame::new(vec![
            Column::from_values("y", &y),
            Column::from_values("x", &x),
            Column::from_values("z", &z),
            Column::categorical("g", &g),
        ])
        .unwrap();
        let m = frame(&df, "y ~ x + z + g");
        let refit = dfbeta_ols(&m).unwrap();
        let closed = dfbeta_closed_form(&fit_ols(&m).unwrap());
        for (a, b) in refit.dfbeta.as_slice().iter().zip(closed.as_slice()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn doubled_frame_halves_influence() {
    let m = frame(&read_csv(AGE.as_bytes()).unwrap(), "pitch ~ age");
    let doubled = m.select_rows(&[0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5]);
    let single = dfbeta_ols(&m).unwrap();
    let double = dfbeta_ols(&doubled).unwrap();
    let beta = fit_ols(&doubled).unwrap().coefficients;
    // leverages of the single frame from an explicit inverse
    let x: Dense = (0..6).map(|i| m.x.row(i).to_vec()).collect();
    let xtx_inv = inverse(&mat_mul(&transpose(&x), &x));
    for i in 0..6 {
        let h: f64 = mat_vec(&xtx_inv, &x[i]).iter().zip(&x[i]).map(|(a, b)| a * b).sum();
        for j in 0..2 {
            let (a, b) = (single.dfbeta[(i, j)], double.dfbeta[(i, j)]);
            assert!(a * b > 0.0 && b.abs() < 0.5 * a.abs());
            assert!((b - a * 0.5 * (1.0 - h) / (1.0 - h / 2.0)).abs() < 1e-9, "{a} {b}");
        }
    }
    assert!(influence_flags(&double, &beta, 0.5)
        .iter()
        .all(|f| f.reason != InfluenceReason::SignChange));
    // refit oracle for one doubled entry
    let loo = fit_ols(&doubled.without_row(3)).unwrap().coefficients;
    assert!((double.dfbeta[(3, 1)] - (beta[1] - loo[1])).abs() < 1e-12);
}

#[test]
fn dfbeta_preconditions() {
    let m = frame(&read_csv(b"y,x\n1,1\n2,3\n4,2\n").unwrap(), "y ~ x");
    assert!(matches!(dfbeta_ols(&m), Err(DiagnosticsError::TooFewRows { .. })));
    // removing the only row of a level leaves a zero column
    let m = frame(&read_csv(b"y,g\n1,a\n2,a\n3,b\n4,b\n5,c\n").unwrap(), "y ~ g");
    assert_eq!(dfbeta_ols(&m), Err(DiagnosticsError::LeaveOneOutSingular { row: 4 }));
}

#[test]
fn flag_rules() {
    let report = InfluenceReport {
        labels: vec!["slope".into()],
        dfbeta: Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![0.9], vec![2.5]]),
    };
    let flags = influence_flags(&report, &[2.0], 0.5);
    let rows: Vec<(usize, &str)> = flags.iter().map(|f| (f.row, f.reason.as_str())).collect();
    assert_eq!(
        rows,
        [(0, "half-magnitude"), (1, "half-magnitude"), (3, "half-magnitude"), (3, "sign-change")]
    );
}

#[test]
fn residual_series_and_histogram() {
    let sex = fit_ols(&frame(&read_csv(SEX.as_bytes()).unwrap(), "pitch ~ sex")).unwrap();
    let s = residual_fitted(&sex);
    assert_eq!(s.kind, PlotKind::Scatter);
    let want = [6.667, -22.333, 15.667, 2.0, -16.0, 14.0];
    for (p, w) in s.points().iter().zip(want) {
        assert!((p.1 - w).abs() < 1e-3);
    }
    let age = fit_ols(&frame(&read_csv(AGE.as_bytes()).unwrap(), "pitch ~ age")).unwrap();
    let s = residual_fitted(&age);
    assert_eq!(s.points().len(), 6);
    for (k, (f, r)) in s.points().iter().enumerate() {
        assert!((f + r - age.frame.y[k]).abs() < 1e-12);
    }
    for bins in 1..12 {
        match histogram_residuals(&age, Some(bins)).data {
            PlotData::Bins { edges, counts } => {
                assert_eq!(edges.len(), bins + 1);
                assert_eq!(counts.iter().sum::<usize>(), 6);
            }
            _ => unreachable!(),
        }
    }
}

#[test]
fn qq_properties() {
    let two = qq_series(&[-1.0, 1.0]).unwrap();
    let z = normal_quantile((2.0 - 3.0 / 8.0) / (2.0 + 0.25)).unwrap();
    assert!((two.points()[1].0 - z).abs() < 1e-15 && (two.points()[0].0 + z).abs() < 1e-15);

    // residuals placed exactly on the theoretical quantiles
    let n = 40;
    let exact: Vec<f64> = plotting_positions(n).iter().map(|p| normal_quantile(*p).unwrap()).collect();
    let q = qq_series(&exact).unwrap();
    assert!(pearson(q.points()) > 0.999);
    for (t, s) in q.points() {
        assert!((t - s).abs() < 1e-15);
    }

    let sample = rng_normal(&mut Rng::seed_from(7), 500);
    let q = qq_series(&sample).unwrap();
    assert!(pearson(q.points()) > 0.995);
    assert!(q.points().windows(2).all(|w| w[0].0 <= w[1].0));

    // affine maps move the sample axis only
    let moved: Vec<f64> = sample.iter().map(|r| 3.0 * r - 2.0).collect();
    let qm = qq_series(&moved).unwrap();
    for (a, b) in q.points().iter().zip(qm.points()) {
        assert_eq!(a.0, b.0);
        assert!((3.0 * a.1 - 2.0 - b.1).abs() < 1e-12);
    }
}

fn pearson(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[test]
fn collinearity() {
    let mut rng = Rng::seed_from(5);
    let n = 50;
    let s: Vec<f64> = (0..n).map(|_| 3.0 + rng.next_normal()).collect();
    let s2: Vec<f64> = s.iter().map(|v| v + 0.1 * rng.next_normal()).collect();
    let s3: Vec<f64> = s.iter().map(|v| 2.0 * v + 0.1 * rng.next_normal()).collect();
    let y: Vec<f64> = s.iter().map(|v| v + rng.next_normal()).collect();
    let df = DataFrame::new(vec![
        Column::from_values("y", &y),
        Column::from_values("sps", &s),
        Column::from_values("wps", &s2),
        Column::from_values("rate", &s3),
        Column::from_values("dup", &s),
    ])
    .unwrap();
    let rep = collinearity_report(&frame(&df, "y ~ sps + wps + rate"), CollinearityThresholds::default()).unwrap();
    assert_eq!(rep.pairs.len(), 3);
    for p in &rep.pairs {
        let a = df.column(&p.a).unwrap().as_numeric().unwrap();
        let b = df.column(&p.b).unwrap().as_numeric().unwrap();
        let pts: Vec<(f64, f64)> = a.iter().zip(b).map(|(x, y)| (x.unwrap(), y.unwrap())).collect();
        assert!((p.r - pearson(&pts)).abs() < 1e-12);
        assert!(p.flagged);
    }
    assert!(rep.vifs.iter().all(|v| v.flagged && v.vif > 5.0));

    let rep = collinearity_report(&frame(&df, "y ~ sps + dup"), CollinearityThresholds::default()).unwrap();
    assert!((rep.pairs[0].r - 1.0).abs() < 1e-12 && rep.pairs[0].flagged);
    assert!(rep.vifs.iter().all(|v| v.vif.is_infinite()));

    let orth = read_csv(b"y,a,b\n1,x,p\n2,x,q\n3,y,p\n5,y,q\n2,x,p\n3,x,q\n4,y,p\n6,y,q\n").unwrap();
    let rep = collinearity_report(&frame(&orth, "y ~ a + b"), CollinearityThresholds::default()).unwrap();
    assert!(rep.pairs[0].r.abs() < 1e-12 && !rep.pairs[0].flagged);
    for v in &rep.vifs {
        assert!((v.vif - 1.0).abs() < 1e-12 && !v.flagged);
    }

    let constant = read_csv(b"y,a,k\n1,1,7\n2,2,7\n4,3,7\n").unwrap();
    assert_eq!(
        collinearity_report(&frame(&constant, "y ~ a + k"), CollinearityThresholds::default()),
        Err(DiagnosticsError::ConstantColumn("k".into()))
    );
}

#[test]
fn leave_one_out_mixed() {
    let df = crossed(12, 5, 4);
    let m = frame(&df, "y ~ cond + (1|subject) + (1|item)");
    let full = fit_lmm(&m, true).unwrap();
    let loo = loo_fixed_effect(&m, true, 1).unwrap();
    assert_eq!(loo.len(), m.n());
    let vals: Vec<f64> = loo.iter().map(|v| v.unwrap()).collect();
    let direct = fit_lmm(&m.without_row(7), true).unwrap().fixed[1].estimate;
    assert_eq!(vals[7], direct);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    assert!((mean - full.fixed[1].estimate).abs() < 0.5);
    assert!(matches!(
        loo_fixed_effect(&m, true, 9),
        Err(DiagnosticsError::CoefficientIndex { index: 9, p: 2 })
    ));

    // a duplicated row: dropping either copy gives the same refit
    let mut rows: Vec<usize> = (0..m.n()).collect();
    rows.push(3);
    let dup = m.select_rows(&rows);
    let last = dup.n() - 1;
    let a = loo_estimate(&dup, true, 1, 3).unwrap();
    let b = loo_estimate(&dup, true, 1, last).unwrap();
    assert_eq!(a, b);
}
