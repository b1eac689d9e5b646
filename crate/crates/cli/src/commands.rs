//! The subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use lmkit_core::dataframe::{
    describe_column, five_number, group_stats, missing_report, read_csv, ColumnData, DataFrame,
};
use lmkit_core::design::{build_model_frame, ModelFrame};
use lmkit_core::diagnostics::{
    collinearity_report, dfbeta_ols_with, histogram_residuals, influence_flags, loo_fixed_effect_with,
    qq_points, residual_fitted, CollinearityReport, CollinearityThresholds, Fitted, InfluenceFlag,
    InfluenceReport, PlotSeries,
};
use lmkit_core::formula::{format_formula, parse_formula, FormulaAst};
use lmkit_core::inference::{lrt_compare, LrtResult};
use lmkit_core::linalg::Matrix;
use lmkit_core::lmm::{fit_lmm, FitWarning, LmmError, LmmFit};
use lmkit_core::numstat::{rng_normal, Rng};
use lmkit_core::ols::{fit_ols, OlsFit};
use serde_json::json;

use crate::error::CliError;
use crate::parallel::{available_threads, par_map};
use crate::plot::{series_csv, series_svg};
use crate::report::{stars, Cell, Column, Content, ReportDocument, Style, SIGNIF_LEGEND};
use crate::writeup::{writeup_generate, WriteupOptions};
use crate::{
    line, CompareArgs, DescribeArgs, DiagnoseArgs, FitArgs, Method, ModelKind, SimulateArgs, WriteupArgs,
};

pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Io<'_> {
    fn warn(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.err, "warning: {msg}");
    }

    fn emit(&mut self, text: &str, dest: Option<&Path>) -> Result<(), CliError> {
        match dest {
            Some(p) => fs::write(p, text).map_err(|e| CliError::io("write", p, e)),
            None => self
                .out
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Data(format!("cannot write output: {e}"))),
        }
    }
}

pub fn load(path: &Path) -> Result<DataFrame, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io("read", path, e))?;
    Ok(read_csv(&bytes)?)
}

pub enum Model {
    Ols(OlsFit),
    Lmm(LmmFit),
}

impl Model {
    pub fn frame(&self) -> &ModelFrame {
        match self {
            Model::Ols(f) => &f.frame,
            Model::Lmm(f) => &f.frame,
        }
    }

    fn fitted(&self) -> &dyn FittedDyn {
        match self {
            Model::Ols(f) => f,
            Model::Lmm(f) => f,
        }
    }
}

trait FittedDyn {
    fn residual_fitted(&self) -> PlotSeries;
    fn histogram(&self, bins: Option<usize>) -> PlotSeries;
    fn qq(&self) -> Result<PlotSeries, CliError>;
}

impl<T: Fitted> FittedDyn for T {
    fn residual_fitted(&self) -> PlotSeries {
        residual_fitted(self)
    }
    fn histogram(&self, bins: Option<usize>) -> PlotSeries {
        histogram_residuals(self, bins)
    }
    fn qq(&self) -> Result<PlotSeries, CliError> {
        Ok(qq_points(self)?)
    }
}

fn wants_mixed(ast: &FormulaAst, kind: ModelKind, method: Method) -> Result<bool, CliError> {
    let has_random = !ast.random_specs.is_empty();
    let mixed = match kind {
        ModelKind::Auto => has_random || method.reml || method.ml,
        ModelKind::Lm => {
            if method.reml || method.ml {
                return Err(CliError::Usage("--reml and --ml apply to mixed models only".into()));
            }
            false
        }
        ModelKind::Lmer => true,
    };
    if mixed && !has_random {
        return Err(LmmError::NoRandomEffects.into());
    }
    if !mixed && has_random {
        return Err(CliError::Usage(
            "formula has random-effect terms; use --model lmer or drop them for an OLS fit".into(),
        ));
    }
    Ok(mixed)
}

/// Parses, builds the frame and fits whichever model the flags ask for.
pub fn fit_model(df: &DataFrame, formula: &str, kind: ModelKind, method: Method) -> Result<Model, CliError> {
    let ast = parse_formula(formula)?;
    let mixed = wants_mixed(&ast, kind, method)?;
    let frame = build_model_frame(df, &ast)?;
    Ok(if mixed {
        Model::Lmm(fit_lmm(&frame, !method.ml)?)
    } else {
        Model::Ols(fit_ols(&frame)?)
    })
}

pub fn warning_text(w: &FitWarning) -> String {
    match w {
        FitWarning::DegenerateCorrelation { grouping, value } => {
            format!("random-effect correlation for `{grouping}` is {value:.4}, at the edge of its range")
        }
        FitWarning::BoundaryVariance { grouping, name } => {
            format!("variance of `{name}` within `{grouping}` was estimated as zero")
        }
        FitWarning::Restarted => "optimizer converged only after restarting from a fallback start".into(),
    }
}

fn report_warnings(io: &mut Io, fit: &LmmFit) {
    for w in &fit.warnings {
        io.warn(warning_text(w));
    }
}

fn row_label(frame: &ModelFrame, i: usize) -> String {
    (frame.kept_rows[i] + 1).to_string()
}

pub fn ols_report(fit: &OlsFit) -> ReportDocument {
    let mut doc = ReportDocument::new();
    let formula = format_formula(&fit.frame.formula);
    doc.push("Call:", Some("fit"), Content::Lines(vec![line!["lm(formula = ", ("formula", Cell::text(formula)), ")"]]));
    doc.push("", Some("fit"), Content::Json(json!({ "model": "lm", "n_obs": fit.frame.n() })));

    let (columns, cells) = if fit.df_resid <= 5 {
        let n = fit.residuals.len();
        (
            (0..n).map(|i| { let l = row_label(&fit.frame, i); Column::new(&l, &l) }).collect(),
            fit.residuals.iter().map(|r| Cell::num(*r)).collect(),
        )
    } else {
        let five = five_number(&fit.residuals).unwrap_or([f64::NAN; 5]);
        (
            [("Min", "min"), ("1Q", "q1"), ("Median", "median"), ("3Q", "q3"), ("Max", "max")]
                .iter()
                .map(|(h, k)| Column::new(h, k))
                .collect(),
            five.iter().map(|v| Cell::num(*v)).collect(),
        )
    };
    doc.push("Residuals:", Some("residuals"), Content::Record { columns, cells });

    let rows = (0..fit.labels.len())
        .map(|j| {
            vec![
                Cell::text(fit.labels[j].clone()),
                Cell::num(fit.coefficients[j]),
                Cell::num(fit.std_errors[j]),
                Cell::num(fit.t_values[j]),
                Cell::prob(fit.p_values[j]),
                Cell::text(stars(fit.p_values[j])),
            ]
        })
        .collect();
    doc.push(
        "Coefficients:",
        Some("coefficients"),
        Content::Table {
            columns: vec![
                Column::new("", "term"),
                Column::new("Estimate", "estimate"),
                Column::new("Std. Error", "std_error"),
                Column::new("t value", "t_value"),
                Column::new("Pr(>|t|)", "p_value"),
                Column::decoration(""),
            ],
            rows,
        },
    );
    doc.push("", None, Content::Paragraph(format!("---\n{SIGNIF_LEGEND}")));
    let mut lines = vec![
        line![
            "Residual standard error: ",
            ("sigma", Cell::num(fit.sigma)),
            " on ",
            ("df_resid", Cell::int(fit.df_resid)),
            " degrees of freedom"
        ],
        line![
            "Multiple R-squared: ",
            ("r_squared", Cell::num(fit.r2)),
            ", Adjusted R-squared: ",
            ("adj_r_squared", Cell::num(fit.adj_r2))
        ],
    ];
    if let (Some(f), Some(p)) = (fit.f_stat, fit.f_p) {
        lines.push(line![
            "F-statistic: ",
            ("f_statistic", Cell::num(f)),
            " on ",
            ("f_df1", Cell::int(fit.f_df.0)),
            " and ",
            ("f_df2", Cell::int(fit.f_df.1)),
            " DF, p-value: ",
            ("f_p_value", Cell::prob(p))
        ]);
    }
    doc.push("", None, Content::Paragraph(String::new()));
    doc.push("", Some("fit"), Content::Lines(lines));
    doc
}

/// The random-effects table: one row per term column, then the residual.
fn varcomp_table(fit: &LmmFit) -> Content {
    let max_q = fit.varcomps.iter().map(|v| v.names.len()).max().unwrap_or(1);
    let mut columns = vec![
        Column::new("Groups", "group"),
        Column::new("Name", "name"),
        Column::new("Variance", "variance"),
        Column::new("Std.Dev.", "std_dev"),
    ];
    for k in 1..max_q {
        columns.push(Column::new(if k == 1 { "Corr" } else { "" }, &format!("corr_{k}")));
    }
    let mut rows = Vec::new();
    for vc in &fit.varcomps {
        for (i, name) in vc.names.iter().enumerate() {
            let mut r = vec![
                Cell::text(if i == 0 { vc.grouping.clone() } else { String::new() }),
                Cell::text(name.clone()),
                Cell::num(vc.variances[i]),
                Cell::num(vc.std_devs[i]),
            ];
            for k in 0..max_q - 1 {
                r.push(if k < i {
                    Cell::Num(vc.correlations[(i, k)], Style::Decimals(3))
                } else {
                    Cell::Empty
                });
            }
            rows.push(r);
        }
    }
    let mut r = vec![
        Cell::text("Residual"),
        Cell::text(""),
        Cell::num(fit.residual_variance),
        Cell::num(fit.sigma()),
    ];
    r.extend((1..max_q).map(|_| Cell::Empty));
    rows.push(r);
    Content::Table { columns, rows }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn lmm_report(fit: &LmmFit, data: &Path) -> ReportDocument {
    let mut doc = ReportDocument::new();
    let method = if fit.reml { "REML" } else { "maximum likelihood" };
    doc.push(
        "",
        Some("fit"),
        Content::Lines(vec![
            line!["Linear mixed model fit by ", ("method", Cell::text(method))],
            line!["Formula: ", ("formula", Cell::text(format_formula(&fit.frame.formula)))],
            line!["Data: ", ("data", Cell::text(data.display().to_string()))],
        ]),
    );
    doc.push("", Some("fit"), Content::Json(json!({ "model": "lmer", "evaluations": fit.evaluations })));

    let deviance = if fit.reml { fit.ml_deviance_at_estimate } else { fit.criterion };
    let mut columns = vec![
        Column::new("AIC", "aic"),
        Column::new("BIC", "bic"),
        Column::new("logLik", "log_likelihood"),
        Column::new("deviance", "deviance"),
    ];
    let mut cells = vec![Cell::num(fit.aic), Cell::num(fit.bic), Cell::num(fit.log_likelihood), Cell::num(deviance)];
    if fit.reml {
        columns.push(Column::new("REMLdev", "reml_criterion"));
        cells.push(Cell::num(fit.criterion));
    }
    doc.push("", Some("criteria"), Content::Record { columns, cells });

    doc.push("Random effects:", Some("varcomps"), varcomp_table(fit));
    let groups = fit
        .varcomps
        .iter()
        .zip(&fit.group_sizes)
        .map(|(v, n)| format!("{}, {n}", v.grouping))
        .collect::<Vec<_>>()
        .join("; ");
    doc.push(
        "",
        Some("fit"),
        Content::Lines(vec![line!["Number of obs: ", ("n_obs", Cell::int(fit.n_obs)), format!(", groups: {groups}")]]),
    );
    doc.push(
        "",
        Some("groups"),
        Content::Json(
            fit.varcomps
                .iter()
                .zip(&fit.group_sizes)
                .map(|(v, n)| json!({ "grouping": v.grouping, "levels": n }))
                .collect(),
        ),
    );

    let rows = fit
        .fixed
        .iter()
        .map(|f| {
            vec![
                Cell::text(f.label.clone()),
                Cell::num(f.estimate),
                Cell::num(f.std_error),
                Cell::num(f.t_value),
            ]
        })
        .collect();
    doc.push(
        "Fixed effects:",
        Some("coefficients"),
        Content::Table {
            columns: vec![
                Column::new("", "term"),
                Column::new("Estimate", "estimate"),
                Column::new("Std. Error", "std_error"),
                Column::new("t value", "t_value"),
            ],
            rows,
        },
    );
    if fit.fixed.len() > 1 {
        doc.push(
            "Correlation of Fixed Effects:",
            Some("fixed_correlation"),
            Content::Matrix {
                labels: fit.fixed.iter().map(|f| f.label.clone()).collect(),
                values: matrix_rows(&fit.fixed_correlation),
            },
        );
    }
    if fit.reml {
        doc.push(
            "",
            None,
            Content::Paragraph(
                "\nNote: REML criteria depend on the fixed effects, so they cannot be compared across models \
                 with different fixed parts; use `lmkit compare`, which refits by ML."
                    .into(),
            ),
        );
    }
    doc.push(
        "",
        Some("warnings"),
        Content::Json(fit.warnings.iter().map(|w| json!(warning_text(w))).collect()),
    );
    doc
}

pub fn fit(a: &FitArgs, io: &mut Io) -> Result<(), CliError> {
    let df = load(&a.data)?;
    let doc = match fit_model(&df, &a.formula, a.model, a.method)? {
        Model::Ols(f) => ols_report(&f),
        Model::Lmm(f) => {
            report_warnings(io, &f);
            lmm_report(&f, &a.data)
        }
    };
    io.emit(&doc.render(a.format), a.out.as_deref())
}

/// Both models by ML, checked for nesting.
pub fn compare_fits(df: &DataFrame, null: &str, full: &str) -> Result<(LmmFit, LmmFit, LrtResult), CliError> {
    let mut fits = Vec::with_capacity(2);
    for f in [null, full] {
        let ast = parse_formula(f)?;
        if ast.random_specs.is_empty() {
            return Err(LmmError::NoRandomEffects.into());
        }
        fits.push(fit_lmm(&build_model_frame(df, &ast)?, false)?);
    }
    let full_fit = fits.pop().expect("two fits");
    let null_fit = fits.pop().expect("two fits");
    let lrt = lrt_compare(&null_fit, &full_fit)?;
    if lrt.terms_not_nested {
        return Err(CliError::Usage(
            "the null model's fixed terms are not all contained in the full model".into(),
        ));
    }
    Ok((null_fit, full_fit, lrt))
}

pub fn compare_report(null: &LmmFit, full: &LmmFit, lrt: &LrtResult, data: &Path) -> ReportDocument {
    let mut doc = ReportDocument::new();
    let (nf, ff) = (format_formula(&null.frame.formula), format_formula(&full.frame.formula));
    doc.push(
        "",
        Some("fit"),
        Content::Lines(vec![
            line!["Data: ", ("data", Cell::text(data.display().to_string()))],
            line!["Models:"],
            line!["null: ", ("null_formula", Cell::text(nf))],
            line!["full: ", ("full_formula", Cell::text(ff))],
        ]),
    );
    doc.push("", Some("fit"), Content::Json(json!({ "method": "maximum likelihood", "n_obs": full.n_obs })));
    let summary = |name: &str, s: &lmkit_core::inference::ModelSummary| {
        vec![
            Cell::text(name),
            Cell::int(s.n_params),
            Cell::num(s.aic),
            Cell::num(s.bic),
            Cell::num(s.log_likelihood),
            Cell::num(s.deviance),
        ]
    };
    let mut null_row = summary("null", &lrt.null);
    null_row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
    let mut full_row = summary("full", &lrt.full);
    full_row.extend([
        Cell::num(lrt.chisq),
        Cell::int(lrt.chi_df),
        Cell::prob(lrt.p_value),
        Cell::text(stars(lrt.p_value)),
    ]);
    let mut chisq = Column::new("Chisq", "");
    chisq.text_only = true;
    let mut chi_df = Column::new("Chi Df", "");
    chi_df.text_only = true;
    let mut pr = Column::new("Pr(>Chisq)", "");
    pr.text_only = true;
    doc.push(
        "",
        Some("models"),
        Content::Table {
            columns: vec![
                Column::new("", "model"),
                Column::new("Df", "df"),
                Column::new("AIC", "aic"),
                Column::new("BIC", "bic"),
                Column::new("logLik", "log_likelihood"),
                Column::new("deviance", "deviance"),
                chisq,
                chi_df,
                pr,
                Column::decoration(""),
            ],
            rows: vec![null_row, full_row],
        },
    );
    doc.push("", Some("lrt"), Content::Json(json!({ "chisq": lrt.chisq, "df": lrt.chi_df, "p": lrt.p_value })));
    doc.push("", None, Content::Paragraph(format!("---\n{SIGNIF_LEGEND}\n")));
    let verdict = if lrt.p_value < 0.05 {
        format!(
            "The full model fits significantly better than the null model (chi-square = {:.3} on {} df, p = {}).",
            lrt.chisq,
            lrt.chi_df,
            crate::report::format_number(lrt.p_value, Style::Sig)
        )
    } else {
        format!(
            "The full model does not fit significantly better than the null model at the 0.05 level (chi-square = {:.3} on {} df, p = {}).",
            lrt.chisq,
            lrt.chi_df,
            crate::report::format_number(lrt.p_value, Style::Sig)
        )
    };
    doc.push("", Some("verdict"), Content::Paragraph(verdict));
    doc
}

pub fn compare(a: &CompareArgs, io: &mut Io) -> Result<(), CliError> {
    if a.reml {
        io.warn("comparisons always refit both models by maximum likelihood; --reml is ignored");
    }
    let df = load(&a.data)?;
    let (null, full, lrt) = compare_fits(&df, &a.null, &a.full)?;
    report_warnings(io, &null);
    report_warnings(io, &full);
    io.emit(&compare_report(&null, &full, &lrt, &a.data).render(a.format), a.out.as_deref())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| CliError::io("write", &p, e))
}

fn num_or_na(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| x.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn collinearity_csv(c: &CollinearityReport) -> String {
    let mut s = String::from("kind,term_a,term_b,value,flagged\n");
    for p in &c.pairs {
        s.push_str(&format!("pair,{},{},{},{}\n", csv_field(&p.a), csv_field(&p.b), p.r, p.flagged));
    }
    for v in &c.vifs {
        s.push_str(&format!("vif,{},,{},{}\n", csv_field(&v.label), v.vif, v.flagged));
    }
    s
}

fn influence_csv(frame: &ModelFrame, labels: &[String], values: &Matrix) -> String {
    let mut s = String::from("row");
    for l in labels {
        s.push(',');
        s.push_str(&csv_field(l));
    }
    s.push('\n');
    for i in 0..values.nrows() {
        s.push_str(&row_label(frame, i));
        for v in values.row(i) {
            s.push(',');
            s.push_str(&num_or_na(Some(*v).filter(|x| !x.is_nan())));
        }
        s.push('\n');
    }
    s
}

fn describe_flag(frame: &ModelFrame, labels: &[String], f: &InfluenceFlag) -> String {
    format!("row {}: {} ({})", row_label(frame, f.row), labels[f.coefficient], f.reason.as_str())
}

pub fn diagnose(a: &DiagnoseArgs, io: &mut Io) -> Result<(), CliError> {
    let df = load(&a.data)?;
    let model = fit_model(&df, &a.formula, a.model, a.method)?;
    let frame = model.frame().clone();
    let threads = a.threads.unwrap_or_else(available_threads).max(1);
    if let Model::Lmm(f) = &model {
        report_warnings(io, f);
    }
    let mut loo_indices = Vec::new();
    for label in &a.loo_coef {
        match (&model, frame.column_index(label)) {
            (Model::Ols(_), _) => {
                return Err(CliError::Usage("--loo-coef applies to mixed models; OLS fits get dfbeta.csv".into()))
            }
            (_, None) => {
                return Err(CliError::Usage(format!(
                    "`{label}` is not a fixed effect; available: {}",
                    frame.x_labels.join(", ")
                )))
            }
            (_, Some(j)) => loo_indices.push(j),
        }
    }
    fs::create_dir_all(&a.out).map_err(|e| CliError::io("create directory", &a.out, e))?;

    let fitted = model.fitted();
    let series = [
        ("residuals", "Residuals against fitted values", fitted.residual_fitted()),
        ("qq", "Normal Q-Q plot of residuals", fitted.qq()?),
        ("hist", "Histogram of residuals", fitted.histogram(a.bins.filter(|b| *b > 0))),
    ];
    for (name, title, s) in &series {
        write_file(&a.out, &format!("{name}.csv"), &series_csv(s))?;
        if a.svg {
            write_file(&a.out, &format!("{name}.svg"), &series_svg(s, title))?;
        }
    }

    let mut doc = ReportDocument::new();
    let mut lines: Vec<String> = Vec::new();
    let mut hints: Vec<&str> = Vec::new();

    let thresholds = CollinearityThresholds { r: a.r_threshold, vif: a.vif_threshold };
    match collinearity_report(&frame, thresholds) {
        Ok(c) => {
            write_file(&a.out, "collinearity.csv", &collinearity_csv(&c))?;
            let mut any = false;
            for p in c.pairs.iter().filter(|p| p.flagged) {
                lines.push(format!("collinearity: {} and {} correlate at r = {:.3}", p.a, p.b, p.r));
                any = true;
            }
            for v in c.vifs.iter().filter(|v| v.flagged) {
                lines.push(format!("collinearity: {} has VIF {:.2}", v.label, v.vif));
                any = true;
            }
            if any {
                hints.push(
                    "Collinear predictors: keep the most meaningful of the correlated measures (not the most \
                     significant one), or replace them with a few principal components.",
                );
            }
        }
        Err(e) => {
            io.warn(format!("collinearity report skipped: {e}"));
            write_file(&a.out, "collinearity.csv", "kind,term_a,term_b,value,flagged\n")?;
        }
    }

    let mut flags = Vec::new();
    match &model {
        Model::Ols(fit) => {
            let report: InfluenceReport = dfbeta_ols_with(&frame, |n, f| par_map(n, threads, f))?;
            write_file(&a.out, "dfbeta.csv", &influence_csv(&frame, &report.labels, &report.dfbeta))?;
            for f in influence_flags(&report, &fit.coefficients, a.influence_fraction) {
                flags.push(describe_flag(&frame, &report.labels, &f));
            }
        }
        Model::Lmm(fit) => {
            if !loo_indices.is_empty() {
                let reml = fit.reml;
                let mut values = Matrix::from_fn(frame.n(), loo_indices.len(), |_, _| f64::NAN);
                for (k, &j) in loo_indices.iter().enumerate() {
                    let est = loo_fixed_effect_with(&frame, reml, j, |n, f| par_map(n, threads, f))?;
                    for (i, v) in est.iter().enumerate() {
                        match v {
                            Some(v) => values[(i, k)] = *v,
                            None => io.warn(format!(
                                "leave-one-out fit without row {} did not converge; entry left as NA",
                                row_label(&frame, i)
                            )),
                        }
                    }
                }
                let labels: Vec<String> = loo_indices.iter().map(|&j| frame.x_labels[j].clone()).collect();
                write_file(&a.out, "loo.csv", &influence_csv(&frame, &labels, &values))?;
                let full: Vec<f64> = loo_indices.iter().map(|&j| fit.fixed[j].estimate).collect();
                let dfbeta = Matrix::from_fn(frame.n(), labels.len(), |i, k| full[k] - values[(i, k)]);
                let report = InfluenceReport { labels: labels.clone(), dfbeta };
                for f in influence_flags(&report, &full, a.influence_fraction) {
                    flags.push(describe_flag(&frame, &labels, &f));
                }
            }
        }
    }
    if !flags.is_empty() {
        hints.push(
            "Influential rows: report the analysis with and without them and say whether the conclusions \
             change; drop a row only if it is a recording or data-entry error.",
        );
    }
    lines.extend(flags.iter().map(|f| format!("influence: {f}")));

    doc.push(
        "Diagnostics written to:",
        Some("files"),
        Content::Paragraph(a.out.display().to_string()),
    );
    let n_resid = series[0].2.points().len();
    doc.push(
        "",
        None,
        Content::Paragraph(format!(
            "{n_resid} residuals; inspect residuals.csv for curvature or a funnel shape, and qq.csv/hist.csv for \
             skew or heavy tails."
        )),
    );
    doc.push(
        "Flags:",
        None,
        Content::Paragraph(if lines.is_empty() { "none".into() } else { lines.join("\n") }),
    );
    hints.push(
        "Curvature or a funnel in the residual plot: a log transform of the response often helps, and a \
         squared term can capture a U-shaped predictor.",
    );
    doc.push("Hints:", None, Content::Paragraph(hints.iter().map(|h| format!("- {h}")).collect::<Vec<_>>().join("\n")));
    io.emit(&doc.to_text(), None)
}

/// `RESPONSE by A,B` or `RESPONSE A,B`.
fn parse_group_spec(parts: &[String]) -> Result<(String, Vec<String>), CliError> {
    let bad = || CliError::Usage("--group expects RESPONSE by FACTOR[,FACTOR]".into());
    let (resp, facs) = match parts {
        [r, by, f] if by.eq_ignore_ascii_case("by") => (r, f),
        [r, f] => (r, f),
        _ => return Err(bad()),
    };
    let factors: Vec<String> = facs.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if factors.is_empty() {
        return Err(bad());
    }
    Ok((resp.clone(), factors))
}

pub fn describe_report(df: &DataFrame, group: Option<(&str, &[String])>) -> Result<ReportDocument, CliError> {
    let mut doc = ReportDocument::new();
    doc.push(
        &format!("{} rows, {} columns:", df.n_rows(), df.columns().len()),
        None,
        Content::Paragraph(df.columns().iter().map(describe_column).collect::<Vec<_>>().join("\n")),
    );
    let cols: Vec<serde_json::Value> = df
        .columns()
        .iter()
        .map(|c| match c.data() {
            ColumnData::Categorical { levels, .. } => {
                json!({ "name": c.name(), "type": "categorical", "levels": levels, "missing": c.missing_count() })
            }
            ColumnData::Numeric(v) => {
                let present: Vec<f64> = v.iter().flatten().copied().collect();
                let lo = present.iter().copied().reduce(f64::min);
                let hi = present.iter().copied().reduce(f64::max);
                json!({ "name": c.name(), "type": "numeric", "min": lo, "max": hi, "missing": c.missing_count() })
            }
        })
        .collect();
    doc.push("", Some("rows"), Content::Json(json!(df.n_rows())));
    doc.push("", Some("columns"), Content::Json(cols.into()));

    let missing = missing_report(df);
    let mut by_col: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for m in &missing {
        by_col.entry(m.column.as_str()).or_default().push(m.row);
    }
    let headline = match missing.len() {
        0 => "no missing cells".to_string(),
        1 => format!("1 missing cell ({})", missing[0].column),
        k => format!("{k} missing cells ({})", by_col.keys().copied().collect::<Vec<_>>().join(", ")),
    };
    let mut text = headline;
    for (c, rows) in &by_col {
        let rows: Vec<String> = rows.iter().map(usize::to_string).collect();
        text.push_str(&format!("\n  {c}: row{} {}", if rows.len() == 1 { "" } else { "s" }, rows.join(", ")));
    }
    doc.push("Missing values:", None, Content::Paragraph(text));
    doc.push(
        "",
        Some("missing"),
        Content::Json(missing.iter().map(|m| json!({ "row": m.row, "column": m.column })).collect()),
    );

    if let Some((resp, factors)) = group {
        let f: Vec<&str> = factors.iter().map(String::as_str).collect();
        let stats = group_stats(df, resp, &f)?;
        let mut columns: Vec<Column> = f.iter().map(|n| Column::new(n, n)).collect();
        for (h, k) in [("n", "n"), ("Min", "min"), ("1Q", "q1"), ("Median", "median"), ("3Q", "q3"), ("Max", "max")] {
            columns.push(Column::new(h, k));
        }
        let rows = stats
            .iter()
            .map(|g| {
                let mut r: Vec<Cell> = g.labels.iter().map(|l| Cell::text(l.clone())).collect();
                r.push(Cell::int(g.n));
                r.extend([g.min, g.q1, g.median, g.q3, g.max].map(Cell::num));
                r
            })
            .collect();
        doc.push(&format!("{resp} by {}:", f.join(" and ")), Some("groups"), Content::Table { columns, rows });
    }
    Ok(doc)
}

pub fn describe(a: &DescribeArgs, io: &mut Io) -> Result<(), CliError> {
    let df = load(&a.data)?;
    let group = a.group.as_deref().map(parse_group_spec).transpose()?;
    let doc = describe_report(&df, group.as_ref().map(|(r, f)| (r.as_str(), f.as_slice())))?;
    io.emit(&doc.render(a.format), None)
}

/// `reps` samples of `n` pairs from one stream seeded with `seed`: for each
/// replicate, `n` x values then `n` y values.
pub fn simulate_pairs(n: usize, seed: u64, reps: usize) -> Vec<Vec<(f64, f64)>> {
    let mut rng = Rng::seed_from(seed);
    (0..reps)
        .map(|_| {
            let x = rng_normal(&mut rng, n);
            let y = rng_normal(&mut rng, n);
            x.into_iter().zip(y).collect()
        })
        .collect()
}

pub fn simulate(a: &SimulateArgs, io: &mut Io) -> Result<(), CliError> {
    if a.reps == 0 || a.n == 0 {
        return Err(CliError::Usage("--n and --reps must be positive".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| CliError::io("create directory", &a.out, e))?;
    let width = a.reps.to_string().len().max(3);
    for (k, pairs) in simulate_pairs(a.n, a.seed, a.reps).into_iter().enumerate() {
        let series = PlotSeries {
            kind: lmkit_core::diagnostics::PlotKind::Scatter,
            data: lmkit_core::diagnostics::PlotData::Points(pairs),
            x_label: "x".into(),
            y_label: "y".into(),
        };
        let stem = format!("sim_{:0width$}", k + 1);
        write_file(&a.out, &format!("{stem}.csv"), &series_csv(&series))?;
        if a.svg {
            write_file(&a.out, &format!("{stem}.svg"), &series_svg(&series, &format!("Normal pairs, replicate {}", k + 1)))?;
        }
    }
    let _ = writeln!(io.out, "wrote {} file{} of {} pairs to {}", a.reps, if a.reps == 1 { "" } else { "s" }, a.n, a.out.display());
    Ok(())
}

pub fn writeup(a: &WriteupArgs, io: &mut Io) -> Result<(), CliError> {
    let df = load(&a.data)?;
    let (null, full, lrt) = compare_fits(&df, &a.null, &a.full)?;
    report_warnings(io, &null);
    report_warnings(io, &full);
    // estimates and standard errors are reported from the REML fit
    let full_reml = fit_lmm(&full.frame, true)?;
    let opts = WriteupOptions {
        aliases: a.alias.iter().cloned().collect(),
        names: a.name.iter().cloned().collect(),
        unit: a.unit.clone(),
    };
    let text = writeup_generate(&full_reml, &lrt, &a.effect, &opts).map_err(CliError::Usage)?;
    let mut doc = ReportDocument::new();
    doc.push("", Some("paragraph"), Content::Paragraph(text));
    doc.push("", Some("lrt"), Content::Json(json!({ "chisq": lrt.chisq, "df": lrt.chi_df, "p": lrt.p_value })));
    io.emit(&doc.render(a.format), None)
}
