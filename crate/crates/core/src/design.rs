//! Complete-case model frames: the response, a treatment-coded fixed design
//! matrix, and one indicator-style block per random-effect term.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dataframe::{ColumnData, DataFrame};
use crate::formula::{FormulaAst, Term};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("formula has no response variable")]
    NoResponse,
    #[error("response `{0}` is categorical; a numeric response is required")]
    CategoricalResponse(String),
    #[error("grouping variable `{0}` is numeric with non-integer values")]
    NumericGrouping(String),
    #[error("no complete rows remain after removing missing values")]
    NoRows,
}

/// Random-effect design for one `(… | grouping)` term.
///
/// Row `i` belongs to group `groups[i]` and carries the `q` covariate values
/// `values.row(i)` (the first is always 1, the intercept).
#[derive(Debug, Clone, PartialEq)]
pub struct ZBlock {
    pub grouping: String,
    pub group_labels: Vec<String>,
    /// `"(Intercept)"` followed by slope column labels.
    pub column_labels: Vec<String>,
    pub groups: Vec<usize>,
    pub values: Matrix,
}

impl ZBlock {
    pub fn q(&self) -> usize {
        self.column_labels.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_labels.len()
    }

    /// Total number of random-effect columns, `q · groups`.
    pub fn width(&self) -> usize {
        self.q() * self.n_groups()
    }

    /// Dense `n × (q·g)` matrix; group `g` owns columns `g·q .. g·q + q`.
    pub fn to_dense(&self) -> Matrix {
        let q = self.q();
        let mut z = Matrix::zeros(self.groups.len(), self.width());
        for (i, &g) in self.groups.iter().enumerate() {
            for k in 0..q {
                z[(i, g * q + k)] = self.values[(i, k)];
            }
        }
        z
    }

    fn select_rows(&self, rows: &[usize]) -> ZBlock {
        ZBlock {
            grouping: self.grouping.clone(),
            group_labels: self.group_labels.clone(),
            column_labels: self.column_labels.clone(),
            groups: rows.iter().map(|&r| self.groups[r]).collect(),
            values: self.values.select_rows(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFrame {
    pub formula: FormulaAst,
    pub response: String,
    pub y: Vec<f64>,
    pub x: Matrix,
    pub x_labels: Vec<String>,
    pub z_blocks: Vec<ZBlock>,
    /// 0-based indices of the source rows kept, in frame order.
    pub kept_rows: Vec<usize>,
}

impl ModelFrame {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.x_labels.iter().position(|l| l == label)
    }

    /// Sub-frame with the given frame rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> ModelFrame {
        ModelFrame {
            formula: self.formula.clone(),
            response: self.response.clone(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            x: self.x.select_rows(rows),
            x_labels: self.x_labels.clone(),
            z_blocks: self.z_blocks.iter().map(|z| z.select_rows(rows)).collect(),
            kept_rows: rows.iter().map(|&r| self.kept_rows[r]).collect(),
        }
    }

    /// The frame without its `i`-th row (frame position, not source row).
    pub fn without_row(&self, i: usize) -> ModelFrame {
        let rows: Vec<usize> = (0..self.n()).filter(|&r| r != i).collect();
        self.select_rows(&rows)
    }

    /// Same design with a replaced response vector.
    pub fn with_response(&self, y: Vec<f64>) -> ModelFrame {
        assert_eq!(y.len(), self.n(), "response length mismatch");
        ModelFrame {
            y,
            ..self.clone()
        }
    }
}

/// How one variable turns into design columns.
enum Coding<'a> {
    Numeric(&'a [Option<f64>]),
    /// Treatment coding: one indicator per non-reference level.
    Treatment {
        levels: &'a [String],
        codes: &'a [Option<u32>],
    },
}

impl Coding<'_> {
    fn width(&self) -> usize {
        match self {
            Coding::Numeric(_) => 1,
            Coding::Treatment { levels, .. } => levels.len().saturating_sub(1),
        }
    }

    fn labels(&self, var: &str) -> Vec<String> {
        match self {
            Coding::Numeric(_) => vec![var.to_string()],
            Coding::Treatment { levels, .. } => {
                levels[1..].iter().map(|l| format!("{var}{l}")).collect()
            }
        }
    }

    fn value(&self, row: usize, k: usize) -> f64 {
        match self {
            Coding::Numeric(v) => v[row].expect("complete row"),
            Coding::Treatment { codes, .. } => {
                if codes[row] == Some(k as u32 + 1) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn is_missing(&self, row: usize) -> bool {
        match self {
            Coding::Numeric(v) => v[row].is_none(),
            Coding::Treatment { codes, .. } => codes[row].is_none(),
        }
    }
}

fn coding<'a>(df: &'a DataFrame, var: &str) -> Result<Coding<'a>, DesignError> {
    let col = df
        .column(var)
        .ok_or_else(|| DesignError::UnknownVariable(var.to_string()))?;
    Ok(match col.data() {
        ColumnData::Numeric(v) => Coding::Numeric(v),
        ColumnData::Categorical { levels, codes } => Coding::Treatment { levels, codes },
    })
}

/// Columns of one term: the product of its variables' codings, first
/// variable varying fastest. Returns labels and a row evaluator.
fn term_columns(
    codings: &[(&str, Coding<'_>)],
    term: &Term,
) -> (Vec<String>, Vec<Vec<(usize, usize)>>) {
    let parts: Vec<(usize, &Coding<'_>)> = term
        .vars()
        .iter()
        .map(|v| {
            let idx = codings.iter().position(|(n, _)| n == v).expect("coded");
            (idx, &codings[idx].1)
        })
        .collect();
    // each column is a list of (variable index, sub-column)
    let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for (idx, c) in &parts {
        let mut next = Vec::new();
        for k in 0..c.width() {
            for combo in &combos {
                let mut nc = combo.clone();
                nc.push((*idx, k));
                next.push(nc);
            }
        }
        // first variable fastest: reorder so earlier variables cycle fastest
        next.sort_by(|a, b| a.iter().rev().map(|x| x.1).cmp(b.iter().rev().map(|x| x.1)));
        combos = next;
    }
    let labels = combos
        .iter()
        .map(|combo| {
            combo
                .iter()
                .map(|&(idx, k)| {
                    let (name, c) = &codings[idx];
                    c.labels(name).swap_remove(k)
                })
                .collect::<Vec<_>>()
                .join(":")
        })
        .collect();
    (labels, combos)
}

fn grouping_factor(df: &DataFrame, name: &str) -> Result<(Vec<String>, Vec<Option<usize>>), DesignError> {
    let col = df
        .column(name)
        .ok_or_else(|| DesignError::UnknownVariable(name.to_string()))?;
    match col.data() {
        ColumnData::Categorical { levels, codes } => Ok((
            levels.clone(),
            codes.iter().map(|c| c.map(|c| c as usize)).collect(),
        )),
        ColumnData::Numeric(v) => {
            // integer-valued ids (item numbers and the like) group like categories
            let mut ids: Vec<i64> = Vec::new();
            for x in v.iter().flatten() {
                if !x.is_finite() || libm::trunc(*x) != *x || libm::fabs(*x) > 9.0e15 {
                    return Err(DesignError::NumericGrouping(name.to_string()));
                }
                ids.push(*x as i64);
            }
            ids.sort_unstable();
            ids.dedup();
            let codes = v
                .iter()
                .map(|x| x.map(|x| ids.binary_search(&(x as i64)).expect("present")))
                .collect();
            Ok((ids.iter().map(|i| i.to_string()).collect(), codes))
        }
    }
}

/// Builds the complete-case model frame for `ast` over `df`.
pub fn build_model_frame(df: &DataFrame, ast: &FormulaAst) -> Result<ModelFrame, DesignError> {
    let response = ast.response.as_deref().ok_or(DesignError::NoResponse)?;
    let y_col = df
        .column(response)
        .ok_or_else(|| DesignError::UnknownVariable(response.to_string()))?;
    let y_all = y_col
        .as_numeric()
        .ok_or_else(|| DesignError::CategoricalResponse(response.to_string()))?;

    let mut vars: Vec<&str> = ast.fixed_vars();
    for spec in &ast.random_specs {
        for v in spec.slope_vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut codings: Vec<(&str, Coding<'_>)> = Vec::with_capacity(vars.len());
    for v in &vars {
        codings.push((v, coding(df, v)?));
    }
    let mut groupings = Vec::with_capacity(ast.random_specs.len());
    for spec in &ast.random_specs {
        groupings.push(grouping_factor(df, &spec.grouping)?);
    }

    let kept_rows: Vec<usize> = (0..df.n_rows())
        .filter(|&r| {
            y_all[r].is_some()
                && codings.iter().all(|(_, c)| !c.is_missing(r))
                && groupings.iter().all(|(_, g)| g[r].is_some())
        })
        .collect();
    if kept_rows.is_empty() {
        return Err(DesignError::NoRows);
    }
    let n = kept_rows.len();
    let y: Vec<f64> = kept_rows.iter().map(|&r| y_all[r].expect("complete")).collect();

    // fixed design
    let mut x_labels = vec![String::from("(Intercept)")];
    let mut x_cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for term in ast.fixed_terms.iter().filter(|t| !t.is_intercept()) {
        let (labels, combos) = term_columns(&codings, term);
        for (label, combo) in labels.into_iter().zip(combos) {
            x_labels.push(label);
            x_cols.push(
                kept_rows
                    .iter()
                    .map(|&r| combo.iter().map(|&(idx, k)| codings[idx].1.value(r, k)).product())
                    .collect(),
            );
        }
    }
    let x = Matrix::from_fn(n, x_cols.len(), |i, j| x_cols[j][i]);

    // random-effect blocks
    let mut z_blocks = Vec::with_capacity(ast.random_specs.len());
    for (spec, (levels, codes)) in ast.random_specs.iter().zip(&groupings) {
        let mut column_labels = vec![String::from("(Intercept)")];
        let mut slope_cols: Vec<Vec<(usize, usize)>> = Vec::new();
        for term in spec.slope_terms.iter().filter(|t| !t.is_intercept()) {
            let (labels, combos) = term_columns(&codings, term);
            column_labels.extend(labels);
            slope_cols.extend(combos);
        }
        // only levels that occur in the kept rows
        let mut present = vec![false; levels.len()];
        for &r in &kept_rows {
            present[codes[r].expect("complete")] = true;
        }
        let mut remap = vec![usize::MAX; levels.len()];
        let mut group_labels = Vec::new();
        for (l, label) in levels.iter().enumerate() {
            if present[l] {
                remap[l] = group_labels.len();
                group_labels.push(label.clone());
            }
        }
        let q = column_labels.len();
        let groups = kept_rows
            .iter()
            .map(|&r| remap[codes[r].expect("complete")])
            .collect();
        let values = Matrix::from_fn(n, q, |i, k| {
            if k == 0 {
                1.0
            } else {
                let r = kept_rows[i];
                slope_cols[k - 1]
                    .iter()
                    .map(|&(idx, kk)| codings[idx].1.value(r, kk))
                    .product()
            }
        });
        z_blocks.push(ZBlock {
            grouping: spec.grouping.clone(),
            group_labels,
            column_labels,
            groups,
            values,
        });
    }

    Ok(ModelFrame {
        formula: ast.clone(),
        response: response.to_string(),
        y,
        x,
        x_labels,
        z_blocks,
        kept_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataframe::read_csv;
    use crate::formula::parse_formula;

    fn frame(csv: &str, f: &str) -> Result<ModelFrame, DesignError> {
        build_model_frame(&read_csv(csv.as_bytes()).unwrap(), &parse_formula(f).unwrap())
    }

    const SEX: &str = "sex,pitch\nfemale,233\nfemale,204\nfemale,242\nmale,130\nmale,112\nmale,142\n";

    #[test]
    fn dummy_coding_reference_first_level() {
        let m = frame(SEX, "pitch ~ sex").unwrap();
        assert_eq!(m.x_labels, ["(Intercept)", "sexmale"]);
        assert_eq!(m.x.column(0), [1.0; 6]);
        assert_eq!(m.x.column(1), [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.kept_rows, [0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn intercept_only() {
        let m = frame(SEX, "pitch ~ 1").unwrap();
        assert_eq!(m.p(), 1);
        assert_eq!(m.x.column(0), [1.0; 6]);
    }

    #[test]
    fn interactions_and_widths() {
        let csv = "y,a,b,x\n1,p,u,0.5\n2,q,v,1.5\n3,r,u,2\n4,p,v,3\n5,q,u,1\n6,r,v,2\n";
        let m = frame(csv, "y ~ a*b + x").unwrap();
        // p = 1 + (3-1) + (2-1) + 1 + (2·1)
        assert_eq!(m.p(), 7);
        assert_eq!(
            m.x_labels,
            ["(Intercept)", "aq", "ar", "bv", "x", "aq:bv", "ar:bv"]
        );
        let aq = m.x.column(1);
        let bv = m.x.column(3);
        let aqbv = m.x.column(5);
        for i in 0..6 {
            assert_eq!(aqbv[i], aq[i] * bv[i]);
        }
        let nx = frame(csv, "y ~ a:x").unwrap();
        assert_eq!(nx.x_labels, ["(Intercept)", "aq:x", "ar:x"]);
    }

    #[test]
    fn missing_rows_dropped_and_groups_coerced() {
        let csv = "y,g,s,a\n1,1,F1,inf\nNA,1,F1,pol\n3,2,F2,inf\n4,2,F2,pol\n5,10,F2,pol\n";
        let m = frame(csv, "y ~ a + (1 + a|s) + (1|g)").unwrap();
        assert_eq!(m.kept_rows, [0, 2, 3, 4]);
        assert_eq!(m.z_blocks.len(), 2);
        let zs = &m.z_blocks[0];
        assert_eq!(zs.column_labels, ["(Intercept)", "apol"]);
        assert_eq!(zs.group_labels, ["F1", "F2"]);
        assert_eq!(zs.width(), 4);
        let zg = &m.z_blocks[1];
        // integer ids sort numerically
        assert_eq!(zg.group_labels, ["1", "2", "10"]);
        let dense = zs.to_dense();
        assert_eq!(dense.row(0), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(dense.row(2), [0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn complete_frame_unchanged_by_row_drop() {
        let m = frame(SEX, "pitch ~ sex").unwrap();
        assert_eq!(m.select_rows(&[0, 1, 2, 3, 4, 5]), m);
    }

    #[test]
    fn errors() {
        assert_eq!(
            frame(SEX, "pitch ~ age"),
            Err(DesignError::UnknownVariable("age".into()))
        );
        assert_eq!(
            frame(SEX, "sex ~ pitch"),
            Err(DesignError::CategoricalResponse("sex".into()))
        );
        assert_eq!(
            frame("y,g\n1,0.5\n2,1.5\n", "y ~ 1 + (1|g)"),
            Err(DesignError::NumericGrouping("g".into()))
        );
        assert_eq!(frame("y,x\nNA,1\n2,NA\n", "y ~ x"), Err(DesignError::NoRows));
        assert_eq!(frame(SEX, "~ sex"), Err(DesignError::NoResponse));
    }
}
