//! Tabular data: named numeric or categorical columns with missing cells.
//!
//! Row numbers reported by this module (missing cells, ragged records,
//! transform failures) are 1-based data rows, header excluded.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("input contains no data rows")]
    Empty,
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: unterminated quoted field")]
    UnterminatedQuote { row: usize },
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("column `{name}` has {found} cells, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is categorical, a numeric column is required")]
    NotNumeric(String),
    #[error("column `{0}` is numeric, a categorical column is required")]
    NotCategorical(String),
    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),
    #[error("column `{column}`, row {row}: log of non-positive value {value}")]
    NonPositiveLog {
        column: String,
        row: usize,
        value: f64,
    },
}

/// Cell storage of a column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    /// `codes[i]` indexes `levels`; levels are unique and byte-wise sorted.
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    /// Numeric column without missing cells.
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        Self::numeric(name, values.iter().copied().map(Some).collect())
    }

    /// Categorical column; the level list is the sorted set of present values.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[Option<S>]) -> Self {
        let mut levels: Vec<String> = values
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect();
        levels.sort_unstable();
        levels.dedup();
        let codes = values
            .iter()
            .map(|v| {
                v.as_ref().map(|s| {
                    levels
                        .binary_search_by(|l| l.as_str().cmp(s.as_ref()))
                        .expect("level present") as u32
                })
            })
            .collect();
        Self {
            name: name.into(),
            data: ColumnData::Categorical { levels, codes },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.data, ColumnData::Numeric(_))
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical { .. } => None,
        }
    }

    /// Levels of a categorical column.
    pub fn levels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { levels, .. } => Some(levels),
            ColumnData::Numeric(_) => None,
        }
    }

    /// Text of a cell as it would be written to CSV (`None` when missing).
    pub fn cell_text(&self, row: usize) -> Option<String> {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map(|x| format!("{x}")),
            ColumnData::Categorical { levels, codes } => {
                codes[row].map(|c| levels[c as usize].clone())
            }
        }
    }

    fn numeric_or_err(&self) -> Result<&[Option<f64>], DataError> {
        self.as_numeric()
            .ok_or_else(|| DataError::NotNumeric(self.name.clone()))
    }
}

/// An ordered collection of equally long, uniquely named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFrame {
    columns: Vec<Column>,
    n_rows: usize,
}

impl DataFrame {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        let n_rows = columns.first().map_or(0, Column::len);
        for (i, c) in columns.iter().enumerate() {
            if c.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    name: c.name.clone(),
                    expected: n_rows,
                    found: c.len(),
                });
            }
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Column, DataError> {
        self.column(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    /// Returns a new frame with `column` appended.
    pub fn with_column(&self, column: Column) -> Result<Self, DataError> {
        let mut cols = self.columns.clone();
        cols.push(column);
        Self::new(cols)
    }

    /// Serializes to CSV text that [`read_csv`] reads back unchanged.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| quote_field(&c.name)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.n_rows {
            for (j, c) in self.columns.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match c.cell_text(r) {
                    Some(t) => out.push_str(&quote_field(&t)),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn quote_field(s: &str) -> String {
    let needs = s.is_empty()
        || s == "NA"
        || s.contains([',', '"', '\n', '\r'])
        || s.starts_with(char::is_whitespace)
        || s.ends_with(char::is_whitespace);
    if !needs {
        return s.to_string();
    }
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for ch in s.chars() {
        if ch == '"' {
            q.push('"');
        }
        q.push(ch);
    }
    q.push('"');
    q
}

/// One parsed field: its text and whether it was quoted.
struct Field {
    text: String,
    quoted: bool,
}

/// Splits CSV text into records (RFC 4180: `""` escapes, CRLF or LF).
fn split_records(text: &str) -> Result<Vec<Vec<Field>>, DataError> {
    let mut records = Vec::new();
    let mut record: Vec<Field> = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    let mut record_has_content = false;

    while let Some(ch) = chars.next() {
        if in_quotes {
            if ch == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push(ch);
            }
            continue;
        }
        match ch {
            '"' if field.trim().is_empty() && !quoted => {
                field.clear();
                in_quotes = true;
                quoted = true;
                record_has_content = true;
            }
            ',' => {
                record.push(Field {
                    text: core::mem::take(&mut field),
                    quoted,
                });
                quoted = false;
                record_has_content = true;
            }
            '\r' if chars.peek() == Some(&'\n') => {}
            '\n' => {
                if record_has_content || !field.is_empty() {
                    record.push(Field {
                        text: core::mem::take(&mut field),
                        quoted,
                    });
                    records.push(core::mem::take(&mut record));
                }
                quoted = false;
                record_has_content = false;
            }
            _ => {
                field.push(ch);
                record_has_content = true;
            }
        }
    }
    if in_quotes {
        return Err(DataError::UnterminatedQuote {
            row: records.len().max(1),
        });
    }
    if record_has_content || !field.is_empty() {
        record.push(Field { text: field, quoted });
        records.push(record);
    }
    Ok(records)
}

/// Decimal or scientific notation; rejects `inf`, `nan` and hex forms.
fn parse_number(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse().ok()
}

fn is_missing_token(f: &Field) -> bool {
    !f.quoted && (f.text.is_empty() || f.text == "NA")
}

/// Reads comma-separated text with a mandatory header row.
///
/// A column is numeric iff every non-missing cell parses as a decimal
/// number; otherwise it is categorical. `NA` and the empty field are missing.
pub fn read_csv(source: &[u8]) -> Result<DataFrame, DataError> {
    let text = core::str::from_utf8(source).map_err(|_| DataError::InvalidUtf8)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records = split_records(text)?.into_iter();
    let header = records.next().ok_or(DataError::Empty)?;
    let names: Vec<String> = header
        .into_iter()
        .map(|f| {
            if f.quoted {
                f.text
            } else {
                f.text.trim().to_string()
            }
        })
        .collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(DataError::DuplicateColumn(n.clone()));
        }
    }
    let width = names.len();
    let mut cells: Vec<Vec<Field>> = (0..width).map(|_| Vec::new()).collect();
    let mut n_rows = 0;
    for (r, rec) in records.enumerate() {
        if rec.len() != width {
            return Err(DataError::RaggedRow {
                row: r + 1,
                expected: width,
                found: rec.len(),
            });
        }
        for (j, mut f) in rec.into_iter().enumerate() {
            if !f.quoted {
                let trimmed = f.text.trim();
                if trimmed.len() != f.text.len() {
                    f.text = trimmed.to_string();
                }
            }
            cells[j].push(f);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(DataError::Empty);
    }
    let columns = names
        .into_iter()
        .zip(cells)
        .map(|(name, fields)| {
            let parsed: Option<Vec<Option<f64>>> = fields
                .iter()
                .map(|f| {
                    if is_missing_token(f) {
                        Some(None)
                    } else {
                        parse_number(&f.text).map(Some)
                    }
                })
                .collect();
            match parsed {
                Some(values) => Column::numeric(name, values),
                None => {
                    let values: Vec<Option<&str>> = fields
                        .iter()
                        .map(|f| (!is_missing_token(f)).then_some(f.text.as_str()))
                        .collect();
                    Column::categorical(name, &values)
                }
            }
        })
        .collect();
    DataFrame::new(columns)
}

/// A missing cell, by 1-based data row and column name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingCell {
    pub row: usize,
    pub column: String,
}

/// Every missing cell, ordered by column then row.
pub fn missing_report(df: &DataFrame) -> Vec<MissingCell> {
    let mut out = Vec::new();
    for c in df.columns() {
        for r in 0..c.len() {
            if c.is_missing(r) {
                out.push(MissingCell {
                    row: r + 1,
                    column: c.name.clone(),
                });
            }
        }
    }
    out
}

fn mean_of_present(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let n = present.len() as f64;
    let m = present.iter().sum::<f64>() / n;
    // second pass removes the first-order rounding error of the plain mean
    let corr = present.iter().map(|x| x - m).sum::<f64>() / n;
    Some(m + corr)
}

/// Appends `<col>.c`, the column minus its mean over non-missing cells.
pub fn derive_center(df: &DataFrame, col: &str) -> Result<DataFrame, DataError> {
    let c = df.require(col)?;
    let values = c.numeric_or_err()?;
    let mean = mean_of_present(values).ok_or_else(|| DataError::AllMissing(col.to_string()))?;
    let centered = values.iter().map(|v| v.map(|x| x - mean)).collect();
    df.with_column(Column::numeric(format!("{col}.c"), centered))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Log,
    Square,
}

impl Transform {
    pub fn suffix(self) -> &'static str {
        match self {
            Transform::Log => "log",
            Transform::Square => "sq",
        }
    }
}

/// Appends `<col>.log` or `<col>.sq`.
pub fn derive_transform(df: &DataFrame, col: &str, kind: Transform) -> Result<DataFrame, DataError> {
    let c = df.require(col)?;
    let values = c.numeric_or_err()?;
    let mut out = Vec::with_capacity(values.len());
    for (r, v) in values.iter().enumerate() {
        out.push(match (v, kind) {
            (None, _) => None,
            (Some(x), Transform::Square) => Some(x * x),
            (Some(x), Transform::Log) => {
                if *x <= 0.0 {
                    return Err(DataError::NonPositiveLog {
                        column: col.to_string(),
                        row: r + 1,
                        value: *x,
                    });
                }
                Some(libm::log(*x))
            }
        });
    }
    df.with_column(Column::numeric(format!("{col}.{}", kind.suffix()), out))
}

/// Five-number summary of one factor-level combination.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub labels: Vec<String>,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

fn median_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

/// Tukey five-number summary (hinges are medians of the lower and upper
/// halves, each half including the median when `n` is odd).
pub fn five_number(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let half = n.div_ceil(2);
    Some([
        x[0],
        median_sorted(&x[..half]),
        median_sorted(&x),
        median_sorted(&x[n - half..]),
        x[n - 1],
    ])
}

/// Per factor-level combination summaries of a numeric response. Groups are
/// ordered by their level tuples; rows with a missing response or factor are
/// skipped.
pub fn group_stats(
    df: &DataFrame,
    response: &str,
    factors: &[&str],
) -> Result<Vec<GroupSummary>, DataError> {
    let y = df.require(response)?.numeric_or_err()?;
    let mut facs = Vec::with_capacity(factors.len());
    for f in factors {
        let c = df.require(f)?;
        match c.data() {
            ColumnData::Categorical { levels, codes } => facs.push((levels, codes)),
            ColumnData::Numeric(_) => return Err(DataError::NotCategorical(f.to_string())),
        }
    }
    let mut groups: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
    'rows: for (r, v) in y.iter().enumerate() {
        let Some(v) = v else { continue };
        let mut key = Vec::with_capacity(facs.len());
        for (_, codes) in &facs {
            match codes[r] {
                Some(c) => key.push(c),
                None => continue 'rows,
            }
        }
        groups.entry(key).or_default().push(*v);
    }
    Ok(groups
        .into_iter()
        .map(|(key, vals)| {
            let [min, q1, median, q3, max] = five_number(&vals).expect("nonempty group");
            GroupSummary {
                labels: key
                    .iter()
                    .zip(&facs)
                    .map(|(&c, (levels, _))| levels[c as usize].clone())
                    .collect(),
                min,
                q1,
                median,
                q3,
                max,
                n: vals.len(),
            }
        })
        .collect())
}

/// Human-readable one-line description of a column, e.g.
/// `sex: categorical{female,male}` or `pitch: numeric[112,242]`.
pub fn describe_column(c: &Column) -> String {
    let mut s = String::new();
    match c.data() {
        ColumnData::Categorical { levels, .. } => {
            let _ = write!(s, "{}: categorical{{{}}}", c.name(), levels.join(","));
        }
        ColumnData::Numeric(v) => {
            let present: Vec<f64> = v.iter().flatten().copied().collect();
            if present.is_empty() {
                let _ = write!(s, "{}: numeric[]", c.name());
            } else {
                let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let _ = write!(s, "{}: numeric[{lo},{hi}]", c.name());
            }
        }
    }
    s
}

/// Builds a frame from `(name, cells)` pairs of text, typing each column the
/// same way [`read_csv`] does. Handy for tests and inline tables.
pub fn from_text_columns(cols: &[(&str, &[&str])]) -> Result<DataFrame, DataError> {
    let mut csv = String::new();
    let names: Vec<String> = cols.iter().map(|(n, _)| quote_field(n)).collect();
    csv.push_str(&names.join(","));
    csv.push('\n');
    let n = cols.first().map_or(0, |(_, v)| v.len());
    for r in 0..n {
        let row: Vec<String> = cols
            .iter()
            .map(|(_, v)| v.get(r).copied().unwrap_or("").to_string())
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    read_csv(csv.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEX_PITCH: &[u8] =
        b"sex,pitch\nfemale,233\nfemale,204\nfemale,242\nmale,130\nmale,112\nmale,142\n";

    #[test]
    fn reads_sex_pitch_table() {
        let df = read_csv(SEX_PITCH).unwrap();
        assert_eq!(df.n_rows(), 6);
        let sex = df.column("sex").unwrap();
        assert_eq!(sex.levels().unwrap(), ["female", "male"]);
        let pitch = df.column("pitch").unwrap().as_numeric().unwrap();
        let v: Vec<f64> = pitch.iter().map(|x| x.unwrap()).collect();
        assert_eq!(v, [233.0, 204.0, 242.0, 130.0, 112.0, 142.0]);
        assert!(missing_report(&df).is_empty());
        assert_eq!(describe_column(sex), "sex: categorical{female,male}");
        assert_eq!(
            describe_column(df.column("pitch").unwrap()),
            "pitch: numeric[112,242]"
        );
    }

    #[test]
    fn header_only_is_empty_error() {
        assert_eq!(read_csv(b"a,b\n"), Err(DataError::Empty));
        assert_eq!(read_csv(b""), Err(DataError::Empty));
    }

    #[test]
    fn ragged_and_duplicate_header() {
        assert_eq!(
            read_csv(b"a,b\n1,2\n3\n"),
            Err(DataError::RaggedRow {
                row: 2,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            read_csv(b"a,a\n1,2\n"),
            Err(DataError::DuplicateColumn("a".into()))
        );
    }

    #[test]
    fn quoting_crlf_and_missing_tokens() {
        let df = read_csv(b"name,y\r\n\"a,b\",1\r\n\"say \"\"hi\"\"\",NA\r\nc,\r\n").unwrap();
        let name = df.column("name").unwrap();
        assert_eq!(name.levels().unwrap(), ["a,b", "c", "say \"hi\""]);
        let report = missing_report(&df);
        assert_eq!(
            report,
            [
                MissingCell {
                    row: 2,
                    column: "y".into()
                },
                MissingCell {
                    row: 3,
                    column: "y".into()
                }
            ]
        );
        assert!(df.column("y").unwrap().is_numeric());
    }

    #[test]
    fn numeric_detection() {
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("-.5"), Some(-0.5));
        assert_eq!(parse_number("3."), Some(3.0));
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("NaN"), None);
        assert_eq!(parse_number("1e"), None);
        assert_eq!(parse_number("."), None);
        let df = read_csv(b"x\n1\nfoo\n").unwrap();
        assert!(!df.column("x").unwrap().is_numeric());
    }

    #[test]
    fn missing_row_two() {
        let df = read_csv(b"x,y\n1,1\n2,NA\n3,3\n").unwrap();
        assert_eq!(
            missing_report(&df),
            [MissingCell {
                row: 2,
                column: "y".into()
            }]
        );
    }

    #[test]
    fn centering_age() {
        let df = DataFrame::new(vec![Column::from_values(
            "age",
            &[14.0, 23.0, 35.0, 48.0, 52.0, 67.0],
        )])
        .unwrap();
        let out = derive_center(&df, "age").unwrap();
        let c: Vec<f64> = out.column("age.c").unwrap().as_numeric().unwrap()
            .iter()
            .map(|v| v.unwrap())
            .collect();
        let mean = 239.0 / 6.0;
        let expect = [14.0, 23.0, 35.0, 48.0, 52.0, 67.0].map(|a| a - mean);
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((c[0] + 25.8333).abs() < 1e-4 && (c[5] - 27.1667).abs() < 1e-4);
        // original untouched
        assert_eq!(out.column("age"), df.column("age"));
    }

    #[test]
    fn centering_constant_and_errors() {
        let df = DataFrame::new(vec![
            Column::from_values("k", &[5.0, 5.0, 5.0]),
            Column::categorical("g", &[Some("a"), Some("b"), None]),
            Column::numeric("m", vec![None, None, None]),
        ])
        .unwrap();
        let out = derive_center(&df, "k").unwrap();
        assert_eq!(
            out.column("k.c").unwrap().as_numeric().unwrap(),
            [Some(0.0); 3]
        );
        assert_eq!(derive_center(&df, "g"), Err(DataError::NotNumeric("g".into())));
        assert_eq!(derive_center(&df, "m"), Err(DataError::AllMissing("m".into())));
        assert_eq!(
            derive_center(&df, "zz"),
            Err(DataError::UnknownColumn("zz".into()))
        );
    }

    #[test]
    fn transforms() {
        let e = core::f64::consts::E;
        let df = DataFrame::new(vec![
            Column::from_values("a", &[1.0, 2.0, 3.0]),
            Column::from_values("b", &[1.0, e, e * e]),
            Column::from_values("c", &[1.0, 0.0, 2.0]),
        ])
        .unwrap();
        let sq = derive_transform(&df, "a", Transform::Square).unwrap();
        assert_eq!(
            sq.column("a.sq").unwrap().as_numeric().unwrap(),
            [Some(1.0), Some(4.0), Some(9.0)]
        );
        let lg = derive_transform(&df, "b", Transform::Log).unwrap();
        let v = lg.column("b.log").unwrap().as_numeric().unwrap();
        for (x, want) in v.iter().zip([0.0, 1.0, 2.0]) {
            assert!((x.unwrap() - want).abs() < 1e-15);
        }
        assert_eq!(
            derive_transform(&df, "c", Transform::Log),
            Err(DataError::NonPositiveLog {
                column: "c".into(),
                row: 2,
                value: 0.0
            })
        );
    }

    #[test]
    fn hinges() {
        assert_eq!(five_number(&[1.0, 2.0, 3.0, 4.0]).unwrap(), [1.0, 1.5, 2.5, 3.5, 4.0]);
        assert_eq!(five_number(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap(), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(five_number(&[7.0]).unwrap(), [7.0; 5]);
    }

    #[test]
    fn grouped_summaries() {
        let df = read_csv(b"g,h,y\na,x,1\na,x,2\na,x,3\na,x,4\na,x,5\nb,x,10\nb,y,NA\n,x,3\n").unwrap();
        let g = group_stats(&df, "y", &["g", "h"]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].labels, ["a", "x"]);
        assert_eq!((g[0].min, g[0].median, g[0].max, g[0].n), (1.0, 3.0, 5.0, 5));
        assert_eq!(g[1].labels, ["b", "x"]);
        assert_eq!(
            group_stats(&df, "g", &["h"]),
            Err(DataError::NotNumeric("g".into()))
        );
    }
}
