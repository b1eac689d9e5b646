//! Report documents: one structure, rendered either as aligned text or JSON.

use serde_json::{Map, Value};

/// How a number is printed in text. JSON always carries full precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Four decimals, scientific below 1e-4.
    Fixed,
    /// Four significant digits, scientific below 1e-4 (probabilities).
    Sig,
    /// Caller-chosen decimals.
    Decimals(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64, Style),
    Int(i64),
    Bool(bool),
    /// Blank in text, `null` in JSON.
    Empty,
}

impl Cell {
    pub fn num(v: f64) -> Self {
        Cell::Num(v, Style::Fixed)
    }

    pub fn prob(v: f64) -> Self {
        Cell::Num(v, Style::Sig)
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn int(v: usize) -> Self {
        Cell::Int(v as i64)
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v, style) => format_number(*v, *style),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => if *b { "yes" } else { "no" }.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Cell::Num(..) | Cell::Int(_))
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Num(v, _) if v.is_finite() => Value::from(*v),
            Cell::Num(v, _) if v.is_nan() => Value::Null,
            Cell::Num(v, _) => Value::String(if *v > 0.0 { "inf" } else { "-inf" }.into()),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

pub fn format_number(v: f64, style: Style) -> String {
    if v.is_nan() {
        return "NA".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Inf" } else { "-Inf" }.into();
    }
    let small = v != 0.0 && v.abs() < 1e-4;
    match style {
        Style::Fixed | Style::Sig if small => format!("{v:.3e}"),
        Style::Fixed => format!("{v:.4}"),
        Style::Sig => {
            if v == 0.0 {
                return "0".into();
            }
            let digits = (3 - v.abs().log10().floor() as i32).max(0) as usize;
            format!("{v:.digits$}")
        }
        Style::Decimals(d) => format!("{v:.d$}"),
    }
}

/// Significance code for a p-value.
pub fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => ".",
        _ => "",
    }
}

pub const SIGNIF_LEGEND: &str = "Signif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// Text header; empty for a label column.
    pub header: String,
    /// JSON field name.
    pub key: String,
    /// Omitted from JSON (stars and similar decorations).
    pub text_only: bool,
}

impl Column {
    pub fn new(header: &str, key: &str) -> Self {
        Self { header: header.into(), key: key.into(), text_only: false }
    }

    pub fn decoration(header: &str) -> Self {
        Self { header: header.into(), key: String::new(), text_only: true }
    }
}

/// A line mixing literal text with keyed values.
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Text(String),
    Value { key: String, cell: Cell },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Content {
    Table { columns: Vec<Column>, rows: Vec<Vec<Cell>> },
    Lines(Vec<Vec<Piece>>),
    Paragraph(String),
    /// One-row table; a JSON object rather than an array.
    Record { columns: Vec<Column>, cells: Vec<Cell> },
    /// Square numeric matrix with row/column labels (lower triangle shown).
    Matrix { labels: Vec<String>, values: Vec<Vec<f64>> },
    /// Present only in JSON.
    Json(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// Heading printed above the content; may be empty.
    pub title: String,
    /// JSON key; sections without one appear only in text.
    pub key: Option<String>,
    pub content: Content,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDocument {
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Builds a line from alternating text and keyed values.
#[macro_export]
macro_rules! line {
    ($($piece:expr),* $(,)?) => { vec![$($crate::report::IntoPiece::into_piece($piece)),*] };
}

pub trait IntoPiece {
    fn into_piece(self) -> Piece;
}

impl IntoPiece for &str {
    fn into_piece(self) -> Piece {
        Piece::Text(self.to_string())
    }
}

impl IntoPiece for String {
    fn into_piece(self) -> Piece {
        Piece::Text(self)
    }
}

impl IntoPiece for (&str, Cell) {
    fn into_piece(self) -> Piece {
        Piece::Value { key: self.0.to_string(), cell: self.1 }
    }
}

impl ReportDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, title: &str, key: Option<&str>, content: Content) -> &mut Self {
        self.sections.push(Section {
            title: title.into(),
            key: key.map(Into::into),
            content,
        });
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
                s.push('\n');
                s
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            if !s.title.is_empty() {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&s.title);
                out.push('\n');
            }
            match &s.content {
                Content::Table { columns, rows } => out.push_str(&render_table(columns, rows)),
                Content::Lines(lines) => {
                    for l in lines {
                        for p in l {
                            match p {
                                Piece::Text(t) => out.push_str(t),
                                Piece::Value { cell, .. } => out.push_str(&cell.render()),
                            }
                        }
                        out.push('\n');
                    }
                }
                Content::Paragraph(p) => {
                    out.push_str(p);
                    out.push('\n');
                }
                Content::Record { columns, cells } => out.push_str(&render_table(columns, core::slice::from_ref(cells))),
                Content::Matrix { labels, values } => out.push_str(&render_matrix(labels, values)),
                Content::Json(_) => {}
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        for s in &self.sections {
            let Some(key) = &s.key else { continue };
            let v = match &s.content {
                Content::Table { columns, rows } => Value::Array(
                    rows.iter()
                        .map(|r| Value::Object(record_json(columns, r)))
                        .collect(),
                ),
                Content::Lines(lines) => {
                    let mut obj = Map::new();
                    for p in lines.iter().flatten() {
                        if let Piece::Value { key, cell } = p {
                            obj.insert(key.clone(), cell.to_json());
                        }
                    }
                    Value::Object(obj)
                }
                Content::Paragraph(p) => Value::String(p.clone()),
                Content::Record { columns, cells } => Value::Object(record_json(columns, cells)),
                Content::Json(v) => v.clone(),
                Content::Matrix { labels, values } => {
                    let mut obj = Map::new();
                    obj.insert("labels".into(), labels.iter().map(|l| Value::String(l.clone())).collect());
                    obj.insert(
                        "values".into(),
                        values
                            .iter()
                            .map(|r| r.iter().map(|v| Cell::num(*v).to_json()).collect::<Value>())
                            .collect(),
                    );
                    Value::Object(obj)
                }
            };
            // repeated keys merge into one object
            match (root.get_mut(key), v) {
                (Some(Value::Object(existing)), Value::Object(more)) => existing.extend(more),
                (_, v) => {
                    root.insert(key.clone(), v);
                }
            }
        }
        Value::Object(root)
    }
}

fn record_json(columns: &[Column], cells: &[Cell]) -> Map<String, Value> {
    let mut obj = Map::new();
    for (c, cell) in columns.iter().zip(cells) {
        if !c.text_only {
            obj.insert(c.key.clone(), cell.to_json());
        }
    }
    obj
}

fn render_table(columns: &[Column], rows: &[Vec<Cell>]) -> String {
    let texts: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
    let widths: Vec<usize> = (0..columns.len())
        .map(|j| {
            texts
                .iter()
                .map(|r| r[j].chars().count())
                .chain([columns[j].header.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    // numeric columns right-aligned so decimals line up
    let numeric: Vec<bool> = (0..columns.len())
        .map(|j| rows.iter().any(|r| r[j].is_numeric()))
        .collect();
    let mut out = String::new();
    let mut push_row = |cells: Vec<&str>| {
        let mut line = String::new();
        for (j, c) in cells.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            let pad = widths[j] - c.chars().count();
            if numeric[j] {
                line.push_str(&" ".repeat(pad));
                line.push_str(c);
            } else {
                line.push_str(c);
                line.push_str(&" ".repeat(pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(columns.iter().map(|c| c.header.as_str()).collect());
    for r in &texts {
        push_row(r.iter().map(String::as_str).collect());
    }
    out
}

fn abbreviate(label: &str) -> String {
    if label == "(Intercept)" {
        return "(Intr)".into();
    }
    label.chars().take(6).collect()
}

fn render_matrix(labels: &[String], values: &[Vec<f64>]) -> String {
    let n = labels.len();
    if n < 2 {
        return String::new();
    }
    let mut columns = vec![Column::new("", "")];
    columns.extend(labels[..n - 1].iter().map(|l| Column::new(&abbreviate(l), "")));
    let rows: Vec<Vec<Cell>> = (1..n)
        .map(|i| {
            let mut r = vec![Cell::text(labels[i].clone())];
            for j in 0..n - 1 {
                r.push(if j < i { Cell::Num(values[i][j], Style::Decimals(3)) } else { Cell::Empty });
            }
            r
        })
        .collect();
    render_table(&columns, &rows)
}
