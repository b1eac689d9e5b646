//! The model-formula language.
//!
//! ```text
//! formula   := ident? '~' rhs
//! rhs       := item ('+' item)*
//! item      := product | '(' slope_sum '|' ident ')'
//! product   := atom (('*' | ':') atom)*
//! atom      := '1' | ident
//! slope_sum := ('1' | ident) ('+' ('1' | ident))*
//! ```
//!
//! `a*b` expands to `a + b + a:b`. The intercept is always present; `0` and
//! `-1` suppression, nested (`g1/g2`) and uncorrelated (`||`) random terms
//! are rejected.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// A fixed or random-slope term: a sorted set of variable names.
/// The empty set is the intercept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    vars: Vec<String>,
}

impl Term {
    pub fn intercept() -> Self {
        Self { vars: Vec::new() }
    }

    pub fn new<S: AsRef<str>>(vars: &[S]) -> Self {
        let mut vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_owned()).collect();
        vars.sort_unstable();
        vars.dedup();
        Self { vars }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn is_intercept(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of variables (0 for the intercept, 1 for a main effect).
    pub fn order(&self) -> usize {
        self.vars.len()
    }

    fn union(&self, other: &Term) -> Term {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        vars.sort_unstable();
        vars.dedup();
        Term { vars }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vars.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&self.vars.join(":"))
        }
    }
}

/// A parenthesized random-effect term `(1 + a | g)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    /// Always starts with the intercept.
    pub slope_terms: Vec<Term>,
    pub grouping: String,
}

impl RandomSpec {
    /// Variables with a per-group slope (intercept excluded).
    pub fn slope_vars(&self) -> impl Iterator<Item = &str> {
        self.slope_terms
            .iter()
            .filter(|t| !t.is_intercept())
            .flat_map(|t| t.vars().iter().map(String::as_str))
    }

    pub fn has_slopes(&self) -> bool {
        self.slope_terms.len() > 1
    }
}

impl fmt::Display for RandomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, t) in self.slope_terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, " | {})", self.grouping)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaAst {
    pub response: Option<String>,
    /// Intercept first, then main effects in user order, then interactions.
    pub fixed_terms: Vec<Term>,
    pub random_specs: Vec<RandomSpec>,
}

impl FormulaAst {
    /// All variable names used by fixed terms, in first-appearance order.
    pub fn fixed_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.fixed_terms {
            for v in t.vars() {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn has_interactions(&self) -> bool {
        self.fixed_terms.iter().any(|t| t.order() >= 2)
    }
}

impl fmt::Display for FormulaAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_formula(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("formula parse error at byte {offset}: {kind}")]
pub struct FormulaError {
    pub offset: usize,
    pub kind: FormulaErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaErrorKind {
    #[error("expected `~`")]
    ExpectedTilde,
    #[error("empty right-hand side")]
    EmptyRhs,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("intercept suppression (`0` or `-1`) is not supported")]
    InterceptSuppression,
    #[error("random-effect term is missing its `| grouping` name")]
    MissingGrouping,
    #[error("unsupported syntax: {0}")]
    Unsupported(&'static str),
    #[error("grouping variable `{0}` also appears as a slope")]
    GroupingIsSlope(String),
    #[error("unexpected {0}")]
    Unexpected(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Tilde,
    Plus,
    Minus,
    Star,
    Colon,
    LParen,
    RParen,
    Bar,
    DoubleBar,
    Slash,
    Other(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::DoubleBar => f.write_str("`||`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Other(c) => write!(f, "character `{c}`"),
            Tok::End => f.write_str("end of formula"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '.'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '.' || c == '_'
}

fn tokenize(text: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some((i, c)) = it.next() {
        let tok = match c {
            c if c.is_whitespace() => continue,
            '~' => Tok::Tilde,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            ':' => Tok::Colon,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '/' => Tok::Slash,
            '|' => {
                if matches!(it.peek(), Some((_, '|'))) {
                    it.next();
                    Tok::DoubleBar
                } else {
                    Tok::Bar
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::from(c);
                while let Some(&(_, d)) = it.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        s.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                Tok::Number(s)
            }
            c if is_ident_start(c) => {
                let mut s = String::from(c);
                while let Some(&(_, d)) = it.peek() {
                    if is_ident_char(d) {
                        s.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => Tok::Other(other),
        };
        out.push((i, tok));
    }
    out.push((text.len(), Tok::End));
    out
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

type PResult<T> = Result<T, FormulaError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, kind: FormulaErrorKind) -> PResult<T> {
        Err(FormulaError {
            offset: self.offset(),
            kind,
        })
    }

    fn unexpected<T>(&self) -> PResult<T> {
        match self.peek() {
            Tok::RParen => self.err(FormulaErrorKind::Unbalanced),
            Tok::Minus => self.err(FormulaErrorKind::InterceptSuppression),
            Tok::Slash => self.err(FormulaErrorKind::Unsupported("nested random effects (`/`)")),
            Tok::DoubleBar => self.err(FormulaErrorKind::Unsupported(
                "uncorrelated random effects (`||`)",
            )),
            t => {
                let msg = alloc::format!("{t}");
                self.err(FormulaErrorKind::Unexpected(msg))
            }
        }
    }

    /// `'1'` → intercept, identifier → main effect; `0` is rejected.
    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Term::new(&[s]))
            }
            Tok::Number(n) => {
                if n == "1" {
                    self.bump();
                    Ok(Term::intercept())
                } else if n == "0" {
                    self.err(FormulaErrorKind::InterceptSuppression)
                } else {
                    self.unexpected()
                }
            }
            Tok::End => self.err(FormulaErrorKind::EmptyRhs),
            _ => self.unexpected(),
        }
    }

    /// `atom (':' atom)*`, a single term.
    fn interaction(&mut self) -> PResult<Term> {
        let mut term = self.atom()?;
        while *self.peek() == Tok::Colon {
            self.bump();
            term = term.union(&self.atom()?);
        }
        Ok(term)
    }

    /// `interaction ('*' interaction)*` expanded into its terms.
    fn product(&mut self) -> PResult<Vec<Term>> {
        let mut terms = vec![self.interaction()?];
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.interaction()?;
            let crossed: Vec<Term> = terms.iter().map(|t| t.union(&rhs)).collect();
            terms.push(rhs);
            terms.extend(crossed);
        }
        Ok(terms)
    }

    fn random(&mut self) -> PResult<RandomSpec> {
        let open = self.offset();
        self.bump(); // '('
        let mut slope_terms = vec![Term::intercept()];
        loop {
            let t = match self.peek().clone() {
                Tok::Ident(s) => {
                    self.bump();
                    Term::new(&[s])
                }
                Tok::Number(n) if n == "1" => {
                    self.bump();
                    Term::intercept()
                }
                Tok::Number(n) if n == "0" => {
                    return self.err(FormulaErrorKind::InterceptSuppression)
                }
                Tok::Bar => return self.err(FormulaErrorKind::EmptyRhs),
                Tok::End => {
                    return Err(FormulaError {
                        offset: open,
                        kind: FormulaErrorKind::Unbalanced,
                    })
                }
                _ => return self.unexpected(),
            };
            if !slope_terms.contains(&t) {
                slope_terms.push(t);
            }
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                }
                Tok::Bar => {
                    self.bump();
                    break;
                }
                Tok::RParen => return self.err(FormulaErrorKind::MissingGrouping),
                Tok::Star | Tok::Colon => {
                    return self.err(FormulaErrorKind::Unsupported(
                        "interactions inside random-effect terms",
                    ))
                }
                Tok::End => {
                    return Err(FormulaError {
                        offset: open,
                        kind: FormulaErrorKind::Unbalanced,
                    })
                }
                _ => return self.unexpected(),
            }
        }
        let grouping = match self.peek().clone() {
            Tok::Ident(g) => {
                self.bump();
                g
            }
            Tok::RParen | Tok::End => return self.err(FormulaErrorKind::MissingGrouping),
            _ => return self.unexpected(),
        };
        match self.peek() {
            Tok::RParen => {
                self.bump();
            }
            Tok::End => {
                return Err(FormulaError {
                    offset: open,
                    kind: FormulaErrorKind::Unbalanced,
                })
            }
            _ => return self.unexpected(),
        }
        let spec = RandomSpec {
            slope_terms,
            grouping,
        };
        if spec.slope_vars().any(|v| v == spec.grouping) {
            return Err(FormulaError {
                offset: open,
                kind: FormulaErrorKind::GroupingIsSlope(spec.grouping),
            });
        }
        Ok(spec)
    }

    fn formula(&mut self) -> PResult<FormulaAst> {
        let response = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Some(s)
            }
            _ => None,
        };
        if *self.peek() != Tok::Tilde {
            return self.err(FormulaErrorKind::ExpectedTilde);
        }
        self.bump();
        if *self.peek() == Tok::End {
            return self.err(FormulaErrorKind::EmptyRhs);
        }
        let mut fixed: Vec<Term> = Vec::new();
        let mut random: Vec<RandomSpec> = Vec::new();
        loop {
            match self.peek() {
                Tok::LParen => {
                    let spec = self.random()?;
                    if !random.contains(&spec) {
                        random.push(spec);
                    }
                }
                _ => {
                    for t in self.product()? {
                        if !fixed.contains(&t) {
                            fixed.push(t);
                        }
                    }
                }
            }
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                }
                Tok::End => break,
                _ => return self.unexpected(),
            }
        }
        // intercept first, then by interaction order; stable within an order
        fixed.retain(|t| !t.is_intercept());
        fixed.sort_by_key(Term::order);
        fixed.insert(0, Term::intercept());
        Ok(FormulaAst {
            response,
            fixed_terms: fixed,
            random_specs: random,
        })
    }
}

/// Parses formula text into a normalized AST.
pub fn parse_formula(text: &str) -> Result<FormulaAst, FormulaError> {
    let mut p = Parser {
        toks: tokenize(text),
        pos: 0,
    };
    p.formula()
}

/// Canonical text for an AST; `parse_formula` reads it back unchanged.
pub fn format_formula(ast: &FormulaAst) -> String {
    let mut parts: Vec<String> = ast
        .fixed_terms
        .iter()
        .filter(|t| !t.is_intercept())
        .map(|t| alloc::format!("{t}"))
        .collect();
    if parts.is_empty() {
        parts.push("1".into());
    }
    parts.extend(ast.random_specs.iter().map(|r| alloc::format!("{r}")));
    let rhs = parts.join(" + ");
    match &ast.response {
        Some(r) => alloc::format!("{r} ~ {rhs}"),
        None => alloc::format!("~ {rhs}"),
    }
}
