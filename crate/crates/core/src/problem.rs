//! The text problem format read by the `gkz` binary.
//!
//! A problem is a sequence of `key = value` lines:
//!
//! ```text
//! A = 2 3
//! beta = 1/2
//! point = 1
//! s = 1, 5/4, 3/2
//! M = 100
//! box = 24 24
//! ```
//!
//! Blank lines and `#` comments are skipped. `A` and `beta` are required;
//! everything else falls back to defaults. All numbers are exact integers or
//! fractions — decimal literals are rejected so that no rounding can sneak
//! into the exact pipeline through the front door. `point` is either the
//! keyword `origin` or a nonzero rational ε naming the axis point (ε, 0);
//! `s` accepts `inf`/`∞` alongside rationals ≥ 1.

use std::fmt;

use serde::Serialize;

use crate::ext::PointSpec;
use crate::gevrey::SValue;
use crate::rational::{ParseRationalError, Rational};
use crate::solvers::BasePoint;
use crate::weyl::validate_pair;

/// Named rule quoted when the system matrix is rejected.
pub const RULE_PAIR: &str = "0 < a < b with gcd(a,b) = 1";
/// Named rule quoted when the base point degenerates to the origin.
pub const RULE_EPSILON: &str = "epsilon != 0";
/// Named rule quoted when a Gevrey order below 1 is requested.
pub const RULE_S_RANGE: &str = "s >= 1";

/// Why a problem text was rejected.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProblemError {
    /// Malformed text: bad line structure, an unknown or repeated key, or an
    /// unparseable value. Line and column are 1-based and point at the
    /// offending character.
    Parse { line: usize, col: usize, message: String },
    /// Well-formed text whose values break one of the named rules above.
    Constraint { rule: &'static str, detail: String },
    /// A required key never appeared.
    Missing { key: &'static str },
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::Parse { line, col, message } => {
                write!(f, "line {line}, column {col}: {message}")
            }
            ProblemError::Constraint { rule, detail } => {
                write!(f, "constraint violated ({rule}): {detail}")
            }
            ProblemError::Missing { key } => write!(f, "missing required key `{key}`"),
        }
    }
}

impl std::error::Error for ProblemError {}

/// The default order grid {1, 9/8, 5/4, 11/8, 3/2, 7/4, 2}; it brackets the
/// index b/a of every small system and includes the convergent end s = 1.
pub fn default_s_grid() -> Vec<SValue> {
    [(1, 1), (9, 8), (5, 4), (11, 8), (3, 2), (7, 4), (2, 1)]
        .into_iter()
        .map(|(p, q)| SValue::finite(Rational::new(p, q)))
        .collect()
}

/// A fully resolved problem: system data plus every tuning knob the
/// commands read.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct ProblemSpec {
    pub a: i64,
    pub b: i64,
    pub beta: Rational,
    /// Where point-local computations anchor. Defaults to (1, 0).
    pub point: PointSpec,
    /// Gevrey orders the order-sensitive commands sweep over.
    pub s_values: Vec<SValue>,
    /// Ray truncation order for series construction.
    #[serde(rename = "M")]
    pub m: i64,
    /// Jet box (n₁, n₂) for the dimension oracle.
    #[serde(rename = "box")]
    pub jet_box: (i64, i64),
}

impl ProblemSpec {
    /// A problem with every optional field at its default: point (1, 0),
    /// the default s-grid, M = 100, box = (24, 24).
    pub fn new(a: i64, b: i64, beta: Rational) -> Result<ProblemSpec, ProblemError> {
        checked_pair(a, b)?;
        Ok(ProblemSpec {
            a,
            b,
            beta,
            point: PointSpec::Axis(BasePoint::new(Rational::one())),
            s_values: default_s_grid(),
            m: 100,
            jet_box: (24, 24),
        })
    }
}

fn checked_pair(a: i64, b: i64) -> Result<(), ProblemError> {
    validate_pair(a, b).map_err(|e| ProblemError::Constraint {
        rule: RULE_PAIR,
        detail: e.to_string(),
    })
}

/// 1-based column (in characters, not bytes) of byte offset `byte` in `raw`.
fn col_at(raw: &str, byte: usize) -> usize {
    raw[..byte].chars().count() + 1
}

/// The non-whitespace tokens of `value` with their 1-based columns, where
/// `value` itself starts at column `value_col` of the original line.
fn tokens_with_cols(value: &str, value_col: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = value_col;
    let mut start: Option<(usize, usize)> = None; // (byte, col)
    for (i, c) in value.char_indices() {
        if c.is_whitespace() {
            if let Some((sb, sc)) = start.take() {
                out.push((sc, &value[sb..i]));
            }
        } else if start.is_none() {
            start = Some((i, col));
        }
        col += 1;
    }
    if let Some((sb, sc)) = start {
        out.push((sc, &value[sb..]));
    }
    out
}

fn parse_err(line: usize, col: usize, message: impl Into<String>) -> ProblemError {
    ProblemError::Parse { line, col, message: message.into() }
}

/// Parses one exact rational, pointing the error column into the token —
/// at the offending character when there is a specific one (the decimal
/// point of `0.5`, say), at the token start otherwise.
fn rational_at(tok: &str, line: usize, col: usize) -> Result<Rational, ProblemError> {
    tok.parse::<Rational>().map_err(|e| {
        let offset = match &e {
            ParseRationalError::InvalidCharacter(c) => {
                tok.chars().position(|t| t == *c).unwrap_or(0)
            }
            _ => 0,
        };
        parse_err(line, col + offset, e.to_string())
    })
}

/// A digits-only natural number (no sign, no fraction).
fn integer_at(tok: &str, line: usize, col: usize) -> Result<i64, ProblemError> {
    if tok.is_empty() || !tok.chars().all(|c| c.is_ascii_digit()) {
        return Err(parse_err(line, col, format!("expected an integer, found `{tok}`")));
    }
    tok.parse::<i64>()
        .map_err(|_| parse_err(line, col, format!("integer `{tok}` is out of range")))
}

/// Exactly two integers, as in `A = 2 3` or `box = 24 24`.
fn integer_pair_at(
    key: &str,
    toks: &[(usize, &str)],
    line: usize,
    col: usize,
) -> Result<(i64, i64), ProblemError> {
    if toks.len() != 2 {
        return Err(parse_err(
            line,
            col,
            format!("`{key}` takes exactly two integers, found {}", toks.len()),
        ));
    }
    let first = integer_at(toks[0].1, line, toks[0].0)?;
    let second = integer_at(toks[1].1, line, toks[1].0)?;
    Ok((first, second))
}

/// Comma-separated Gevrey orders: rationals ≥ 1 or `inf`/`∞`.
fn s_list_at(value: &str, line: usize, value_col: usize) -> Result<Vec<SValue>, ProblemError> {
    let mut out = Vec::new();
    let mut col = value_col;
    for piece in value.split(',') {
        let lead = piece.chars().take_while(|c| c.is_whitespace()).count();
        let tok = piece.trim();
        let tok_col = col + lead;
        if tok.is_empty() {
            return Err(parse_err(line, tok_col, "empty entry in s list"));
        }
        let s = if tok == "inf" || tok == "∞" {
            SValue::Infinity
        } else {
            let r = rational_at(tok, line, tok_col)?;
            if r < Rational::one() {
                return Err(ProblemError::Constraint {
                    rule: RULE_S_RANGE,
                    detail: format!("s = {r} is below 1"),
                });
            }
            SValue::Finite(r)
        };
        out.push(s);
        col += piece.chars().count() + 1; // the skipped comma
    }
    Ok(out)
}

/// Parses the `key = value` problem format. See the module docs for the
/// grammar; `A` and `beta` are required, the rest defaults.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ProblemError> {
    let mut pair: Option<(i64, i64)> = None;
    let mut beta: Option<Rational> = None;
    let mut point: Option<PointSpec> = None;
    let mut s_values: Option<Vec<SValue>> = None;
    let mut m: Option<i64> = None;
    let mut jet_box: Option<(i64, i64)> = None;

    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let stripped = raw.trim();
        if stripped.is_empty() || stripped.starts_with('#') {
            continue;
        }
        let key_start = raw.find(|c: char| !c.is_whitespace()).expect("line is non-empty");
        let eq = match raw.find('=') {
            Some(eq) if eq > key_start => eq,
            Some(eq) => return Err(parse_err(line, col_at(raw, eq), "missing key before `=`")),
            None => {
                return Err(parse_err(line, col_at(raw, key_start), "expected `key = value`"))
            }
        };
        let key = raw[key_start..eq].trim_end();
        let key_col = col_at(raw, key_start);

        let after = &raw[eq + 1..];
        let lead = after.chars().take_while(|c| c.is_whitespace()).count();
        let value = after.trim();
        let value_col = col_at(raw, eq) + 1 + lead;
        if value.is_empty() {
            return Err(parse_err(line, value_col, format!("missing value for `{key}`")));
        }
        let toks = tokens_with_cols(value, value_col);

        let duplicate = match key {
            "A" => pair.is_some(),
            "beta" => beta.is_some(),
            "point" => point.is_some(),
            "s" => s_values.is_some(),
            "M" => m.is_some(),
            "box" => jet_box.is_some(),
            _ => {
                return Err(parse_err(
                    line,
                    key_col,
                    format!("unknown key `{key}` (expected A, beta, point, s, M, box)"),
                ))
            }
        };
        if duplicate {
            return Err(parse_err(line, key_col, format!("duplicate key `{key}`")));
        }

        match key {
            "A" => {
                let (a, b) = integer_pair_at(key, &toks, line, value_col)?;
                checked_pair(a, b)?;
                pair = Some((a, b));
            }
            "beta" => beta = Some(rational_at(value, line, value_col)?),
            "point" => {
                point = Some(if value == "origin" {
                    PointSpec::Origin
                } else {
                    let eps = rational_at(value, line, value_col)?;
                    if eps.is_zero() {
                        return Err(ProblemError::Constraint {
                            rule: RULE_EPSILON,
                            detail: "a base point (ε, 0) on the axis needs ε ≠ 0; \
                                     write `point = origin` for the origin"
                                .into(),
                        });
                    }
                    PointSpec::Axis(BasePoint::new(eps))
                });
            }
            "s" => s_values = Some(s_list_at(value, line, value_col)?),
            "M" => m = Some(integer_at(value, line, value_col)?),
            "box" => jet_box = Some(integer_pair_at(key, &toks, line, value_col)?),
            _ => unreachable!("unknown keys were rejected above"),
        }
    }

    let (a, b) = pair.ok_or(ProblemError::Missing { key: "A" })?;
    let beta = beta.ok_or(ProblemError::Missing { key: "beta" })?;
    let mut spec = ProblemSpec::new(a, b, beta)?;
    if let Some(p) = point {
        spec.point = p;
    }
    if let Some(s) = s_values {
        spec.s_values = s;
    }
    if let Some(m) = m {
        spec.m = m;
    }
    if let Some(bx) = jet_box {
        spec.jet_box = bx;
    }
    Ok(spec)
}

/// Renders a problem in the exact format [`parse_problem`] reads;
/// `parse_problem(&render_problem(&spec))` reproduces `spec`.
pub fn render_problem(spec: &ProblemSpec) -> String {
    debug_assert!(!spec.s_values.is_empty(), "an empty s list does not round-trip");
    let point = match &spec.point {
        PointSpec::Origin => "origin".to_string(),
        PointSpec::Axis(p) => p.epsilon().to_string(),
    };
    let s = spec
        .s_values
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "A = {} {}\nbeta = {}\npoint = {}\ns = {}\nM = {}\nbox = {} {}\n",
        spec.a, spec.b, spec.beta, point, s, spec.m, spec.jet_box.0, spec.jet_box.1
    )
}
