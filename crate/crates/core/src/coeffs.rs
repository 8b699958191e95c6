//! Coefficient text files: whitespace-separated nonnegative decimals, `#`
//! starts a comment that runs to the end of the line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stepfn::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// 1-based line number.
    pub line: usize,
    /// 1-based position among all tokens of the file.
    pub index: usize,
}

pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        for t in body.split_whitespace() {
            out.push(Token {
                text: t,
                line: ln + 1,
                index: out.len() + 1,
            });
        }
    }
    out
}

/// A syntactically valid decimal numeral, split into its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Numeral {
    pub negative: bool,
    /// All mantissa digits with the point removed, leading zeros kept.
    pub digits: String,
    /// Digits after the point in the mantissa.
    pub fraction_len: usize,
    pub exponent: i64,
}

impl Numeral {
    pub fn is_zero(&self) -> bool {
        self.digits.bytes().all(|b| b == b'0')
    }
}

/// Accepts `[+-]digits[.digits][e[+-]digits]`, including the leading-dot
/// (`.25`) and trailing-dot (`3.`) forms. Rejects `inf`, `nan` and hex.
pub fn parse_numeral(s: &str) -> std::result::Result<Numeral, String> {
    let (negative, rest) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match rest.find(['e', 'E']) {
        Some(p) => {
            let exp = &rest[p + 1..];
            let body = exp.strip_prefix(['+', '-']).unwrap_or(exp);
            if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
                return Err("malformed exponent".into());
            }
            let e: i64 = exp
                .parse()
                .map_err(|_| "exponent out of range".to_string())?;
            (&rest[..p], e)
        }
        None => (rest, 0),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err("no digits".into());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err("not a decimal numeral".into());
    }
    Ok(Numeral {
        negative,
        digits: format!("{int}{frac}"),
        fraction_len: frac.len(),
        exponent,
    })
}

/// Parses every token, checking the numeral grammar and nonnegativity.
pub fn parse_tokens<'a>(text: &'a str) -> Result<Vec<(Token<'a>, Numeral)>> {
    tokenize(text)
        .into_iter()
        .map(|tok| {
            let num = parse_numeral(tok.text).map_err(|reason| Error::Parse {
                line: tok.line,
                index: tok.index,
                token: tok.text.to_string(),
                reason,
            })?;
            if num.negative && !num.is_zero() {
                return Err(Error::NegativeHeight {
                    line: tok.line,
                    index: tok.index,
                    token: tok.text.to_string(),
                });
            }
            Ok((tok, num))
        })
        .collect()
}

/// Heights as doubles, each correctly rounded from its decimal string.
pub fn parse_heights(text: &str) -> Result<Vec<f64>> {
    let parsed = parse_tokens(text)?;
    if parsed.is_empty() {
        return Err(Error::InvalidInput("no coefficients found".into()));
    }
    parsed
        .into_iter()
        .map(|(tok, _)| {
            let v: f64 = tok.text.parse().map_err(|_| Error::Parse {
                line: tok.line,
                index: tok.index,
                token: tok.text.to_string(),
                reason: "not representable as a double".into(),
            })?;
            if v.is_finite() {
                Ok(v.max(0.0))
            } else {
                Err(Error::Parse {
                    line: tok.line,
                    index: tok.index,
                    token: tok.text.to_string(),
                    reason: "overflows a double".into(),
                })
            }
        })
        .collect()
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_step_function(path: &Path) -> Result<StepFunction> {
    let text = read_text(path)?;
    let heights = parse_heights(&text).map_err(|e| with_path(path, e))?;
    StepFunction::new(heights)
}

pub(crate) fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } => e,
        other => Error::Io {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    }
}

/// One height per line in shortest round-trip decimal form.
pub fn format_heights(heights: &[f64], header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    for h in heights {
        let _ = writeln!(out, "{h}");
    }
    out
}

pub fn write_step_function(path: &Path, h: &StepFunction, header: &[String]) -> Result<()> {
    std::fs::write(path, format_heights(h.heights(), header)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Converts a LaTeX `longtable` body (`&` column separators, `\\` row ends,
/// `\begin`/`\end` lines) into the coefficient format, one table row per line.
pub fn convert_appendix(text: &str) -> Result<String> {
    let mut out = String::new();
    let mut count = 0;
    for (ln, raw) in text.lines().enumerate() {
        let body = raw.split('%').next().unwrap_or("");
        let row: Vec<&str> = body
            .split(|c: char| c == '&' || c.is_whitespace())
            .filter(|t| !t.is_empty() && !t.starts_with('\\'))
            .collect();
        for t in &row {
            let num = parse_numeral(t).map_err(|reason| Error::Parse {
                line: ln + 1,
                index: count + 1,
                token: t.to_string(),
                reason,
            })?;
            if num.negative && !num.is_zero() {
                return Err(Error::NegativeHeight {
                    line: ln + 1,
                    index: count + 1,
                    token: t.to_string(),
                });
            }
            count += 1;
        }
        if !row.is_empty() {
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput("no coefficients found".into()));
    }
    Ok(out)
}
