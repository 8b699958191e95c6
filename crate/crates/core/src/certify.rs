//! Exact evaluation of `C` for an explicit coefficient list.
//!
//! The autoconvolution of a step function is piecewise linear, so with the
//! heights taken as exact rationals all three norms are exact rationals too:
//! the quadratic-form quadrature is the exact integral of a squared linear
//! segment, the Riemann sum of the knot values is the exact `L1` integral, and
//! the maximum sits on a knot. Scaling all heights by a common denominator `D`
//! and dropping `dx` both cancel in the ratio, which leaves
//!
//! ```text
//! C = Q / (3 * S * M),   Q = sum over padded pairs (a^2 + ab + b^2), S = sum conv, M = max conv
//! ```
//!
//! evaluated on the integer convolution of the scaled heights.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::coeffs::{parse_numeral, parse_tokens, read_text, with_path, Numeral};
use crate::error::{Error, Result};

/// Exact heights alongside the decimal strings they were read from.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalHeights {
    pub values: Vec<BigRational>,
    pub source_digits: Vec<String>,
}

impl RationalHeights {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn from_integers(values: &[u64]) -> Self {
        Self {
            values: values
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect(),
            source_digits: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    /// Exact dyadic values of nonnegative doubles.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        let values = values
            .iter()
            .map(|&v| {
                if v.is_finite() && v >= 0.0 {
                    Ok(BigRational::from_float(v).unwrap_or_default())
                } else {
                    Err(Error::InvalidInput(format!(
                        "height {v} is not a finite nonnegative double"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source_digits: values.iter().map(|v| v.to_string()).collect(),
            values,
        })
    }

    /// Every value multiplied by `factor`; source strings are re-rendered as fractions.
    pub fn scaled(&self, factor: &BigRational) -> Self {
        let values: Vec<BigRational> = self.values.iter().map(|v| v * factor).collect();
        Self {
            source_digits: values.iter().map(|v| v.to_string()).collect(),
            values,
        }
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.values.reverse();
        out.source_digits.reverse();
        out
    }
}

fn numeral_to_rational(n: &Numeral) -> BigRational {
    let mantissa = BigInt::parse_bytes(n.digits.as_bytes(), 10).unwrap_or_default();
    let shift = n.exponent - n.fraction_len as i64;
    let ten = BigInt::from(10u32);
    let mut r = if shift >= 0 {
        BigRational::from_integer(mantissa * Pow::pow(&ten, shift as u64))
    } else {
        BigRational::new(mantissa, Pow::pow(&ten, shift.unsigned_abs()))
    };
    if n.negative {
        r = -r;
    }
    r
}

/// Parses one decimal numeral exactly (`".926"` is `463/500`).
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    parse_numeral(s)
        .map(|n| numeral_to_rational(&n))
        .map_err(|reason| Error::Parse {
            line: 1,
            index: 1,
            token: s.to_string(),
            reason,
        })
}

pub fn parse_decimal_heights(text: &str) -> Result<RationalHeights> {
    let parsed = parse_tokens(text)?;
    if parsed.is_empty() {
        return Err(Error::InvalidInput("no coefficients found".into()));
    }
    let (values, source_digits) = parsed
        .into_iter()
        .map(|(tok, num)| (numeral_to_rational(&num), tok.text.to_string()))
        .unzip();
    Ok(RationalHeights {
        values,
        source_digits,
    })
}

/// Exact `(||F||_2^2, ||F||_1, ||F||_inf)` of the true autoconvolution knots on
/// a support of width 1/2, i.e. with `dx = 1/(2N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactNorms {
    pub l2_squared: BigRational,
    pub l1: BigRational,
    pub linf: BigRational,
    pub argmax: usize,
}

impl ExactNorms {
    pub fn ratio(&self) -> BigRational {
        &self.l2_squared / (&self.l1 * &self.linf)
    }
}

/// Integer heights `h_i * D` for the least common denominator `D`.
fn integer_heights(h: &RationalHeights) -> (Vec<BigUint>, BigUint) {
    let den = h
        .values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints = h
        .values
        .iter()
        .map(|v| {
            let scaled = v.numer() * (&den / v.denom());
            scaled.to_biguint().unwrap_or_default()
        })
        .collect();
    (ints, den.to_biguint().unwrap_or_else(BigUint::one))
}

/// Full self-convolution of nonnegative integers. Uses `u128` when the sums
/// provably fit, arbitrary precision otherwise. Exact either way, so the
/// parallel split has no effect on the result.
pub fn exact_self_convolution(h: &[BigUint]) -> Vec<BigUint> {
    let n = h.len();
    if n == 0 {
        return Vec::new();
    }
    let m = 2 * n - 1;
    let max_bits = h.iter().map(|v| v.bits()).max().unwrap_or(0);
    let count_bits = 64 - (n as u64).leading_zeros() as u64;
    if max_bits <= 63 && 2 * max_bits + count_bits <= 127 {
        let small: Vec<u128> = h.iter().map(|v| v.to_u64().unwrap_or(0) as u128).collect();
        (0..m)
            .into_par_iter()
            .map(|k| {
                let lo = k.saturating_sub(n - 1);
                let hi = k.min(n - 1);
                let s: u128 = (lo..=hi).map(|i| small[i] * small[k - i]).sum();
                BigUint::from(s)
            })
            .collect()
    } else {
        (0..m)
            .into_par_iter()
            .map(|k| {
                let lo = k.saturating_sub(n - 1);
                let hi = k.min(n - 1);
                (lo..=hi).fold(BigUint::zero(), |acc, i| acc + &h[i] * &h[k - i])
            })
            .collect()
    }
}

struct IntegerNorms {
    /// Sum over padded consecutive pairs of `a^2 + ab + b^2`.
    q: BigUint,
    sum: BigUint,
    max: BigUint,
    argmax: usize,
}

fn integer_norms(conv: &[BigUint]) -> IntegerNorms {
    let zero = BigUint::zero();
    let mut q = BigUint::zero();
    let padded = std::iter::once(&zero)
        .chain(conv)
        .chain(std::iter::once(&zero));
    let mut prev = &zero;
    for (i, cur) in padded.enumerate() {
        if i > 0 {
            q += prev * prev + prev * cur + cur * cur;
        }
        prev = cur;
    }
    let mut argmax = 0;
    for (i, v) in conv.iter().enumerate() {
        if v > &conv[argmax] {
            argmax = i;
        }
    }
    IntegerNorms {
        q,
        sum: conv.iter().sum(),
        max: conv.get(argmax).cloned().unwrap_or_default(),
        argmax,
    }
}

fn to_rational(v: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Norms with `dx` and the true knot scaling carried explicitly.
pub fn exact_norms(h: &RationalHeights) -> Result<ExactNorms> {
    let (ints, den) = integer_heights(h);
    if ints.iter().all(|v| v.is_zero()) {
        return Err(Error::Degenerate);
    }
    let n = ints.len();
    let conv = exact_self_convolution(&ints);
    let IntegerNorms {
        q,
        sum,
        max,
        argmax,
    } = integer_norms(&conv);
    let d2 = to_rational(&den * &den);
    let dx = BigRational::new(BigInt::one(), BigInt::from(2 * n));
    // Unnormalized conv / D^2 is the exact conv of the rational heights.
    Ok(ExactNorms {
        l2_squared: &dx / BigRational::from_integer(3.into()) * to_rational(q) / (&d2 * &d2),
        l1: &dx * to_rational(sum) / &d2,
        linf: to_rational(max) / d2,
        argmax,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub c_exact: BigRational,
    /// `c_exact` rounded down to 12 decimals.
    pub c_decimal: String,
    pub claimed_bound: BigRational,
    /// The bound as the user wrote it.
    pub claimed_bound_source: String,
    pub passes: bool,
    pub n_intervals: usize,
    pub argmax_index: usize,
    /// `c_exact <= 1`, checked exactly.
    pub holder_ok: bool,
}

/// Decimal expansion of a nonnegative rational, truncated to `digits` places.
pub fn render_decimal(r: &BigRational, digits: usize) -> String {
    let scale: BigInt = Pow::pow(&BigInt::from(10u32), digits as u64);
    let scaled = (r * BigRational::from_integer(scale)).floor().to_integer();
    let negative = scaled < BigInt::zero();
    let s = scaled.magnitude().to_string();
    let s = if s.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
    } else {
        s
    };
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Exact `C` in the cancelled form `Q / (3 S M)`.
pub fn exact_c(h: &RationalHeights) -> Result<(BigRational, usize)> {
    let (ints, _) = integer_heights(h);
    if ints.iter().all(|v| v.is_zero()) {
        return Err(Error::Degenerate);
    }
    let conv = exact_self_convolution(&ints);
    let IntegerNorms {
        q,
        sum,
        max,
        argmax,
    } = integer_norms(&conv);
    let den = BigInt::from(sum * max * 3u32);
    Ok((BigRational::new(BigInt::from(q), den), argmax))
}

pub fn exact_objective(
    h: &RationalHeights,
    claimed_bound: &BigRational,
    claimed_bound_source: &str,
) -> Result<Certificate> {
    if h.values.iter().any(|v| v < &BigRational::zero()) {
        return Err(Error::InvalidInput("negative height in exact input".into()));
    }
    let (c_exact, argmax_index) = exact_c(h)?;
    Ok(Certificate {
        c_decimal: render_decimal(&c_exact, 12),
        passes: &c_exact >= claimed_bound,
        holder_ok: c_exact <= BigRational::one(),
        claimed_bound: claimed_bound.clone(),
        claimed_bound_source: claimed_bound_source.to_string(),
        n_intervals: h.len(),
        argmax_index,
        c_exact,
    })
}

/// Reads a coefficient file and certifies `C >= bound` exactly.
pub fn verify_claim(heights_file: &Path, bound: &str) -> Result<Certificate> {
    let text = read_text(heights_file)?;
    let heights = parse_decimal_heights(&text).map_err(|e| with_path(heights_file, e))?;
    let claimed = parse_decimal(bound)?;
    exact_objective(&heights, &claimed, bound)
}

impl Certificate {
    /// `key = value` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_intervals = {}", self.n_intervals);
        let _ = writeln!(out, "c_decimal = {}", self.c_decimal);
        let _ = writeln!(out, "c_exact = {}", self.c_exact);
        let _ = writeln!(out, "claimed_bound = {}", self.claimed_bound_source);
        let _ = writeln!(out, "claimed_bound_exact = {}", self.claimed_bound);
        let _ = writeln!(out, "argmax_index = {}", self.argmax_index);
        let _ = writeln!(out, "holder_ok = {}", self.holder_ok);
        let _ = writeln!(out, "passes = {}", self.passes);
        out
    }
}
