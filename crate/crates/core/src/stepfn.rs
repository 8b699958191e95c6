//! Step functions, their discrete autoconvolution and the objective
//!
//! ```text
//! C(h) = ||f*f||_2^2 / (||f*f||_1 ||f*f||_inf)
//! ```
//!
//! A step function with `N` heights on `[-1/4, 1/4]` has a piecewise-linear
//! autoconvolution on `[-1/2, 1/2]` whose knot values are `w * conv_k`, where
//! `conv` is the full discrete self-convolution of the heights and `w` is the
//! interval width. Evaluation works with the unnormalized `conv` and the grid
//! spacing `dx = 1 / (M + 1)`, `M = 2N - 1`. Both `w` and `dx` cancel in the
//! ratio, so `C` is the same under any uniform rescaling of either.

use crate::error::{Error, Result};

/// Default half-width of the support, so `f` lives on `[-1/4, 1/4]`.
pub const DEFAULT_HALFWIDTH: f64 = 0.25;

/// Nonnegative heights on `N` equal intervals spanning `[-halfwidth, halfwidth]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    heights: Vec<f64>,
    support_halfwidth: f64,
}

impl StepFunction {
    /// Builds a step function on the default support. Rejects empty or
    /// non-finite height vectors. Negative heights are accepted here and
    /// clipped at evaluation time.
    pub fn new(heights: Vec<f64>) -> Result<Self> {
        Self::with_support(heights, DEFAULT_HALFWIDTH)
    }

    pub fn with_support(heights: Vec<f64>, support_halfwidth: f64) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::InvalidInput("empty height vector".into()));
        }
        if let Some(i) = heights.iter().position(|h| !h.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "height {i} is not finite ({})",
                heights[i]
            )));
        }
        if !(support_halfwidth.is_finite() && support_halfwidth > 0.0) {
            return Err(Error::InvalidInput(format!(
                "support half-width must be positive, got {support_halfwidth}"
            )));
        }
        Ok(Self {
            heights,
            support_halfwidth,
        })
    }

    /// `N` copies of 1.0: the indicator of the support.
    pub fn indicator(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn into_heights(self) -> Vec<f64> {
        self.heights
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn support_halfwidth(&self) -> f64 {
        self.support_halfwidth
    }

    /// Width of one interval, `2 * halfwidth / N`.
    pub fn interval_width(&self) -> f64 {
        2.0 * self.support_halfwidth / self.heights.len() as f64
    }

    /// Copy with every height replaced by `max(0, h)`.
    pub fn clipped(&self) -> Self {
        Self {
            heights: self.heights.iter().map(|&h| h.max(0.0)).collect(),
            support_halfwidth: self.support_halfwidth,
        }
    }

    pub fn reversed(&self) -> Self {
        let mut heights = self.heights.clone();
        heights.reverse();
        Self {
            heights,
            support_halfwidth: self.support_halfwidth,
        }
    }
}

/// The `2N - 1` values of the discrete autoconvolution and the grid spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionProfile {
    pub values: Vec<f64>,
    pub dx: f64,
}

impl ConvolutionProfile {
    /// Wraps raw values, using `dx = 1 / (len + 1)`.
    pub fn from_values(values: Vec<f64>) -> Self {
        let dx = 1.0 / (values.len() as f64 + 1.0);
        Self { values, dx }
    }
}

/// `(||F||_2^2, ||F||_1, ||F||_inf)` of a convolution profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormTriple {
    pub l2_squared: f64,
    pub l1: f64,
    pub linf: f64,
    /// First index attaining `linf`.
    pub linf_argmax: usize,
}

impl NormTriple {
    pub fn of(profile: &ConvolutionProfile) -> Self {
        let (linf, linf_argmax) = linf_max(profile);
        Self {
            l2_squared: simpson_l2(profile),
            l1: l1_riemann(profile),
            linf,
            linf_argmax,
        }
    }

    /// `l2_squared / (l1 * linf)`, with the 0/0 case reported as degenerate.
    pub fn ratio(&self) -> Result<f64> {
        if self.linf == 0.0 {
            return Err(Error::Degenerate);
        }
        let c = self.l2_squared / (self.l1 * self.linf);
        if c.is_finite() {
            Ok(c)
        } else {
            Err(Error::NonFinite { value: c })
        }
    }
}

/// Full self-convolution of `h` written into `out` (resized to `2N - 1`).
///
/// Zero heights are skipped; adding `+0.0` never changes a partial sum, so the
/// result is bit-identical to the dense loop.
pub(crate) fn self_convolve_into(h: &[f64], out: &mut Vec<f64>) {
    let n = h.len();
    out.clear();
    out.resize(2 * n - 1, 0.0);
    for (i, &a) in h.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let row = &mut out[i..i + n];
        for (o, &b) in row.iter_mut().zip(h) {
            *o += a * b;
        }
    }
}

pub fn autoconvolve(h: &StepFunction) -> ConvolutionProfile {
    let mut values = Vec::new();
    self_convolve_into(h.heights(), &mut values);
    ConvolutionProfile::from_values(values)
}

/// Sum over consecutive pairs `(a, b)` of the zero-padded values of `a^2 + ab + b^2`.
pub(crate) fn padded_quadratic_sum(values: &[f64]) -> f64 {
    let (first, last) = match (values.first(), values.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return 0.0,
    };
    let inner: f64 = values
        .windows(2)
        .map(|w| w[0] * w[0] + w[0] * w[1] + w[1] * w[1])
        .sum();
    first * first + inner + last * last
}

/// Exact integral of the square of the zero-padded piecewise-linear interpolant.
pub fn simpson_l2(profile: &ConvolutionProfile) -> f64 {
    profile.dx / 3.0 * padded_quadratic_sum(&profile.values)
}

pub fn l1_riemann(profile: &ConvolutionProfile) -> f64 {
    profile.dx * profile.values.iter().sum::<f64>()
}

/// Maximum value and the first index attaining it. Empty profiles give `(0, 0)`.
pub fn linf_max(profile: &ConvolutionProfile) -> (f64, usize) {
    argmax_first(&profile.values)
}

pub(crate) fn argmax_first(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    if values.is_empty() {
        (0.0, 0)
    } else {
        best
    }
}

/// The objective `C(h)` on the clipped heights.
pub fn objective_c(h: &StepFunction) -> Result<f64> {
    objective_of_slice(h.heights())
}

/// Norms of the autoconvolution of the clipped heights.
pub fn norms(h: &StepFunction) -> NormTriple {
    NormTriple::of(&autoconvolve(&h.clipped()))
}

pub(crate) fn objective_of_slice(h: &[f64]) -> Result<f64> {
    let clipped: Vec<f64> = h.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate);
    }
    let mut conv = Vec::new();
    self_convolve_into(&clipped, &mut conv);
    NormTriple::of(&ConvolutionProfile::from_values(conv)).ratio()
}
