//! Closed-form gradient of `C(h)` with respect to the heights.
//!
//! With `conv_k = sum_i h_i h_{k-i}` and
//! `L2 = dx/3 * sum (a^2 + ab + b^2)`, `L1 = dx * sum conv`, `Linf = conv_m`:
//!
//! ```text
//! dL2/dh_i   = 2 sum_j g_{i+j} h_j,   g_k = dx/3 * (4 conv_k + conv_{k-1} + conv_{k+1})
//! dL1/dh_i   = 2 dx sum_j h_j
//! dLinf/dh_i = 2 h_{m-i}              (first argmax m, zero outside the support)
//! dC/dh_i    = C * (dL2_i / L2 - dL1_i / L1 - dLinf_i / Linf)
//! ```
//!
//! The gradient is taken at the clipped heights and returned unprojected;
//! callers project after their update.

use crate::error::{Error, Result};
use crate::stepfn::{
    argmax_first, objective_of_slice, padded_quadratic_sum, self_convolve_into, StepFunction,
};

/// Relative tolerance under which a second profile entry counts as tying the maximum.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub gradient: Vec<f64>,
    pub value: f64,
    /// The maximum of the profile is attained (within [`TIE_TOLERANCE`]) at more than one index.
    pub argmax_tied: bool,
}

/// Scratch buffers reused across gradient evaluations of the same size.
#[derive(Debug, Clone, Default)]
pub struct GradientWorkspace {
    clipped: Vec<f64>,
    conv: Vec<f64>,
    weights: Vec<f64>,
}

pub fn grad_objective(h: &StepFunction) -> Result<GradientReport> {
    let mut ws = GradientWorkspace::default();
    let mut gradient = vec![0.0; h.len()];
    let (value, argmax_tied) = value_and_grad_into(h.heights(), &mut gradient, &mut ws)?;
    Ok(GradientReport {
        gradient,
        value,
        argmax_tied,
    })
}

/// Writes `dC/dh` into `grad` and returns `(C, argmax_tied)`.
pub fn value_and_grad_into(
    h: &[f64],
    grad: &mut [f64],
    ws: &mut GradientWorkspace,
) -> Result<(f64, bool)> {
    let n = h.len();
    assert_eq!(grad.len(), n, "gradient buffer length must equal N");
    if n == 0 {
        return Err(Error::InvalidInput("empty height vector".into()));
    }

    ws.clipped.clear();
    ws.clipped.extend(h.iter().map(|&x| x.max(0.0)));
    let hc = &ws.clipped;
    let total: f64 = hc.iter().sum();
    if total == 0.0 {
        return Err(Error::Degenerate);
    }

    self_convolve_into(hc, &mut ws.conv);
    let conv = &ws.conv;
    let m = conv.len();
    let dx = 1.0 / (m as f64 + 1.0);

    let l2 = dx / 3.0 * padded_quadratic_sum(conv);
    let l1 = dx * conv.iter().sum::<f64>();
    let (linf, argmax) = argmax_first(conv);
    let value = l2 / (l1 * linf);
    if !value.is_finite() {
        return Err(Error::NonFinite { value });
    }
    let threshold = linf * (1.0 - TIE_TOLERANCE);
    let argmax_tied = conv
        .iter()
        .enumerate()
        .any(|(k, &v)| k != argmax && v >= threshold);

    // dL2/dconv_k on the padded profile.
    ws.weights.clear();
    ws.weights.extend((0..m).map(|k| {
        let prev = if k > 0 { conv[k - 1] } else { 0.0 };
        let next = if k + 1 < m { conv[k + 1] } else { 0.0 };
        dx / 3.0 * (4.0 * conv[k] + prev + next)
    }));

    // Correlation of the weights with h; zero heights contribute nothing.
    grad.iter_mut().for_each(|g| *g = 0.0);
    for (j, &hj) in hc.iter().enumerate() {
        if hj == 0.0 {
            continue;
        }
        for (g, &w) in grad.iter_mut().zip(&ws.weights[j..j + n]) {
            *g += hj * w;
        }
    }

    let d_l1 = 2.0 * dx * total;
    for (i, g) in grad.iter_mut().enumerate() {
        let d_l2 = 2.0 * *g;
        let d_linf = if argmax >= i && argmax - i < n {
            2.0 * hc[argmax - i]
        } else {
            0.0
        };
        *g = value * (d_l2 / l2 - d_l1 / l1 - d_linf / linf);
    }
    Ok((value, argmax_tied))
}

/// Central-difference gradient of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifference {
    pub gradient: Vec<f64>,
    /// Coordinates where `C(h + d) == C(h - d)` in floating point, so the step
    /// was too small to resolve anything.
    pub unresolved: Vec<usize>,
}

impl FiniteDifference {
    pub fn has_warnings(&self) -> bool {
        !self.unresolved.is_empty()
    }
}

/// Central differences with per-coordinate step `step * max(1, |h_i|)`.
pub fn finite_difference_gradient(h: &StepFunction, step: f64) -> Result<FiniteDifference> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    objective_of_slice(h.heights())?;
    let mut probe = h.heights().to_vec();
    let mut gradient = Vec::with_capacity(probe.len());
    let mut unresolved = Vec::new();
    for i in 0..probe.len() {
        let x = probe[i];
        let delta = step * x.abs().max(1.0);
        probe[i] = x + delta;
        let plus = objective_of_slice(&probe)?;
        probe[i] = x - delta;
        let minus = objective_of_slice(&probe)?;
        probe[i] = x;
        if plus == minus {
            unresolved.push(i);
        }
        gradient.push((plus - minus) / (2.0 * delta));
    }
    Ok(FiniteDifference {
        gradient,
        unresolved,
    })
}
