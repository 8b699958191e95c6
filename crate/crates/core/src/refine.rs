//! High-resolution refinement: linear-interpolation upsampling, projected
//! plain gradient ascent, and trimming of zero runs at both ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{value_and_grad_into, GradientWorkspace};
use crate::stepfn::{objective_c, StepFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub lr: f64,
    /// Ascent steps per round. Zero skips ascent entirely.
    pub iterations: usize,
    pub log_every: usize,
    pub upsample_rounds: usize,
    /// Resolution multiplier applied in each round.
    pub upsample_factor: usize,
    /// Return the best iterate seen instead of the final one.
    pub keep_best: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            lr: 3e-2,
            iterations: 200_000,
            log_every: 1_000,
            upsample_rounds: 2,
            upsample_factor: 2,
            keep_best: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        if self.upsample_factor < 2 && self.upsample_rounds > 0 {
            return Err(Error::Config("upsample_factor must be at least 2".into()));
        }
        Ok(())
    }
}

/// Samples the piecewise-linear interpolant of `h` (knots at `N` equally spaced
/// points of `[-1/2, 1/2]`, endpoints included) at `factor * N` equally spaced
/// points of the same interval.
pub fn upsample(h: &StepFunction, factor: usize) -> Result<StepFunction> {
    let old = h.heights();
    let n = old.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "upsampling needs at least two heights".into(),
        ));
    }
    if factor == 0 {
        return Err(Error::InvalidInput(
            "upsample factor must be positive".into(),
        ));
    }
    let m = factor * n;
    // New point j sits at old index position j (n-1) / (m-1); integer arithmetic
    // keeps mirrored points exactly mirrored.
    let den = (m - 1) as u64;
    let span = (n - 1) as u64;
    let heights = (0..m as u64)
        .map(|j| {
            let num = j * span;
            let mut i = (num / den) as usize;
            let mut rem = num % den;
            if i == n - 1 {
                i = n - 2;
                rem = den;
            }
            let (a, b) = (old[i], old[i + 1]);
            if rem == 0 {
                a
            } else if rem == den || a == b {
                b
            } else {
                let y = (a * (den - rem) as f64 + b * rem as f64) / den as f64;
                y.clamp(a.min(b), a.max(b))
            }
        })
        .collect();
    StepFunction::with_support(heights, h.support_halfwidth())
}

pub fn upsample_2x(h: &StepFunction) -> Result<StepFunction> {
    upsample(h, 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentOutcome {
    pub heights: StepFunction,
    pub value: f64,
    pub start_value: f64,
    /// `(iteration, C)` pairs, `C` taken at the iterate before that update.
    pub trace: Vec<(usize, f64)>,
}

/// Projected gradient ascent `h <- max(0, h + lr * grad C)`.
pub fn ascend(h: &StepFunction, config: &RefineConfig) -> Result<AscentOutcome> {
    config.validate()?;
    let start_value = objective_c(h)?;
    let mut x: Vec<f64> = h.heights().iter().map(|&v| v.max(0.0)).collect();
    let mut grad = vec![0.0; x.len()];
    let mut ws = GradientWorkspace::default();
    let mut trace = Vec::new();
    let mut best = (start_value, x.clone());

    for i in 0..config.iterations {
        let value = match value_and_grad_into(&x, &mut grad, &mut ws) {
            Ok((v, _)) => v,
            Err(Error::NonFinite { value }) => {
                return Err(Error::AscentDiverged {
                    iteration: i,
                    value,
                })
            }
            Err(Error::Degenerate) => {
                return Err(Error::AscentDiverged {
                    iteration: i,
                    value: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(g) = grad.iter().find(|g| !g.is_finite()) {
            return Err(Error::AscentDiverged {
                iteration: i,
                value: *g,
            });
        }
        if config.keep_best && value > best.0 {
            best = (value, x.clone());
        }
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi = (*xi + config.lr * gi).max(0.0);
        }
        if (i + 1) % config.log_every == 0 {
            trace.push((i + 1, value));
        }
    }

    let final_value = objective_c(&StepFunction::new(x.clone())?).map_err(|e| match e {
        Error::NonFinite { value } => Error::AscentDiverged {
            iteration: config.iterations,
            value,
        },
        other => other,
    })?;
    let (value, x) = if config.keep_best && best.0 > final_value {
        best
    } else {
        (final_value, x)
    };
    Ok(AscentOutcome {
        heights: StepFunction::with_support(x, h.support_halfwidth())?,
        value,
        start_value,
        trace,
    })
}

/// Drops exact-zero runs from both ends; interior zeros stay.
pub fn trim_zeros(h: &StepFunction) -> Result<StepFunction> {
    let hs = h.heights();
    let first = hs
        .iter()
        .position(|&v| v != 0.0)
        .ok_or_else(|| Error::InvalidInput("cannot trim an all-zero height vector".into()))?;
    let last = hs.iter().rposition(|&v| v != 0.0).unwrap_or(first);
    let kept = hs[first..=last].to_vec();
    // Keep the interval width fixed so the trimmed function is the same function.
    let halfwidth = h.interval_width() * kept.len() as f64 / 2.0;
    StepFunction::with_support(kept, halfwidth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub heights: StepFunction,
    pub value: f64,
    pub start_value: f64,
    /// One trace per ascent run, in order.
    pub traces: Vec<Vec<(usize, f64)>>,
    /// The refined value ended below the starting value.
    pub regressed: bool,
}

/// `upsample_rounds` alternations of upsampling and ascent (a single ascent
/// when there are no rounds), followed by trimming.
pub fn refine_pipeline(h: &StepFunction, config: &RefineConfig) -> Result<RefineOutcome> {
    config.validate()?;
    let start_value = objective_c(h)?;
    let mut current = h.clipped();
    let mut traces = Vec::new();
    let ascents = config.upsample_rounds.max(1);
    for round in 0..ascents {
        if round < config.upsample_rounds {
            current = upsample(&current, config.upsample_factor)?;
        }
        if config.iterations > 0 {
            let out = ascend(&current, config)?;
            traces.push(out.trace);
            current = out.heights;
        }
    }
    let heights = trim_zeros(&current)?;
    let value = objective_c(&heights)?;
    Ok(RefineOutcome {
        regressed: value < start_value,
        heights,
        value,
        start_value,
        traces,
    })
}
