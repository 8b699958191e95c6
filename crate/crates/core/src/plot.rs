//! Plot-ready series for external tools, written as two-column CSV.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stepfn::{autoconvolve, StepFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    StepFunction,
    Autoconvolution,
    CTrace,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step-function" => Ok(Self::StepFunction),
            "autoconvolution" => Ok(Self::Autoconvolution),
            "c-trace" => Ok(Self::CTrace),
            other => Err(Error::InvalidInput(format!(
                "unknown plot kind {other:?} (expected step-function, autoconvolution or c-trace)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub kind: PlotKind,
    pub points: Vec<(f64, f64)>,
    pub normalized: bool,
}

impl PlotSeries {
    /// Heights at interval midpoints of the support.
    pub fn step_function(h: &StepFunction) -> Self {
        let w = h.interval_width();
        let left = -h.support_halfwidth();
        let points = h
            .heights()
            .iter()
            .enumerate()
            .map(|(i, &y)| (left + (i as f64 + 0.5) * w, y.max(0.0)))
            .collect();
        Self {
            kind: PlotKind::StepFunction,
            points,
            normalized: false,
        }
    }

    /// The `2N + 1` knots of the true `f*f`, endpoints included, optionally
    /// rescaled to a maximum of 1.
    pub fn autoconvolution(h: &StepFunction, normalize: bool) -> Self {
        let w = h.interval_width();
        let profile = autoconvolve(&h.clipped());
        let left = -2.0 * h.support_halfwidth();
        let knots = profile.values.len() + 2;
        let mut ys = Vec::with_capacity(knots);
        ys.push(0.0);
        ys.extend(profile.values.iter().map(|v| w * v));
        ys.push(0.0);
        let max = ys.iter().cloned().fold(0.0, f64::max);
        let normalized = normalize && max > 0.0;
        let points = ys
            .into_iter()
            .enumerate()
            .map(|(k, y)| (left + k as f64 * w, if normalized { y / max } else { y }))
            .collect();
        Self {
            kind: PlotKind::Autoconvolution,
            points,
            normalized,
        }
    }

    pub fn c_trace(trace: &[(u64, f64)]) -> Self {
        Self {
            kind: PlotKind::CTrace,
            points: trace.iter().map(|&(i, c)| (i as f64, c)).collect(),
            normalized: false,
        }
    }

    pub fn to_csv(&self) -> String {
        let header = match self.kind {
            PlotKind::StepFunction => "x,height",
            PlotKind::Autoconvolution => "x,autoconvolution",
            PlotKind::CTrace => "iteration,best_c",
        };
        let mut out = format!("{header}\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// Two-column trace CSV with header `iteration,best_c`.
pub fn trace_csv(trace: &[(u64, f64)]) -> String {
    PlotSeries::c_trace(trace).to_csv()
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if ln == 0 && line.starts_with("iteration") || line.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Parse {
            line: ln + 1,
            index: 1,
            token: line.to_string(),
            reason: reason.to_string(),
        };
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| bad("expected two columns"))?;
        let i = a.trim().parse().map_err(|_| bad("bad iteration"))?;
        let c = b.trim().parse().map_err(|_| bad("bad value"))?;
        out.push((i, c));
    }
    Ok(out)
}
