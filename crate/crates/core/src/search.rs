//! Batched search: noisy-Adam exploration, noiseless low-rate exploitation and
//! periodic elitist respawn, with per-candidate best tracking.
//!
//! All randomness is drawn from streams keyed by `(seed, slot, step, purpose)`,
//! so results do not depend on how candidates are scheduled across threads.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{AdamMoments, AdamParams};
use crate::error::{Error, Result};
use crate::gradient::{value_and_grad_into, GradientWorkspace};
use crate::stepfn::{objective_of_slice, StepFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub n_intervals: usize,
    pub batch_size: usize,
    pub iterations: u64,
    pub explore_steps: u64,
    pub lr_explore: f64,
    pub lr_exploit: f64,
    pub eta: f64,
    /// Noise decay exponent, 0.55 by default; 0.65 is the other
    /// value in circulation for this schedule.
    pub gamma: f64,
    /// Respawn every this many iterations; 0 disables respawn.
    pub respawn_period: u64,
    pub keep_frac: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub checkpoint_every: u64,
    /// Worker threads for candidate evaluation; 0 uses the ambient rayon pool.
    /// Has no effect on results.
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_intervals: 768,
            batch_size: 1024,
            iterations: 100_000,
            explore_steps: 30_000,
            lr_explore: 3e-2,
            lr_exploit: 5e-3,
            eta: 1e-3,
            gamma: 0.55,
            respawn_period: 20_000,
            keep_frac: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            checkpoint_every: 100,
            threads: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_intervals == 0 {
            return fail("n_intervals must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.explore_steps > self.iterations {
            return fail(format!(
                "explore_steps ({}) exceeds iterations ({})",
                self.explore_steps, self.iterations
            ));
        }
        if !(self.keep_frac > 0.0 && self.keep_frac <= 1.0) {
            return fail(format!(
                "keep_frac must lie in (0, 1], got {}",
                self.keep_frac
            ));
        }
        for (name, lr) in [
            ("lr_explore", self.lr_explore),
            ("lr_exploit", self.lr_exploit),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) || !self.gamma.is_finite() {
            return fail("eta must be nonnegative and gamma finite".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || self.adam_epsilon.is_nan()
            || self.adam_epsilon <= 0.0
        {
            return fail("Adam betas must lie in [0, 1) and epsilon be positive".into());
        }
        if self.checkpoint_every == 0 {
            return fail("checkpoint_every must be at least 1".into());
        }
        Ok(())
    }

    fn adam(&self, learning_rate: f64) -> AdamParams {
        AdamParams {
            learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Number of survivors at each respawn, `ceil(batch_size * keep_frac)`.
    pub fn survivors(&self) -> usize {
        ((self.batch_size as f64 * self.keep_frac).ceil() as usize).clamp(1, self.batch_size)
    }
}

/// Gradient-noise standard deviation at step `t`: `eta / (t + 1)^gamma`.
pub fn noise_sigma(t: u64, config: &SearchConfig) -> f64 {
    if config.eta == 0.0 {
        return 0.0;
    }
    config.eta / ((t + 1) as f64).powf(config.gamma)
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Init = 1,
    Noise = 2,
    Respawn = 3,
    Recover = 4,
}

fn stream(seed: u64, slot: usize, step: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key
        .chunks_exact_mut(8)
        .zip([seed, slot as u64, step, purpose as u64])
    {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn uniform_heights(n: usize, mut rng: ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// One member of the batch.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub heights: Vec<f64>,
    pub moments: AdamMoments,
    /// `C` at the heights most recently evaluated for this slot.
    pub current_value: f64,
    pub best_value: f64,
    pub best_heights: Vec<f64>,
    grad: Vec<f64>,
    workspace: GradientWorkspace,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.heights == other.heights
            && self.moments == other.moments
            && self.current_value.to_bits() == other.current_value.to_bits()
            && self.best_value.to_bits() == other.best_value.to_bits()
            && self.best_heights == other.best_heights
    }
}

impl Candidate {
    fn fresh(heights: Vec<f64>) -> Self {
        let n = heights.len();
        Self {
            best_heights: heights.iter().map(|&h| h.max(0.0)).collect(),
            heights,
            moments: AdamMoments::zeros(n),
            current_value: f64::NEG_INFINITY,
            best_value: f64::NEG_INFINITY,
            grad: vec![0.0; n],
            workspace: GradientWorkspace::default(),
        }
    }

    fn replace_heights(&mut self, heights: Vec<f64>) {
        self.heights = heights;
        self.moments.reset();
        self.current_value = f64::NEG_INFINITY;
    }

    fn record(&mut self, value: f64) {
        self.current_value = value;
        if value > self.best_value {
            self.best_value = value;
            self.best_heights.clear();
            self.best_heights
                .extend(self.heights.iter().map(|&h| h.max(0.0)));
        }
    }

    fn step(
        &mut self,
        hp: &AdamParams,
        sigma: f64,
        seed: u64,
        slot: usize,
        step: u64,
    ) -> Option<SearchEvent> {
        let value = match value_and_grad_into(&self.heights, &mut self.grad, &mut self.workspace) {
            Ok((value, _)) if self.grad.iter().all(|g| g.is_finite()) => value,
            outcome => {
                let reason = match outcome {
                    Err(e) => e.to_string(),
                    Ok(_) => "non-finite gradient".to_string(),
                };
                let n = self.heights.len();
                self.replace_heights(uniform_heights(
                    n,
                    stream(seed, slot, step, Purpose::Recover),
                ));
                return Some(SearchEvent { step, slot, reason });
            }
        };
        self.record(value);
        if sigma > 0.0 {
            let mut rng = stream(seed, slot, step, Purpose::Noise);
            for g in self.grad.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *g += sigma * z;
            }
        }
        self.moments.ascend(hp, &mut self.heights, &self.grad);
        self.heights.iter_mut().for_each(|h| *h = h.max(0.0));
        None
    }
}

/// A candidate that had to be replaced because its objective or gradient
/// could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchEvent {
    pub step: u64,
    pub slot: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    pub candidates: Vec<Candidate>,
    pub step_count: u64,
    pub events: Vec<SearchEvent>,
}

impl BatchState {
    pub fn best_values(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.best_value).collect()
    }

    /// Slot with the highest best value; first slot on ties.
    pub fn best_slot(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.candidates.iter().enumerate() {
            if c.best_value > self.candidates[best].best_value {
                best = i;
            }
        }
        best
    }

    /// Smallest height stored anywhere in the batch, iterates and snapshots alike.
    pub fn min_height(&self) -> f64 {
        self.candidates
            .iter()
            .flat_map(|c| c.heights.iter().chain(&c.best_heights))
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

pub fn init_batch(config: &SearchConfig) -> BatchState {
    let candidates = (0..config.batch_size)
        .map(|slot| {
            Candidate::fresh(uniform_heights(
                config.n_intervals,
                stream(config.seed, slot, 0, Purpose::Init),
            ))
        })
        .collect();
    BatchState {
        candidates,
        step_count: 0,
        events: Vec::new(),
    }
}

fn advance(state: &mut BatchState, config: &SearchConfig, hp: AdamParams, sigma: f64) {
    let step = state.step_count;
    let seed = config.seed;
    let events: Vec<SearchEvent> = state
        .candidates
        .par_iter_mut()
        .enumerate()
        .filter_map(|(slot, c)| c.step(&hp, sigma, seed, slot, step))
        .collect();
    for e in &events {
        warn!("step {}: respawned slot {} ({})", e.step, e.slot, e.reason);
    }
    state.events.extend(events);
    state.step_count += 1;
}

/// One noisy high-rate Adam step for every candidate.
pub fn explore_step(state: &mut BatchState, config: &SearchConfig) -> Result<()> {
    if state.step_count >= config.explore_steps {
        return Err(Error::Phase {
            step: state.step_count,
            reason: format!("exploration ends at step {}", config.explore_steps),
        });
    }
    let sigma = noise_sigma(state.step_count, config);
    advance(state, config, config.adam(config.lr_explore), sigma);
    Ok(())
}

/// One noiseless low-rate Adam step for every candidate.
pub fn exploit_step(state: &mut BatchState, config: &SearchConfig) -> Result<()> {
    if state.step_count < config.explore_steps {
        return Err(Error::Phase {
            step: state.step_count,
            reason: format!("exploitation starts at step {}", config.explore_steps),
        });
    }
    advance(state, config, config.adam(config.lr_exploit), 0.0);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RespawnReport {
    /// Surviving slots in ascending order.
    pub survivors: Vec<usize>,
}

/// Evaluates every candidate at its current heights, keeps the top
/// `ceil(batch_size * keep_frac)` in place, redraws the rest uniformly on
/// `[0, 1]` and resets the Adam moments of the whole batch. Per-slot bests
/// are left untouched.
pub fn elitist_respawn(state: &mut BatchState, config: &SearchConfig) -> RespawnReport {
    let values: Vec<f64> = state
        .candidates
        .par_iter()
        .map(|c| objective_of_slice(&c.heights).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let keep = config.survivors().min(order.len());
    let mut survivors = order[..keep].to_vec();
    survivors.sort_unstable();

    let mut survives = vec![false; values.len()];
    for &s in &survivors {
        survives[s] = true;
    }
    let step = state.step_count;
    for (slot, c) in state.candidates.iter_mut().enumerate() {
        if survives[slot] {
            c.moments.reset();
            c.current_value = values[slot];
        } else {
            let n = c.heights.len();
            c.replace_heights(uniform_heights(
                n,
                stream(config.seed, slot, step, Purpose::Respawn),
            ));
        }
    }
    debug!("step {step}: respawn kept {keep} of {}", values.len());
    RespawnReport { survivors }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: u64,
    pub best_c: f64,
    pub min_height: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: StepFunction,
    pub best_value: f64,
    pub history: Vec<Checkpoint>,
    /// Final per-slot best values.
    pub candidate_best: Vec<f64>,
    pub events: Vec<SearchEvent>,
}

pub fn run_search(config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| drive(config))
    } else {
        drive(config)
    }
}

fn checkpoint(state: &BatchState) -> Checkpoint {
    let best = state.best_slot();
    Checkpoint {
        iteration: state.step_count,
        best_c: state.candidates[best].best_value,
        min_height: state.min_height(),
    }
}

fn drive(config: &SearchConfig) -> Result<SearchOutcome> {
    let mut state = init_batch(config);
    let mut history = Vec::new();
    while state.step_count < config.iterations {
        if state.step_count < config.explore_steps {
            explore_step(&mut state, config)?;
        } else {
            exploit_step(&mut state, config)?;
        }
        let t = state.step_count;
        if t == config.iterations {
            break;
        }
        if config.respawn_period > 0 && t.is_multiple_of(config.respawn_period) {
            elitist_respawn(&mut state, config);
        }
        if t.is_multiple_of(config.checkpoint_every) {
            history.push(checkpoint(&state));
        }
    }

    // The last update has not been scored yet.
    state.candidates.par_iter_mut().for_each(|c| {
        if let Ok(v) = objective_of_slice(&c.heights) {
            c.record(v);
        }
    });
    history.push(checkpoint(&state));

    let slot = state.best_slot();
    let winner = &state.candidates[slot];
    if !winner.best_value.is_finite() {
        return Err(Error::AllDegenerate);
    }
    Ok(SearchOutcome {
        best: StepFunction::new(winner.best_heights.clone())?,
        best_value: winner.best_value,
        candidate_best: state.best_values(),
        history,
        events: state.events,
    })
}
