use std::fmt::Write as _;

use super::{cumulative, draw_categorical, require_full, Progress, ReplayMemory, Ring, SampledBatch, Transition};
use crate::error::{Error, Result};
use crate::seed::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerParams {
    pub alpha: f64,
    pub xi: f64,
    /// IS exponent at the first episode, annealed linearly to 1.
    pub beta0: f64,
}

impl Default for PerParams {
    fn default() -> Self {
        Self { alpha: 1.0, xi: 0.01, beta0: 0.4 }
    }
}

impl PerParams {
    pub fn beta(&self, progress: Progress) -> f64 {
        if progress.max_episodes <= 1 {
            return 1.0;
        }
        let frac = (progress.episode.saturating_sub(1)) as f64 / (progress.max_episodes - 1) as f64;
        self.beta0 + (1.0 - self.beta0) * frac.clamp(0.0, 1.0)
    }
}

/// `(|delta| + xi)^alpha`, normalized.
pub fn per_probs(abs_td: &[f64], alpha: f64, xi: f64) -> Vec<f64> {
    let raw: Vec<f64> = abs_td.iter().map(|d| (d.abs() + xi).powf(alpha)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// `(C p)^-beta`, divided by the largest weight.
pub fn per_is_weights(probs: &[f64], beta: f64) -> Vec<f64> {
    let c = probs.len() as f64;
    let w: Vec<f64> = probs.iter().map(|p| (c * p).powf(-beta)).collect();
    let max = w.iter().cloned().fold(0.0, f64::max);
    w.into_iter().map(|x| x / max).collect()
}

#[derive(Debug, Clone)]
struct PerSlot {
    transition: Transition,
    abs_td: f64,
    replays: u64,
}

/// Proportional prioritized replay. Fresh transitions take the current
/// maximum priority so they are seen at least once early.
#[derive(Debug, Clone)]
pub struct PerBuffer {
    ring: Ring<PerSlot>,
    params: PerParams,
    max_td: f64,
}

impl PerBuffer {
    pub fn new(capacity: usize, params: PerParams) -> Self {
        Self { ring: Ring::new(capacity), params, max_td: 1.0 }
    }

    pub fn probs(&self) -> Vec<f64> {
        let td: Vec<f64> = self.ring.iter().map(|s| s.abs_td).collect();
        per_probs(&td, self.params.alpha, self.params.xi)
    }
}

impl ReplayMemory for PerBuffer {
    fn capacity(&self) -> usize {
        self.ring.capacity()
    }

    fn len(&self) -> usize {
        self.ring.len()
    }

    fn is_full(&self) -> bool {
        self.ring.is_full()
    }

    fn push(&mut self, t: Transition) -> usize {
        self.ring.push(PerSlot { transition: t, abs_td: self.max_td, replays: 0 }).0
    }

    fn transition(&self, index: usize) -> &Transition {
        &self.ring.get(index).transition
    }

    fn sample(&mut self, n: usize, progress: Progress, rng: &mut SimRng) -> Result<SampledBatch> {
        require_full(self.ring.is_full(), "PER")?;
        let probs = self.probs();
        let cdf = cumulative(probs.iter().copied());
        let indices: Vec<usize> = (0..n).map(|_| draw_categorical(&cdf, rng)).collect();
        let picked: Vec<f64> = indices.iter().map(|&i| probs[i]).collect();
        // normalize by the max over the whole buffer, i.e. the smallest p
        let p_min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
        let beta = self.params.beta(progress);
        let c = probs.len() as f64;
        let w_max = (c * p_min).powf(-beta);
        let weights = picked.iter().map(|p| (c * p).powf(-beta) / w_max).collect();
        Ok(SampledBatch { indices, weights: Some(weights) })
    }

    fn update(&mut self, indices: &[usize], abs_td: &[f64], _progress: Progress) -> Result<()> {
        if indices.len() != abs_td.len() {
            return Err(Error::param("abs_td", "length differs from sampled indices"));
        }
        for (&i, &d) in indices.iter().zip(abs_td) {
            let slot = self.ring.get_mut(i);
            slot.abs_td = d.abs();
            slot.replays += 1;
            self.max_td = self.max_td.max(d.abs());
        }
        Ok(())
    }

    fn dump_csv(&self) -> String {
        let probs = self.probs();
        let mut out = String::from("slot,p0,rt,abs_delta\n");
        for (i, (s, p)) in self.ring.iter().zip(probs).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", i, p, s.replays, s.abs_td);
        }
        out
    }
}
