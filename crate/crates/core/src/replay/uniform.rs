use std::fmt::Write as _;

use rand::Rng;

use super::{require_full, Progress, ReplayMemory, Ring, SampledBatch, Transition};
use crate::error::Result;
use crate::seed::SimRng;

/// Plain FIFO replay with uniform sampling.
#[derive(Debug, Clone)]
pub struct UniformBuffer {
    ring: Ring<(Transition, u64)>,
}

impl UniformBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { ring: Ring::new(capacity) }
    }
}

/// `n` indices drawn uniformly from `0..len`, with replacement.
pub fn uniform_sample(len: usize, n: usize, rng: &mut SimRng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..len)).collect()
}

impl ReplayMemory for UniformBuffer {
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
        self.ring.push((t, 0)).0
    }

    fn transition(&self, index: usize) -> &Transition {
        &self.ring.get(index).0
    }

    fn sample(&mut self, n: usize, _progress: Progress, rng: &mut SimRng) -> Result<SampledBatch> {
        require_full(self.ring.is_full(), "uniform")?;
        Ok(SampledBatch { indices: uniform_sample(self.ring.len(), n, rng), weights: None })
    }

    fn update(&mut self, indices: &[usize], _abs_td: &[f64], _progress: Progress) -> Result<()> {
        for &i in indices {
            self.ring.get_mut(i).1 += 1;
        }
        Ok(())
    }

    fn dump_csv(&self) -> String {
        let p = 1.0 / self.ring.len().max(1) as f64;
        let mut out = String::from("slot,p0,rt,abs_delta\n");
        for (i, (_, rt)) in self.ring.iter().enumerate() {
            let _ = writeln!(out, "{i},{p},{rt},");
        }
        out
    }
}
