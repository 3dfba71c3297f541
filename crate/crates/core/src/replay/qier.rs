use std::fmt::Write as _;

use super::qubit::{prepare, QubitPriority};
use super::{cumulative, draw_categorical, require_full, Progress, ReplayMemory, Ring, SampledBatch, Transition};
use crate::error::{Error, Result};
use crate::seed::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct QierSlot {
    pub transition: Transition,
    pub qubit: QubitPriority<f64>,
    /// Replay count `rt_k`.
    pub replays: u64,
    /// Last recomputed `|delta|`, if the slot was ever sampled.
    pub last_abs_td: Option<f64>,
}

/// Quantum-inspired replay buffer.
///
/// New slots start in `|0>` (highest priority). Sampling probabilities are
/// the normalized `|0>` collapse probabilities. Each sampled slot is reset to
/// `|+>` and re-prepared from its fresh TD error and replay age.
#[derive(Debug, Clone)]
pub struct QierBuffer {
    ring: Ring<QierSlot>,
    delta_max: f64,
    rt_max: u64,
    rt_max_stale: bool,
}

impl QierBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { ring: Ring::new(capacity), delta_max: 1.0, rt_max: 0, rt_max_stale: false }
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn rt_max(&mut self) -> u64 {
        self.refresh_rt_max();
        self.rt_max
    }

    /// 0-based slot the next push will write.
    pub fn write_index(&self) -> usize {
        self.ring.write_index()
    }

    pub fn slot(&self, i: usize) -> &QierSlot {
        self.ring.get(i)
    }

    /// Override a slot's qubit; for diagnostics and tests.
    pub fn set_qubit(&mut self, i: usize, q: QubitPriority<f64>) {
        self.ring.get_mut(i).qubit = q;
    }

    fn refresh_rt_max(&mut self) {
        if self.rt_max_stale {
            self.rt_max = self.ring.iter().map(|s| s.replays).max().unwrap_or(0);
            self.rt_max_stale = false;
        }
    }

    /// Measurement-phase probabilities `bp_k`.
    pub fn measure_probs(&self) -> Result<Vec<f64>> {
        require_full(self.ring.is_full(), "QiER")?;
        let total: f64 = self.ring.iter().map(|s| s.qubit.p0()).sum();
        if !(total > 0.0) {
            return Err(Error::Domain("all qubits deny; cannot sample".into()));
        }
        Ok(self.ring.iter().map(|s| s.qubit.p0() / total).collect())
    }

    /// Preparation phase for one sampled slot.
    pub fn on_sampled(&mut self, index: usize, abs_td: f64, progress: Progress) {
        let slot = self.ring.get_mut(index);
        slot.qubit = QubitPriority::plus();
        slot.replays += 1;
        slot.last_abs_td = Some(abs_td);
        let rt = slot.replays;
        if !self.rt_max_stale {
            self.rt_max = self.rt_max.max(rt);
        } else {
            self.refresh_rt_max();
        }
        self.delta_max = self.delta_max.max(abs_td);
        let q = prepare(abs_td, self.delta_max, rt, self.rt_max, progress.episode, progress.max_episodes);
        self.ring.get_mut(index).qubit = q;
    }
}

impl ReplayMemory for QierBuffer {
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
        let fresh = QierSlot { transition: t, qubit: QubitPriority::ket_zero(), replays: 0, last_abs_td: None };
        let index = self.ring.write_index();
        let evicted_max = self.ring.len() == self.ring.capacity() && self.ring.get(index).replays == self.rt_max && self.rt_max > 0;
        let (slot, _) = self.ring.push(fresh);
        if evicted_max {
            self.rt_max_stale = true;
        }
        slot
    }

    fn transition(&self, index: usize) -> &Transition {
        &self.ring.get(index).transition
    }

    fn sample(&mut self, n: usize, _progress: Progress, rng: &mut SimRng) -> Result<SampledBatch> {
        let probs = self.measure_probs()?;
        let cdf = cumulative(probs);
        let indices = (0..n).map(|_| draw_categorical(&cdf, rng)).collect();
        Ok(SampledBatch { indices, weights: None })
    }

    fn update(&mut self, indices: &[usize], abs_td: &[f64], progress: Progress) -> Result<()> {
        if indices.len() != abs_td.len() {
            return Err(Error::param("abs_td", "length differs from sampled indices"));
        }
        for (&i, &d) in indices.iter().zip(abs_td) {
            self.on_sampled(i, d, progress);
        }
        Ok(())
    }

    fn dump_csv(&self) -> String {
        let mut out = String::from("slot,p0,rt,abs_delta\n");
        for (i, s) in self.ring.iter().enumerate() {
            let d = s.last_abs_td.map(|d| d.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", i, s.qubit.p0(), s.replays, d);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;
    use rand::SeedableRng;

    fn filled(c: usize) -> QierBuffer {
        let mut b = QierBuffer::new(c);
        for i in 0..c {
            b.push(transition(i as f64));
        }
        b
    }

    const P: Progress = Progress { episode: 10, max_episodes: 100 };

    #[test]
    fn push_initializes_to_ket_zero() {
        let mut b = QierBuffer::new(4);
        let k = b.push(transition(0.0));
        assert_eq!(b.slot(k).qubit.p0(), 1.0);
        assert_eq!(b.slot(k).replays, 0);
    }

    #[test]
    fn fifo_and_full_flag() {
        let mut b = QierBuffer::new(5);
        for i in 0..4 {
            b.push(transition(i as f64));
        }
        assert!(!b.is_full());
        assert!(b.measure_probs().is_err());
        b.push(transition(4.0));
        assert!(b.is_full());
        assert_eq!(b.write_index(), 0);
        assert_eq!(b.push(transition(5.0)), 0);
        assert_eq!(b.transition(0).n_step_return, 5.0);
    }

    #[test]
    fn overwritten_slot_resets_replays() {
        let mut b = filled(2);
        b.on_sampled(0, 0.5, P);
        b.on_sampled(0, 0.5, P);
        assert_eq!(b.rt_max(), 2);
        b.push(transition(9.0));
        assert_eq!(b.slot(0).replays, 0);
        assert_eq!(b.slot(0).qubit, QubitPriority::ket_zero());
        assert_eq!(b.rt_max(), 0);
    }

    #[test]
    fn fresh_buffer_is_uniform() {
        let probs = filled(8).measure_probs().unwrap();
        assert!(probs.iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn probs_from_hand_set_qubits() {
        let mut b = filled(3);
        b.set_qubit(1, QubitPriority::plus());
        b.set_qubit(2, QubitPriority::plus());
        let probs = b.measure_probs().unwrap();
        for (p, e) in probs.iter().zip([0.5, 0.25, 0.25]) {
            assert!((p - e).abs() < 1e-12);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_max_floor_and_growth() {
        let mut b = filled(3);
        assert_eq!(b.delta_max(), 1.0);
        b.on_sampled(1, 0.25, P);
        assert_eq!(b.delta_max(), 1.0);
        b.on_sampled(2, 7.0, P);
        assert_eq!(b.delta_max(), 7.0);
    }

    #[test]
    fn zero_td_sample_stays_uniform() {
        let mut b = filled(3);
        b.on_sampled(0, 0.0, P);
        assert!((b.slot(0).qubit.p0() - 0.5).abs() < 1e-12);
        assert_eq!(b.slot(0).replays, 1);
    }

    #[test]
    fn batch_size_and_degenerate_mass() {
        let mut b = filled(50);
        let tiny = QubitPriority::new(num_complex::Complex::new(1e-6, 0.0), num_complex::Complex::new((1.0f64 - 1e-12).sqrt(), 0.0));
        for i in 1..50 {
            b.set_qubit(i, tiny);
        }
        let mut rng = SimRng::seed_from_u64(1);
        let batch = b.sample(128, P, &mut rng).unwrap();
        assert_eq!(batch.indices.len(), 128);
        assert!(batch.indices.iter().filter(|&&i| i == 0).count() >= 127);
    }

    #[test]
    fn sampling_frequencies_match_probs() {
        let mut b = filled(6);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        b.set_qubit(1, QubitPriority::plus());
        b.set_qubit(2, QubitPriority::new(num_complex::Complex::new(0.3, 0.0), num_complex::Complex::new(0.0, (0.91f64).sqrt())));
        b.set_qubit(4, QubitPriority::new(num_complex::Complex::new(0.0, 0.9), num_complex::Complex::new((0.19f64).sqrt(), 0.0)));
        b.set_qubit(5, QubitPriority::new(num_complex::Complex::new(h * 0.5, 0.0), num_complex::Complex::new((1.0 - 0.125f64).sqrt(), 0.0)));
        let probs = b.measure_probs().unwrap();
        let mut rng = SimRng::seed_from_u64(2024);
        let mut counts = [0usize; 6];
        for _ in 0..1000 {
            for i in b.sample(100, P, &mut rng).unwrap().indices {
                counts[i] += 1;
            }
        }
        assert!(chi_square(&counts, &probs) < chi_square_critical(5, 0.001));
    }

    #[test]
    fn dump_has_one_row_per_slot() {
        let mut b = filled(4);
        b.on_sampled(3, 0.7, P);
        let dump = b.dump_csv();
        assert_eq!(dump.lines().count(), 5);
        assert!(dump.lines().last().unwrap().ends_with(",1,0.7"));
    }
}
