//! Experience replay: the quantum-inspired buffer plus uniform and
//! proportional-priority baselines, all behind [`ReplayMemory`].

mod per;
mod qier;
pub mod qubit;
mod uniform;

pub use per::{per_is_weights, per_probs, PerBuffer, PerParams};
pub use qier::{QierBuffer, QierSlot};
pub use qubit::{amplification_phases, collapse_ratio_sq, grover_apply, prepare, QubitPriority};
pub use uniform::{uniform_sample, UniformBuffer};

use rand::Rng;

use crate::envgeo::Vec3;
use crate::error::{Error, Result};
use crate::mdp::Terminal;
use crate::seed::SimRng;

/// Multi-step experience `(s_t, a_t, r_{t:t+h}, s_{t+h})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec3,
    pub action: usize,
    pub n_step_return: f64,
    pub next_state: Vec3,
    /// Steps actually accumulated, `1..=N_ms`.
    pub horizon: u32,
    /// Anything other than `None` stops bootstrapping.
    pub terminal_kind: Terminal,
}

impl Transition {
    pub fn bootstraps(&self) -> bool {
        self.terminal_kind == Terminal::None
    }
}

/// Training progress, used by age-dependent priorities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    /// 1-based current episode `te`.
    pub episode: usize,
    pub max_episodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub indices: Vec<usize>,
    /// Importance-sampling weights, when the buffer uses them.
    pub weights: Option<Vec<f64>>,
}

/// Which buffer a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayKind {
    Qier,
    Uniform,
    Per,
}

impl ReplayKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplayKind::Qier => "qier",
            ReplayKind::Uniform => "er",
            ReplayKind::Per => "per",
        }
    }
}

impl std::str::FromStr for ReplayKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qier" => Ok(ReplayKind::Qier),
            "er" | "uniform" => Ok(ReplayKind::Uniform),
            "per" => Ok(ReplayKind::Per),
            other => Err(Error::param("variant", format!("unknown replay variant `{other}`"))),
        }
    }
}

pub trait ReplayMemory: Send {
    fn capacity(&self) -> usize;
    fn len(&self) -> usize;
    fn is_full(&self) -> bool;
    /// Store a transition, overwriting the oldest once full. Returns the slot.
    fn push(&mut self, t: Transition) -> usize;
    fn transition(&self, index: usize) -> &Transition;
    /// Draw `n` slots with replacement.
    fn sample(&mut self, n: usize, progress: Progress, rng: &mut SimRng) -> Result<SampledBatch>;
    /// Feed back freshly computed `|delta|` for sampled slots, in draw order.
    fn update(&mut self, indices: &[usize], abs_td: &[f64], progress: Progress) -> Result<()>;
    /// Debug dump: `slot,p0,rt,abs_delta`.
    fn dump_csv(&self) -> String;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn new_memory(kind: ReplayKind, capacity: usize, per: PerParams) -> Box<dyn ReplayMemory> {
    match kind {
        ReplayKind::Qier => Box::new(QierBuffer::new(capacity)),
        ReplayKind::Uniform => Box::new(UniformBuffer::new(capacity)),
        ReplayKind::Per => Box::new(PerBuffer::new(capacity, per)),
    }
}

/// FIFO ring of fixed capacity.
#[derive(Debug, Clone)]
pub(crate) struct Ring<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
    full: bool,
}

impl<T> Ring<T> {
    pub(crate) fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { items: Vec::with_capacity(capacity), capacity, next: 0, full: false }
    }

    /// Returns `(slot, overwritten)`.
    pub(crate) fn push(&mut self, item: T) -> (usize, bool) {
        let slot = self.next;
        let overwritten = if self.items.len() < self.capacity {
            self.items.push(item);
            false
        } else {
            self.items[slot] = item;
            true
        };
        self.next += 1;
        if self.next == self.capacity {
            self.next = 0;
            self.full = true;
        }
        (slot, overwritten)
    }

    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    pub(crate) fn capacity(&self) -> usize {
        self.capacity
    }

    pub(crate) fn is_full(&self) -> bool {
        self.full
    }

    pub(crate) fn write_index(&self) -> usize {
        self.next
    }

    pub(crate) fn get(&self, i: usize) -> &T {
        &self.items[i]
    }

    pub(crate) fn get_mut(&mut self, i: usize) -> &mut T {
        &mut self.items[i]
    }

    pub(crate) fn iter(&self) -> std::slice::Iter<'_, T> {
        self.items.iter()
    }
}

/// Inclusive prefix sums of non-negative weights.
pub(crate) fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Categorical draw from prefix sums.
pub(crate) fn draw_categorical(cdf: &[f64], rng: &mut SimRng) -> usize {
    let total = *cdf.last().expect("non-empty distribution");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

pub(crate) fn require_full(full: bool, what: &str) -> Result<()> {
    if full {
        Ok(())
    } else {
        Err(Error::NotReady(format!("{what} buffer is not full yet")))
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ring_wraps_fifo() {
        let mut r = Ring::new(3);
        assert_eq!(r.push(1), (0, false));
        assert_eq!(r.push(2), (1, false));
        assert!(!r.is_full());
        assert_eq!(r.push(3), (2, false));
        assert!(r.is_full());
        assert_eq!(r.write_index(), 0);
        assert_eq!(r.push(4), (0, true));
        assert_eq!(*r.get(0), 4);
    }

    #[test]
    fn categorical_degenerate_mass() {
        let cdf = cumulative([0.0, 1.0, 0.0]);
        let mut rng = SimRng::seed_from_u64(0);
        assert!((0..1000).all(|_| draw_categorical(&cdf, &mut rng) == 1));
    }

    #[test]
    fn variant_names() {
        assert_eq!("qier".parse::<ReplayKind>().unwrap(), ReplayKind::Qier);
        assert_eq!("er".parse::<ReplayKind>().unwrap(), ReplayKind::Uniform);
        assert!("dcrl".parse::<ReplayKind>().is_err());
    }
}
