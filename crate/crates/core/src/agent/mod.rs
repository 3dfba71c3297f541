//! Duelling double-DQN agent with multi-step targets.

mod adam;
pub mod checkpoint;
mod network;
mod nstep;

pub use adam::{AdamConfig, AdamState};
pub use network::{argmax, ForwardCache, LayerSlot, Network, NetworkShape};
pub use nstep::{discounted_return, NStepAssembler};

use rand::Rng;

use crate::envgeo::{Airspace, Vec3};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::replay::Transition;

/// Loss magnitude treated as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub n_ms: usize,
    pub epsilon_init: f64,
    /// Multiplicative per-episode decay.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    /// Target sync period in episodes.
    pub target_sync: usize,
    pub adam: AdamConfig,
    pub shape: NetworkShape,
    /// `Q = value_scale * network output`. A positive scale leaves the greedy
    /// policy unchanged and only speeds up how fast Adam can move the outputs.
    pub value_scale: f64,
}

impl AgentConfig {
    pub fn paper() -> Self {
        Self {
            gamma: 1.0,
            n_ms: 30,
            epsilon_init: 0.5,
            epsilon_decay: 0.998,
            epsilon_floor: 0.01,
            target_sync: 5,
            adam: AdamConfig::default(),
            shape: NetworkShape::paper(),
            value_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param("gamma", "must lie in [0, 1]"));
        }
        if self.n_ms == 0 {
            return Err(Error::param("N_ms", "must be at least 1"));
        }
        for (name, v) in [("epsilon", self.epsilon_init), ("dec_epsilon", self.epsilon_decay), ("epsilon_floor", self.epsilon_floor)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        if self.target_sync == 0 {
            return Err(Error::param("target_sync", "must be positive"));
        }
        if !(self.value_scale > 0.0 && self.value_scale.is_finite()) {
            return Err(Error::param("q_scale", "must be positive"));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::param("lr", "must be positive"));
        }
        self.shape.validate()
    }
}

/// Maps horizontal positions onto `[0, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateNormalizer {
    origin: Vec3,
    width: f64,
    depth: f64,
}

impl StateNormalizer {
    pub fn new(airspace: &Airspace) -> Self {
        Self { origin: airspace.lo, width: airspace.width(), depth: airspace.depth() }
    }

    pub fn identity() -> Self {
        Self { origin: Vec3::new(0.0, 0.0, 0.0), width: 1.0, depth: 1.0 }
    }

    pub fn apply<T: Real>(&self, p: Vec3) -> [T; 2] {
        [T::lit((p.x - self.origin.x) / self.width), T::lit((p.y - self.origin.y) / self.depth)]
    }

    pub fn batch<T: Real>(&self, points: impl IntoIterator<Item = Vec3>) -> Vec<T> {
        points.into_iter().flat_map(|p| self.apply::<T>(p)).collect()
    }
}

/// Epsilon-greedy choice; greedy ties go to the lowest index.
pub fn act<T: Real, R: Rng + ?Sized>(q: &[T], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// Double-DQN multi-step target for one transition, at unit value scale.
pub fn td_target<T: Real>(t: &Transition, online: &Network<T>, target: &Network<T>, gamma: f64, norm: &StateNormalizer) -> T {
    let r = T::lit(t.n_step_return);
    if !t.bootstraps() {
        return r;
    }
    let x = norm.apply::<T>(t.next_state);
    let a = argmax(&online.forward(&x));
    r + T::lit(gamma.powi(t.horizon as i32)) * target.forward(&x)[a]
}

pub fn sync_target<T: Real>(online: &Network<T>, target: &mut Network<T>) {
    target.copy_from(online);
}

/// Result of one gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss: f64,
    /// `|y - Q(s, a)|` per sample, before the update.
    pub abs_td: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Agent<T> {
    pub config: AgentConfig,
    pub online: Network<T>,
    pub target: Network<T>,
    pub adam: AdamState<T>,
    pub normalizer: StateNormalizer,
    pub epsilon: f64,
}

impl<T: Real> Agent<T> {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, normalizer: StateNormalizer, init_rng: &mut R) -> Result<Self> {
        config.validate()?;
        let online = Network::init(config.shape.clone(), init_rng);
        Ok(Self::from_network(config, normalizer, online))
    }

    pub fn from_network(config: AgentConfig, normalizer: StateNormalizer, online: Network<T>) -> Self {
        let target = online.clone();
        let adam = AdamState::new(online.params().len(), config.adam);
        let epsilon = config.epsilon_init;
        Self { config, online, target, adam, normalizer, epsilon }
    }

    pub fn q_values(&self, p: Vec3) -> Vec<T> {
        let scale = T::lit(self.config.value_scale);
        self.online.forward(&self.normalizer.apply::<T>(p)).into_iter().map(|q| q * scale).collect()
    }

    pub fn act<R: Rng + ?Sized>(&self, p: Vec3, rng: &mut R) -> usize {
        act(&self.q_values(p), self.epsilon, rng)
    }

    pub fn greedy(&self, p: Vec3) -> usize {
        argmax(&self.q_values(p))
    }

    /// Episode bookkeeping: decay epsilon, sync the target every
    /// `target_sync` episodes. `episode` is 1-based.
    pub fn end_episode(&mut self, episode: usize) {
        self.epsilon = (self.epsilon * self.config.epsilon_decay).max(self.config.epsilon_floor);
        if episode % self.config.target_sync == 0 {
            sync_target(&self.online, &mut self.target);
        }
    }

    /// Targets for a batch, computed with batched passes.
    pub fn targets(&self, batch: &[&Transition]) -> Vec<T> {
        let b = batch.len();
        let n = self.online.actions();
        let next = self.normalizer.batch::<T>(batch.iter().map(|t| t.next_state));
        let online_next = self.online.forward_batch(&next, b);
        let target_next = self.target.forward_batch(&next, b);
        let scale = T::lit(self.config.value_scale);
        batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let r = T::lit(t.n_step_return);
                if !t.bootstraps() {
                    return r;
                }
                let a = argmax(online_next.q_row(i, n));
                r + T::lit(self.config.gamma.powi(t.horizon as i32)) * scale * target_next.q_row(i, n)[a]
            })
            .collect()
    }

    /// Loss, per-sample TD errors and parameter gradient, without updating.
    pub fn loss_and_grad(&self, batch: &[&Transition], weights: Option<&[f64]>) -> (f64, Vec<f64>, Vec<T>) {
        let b = batch.len();
        assert!(b > 0, "empty mini-batch");
        if let Some(w) = weights {
            assert_eq!(w.len(), b, "one weight per sample");
        }
        let n = self.online.actions();
        let y = self.targets(batch);
        let x = self.normalizer.batch::<T>(batch.iter().map(|t| t.state));
        let cache = self.online.forward_batch(&x, b);
        let inv_b = T::one() / T::from_usize(b).unwrap();
        let two = T::lit(2.0);
        let scale = T::lit(self.config.value_scale);
        let mut dq = vec![T::zero(); b * n];
        let mut loss = T::zero();
        let mut abs_td = Vec::with_capacity(b);
        for (i, t) in batch.iter().enumerate() {
            let w = weights.map_or(T::one(), |w| T::lit(w[i]));
            let delta = y[i] - scale * cache.q[i * n + t.action];
            loss += w * delta * delta * inv_b;
            dq[i * n + t.action] = -two * w * delta * inv_b * scale;
            abs_td.push(delta.abs().to_f64_lossy());
        }
        let grad = self.online.backward(&cache, &dq);
        (loss.to_f64_lossy(), abs_td, grad)
    }

    /// One Adam step on the weighted mean-square TD loss.
    pub fn train_minibatch(&mut self, batch: &[&Transition], weights: Option<&[f64]>) -> Result<TrainReport> {
        let (loss, abs_td, grad) = self.loss_and_grad(batch, weights);
        if !loss.is_finite() || loss.abs() > DIVERGENCE_LOSS {
            return Err(Error::Divergence(format!("loss {loss}")));
        }
        self.adam.apply(self.online.params_mut(), &grad);
        if !self.online.is_finite() {
            return Err(Error::Divergence("non-finite parameters after update".into()));
        }
        Ok(TrainReport { loss, abs_td })
    }
}
