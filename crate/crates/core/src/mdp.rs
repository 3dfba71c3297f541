//! Episodic decision process over UAV positions at fixed altitude.

use rand::Rng;

use crate::envgeo::Vec3;
use crate::error::{Error, Result};
use crate::radio::RadioEnv;

pub const NUM_ACTIONS: usize = 8;

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Right, forward, left, backward, then the four diagonals.
const DIRECTIONS: [[f64; 2]; NUM_ACTIONS] =
    [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [H, H], [-H, H], [H, -H], [-H, -H]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(u8);

impl Action {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_ACTIONS).then_some(Self(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn direction(self) -> Vec3 {
        let [x, y] = DIRECTIONS[self.index()];
        Vec3::new(x, y, 0.0)
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..NUM_ACTIONS as u8).map(Action)
    }
}

pub fn action_vectors() -> [Vec3; NUM_ACTIONS] {
    std::array::from_fn(|i| Action(i as u8).direction())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub position: Vec3,
}

/// How an episode (or a step) ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    None,
    Destination,
    Boundary,
    StepCap,
}

impl Terminal {
    pub fn is_terminal(self) -> bool {
        self != Terminal::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Terminal::None => "none",
            Terminal::Destination => "destination",
            Terminal::Boundary => "boundary",
            Terminal::StepCap => "step-cap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: State,
    pub reward: f64,
    pub terminal: Terminal,
    /// Measured outage fraction at `next`; `None` on special-reward steps.
    pub top: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpConfig {
    /// UAV speed, m/s.
    pub speed: f64,
    /// Slot duration, s.
    pub dt: f64,
    /// Outage weight `tau`.
    pub tau: f64,
    pub reward_destination: f64,
    pub reward_boundary: f64,
    pub destination: Vec3,
    pub arrival_radius: f64,
    pub step_cap: usize,
    pub altitude: f64,
}

impl MdpConfig {
    pub fn paper() -> Self {
        Self {
            speed: 30.0,
            dt: 0.5,
            tau: 50.0,
            reward_destination: 400.0,
            reward_boundary: -10000.0,
            destination: Vec3::new(800.0, 800.0, 100.0),
            arrival_radius: 15.0,
            step_cap: 400,
            altitude: 100.0,
        }
    }

    pub fn step_length(&self) -> f64 {
        self.speed * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_length() > 0.0) {
            return Err(Error::param("V_u*dt", "step length must be positive"));
        }
        if self.arrival_radius < self.step_length() / 2.0 {
            return Err(Error::param("arrival_radius", "must be at least half a step"));
        }
        if self.tau < 0.0 {
            return Err(Error::param("tau", "must be non-negative"));
        }
        if self.step_cap == 0 {
            return Err(Error::param("N_max", "must be positive"));
        }
        Ok(())
    }

    pub fn arrived(&self, p: Vec3) -> bool {
        p.horizontal_distance(self.destination) <= self.arrival_radius
    }
}

/// Deterministic kinematics.
pub fn next_position(s: State, a: Action, cfg: &MdpConfig) -> Vec3 {
    s.position + a.direction() * cfg.step_length()
}

/// Move, then score the arrival point.
pub fn step<R: Rng + ?Sized>(s: State, a: Action, env: &RadioEnv, cfg: &MdpConfig, rng: &mut R) -> StepOutcome {
    let next = State { position: next_position(s, a, cfg) };
    if !env.airspace.contains(next.position) {
        return StepOutcome { next, reward: cfg.reward_boundary, terminal: Terminal::Boundary, top: None };
    }
    if cfg.arrived(next.position) {
        return StepOutcome { next, reward: cfg.reward_destination, terminal: Terminal::Destination, top: None };
    }
    let outages = env.measure_outages(next.position, rng);
    let top = outages as f64 / env.params.measurements as f64;
    StepOutcome { next, reward: shaped_reward(top, cfg), terminal: Terminal::None, top: Some(top) }
}

/// Movement penalty plus weighted outage penalty.
pub fn shaped_reward(top: f64, cfg: &MdpConfig) -> f64 {
    -1.0 - cfg.tau * cfg.dt * top
}

/// Uniform start at flight altitude, outside the arrival disc.
pub fn sample_initial_state<R: Rng + ?Sized>(rng: &mut R, cfg: &MdpConfig, env: &RadioEnv) -> State {
    let air = &env.airspace;
    loop {
        let p = Vec3::new(rng.random_range(air.lo.x..=air.up.x), rng.random_range(air.lo.y..=air.up.y), cfg.altitude);
        if !cfg.arrived(p) {
            return State { position: p };
        }
    }
}

/// `N + tau * EOD`.
pub fn episode_objective(steps: usize, eod_hat: f64, cfg: &MdpConfig) -> f64 {
    steps as f64 + cfg.tau * eod_hat
}

/// Return minus (-objective) for a completed episode: the special reward
/// replaces the movement penalty of the final slot.
pub fn terminal_adjustment(kind: Terminal, cfg: &MdpConfig) -> f64 {
    match kind {
        Terminal::Destination => cfg.reward_destination + 1.0,
        Terminal::Boundary => cfg.reward_boundary + 1.0,
        Terminal::None | Terminal::StepCap => 0.0,
    }
}
