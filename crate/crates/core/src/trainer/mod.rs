//! Training loop, evaluation rollouts, baselines and run artifacts.

pub mod config;
mod metrics;
mod output;

pub use config::{load_config, BuildingSource, Precision, Profile, RunConfig};
pub use metrics::{aggregate_slots, moving_average, SlotStats};
pub use output::{episodes_csv, returns_ma_csv, trajectory_csv, write_run, write_topmap};

use rand::Rng;

use crate::agent::{Agent, NStepAssembler, Network, StateNormalizer};
use crate::envgeo::{generate_buildings, sector_layout, BuildingMap, Vec3};
use crate::error::{Error, Result};
use crate::mdp::{self, Action, MdpConfig, State, Terminal, NUM_ACTIONS};
use crate::num::Real;
use crate::radio::RadioEnv;
use crate::replay::{new_memory, Progress, Transition};
use crate::seed::{self, SimRng};

/// One recorded step of a rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub position: Vec3,
    /// Action that led here; `None` for the start point.
    pub action: Option<usize>,
    pub reward: f64,
    pub top: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub start: Vec3,
    pub steps: usize,
    pub ret: f64,
    /// Time-integrated outage estimate, seconds.
    pub eod_hat: f64,
    pub objective: f64,
    pub terminal: Terminal,
    /// Exploration rate in force during the episode.
    pub epsilon: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl EpisodeLog {
    pub fn time_cost(&self, dt: f64) -> f64 {
        self.steps as f64 * dt
    }
}

/// Buildings, sectors and link parameters for a run.
pub fn build_env(cfg: &RunConfig) -> Result<RadioEnv> {
    let air = cfg.airspace()?;
    let buildings = match cfg.buildings {
        BuildingSource::Itu => generate_buildings(&cfg.itu, &air, cfg.env_seed)?,
        BuildingSource::None => BuildingMap::empty(),
    };
    let sectors = sector_layout(&cfg.bs_points(), cfg.base_azimuth, &cfg.ula);
    RadioEnv::new(air, buildings, sectors, cfg.fading, cfg.radio.clone())
}

/// Roll out one episode under `policy`, recording the reward-stream TOP.
pub fn rollout<R: Rng + ?Sized>(
    start: State,
    env: &RadioEnv,
    cfg: &MdpConfig,
    fading: &mut R,
    mut policy: impl FnMut(Vec3) -> usize,
    mut on_step: impl FnMut(&State, usize, &mdp::StepOutcome, Terminal) -> Result<()>,
) -> Result<RolloutSummary> {
    let mut s = start;
    let mut traj = vec![TrajectoryPoint { step: 0, position: s.position, action: None, reward: 0.0, top: None }];
    let mut ret = 0.0;
    let mut top_sum = 0.0;
    let mut steps = 0;
    loop {
        let a = policy(s.position);
        let out = mdp::step(s, Action::new(a).expect("policy returned a valid action"), env, cfg, fading);
        steps += 1;
        ret += out.reward;
        if let Some(t) = out.top {
            top_sum += t;
        }
        let terminal = if out.terminal == Terminal::None && steps >= cfg.step_cap { Terminal::StepCap } else { out.terminal };
        on_step(&s, a, &out, terminal)?;
        traj.push(TrajectoryPoint { step: steps, position: out.next.position, action: Some(a), reward: out.reward, top: out.top });
        s = out.next;
        if terminal.is_terminal() {
            return Ok(RolloutSummary { steps, ret, eod_hat: top_sum * cfg.dt, terminal, trajectory: traj });
        }
    }
}

#[derive(Debug, Clone)]
pub struct RolloutSummary {
    pub steps: usize,
    pub ret: f64,
    pub eod_hat: f64,
    pub terminal: Terminal,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl RolloutSummary {
    fn into_log(self, episode: usize, start: Vec3, epsilon: f64, cfg: &MdpConfig) -> EpisodeLog {
        EpisodeLog {
            episode,
            start,
            steps: self.steps,
            ret: self.ret,
            eod_hat: self.eod_hat,
            objective: mdp::episode_objective(self.steps, self.eod_hat, cfg),
            terminal: self.terminal,
            epsilon,
            trajectory: self.trajectory,
        }
    }
}

/// Everything a finished training run produces.
#[derive(Debug, Clone)]
pub struct TrainingOutcome<T> {
    pub logs: Vec<EpisodeLog>,
    pub agent: Agent<T>,
}

/// Called after every episode with the log just produced.
pub type EpisodeHook<'a> = Option<&'a mut dyn FnMut(&EpisodeLog)>;

/// Train one agent end to end.
///
/// Each episode draws a start from the start stream, acts epsilon-greedily,
/// assembles multi-step transitions into the replay memory and, once the
/// memory is full, performs `updates_per_step` sample-train-update rounds
/// per step.
pub fn run_training<T: Real>(cfg: &RunConfig, env: &RadioEnv, mut hook: EpisodeHook<'_>) -> Result<TrainingOutcome<T>> {
    cfg.validate()?;
    let mut starts = seed::stream(cfg.seed, seed::STARTS);
    let mut explore = seed::stream(cfg.seed, seed::EXPLORATION);
    let mut fading = seed::stream(cfg.seed, seed::FADING);
    let mut replay_rng = seed::stream(cfg.seed, seed::REPLAY);
    let mut init = seed::stream(cfg.seed, seed::INIT);

    let mut agent = Agent::<T>::new(cfg.agent.clone(), StateNormalizer::new(&env.airspace), &mut init)?;
    let mut memory = new_memory(cfg.variant, cfg.capacity, cfg.per);
    let mut asm = NStepAssembler::new(cfg.agent.n_ms, cfg.agent.gamma);
    let mut logs = Vec::with_capacity(cfg.te_max);

    for te in 1..=cfg.te_max {
        let progress = Progress { episode: te, max_episodes: cfg.te_max };
        let start = mdp::sample_initial_state(&mut starts, &cfg.mdp, env);
        let epsilon = agent.epsilon;
        asm.clear();
        let summary = {
            let agent_ref = &mut agent;
            let explore = &mut explore;
            let memory = &mut memory;
            let asm = &mut asm;
            let replay_rng = &mut replay_rng;
            // The policy only reads the agent; training happens in the step hook.
            let policy_agent = std::cell::RefCell::new(agent_ref);
            rollout(
                start,
                env,
                &cfg.mdp,
                &mut fading,
                |p| policy_agent.borrow().act(p, explore),
                |s, a, out, terminal| {
                    for t in asm.push(s.position, a, out.reward, out.next.position, terminal) {
                        memory.push(t);
                    }
                    let rounds = if memory.is_full() { cfg.updates_per_step } else { 0 };
                    for _ in 0..rounds {
                        let batch = memory.sample(cfg.batch, progress, replay_rng)?;
                        let refs: Vec<&Transition> = batch.indices.iter().map(|&i| memory.transition(i)).collect();
                        let report = policy_agent.borrow_mut().train_minibatch(&refs, batch.weights.as_deref())?;
                        memory.update(&batch.indices, &report.abs_td, progress)?;
                    }
                    Ok(())
                },
            )?
        };
        agent.end_episode(te);
        let log = summary.into_log(te, start.position, epsilon, &cfg.mdp);
        if let Some(h) = hook.as_mut() {
            h(&log);
        }
        logs.push(log);
    }
    Ok(TrainingOutcome { logs, agent })
}

/// Evaluation starts: the configured list or a seeded uniform draw.
pub fn eval_starts(cfg: &RunConfig, env: &RadioEnv) -> Vec<Vec3> {
    if !cfg.eval_starts.is_empty() {
        return cfg.eval_starts.iter().map(|&(x, y)| Vec3::new(x, y, cfg.mdp.altitude)).collect();
    }
    let mut rng = seed::stream(cfg.env_seed, seed::EVAL);
    (0..cfg.eval_count).map(|_| mdp::sample_initial_state(&mut rng, &cfg.mdp, env).position).collect()
}

/// Greedy rollouts; start `k` uses its own fading stream.
pub fn evaluate_policy<T: Real>(net: &Network<T>, starts: &[Vec3], cfg: &RunConfig, env: &RadioEnv) -> Result<Vec<EpisodeLog>> {
    let norm = StateNormalizer::new(&env.airspace);
    starts
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut fading = seed::indexed_stream(cfg.seed, seed::EVAL, k as u64);
            let policy = |q: Vec3| crate::agent::argmax(&net.forward(&norm.apply::<T>(q)));
            let s = rollout(State { position: p }, env, &cfg.mdp, &mut fading, policy, |_, _, _, _| Ok(()))?;
            Ok(s.into_log(k + 1, p, 0.0, &cfg.mdp))
        })
        .collect()
}

/// The action whose direction best matches `dest - p`; ties to the lowest index.
pub fn straight_line_action(p: Vec3, dest: Vec3) -> usize {
    let d = Vec3::new(dest.x - p.x, dest.y - p.y, 0.0);
    let dirs = mdp::action_vectors();
    let mut best = 0;
    for a in 1..NUM_ACTIONS {
        if dirs[a].dot(d) > dirs[best].dot(d) {
            best = a;
        }
    }
    best
}

/// Non-learning baseline: always head straight for the destination.
pub fn straight_line_metrics(start: Vec3, cfg: &RunConfig, env: &RadioEnv, fading: &mut SimRng) -> Result<EpisodeLog> {
    let dest = cfg.mdp.destination;
    let s = rollout(State { position: start }, env, &cfg.mdp, fading, |p| straight_line_action(p, dest), |_, _, _, _| Ok(()))?;
    Ok(s.into_log(0, start, 0.0, &cfg.mdp))
}

/// Straight-line logs over `starts`, with the same fading streams as
/// [`evaluate_policy`].
pub fn straight_line_eval(starts: &[Vec3], cfg: &RunConfig, env: &RadioEnv) -> Result<Vec<EpisodeLog>> {
    starts
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut fading = seed::indexed_stream(cfg.seed, seed::EVAL, k as u64);
            let mut log = straight_line_metrics(p, cfg, env, &mut fading)?;
            log.episode = k + 1;
            Ok(log)
        })
        .collect()
}

/// Fraction of logs that ended at the destination.
pub fn reach_rate(logs: &[EpisodeLog]) -> f64 {
    if logs.is_empty() {
        return 0.0;
    }
    logs.iter().filter(|l| l.terminal == Terminal::Destination).count() as f64 / logs.len() as f64
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Divergence errors map to their own exit path in the CLI.
pub fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Divergence(_))
}
