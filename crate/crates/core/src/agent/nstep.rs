use std::collections::VecDeque;

use crate::envgeo::Vec3;
use crate::mdp::Terminal;
use crate::replay::Transition;

#[derive(Debug, Clone, Copy)]
struct Step {
    state: Vec3,
    action: usize,
    reward: f64,
}

/// Sliding window that turns one-step experience into `N`-step transitions.
///
/// While the episode runs, each new step past the first `N-1` emits the
/// transition that starts `N` steps back. When the episode ends every
/// window still open is flushed as a terminal transition with a shorter
/// horizon.
#[derive(Debug, Clone)]
pub struct NStepAssembler {
    n: usize,
    gamma: f64,
    window: VecDeque<Step>,
}

impl NStepAssembler {
    pub fn new(n: usize, gamma: f64) -> Self {
        assert!(n >= 1, "n-step horizon must be at least 1");
        Self { n, gamma, window: VecDeque::with_capacity(n) }
    }

    pub fn pending(&self) -> usize {
        self.window.len()
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }

    /// Record `(s, a, r, s')`; `terminal` is how the step ended.
    pub fn push(&mut self, state: Vec3, action: usize, reward: f64, next_state: Vec3, terminal: Terminal) -> Vec<Transition> {
        self.window.push_back(Step { state, action, reward });
        if terminal.is_terminal() {
            let mut out = Vec::with_capacity(self.window.len());
            while !self.window.is_empty() {
                out.push(self.emit(next_state, terminal));
                self.window.pop_front();
            }
            return out;
        }
        if self.window.len() == self.n {
            let t = self.emit(next_state, Terminal::None);
            self.window.pop_front();
            return vec![t];
        }
        Vec::new()
    }

    fn emit(&self, next_state: Vec3, terminal: Terminal) -> Transition {
        let head = self.window[0];
        let mut ret = 0.0;
        let mut disc = 1.0;
        for s in &self.window {
            ret += disc * s.reward;
            disc *= self.gamma;
        }
        Transition {
            state: head.state,
            action: head.action,
            n_step_return: ret,
            next_state,
            horizon: self.window.len() as u32,
            terminal_kind: terminal,
        }
    }
}

/// Discounted sum `sum_k gamma^k r_k`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Vec3 {
        Vec3::new(x, 0.0, 100.0)
    }

    #[test]
    fn plain_sum_with_unit_gamma() {
        let mut asm = NStepAssembler::new(3, 1.0);
        assert!(asm.push(p(0.0), 0, -1.0, p(1.0), Terminal::None).is_empty());
        assert!(asm.push(p(1.0), 1, -2.0, p(2.0), Terminal::None).is_empty());
        let out = asm.push(p(2.0), 2, -3.0, p(3.0), Terminal::None);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].n_step_return, -6.0);
        assert_eq!(out[0].horizon, 3);
        assert_eq!(out[0].state, p(0.0));
        assert_eq!(out[0].next_state, p(3.0));
        assert!(out[0].bootstraps());
    }

    #[test]
    fn geometric_sum() {
        assert_eq!(discounted_return(&[1.0, 1.0], 0.5), 1.5);
        let mut asm = NStepAssembler::new(2, 0.5);
        asm.push(p(0.0), 0, 1.0, p(1.0), Terminal::None);
        assert_eq!(asm.push(p(1.0), 0, 1.0, p(2.0), Terminal::None)[0].n_step_return, 1.5);
    }

    #[test]
    fn short_episode_flushes_with_terminal_flag() {
        let mut asm = NStepAssembler::new(30, 1.0);
        asm.push(p(0.0), 0, -1.0, p(1.0), Terminal::None);
        asm.push(p(1.0), 0, -2.0, p(2.0), Terminal::None);
        let out = asm.push(p(2.0), 0, 400.0, p(3.0), Terminal::Destination);
        assert_eq!(out.len(), 3);
        assert_eq!(out.iter().map(|t| t.horizon).collect::<Vec<_>>(), vec![3, 2, 1]);
        assert_eq!(out.iter().map(|t| t.n_step_return).collect::<Vec<_>>(), vec![397.0, 398.0, 400.0]);
        assert!(out.iter().all(|t| t.terminal_kind == Terminal::Destination && t.next_state == p(3.0)));
        assert_eq!(asm.pending(), 0);
    }

    #[test]
    fn every_step_is_covered_once() {
        let mut asm = NStepAssembler::new(4, 1.0);
        let mut emitted = Vec::new();
        for i in 0..10 {
            let term = if i == 9 { Terminal::Boundary } else { Terminal::None };
            emitted.extend(asm.push(p(i as f64), 0, -1.0, p(i as f64 + 1.0), term));
        }
        assert_eq!(emitted.len(), 10);
        let starts: Vec<f64> = emitted.iter().map(|t| t.state.x).collect();
        assert_eq!(starts, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }
}
