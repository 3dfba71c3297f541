use qier::envgeo::Vec3;
use qier::mdp::Terminal;
use qier::replay::{new_memory, PerParams, Progress, QierBuffer, ReplayKind, ReplayMemory, Transition};
use qier::seed::SimRng;
use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const P: Progress = Progress { episode: 1, max_episodes: 10 };

fn transition(i: usize) -> Transition {
    Transition {
        state: Vec3::new(i as f64, 1.0, 100.0),
        action: i % 8,
        n_step_return: -1.0,
        next_state: Vec3::new(i as f64, 16.0, 100.0),
        horizon: 1,
        terminal_kind: Terminal::None,
    }
}

fn filled(kind: ReplayKind, c: usize, per: PerParams) -> Box<dyn ReplayMemory> {
    let mut m = new_memory(kind, c, per);
    for i in 0..c {
        m.push(transition(i));
    }
    m
}

fn counts(m: &mut dyn ReplayMemory, draws: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut c = vec![0; m.capacity()];
    for _ in 0..draws / 50 {
        for i in m.sample(50, P, rng).unwrap().indices {
            c[i] += 1;
        }
    }
    c
}

fn passes_chi_square(c: &[usize], probs: &[f64]) -> bool {
    let n: usize = c.iter().sum();
    let stat: f64 = c.iter().zip(probs).map(|(&o, &p)| (o as f64 - p * n as f64).powi(2) / (p * n as f64)).sum();
    stat < ChiSquared::new((c.len() - 1) as f64).unwrap().inverse_cdf(0.999)
}

#[test]
fn no_sampling_before_the_buffer_is_full() {
    let mut rng = SimRng::seed_from_u64(1);
    for kind in [ReplayKind::Qier, ReplayKind::Uniform, ReplayKind::Per] {
        let mut m = new_memory(kind, 4, PerParams::default());
        m.push(transition(0));
        assert!(m.sample(2, P, &mut rng).is_err(), "{}", kind.as_str());
    }
}

#[test]
fn per_without_prioritization_matches_uniform_replay() {
    let mut rng = SimRng::seed_from_u64(2);
    let c = 12;
    let mut per = filled(ReplayKind::Per, c, PerParams { alpha: 0.0, ..PerParams::default() });
    let idx: Vec<usize> = (0..c).collect();
    let td: Vec<f64> = (0..c).map(|i| 0.5 + i as f64).collect();
    per.update(&idx, &td, P).unwrap();
    let batch = per.sample(c, P, &mut rng).unwrap();
    assert!(batch.weights.unwrap().iter().all(|w| (w - 1.0).abs() < 1e-12));
    let uniform = vec![1.0 / c as f64; c];
    assert!(passes_chi_square(&counts(per.as_mut(), 60_000, &mut rng), &uniform));
    let mut er = filled(ReplayKind::Uniform, c, PerParams::default());
    assert!(passes_chi_square(&counts(er.as_mut(), 60_000, &mut rng), &uniform));
}

#[test]
fn fresh_qier_buffer_is_uniform_then_tracks_td_errors() {
    let mut rng = SimRng::seed_from_u64(3);
    let c = 8;
    let mut q = QierBuffer::new(c);
    for i in 0..c {
        q.push(transition(i));
    }
    assert!(q.measure_probs().unwrap().iter().all(|p| (p - 1.0 / c as f64).abs() < 1e-12));

    // Early on (te small) phi2 sits near pi/2, so larger TD errors are amplified.
    let idx: Vec<usize> = (0..c).collect();
    let td: Vec<f64> = (0..c).map(|i| (c - 1 - i) as f64).collect();
    q.update(&idx, &td, P).unwrap();
    let probs = q.measure_probs().unwrap();
    assert!(probs.windows(2).all(|w| w[0] > w[1]), "{probs:?}");
    assert!(passes_chi_square(&counts(&mut q, 60_000, &mut rng), &probs));
}
