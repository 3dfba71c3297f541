use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use qier::envgeo::Vec3;
use qier::mdp::Terminal;
use qier::replay::{PerBuffer, PerParams, Progress, QierBuffer, QubitPriority, ReplayMemory, Transition, UniformBuffer};
use qier::seed::SimRng;
use qier::{Error, Result};

const DRAWS: usize = 100_000;
const BATCH: usize = 100;
const SIGNIFICANCE: f64 = 0.001;

fn transition(i: usize) -> Transition {
    Transition {
        state: Vec3::new(i as f64, 0.0, 100.0),
        action: i % 8,
        n_step_return: -(i as f64),
        next_state: Vec3::new(i as f64 + 15.0, 0.0, 100.0),
        horizon: 1,
        terminal_kind: Terminal::None,
    }
}

fn histogram(mem: &mut dyn ReplayMemory, rng: &mut SimRng) -> Result<Vec<usize>> {
    let p = Progress { episode: 1, max_episodes: 1 };
    let mut counts = vec![0usize; mem.capacity()];
    for _ in 0..DRAWS / BATCH {
        for i in mem.sample(BATCH, p, rng)?.indices {
            counts[i] += 1;
        }
    }
    Ok(counts)
}

/// `(statistic, critical value)` of Pearson's test.
fn chi_square(counts: &[usize], probs: &[f64]) -> (f64, f64) {
    let n: usize = counts.iter().sum();
    let stat = counts.iter().zip(probs).map(|(&c, &p)| (c as f64 - p * n as f64).powi(2) / (p * n as f64)).sum();
    let crit = ChiSquared::new((counts.len() - 1) as f64).expect("positive dof").inverse_cdf(1.0 - SIGNIFICANCE);
    (stat, crit)
}

pub fn run(out: &Path) -> Result<()> {
    let mut rng = SimRng::seed_from_u64(20_240_101);
    let mut report = String::from("check,statistic,critical,pass\n");
    let mut all_ok = true;
    let mut record = |name: &str, (stat, crit): (f64, f64)| {
        let ok = stat < crit;
        all_ok &= ok;
        println!("{} {name}: chi2 = {stat:.2} (critical {crit:.2})", if ok { "PASS" } else { "FAIL" });
        let _ = writeln!(report, "{name},{stat},{crit},{ok}");
    };

    let c = 8;
    let mut q = QierBuffer::new(c);
    for i in 0..c {
        q.push(transition(i));
    }
    for (i, p0) in [(1, 0.5), (2, 0.1), (3, 0.9), (5, 0.02), (6, 0.7)] {
        let alpha = Complex::from_polar(f64::sqrt(p0), 0.3 * i as f64);
        let beta = Complex::from_polar(f64::sqrt(1.0 - p0), -0.2);
        q.set_qubit(i, QubitPriority::new(alpha, beta));
    }
    let probs = q.measure_probs()?;
    let counts = histogram(&mut q, &mut rng)?;
    record("qier_frozen", chi_square(&counts, &probs));

    let mut per = PerBuffer::new(c, PerParams { alpha: 0.0, ..PerParams::default() });
    for i in 0..c {
        per.push(transition(i));
    }
    let idx: Vec<usize> = (0..c).collect();
    let td: Vec<f64> = (0..c).map(|i| i as f64 * 3.0).collect();
    per.update(&idx, &td, Progress { episode: 1, max_episodes: 1 })?;
    let uniform = vec![1.0 / c as f64; c];
    let counts = histogram(&mut per, &mut rng)?;
    record("per_alpha0_uniform", chi_square(&counts, &uniform));

    let mut er = UniformBuffer::new(c);
    for i in 0..c {
        er.push(transition(i));
    }
    let counts = histogram(&mut er, &mut rng)?;
    record("er_uniform", chi_square(&counts, &uniform));

    std::fs::write(out.join("buffers_selftest.csv"), report)?;
    if all_ok {
        Ok(())
    } else {
        Err(Error::Domain("replay sampler self-test failed".into()))
    }
}
