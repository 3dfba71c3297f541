use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qier::agent::checkpoint;
use qier::num::Real;
use qier::radio::build_top_map;
use qier::replay::ReplayKind;
use qier::trainer::{self, EpisodeLog, Precision, RunConfig};
use qier::Result;

pub fn topmap(cfg: &RunConfig, out: &Path) -> Result<()> {
    let env = trainer::build_env(cfg)?;
    let map = build_top_map(&env, cfg.topmap_resolution, cfg.mdp.altitude, cfg.env_seed)?;
    trainer::write_topmap(out, &map)?;
    fs::write(out.join("buildings.csv"), env.buildings.to_table())?;
    fs::write(out.join("config.txt"), cfg.echo())?;
    let hi = map.values.iter().filter(|&&v| v >= 0.5).count();
    println!("topmap {}x{} at {} m, {} cells with TOP >= 0.5 -> {}", map.nx, map.ny, map.resolution, hi, out.display());
    Ok(())
}

/// Headline numbers of one trained run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub variant: ReplayKind,
    pub first_100: f64,
    pub last_100: f64,
    pub reach_rate: f64,
    pub eval_eod: f64,
    pub straight_eod: f64,
}

fn eval_csv(logs: &[EpisodeLog]) -> String {
    let mut s = String::from("start,start_x,start_y,steps,return,eod_hat,objective,terminal\n");
    for l in logs {
        let _ = writeln!(s, "{},{},{},{},{},{},{},{}", l.episode, l.start.x, l.start.y, l.steps, l.ret, l.eod_hat, l.objective, l.terminal.as_str());
    }
    s
}

fn write_eval(out: &Path, policy: &[EpisodeLog], straight: &[EpisodeLog]) -> Result<()> {
    fs::create_dir_all(out.join("trajectories"))?;
    fs::write(out.join("eval.csv"), eval_csv(policy))?;
    fs::write(out.join("straight_line.csv"), eval_csv(straight))?;
    for l in policy {
        fs::write(out.join("trajectories").join(format!("eval_{:03}.csv", l.episode)), trainer::trajectory_csv(l))?;
    }
    for l in straight {
        fs::write(out.join("trajectories").join(format!("straight_{:03}.csv", l.episode)), trainer::trajectory_csv(l))?;
    }
    Ok(())
}

pub fn train<T: Real>(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let env = trainer::build_env(cfg)?;
    let map = build_top_map(&env, cfg.topmap_resolution, cfg.mdp.altitude, cfg.env_seed)?;
    let mut report = |l: &EpisodeLog| {
        if l.episode % 50 == 0 {
            eprintln!("[{}] episode {:>5}  return {:>10.1}  steps {:>3}  {}", cfg.variant.as_str(), l.episode, l.ret, l.steps, l.terminal.as_str());
        }
    };
    let outcome = trainer::run_training::<T>(cfg, &env, Some(&mut report))?;
    trainer::write_run(out, cfg, &outcome.logs, &outcome.agent.online, Some(&map))?;

    let starts = trainer::eval_starts(cfg, &env);
    let policy = trainer::evaluate_policy(&outcome.agent.online, &starts, cfg, &env)?;
    let straight = trainer::straight_line_eval(&starts, cfg, &env)?;
    write_eval(out, &policy, &straight)?;

    let n = outcome.logs.len();
    let window = 100.min(n);
    let summary = RunSummary {
        variant: cfg.variant,
        first_100: trainer::mean(outcome.logs[..window].iter().map(|l| l.ret)),
        last_100: trainer::mean(outcome.logs[n - window..].iter().map(|l| l.ret)),
        reach_rate: trainer::reach_rate(&policy),
        eval_eod: trainer::mean(policy.iter().map(|l| l.eod_hat)),
        straight_eod: trainer::mean(straight.iter().map(|l| l.eod_hat)),
    };
    println!(
        "{}: return first/last {} episodes {:.1} -> {:.1}, reach {:.0}%, EOD {:.3} s (straight line {:.3} s) -> {}",
        cfg.variant.as_str(),
        window,
        summary.first_100,
        summary.last_100,
        100.0 * summary.reach_rate,
        summary.eval_eod,
        summary.straight_eod,
        out.display()
    );
    Ok(summary)
}

pub fn eval<T: Real>(cfg: &RunConfig, ckpt: &Path, out: &Path) -> Result<()> {
    let loaded = checkpoint::load::<T>(ckpt)?;
    if loaded.fingerprint != cfg.fingerprint() {
        eprintln!("qier: note: checkpoint was trained under a different configuration ({})", loaded.fingerprint);
    }
    let env = trainer::build_env(cfg)?;
    let starts = trainer::eval_starts(cfg, &env);
    let policy = trainer::evaluate_policy(&loaded.network, &starts, cfg, &env)?;
    let straight = trainer::straight_line_eval(&starts, cfg, &env)?;
    write_eval(out, &policy, &straight)?;
    println!(
        "reach {:.0}%, EOD {:.3} s (straight line {:.3} s), objective {:.2} (straight line {:.2})",
        100.0 * trainer::reach_rate(&policy),
        trainer::mean(policy.iter().map(|l| l.eod_hat)),
        trainer::mean(straight.iter().map(|l| l.eod_hat)),
        trainer::mean(policy.iter().map(|l| l.objective)),
        trainer::mean(straight.iter().map(|l| l.objective)),
    );
    Ok(())
}

pub fn compare(cfg: &RunConfig, variants: &[String], out: &Path) -> Result<()> {
    let kinds: Vec<ReplayKind> = variants.iter().map(|v| v.parse()).collect::<Result<_>>()?;
    let mut merged = String::from("variant,episode,return,return_ma\n");
    let mut summary = String::from("variant,return_first_100,return_last_100,reach_rate,eval_eod,straight_line_eod\n");
    for kind in kinds {
        let mut c = cfg.clone();
        c.variant = kind;
        let dir = out.join(kind.as_str());
        let s = match c.precision {
            Precision::F32 => train::<f32>(&c, &dir)?,
            Precision::F64 => train::<f64>(&c, &dir)?,
        };
        let text = fs::read_to_string(dir.join("returns_ma.csv"))?;
        for line in text.lines().skip(1) {
            let _ = writeln!(merged, "{},{line}", kind.as_str());
        }
        let _ = writeln!(summary, "{},{},{},{},{},{}", s.variant.as_str(), s.first_100, s.last_100, s.reach_rate, s.eval_eod, s.straight_eod);
    }
    fs::write(out.join("returns_ma.csv"), merged)?;
    fs::write(out.join("summary.csv"), summary)?;
    Ok(())
}
