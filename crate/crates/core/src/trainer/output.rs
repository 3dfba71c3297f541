//! CSV and raster artifacts of a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{moving_average, EpisodeLog, RunConfig};
use crate::agent::{checkpoint, Network};
use crate::error::Result;
use crate::num::Real;
use crate::radio::TopMap;

/// Moving-average window for return curves.
pub const RETURN_WINDOW: usize = 200;

pub fn episodes_csv(logs: &[EpisodeLog]) -> String {
    let mut out = String::from("episode,start_x,start_y,steps,return,eod_hat,objective,terminal,epsilon\n");
    for l in logs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            l.episode,
            l.start.x,
            l.start.y,
            l.steps,
            l.ret,
            l.eod_hat,
            l.objective,
            l.terminal.as_str(),
            l.epsilon
        );
    }
    out
}

pub fn returns_ma_csv(logs: &[EpisodeLog], variant: Option<&str>) -> String {
    let returns: Vec<f64> = logs.iter().map(|l| l.ret).collect();
    let ma = moving_average(&returns, RETURN_WINDOW);
    let mut out = String::from(if variant.is_some() { "variant,episode,return,return_ma\n" } else { "episode,return,return_ma\n" });
    for (l, m) in logs.iter().zip(ma) {
        match variant {
            Some(v) => {
                let _ = writeln!(out, "{v},{},{},{}", l.episode, l.ret, m);
            }
            None => {
                let _ = writeln!(out, "{},{},{}", l.episode, l.ret, m);
            }
        }
    }
    out
}

pub fn trajectory_csv(log: &EpisodeLog) -> String {
    let mut out = String::from("step,x,y,z,action,reward,top_estimate\n");
    for p in &log.trajectory {
        let a = p.action.map(|a| a.to_string()).unwrap_or_default();
        let t = p.top.map(|t| t.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{}", p.step, p.position.x, p.position.y, p.position.z, a, p.reward, t);
    }
    out
}

/// `topmap.csv`, `topmap.meta` and `topmap.pgm` under `dir`.
pub fn write_topmap(dir: &Path, map: &TopMap) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("topmap.csv"), map.to_csv())?;
    fs::write(dir.join("topmap.meta"), map.metadata())?;
    fs::write(dir.join("topmap.pgm"), map.to_pgm())?;
    Ok(())
}

/// Write the standard run directory.
pub fn write_run<T: Real>(dir: &Path, cfg: &RunConfig, logs: &[EpisodeLog], net: &Network<T>, map: Option<&TopMap>) -> Result<()> {
    fs::create_dir_all(dir.join("trajectories"))?;
    fs::write(dir.join("config.txt"), cfg.echo())?;
    fs::write(dir.join("episodes.csv"), episodes_csv(logs))?;
    fs::write(dir.join("returns_ma.csv"), returns_ma_csv(logs, None))?;
    let skip = logs.len().saturating_sub(cfg.export_last);
    for l in &logs[skip..] {
        fs::write(dir.join("trajectories").join(format!("train_{:05}.csv", l.episode)), trajectory_csv(l))?;
    }
    checkpoint::save(net, &cfg.fingerprint(), &dir.join("online.ckpt"))?;
    if let Some(m) = map {
        write_topmap(dir, m)?;
    }
    Ok(())
}
