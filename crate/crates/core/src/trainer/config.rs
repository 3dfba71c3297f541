//! Run configuration and its flat `key = value` text form.
//!
//! Lines are `key = value`; `#` starts a comment. Every key is optional and
//! falls back to the selected profile. Lists use `;` between items and `:`
//! between coordinates, e.g. `bs_positions = 250:250;750:250`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::agent::AgentConfig;
use crate::antenna::UlaConfig;
use crate::envgeo::{Airspace, ItuParams, Vec3};
use crate::error::{Error, Result};
use crate::mdp::MdpConfig;
use crate::radio::{FadingModel, RadioParams};
use crate::replay::{PerParams, ReplayKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Paper,
    Desk,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::param("profile", format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildingSource {
    /// Statistical ITU realization from the environment seed.
    Itu,
    /// Open field, no blockage.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub side_x: f64,
    pub side_y: f64,
    pub bs_positions: Vec<(f64, f64)>,
    pub bs_height: f64,
    pub base_azimuth: f64,
    pub ula: UlaConfig<f64>,
    pub buildings: BuildingSource,
    pub itu: ItuParams,
    pub radio: RadioParams,
    pub fading: FadingModel,
    pub mdp: MdpConfig,
    pub agent: AgentConfig,
    pub variant: ReplayKind,
    pub capacity: usize,
    pub batch: usize,
    /// Sample-train-update rounds per environment step once the memory is full.
    pub updates_per_step: usize,
    pub per: PerParams,
    pub te_max: usize,
    pub env_seed: u64,
    pub seed: u64,
    pub precision: Precision,
    pub topmap_resolution: f64,
    /// Explicit evaluation starts; when empty, `eval_count` are drawn.
    pub eval_starts: Vec<(f64, f64)>,
    pub eval_count: usize,
    /// Training episodes whose trajectories are exported, counted from the end.
    pub export_last: usize,
}

impl RunConfig {
    pub fn paper() -> Self {
        let mdp = MdpConfig::paper();
        Self {
            side_x: 1000.0,
            side_y: 1000.0,
            bs_positions: vec![(250.0, 250.0), (750.0, 250.0), (250.0, 750.0), (750.0, 750.0)],
            bs_height: 25.0,
            base_azimuth: 30.0,
            ula: UlaConfig::paper(),
            buildings: BuildingSource::Itu,
            itu: ItuParams::default(),
            radio: RadioParams::default(),
            fading: FadingModel::default(),
            mdp,
            agent: AgentConfig::paper(),
            variant: ReplayKind::Qier,
            capacity: 20_000,
            batch: 128,
            updates_per_step: 1,
            per: PerParams::default(),
            te_max: 2000,
            env_seed: 1,
            seed: 1,
            precision: Precision::F64,
            topmap_resolution: 50.0,
            eval_starts: Vec::new(),
            eval_count: 20,
            export_last: 10,
        }
    }

    /// Scaled-down setting that trains in minutes on one core.
    pub fn desk() -> Self {
        let mut c = Self::paper();
        c.side_x = 600.0;
        c.side_y = 600.0;
        // Coverage holes sit inside the first sector's wedge, so the straight
        // line to the destination crosses them.
        c.bs_positions = vec![(450.0, 600.0), (600.0, 450.0)];
        c.base_azimuth = 225.0;
        c.radio.measurements = 200;
        c.capacity = 4000;
        c.batch = 64;
        c.te_max = 600;
        c.mdp.destination = Vec3::new(210.0, 330.0, c.mdp.altitude);
        c.mdp.arrival_radius = 30.0;
        c.mdp.step_cap = 200;
        c.agent.shape.hidden = vec![128, 64, 32];
        c.agent.value_scale = 10.0;
        c.agent.epsilon_decay = 0.995;
        c.agent.n_ms = 5;
        c.precision = Precision::F32;
        c
    }

    pub fn profile(p: Profile) -> Self {
        match p {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }

    pub fn airspace(&self) -> Result<Airspace> {
        Airspace::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(self.side_x, self.side_y, self.mdp.altitude))
    }

    pub fn bs_points(&self) -> Vec<Vec3> {
        self.bs_positions.iter().map(|&(x, y)| Vec3::new(x, y, self.bs_height)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let air = self.airspace()?;
        if !(self.side_x > 0.0 && self.side_y > 0.0) {
            return Err(Error::param("D", "airspace sides must be positive"));
        }
        if self.bs_positions.is_empty() {
            return Err(Error::param("bs_positions", "at least one BS required"));
        }
        for &(x, y) in &self.bs_positions {
            if !(0.0..=self.side_x).contains(&x) || !(0.0..=self.side_y).contains(&y) {
                return Err(Error::param("bs_positions", format!("({x}, {y}) lies outside the airspace")));
            }
        }
        if !(self.bs_height > 0.0) {
            return Err(Error::param("bs_height", "must be positive"));
        }
        if self.ula.elements == 0 || !(self.ula.spacing_m > 0.0) || !(self.ula.carrier_hz > 0.0) {
            return Err(Error::param("M/d_v/f_c", "array parameters must be positive"));
        }
        if !(self.ula.theta_3db_deg > 0.0 && self.ula.phi_3db_deg > 0.0) {
            return Err(Error::param("theta_3dB/phi_3dB", "beamwidths must be positive"));
        }
        if self.buildings == BuildingSource::Itu {
            self.itu.validate()?;
        }
        self.radio.validate()?;
        self.fading.validate()?;
        self.mdp.validate()?;
        if !air.contains(self.mdp.destination) {
            return Err(Error::param("destination", "must lie inside the airspace"));
        }
        self.agent.validate()?;
        if self.capacity == 0 || self.batch == 0 || self.updates_per_step == 0 {
            return Err(Error::param("C/N_mb/updates_per_step", "must be positive"));
        }
        if self.te_max == 0 {
            return Err(Error::param("te_max", "must be positive"));
        }
        if !(self.per.alpha >= 0.0 && self.per.xi > 0.0 && (0.0..=1.0).contains(&self.per.beta0)) {
            return Err(Error::param("per", "need alpha >= 0, xi > 0, beta in [0, 1]"));
        }
        if !(self.topmap_resolution > 0.0) {
            return Err(Error::param("topmap_resolution", "must be positive"));
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.mdp;
        let a = &self.agent;
        vec![
            ("D_x", self.side_x.to_string()),
            ("D_y", self.side_y.to_string()),
            ("bs_positions", fmt_points(&self.bs_positions)),
            ("bs_height", self.bs_height.to_string()),
            ("base_azimuth", self.base_azimuth.to_string()),
            ("M", self.ula.elements.to_string()),
            ("d_v", self.ula.spacing_m.to_string()),
            ("f_c", self.ula.carrier_hz.to_string()),
            ("theta_etilt", self.ula.tilt_deg.to_string()),
            ("theta_3dB", self.ula.theta_3db_deg.to_string()),
            ("phi_3dB", self.ula.phi_3db_deg.to_string()),
            ("buildings", match self.buildings {
                BuildingSource::Itu => "itu".into(),
                BuildingSource::None => "none".into(),
            }),
            ("alpha_hat", self.itu.alpha_hat.to_string()),
            ("beta_hat", self.itu.beta_hat.to_string()),
            ("gamma_hat", self.itu.gamma_hat.to_string()),
            ("h_max", self.itu.h_max.to_string()),
            ("P", self.radio.tx_power_dbm.to_string()),
            ("sigma2", self.radio.noise_dbm.to_string()),
            ("Gamma_th", self.radio.gamma_th_db.to_string()),
            ("L", self.radio.measurements.to_string()),
            ("m_los", self.fading.m_los.to_string()),
            ("m_nlos", self.fading.m_nlos.to_string()),
            ("V_u", m.speed.to_string()),
            ("dt", m.dt.to_string()),
            ("tau", m.tau.to_string()),
            ("r_D", m.reward_destination.to_string()),
            ("r_ob", m.reward_boundary.to_string()),
            ("destination", fmt_points(&[(m.destination.x, m.destination.y)])),
            ("arrival_radius", m.arrival_radius.to_string()),
            ("N_max", m.step_cap.to_string()),
            ("altitude", m.altitude.to_string()),
            ("gamma", a.gamma.to_string()),
            ("N_ms", a.n_ms.to_string()),
            ("epsilon", a.epsilon_init.to_string()),
            ("dec_epsilon", a.epsilon_decay.to_string()),
            ("epsilon_floor", a.epsilon_floor.to_string()),
            ("Upsilon", a.target_sync.to_string()),
            ("alpha_lr", a.adam.learning_rate.to_string()),
            ("adam_beta1", a.adam.beta1.to_string()),
            ("adam_beta2", a.adam.beta2.to_string()),
            ("adam_eps", a.adam.epsilon.to_string()),
            ("hidden", a.shape.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",")),
            ("q_scale", a.value_scale.to_string()),
            ("variant", self.variant.as_str().into()),
            ("C", self.capacity.to_string()),
            ("N_mb", self.batch.to_string()),
            ("updates_per_step", self.updates_per_step.to_string()),
            ("alpha_per", self.per.alpha.to_string()),
            ("xi_per", self.per.xi.to_string()),
            ("beta_per", self.per.beta0.to_string()),
            ("te_max", self.te_max.to_string()),
            ("env_seed", self.env_seed.to_string()),
            ("seed", self.seed.to_string()),
            ("precision", match self.precision {
                Precision::F32 => "f32".into(),
                Precision::F64 => "f64".into(),
            }),
            ("topmap_resolution", self.topmap_resolution.to_string()),
            ("eval_starts", fmt_points(&self.eval_starts)),
            ("eval_count", self.eval_count.to_string()),
            ("export_last", self.export_last.to_string()),
        ]
    }

    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "D_x" => self.side_x = num(key, v)?,
            "D_y" => self.side_y = num(key, v)?,
            "D" => {
                self.side_x = num(key, v)?;
                self.side_y = self.side_x;
            }
            "bs_positions" => self.bs_positions = points(key, v)?,
            "bs_height" => self.bs_height = num(key, v)?,
            "base_azimuth" => self.base_azimuth = num(key, v)?,
            "M" => self.ula.elements = num(key, v)?,
            "d_v" => self.ula.spacing_m = num(key, v)?,
            "f_c" => self.ula.carrier_hz = num(key, v)?,
            "theta_etilt" => self.ula.tilt_deg = num(key, v)?,
            "theta_3dB" => self.ula.theta_3db_deg = num(key, v)?,
            "phi_3dB" => self.ula.phi_3db_deg = num(key, v)?,
            "buildings" => {
                self.buildings = match v {
                    "itu" => BuildingSource::Itu,
                    "none" => BuildingSource::None,
                    _ => return Err(Error::param(key, "expected `itu` or `none`")),
                }
            }
            "alpha_hat" => self.itu.alpha_hat = num(key, v)?,
            "beta_hat" => self.itu.beta_hat = num(key, v)?,
            "gamma_hat" => self.itu.gamma_hat = num(key, v)?,
            "h_max" => self.itu.h_max = num(key, v)?,
            "P" => self.radio.tx_power_dbm = num(key, v)?,
            "sigma2" => self.radio.noise_dbm = num(key, v)?,
            "Gamma_th" => self.radio.gamma_th_db = num(key, v)?,
            "L" => self.radio.measurements = num(key, v)?,
            "m_los" => self.fading.m_los = num(key, v)?,
            "m_nlos" => self.fading.m_nlos = num(key, v)?,
            "V_u" => self.mdp.speed = num(key, v)?,
            "dt" => self.mdp.dt = num(key, v)?,
            "tau" => self.mdp.tau = num(key, v)?,
            "r_D" => self.mdp.reward_destination = num(key, v)?,
            "r_ob" => self.mdp.reward_boundary = num(key, v)?,
            "destination" => {
                let p = points(key, v)?;
                if p.len() != 1 {
                    return Err(Error::param(key, "expected a single x:y point"));
                }
                self.mdp.destination = Vec3::new(p[0].0, p[0].1, self.mdp.altitude);
            }
            "arrival_radius" => self.mdp.arrival_radius = num(key, v)?,
            "N_max" => self.mdp.step_cap = num(key, v)?,
            "altitude" => {
                self.mdp.altitude = num(key, v)?;
                self.mdp.destination.z = self.mdp.altitude;
            }
            "gamma" => self.agent.gamma = num(key, v)?,
            "N_ms" => self.agent.n_ms = num(key, v)?,
            "epsilon" => self.agent.epsilon_init = num(key, v)?,
            "dec_epsilon" => self.agent.epsilon_decay = num(key, v)?,
            "epsilon_floor" => self.agent.epsilon_floor = num(key, v)?,
            "Upsilon" => self.agent.target_sync = num(key, v)?,
            "alpha_lr" => self.agent.adam.learning_rate = num(key, v)?,
            "adam_beta1" => self.agent.adam.beta1 = num(key, v)?,
            "adam_beta2" => self.agent.adam.beta2 = num(key, v)?,
            "adam_eps" => self.agent.adam.epsilon = num(key, v)?,
            "hidden" => {
                self.agent.shape.hidden = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|h| num(key, h.trim())).collect::<Result<_>>()?
                }
            }
            "q_scale" => self.agent.value_scale = num(key, v)?,
            "variant" => self.variant = v.parse()?,
            "C" => self.capacity = num(key, v)?,
            "N_mb" => self.batch = num(key, v)?,
            "updates_per_step" => self.updates_per_step = num(key, v)?,
            "alpha_per" => self.per.alpha = num(key, v)?,
            "xi_per" => self.per.xi = num(key, v)?,
            "beta_per" => self.per.beta0 = num(key, v)?,
            "te_max" => self.te_max = num(key, v)?,
            "env_seed" => self.env_seed = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "precision" => {
                self.precision = match v {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    _ => return Err(Error::param(key, "expected `f32` or `f64`")),
                }
            }
            "topmap_resolution" => self.topmap_resolution = num(key, v)?,
            "eval_starts" => self.eval_starts = points(key, v)?,
            "eval_count" => self.eval_count = num(key, v)?,
            "export_last" => self.export_last = num(key, v)?,
            _ => return Err(Error::param(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Resolved configuration as re-loadable text.
    pub fn echo(&self) -> String {
        let mut out = String::from("# qier run configuration\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Apply `key = value` lines on top of `self`, then validate.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::InvalidParam { name, reason } => Error::parse(i + 1, format!("`{name}`: {reason}")),
                other => other,
            })?;
        }
        self.validate()?;
        Ok(self)
    }

    /// A stable digest of the resolved configuration.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Read a configuration file on top of `profile` defaults.
pub fn load_config(path: &Path, profile: Profile) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::profile(profile).apply_text(&text)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
}

fn points(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(';')
        .map(|item| {
            let (x, y) = item.trim().split_once(':').ok_or_else(|| Error::param(key, format!("expected x:y, got `{item}`")))?;
            Ok((num(key, x.trim())?, num(key, y.trim())?))
        })
        .collect()
}

fn fmt_points(p: &[(f64, f64)]) -> String {
    p.iter().map(|(x, y)| format!("{x}:{y}")).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_paper_defaults() {
        let c = RunConfig::paper().apply_text("").unwrap();
        assert_eq!(c.mdp.tau, 50.0);
        assert_eq!(c.mdp.dt, 0.5);
        assert_eq!(c.capacity, 20_000);
        assert_eq!(c.batch, 128);
        assert_eq!(c.agent.n_ms, 30);
        assert_eq!(c.agent.target_sync, 5);
        assert_eq!(c.te_max, 2000);
        assert_eq!(c.mdp.step_cap, 400);
        assert_eq!(c.radio.measurements, 1000);
        assert_eq!(c, RunConfig::paper());
    }

    #[test]
    fn rejects_out_of_range_and_unknown() {
        assert!(RunConfig::paper().apply_text("gamma = 1.2").is_err());
        assert!(RunConfig::paper().apply_text("warp_drive = 9").is_err());
        assert!(RunConfig::paper().apply_text("tau").is_err());
        assert!(RunConfig::paper().apply_text("alpha_hat = 1.5").is_err());
        assert!(RunConfig::paper().apply_text("destination = 2000:5").is_err());
    }

    #[test]
    fn echo_roundtrip() {
        for base in [RunConfig::paper(), RunConfig::desk()] {
            let mut c = base;
            c.eval_starts = vec![(12.5, 40.0), (300.0, 0.1)];
            c.agent.adam.learning_rate = 3.3e-4;
            let back = RunConfig::paper().apply_text(&c.echo()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.fingerprint(), c.fingerprint());
        }
    }

    #[test]
    fn comments_and_overrides() {
        let c = RunConfig::paper().apply_text("# desk tweak\nL = 50   # fewer draws\nvariant = per\nD = 800\ndestination = 700:700\nbs_positions = 200:200;600:600\n").unwrap();
        assert_eq!(c.radio.measurements, 50);
        assert_eq!(c.variant, ReplayKind::Per);
        assert_eq!((c.side_x, c.side_y), (800.0, 800.0));
        assert_eq!(c.bs_positions.len(), 2);
    }

    #[test]
    fn desk_profile_is_valid() {
        let d = RunConfig::desk();
        d.validate().unwrap();
        assert_eq!((d.side_x, d.radio.measurements, d.capacity, d.batch, d.te_max), (600.0, 200, 4000, 64, 600));
        assert_eq!(d.bs_positions.len() * 3, 6);
    }
}
