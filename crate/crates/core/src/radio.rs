//! Ground-to-air link budget: pathloss, Nakagami-m fading, SINR,
//! pathloss-based association and Monte-Carlo outage estimation.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::antenna::{angles_from_positions, GainEvaluator};
use crate::envgeo::{los_blocked, Airspace, BuildingMap, SectorConfig, Vec3};
use crate::error::{Error, Result};
use crate::num::{db_to_linear, Real};
use crate::seed;

/// 3GPP UMa ground-to-air pathloss in dB.
///
/// `d_m` is the 3D distance in meters, `z_u` the UAV altitude in meters and
/// `f_ghz` the carrier in GHz.
pub fn pathloss_db<T: Real>(d_m: T, z_u: T, f_ghz: T, los: bool) -> Result<T> {
    if !(d_m > T::zero()) {
        return Err(Error::Domain(format!("pathloss distance must be positive, got {d_m}")));
    }
    let twenty = T::lit(20.0);
    if los {
        Ok(T::lit(28.0) + T::lit(22.0) * d_m.log10() + twenty * f_ghz.log10())
    } else {
        if !(z_u > T::zero()) {
            return Err(Error::Domain(format!("NLoS pathloss needs positive altitude, got {z_u}")));
        }
        let slope = T::lit(46.0) - T::lit(7.0) * z_u.log10();
        Ok(T::lit(-17.5) + slope * d_m.log10() + twenty * (T::lit(40.0) * T::PI() * f_ghz / T::lit(3.0)).log10())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub sector_id: u32,
    pub tx_power_dbm: f64,
    pub gain_db: f64,
    pub pathloss_db: f64,
    pub los: bool,
    pub distance: f64,
}

impl LinkState {
    /// Mean received power in mW, before fading.
    pub fn mean_rx_mw(&self) -> f64 {
        db_to_linear(self.tx_power_dbm + self.gain_db - self.pathloss_db)
    }
}

/// Nakagami-m shape per link type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    pub m_los: f64,
    pub m_nlos: f64,
}

impl Default for FadingModel {
    fn default() -> Self {
        Self { m_los: 3.0, m_nlos: 1.0 }
    }
}

impl FadingModel {
    pub fn shape(&self, los: bool) -> f64 {
        if los {
            self.m_los
        } else {
            self.m_nlos
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("m_los", self.m_los), ("m_nlos", self.m_nlos)] {
            if !(m >= 0.5 && m.is_finite()) {
                return Err(Error::param(name, "Nakagami shape must be >= 0.5"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub gamma_th_db: f64,
    /// Fading realizations per outage estimate, `L`.
    pub measurements: usize,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self { tx_power_dbm: 20.0, noise_dbm: -90.0, gamma_th_db: 0.0, measurements: 1000 }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if self.measurements == 0 {
            return Err(Error::param("L", "need at least one measurement"));
        }
        if !(self.tx_power_dbm.is_finite() && self.noise_dbm.is_finite() && self.gamma_th_db.is_finite()) {
            return Err(Error::param("radio", "non-finite power or threshold"));
        }
        Ok(())
    }
}

/// Serving sector: least pathloss, ties to the smaller id.
pub fn associate_sector(states: &[LinkState]) -> u32 {
    assert!(!states.is_empty(), "association needs at least one sector");
    states
        .iter()
        .min_by(|a, b| a.pathloss_db.total_cmp(&b.pathloss_db).then(a.sector_id.cmp(&b.sector_id)))
        .map(|s| s.sector_id)
        .unwrap()
}

/// `|h|^2` for Nakagami-m: Gamma(m, 1/m), unit mean.
pub fn draw_power_gain<R: Rng + ?Sized>(m: f64, rng: &mut R) -> f64 {
    Gamma::new(m, 1.0 / m).expect("valid Nakagami shape").sample(rng)
}

/// Instantaneous SINR (linear) for one fading realization.
///
/// `gains[i]` is the power gain of `states[i]`. Every non-serving sector
/// interferes.
pub fn sinr(states: &[LinkState], assoc: u32, gains: &[f64], params: &RadioParams) -> f64 {
    assert_eq!(states.len(), gains.len());
    let mut signal = None;
    let mut interference = 0.0;
    for (s, g) in states.iter().zip(gains) {
        let p = s.mean_rx_mw() * g;
        if s.sector_id == assoc {
            signal = Some(p);
        } else {
            interference += p;
        }
    }
    let signal = signal.expect("serving sector present");
    signal / (interference + db_to_linear(params.noise_dbm))
}

/// Monte-Carlo outage probability over `params.measurements` independent
/// fading blocks.
pub fn top_estimate<R: Rng + ?Sized>(
    states: &[LinkState],
    assoc: u32,
    params: &RadioParams,
    fading: &FadingModel,
    rng: &mut R,
) -> f64 {
    outage_count(states, assoc, params, fading, rng) as f64 / params.measurements as f64
}

/// Number of measurements (out of `L`) in outage.
pub fn outage_count<R: Rng + ?Sized>(
    states: &[LinkState],
    assoc: u32,
    params: &RadioParams,
    fading: &FadingModel,
    rng: &mut R,
) -> usize {
    let means: Vec<f64> = states.iter().map(LinkState::mean_rx_mw).collect();
    let dists: Vec<Gamma<f64>> = states
        .iter()
        .map(|s| {
            let m = fading.shape(s.los);
            Gamma::new(m, 1.0 / m).expect("valid Nakagami shape")
        })
        .collect();
    let serving = states.iter().position(|s| s.sector_id == assoc).expect("serving sector present");
    let noise = db_to_linear(params.noise_dbm);
    let threshold = db_to_linear(params.gamma_th_db);
    let mut outages = 0;
    for _ in 0..params.measurements {
        let mut signal = 0.0;
        let mut interference = 0.0;
        for (i, (mean, dist)) in means.iter().zip(&dists).enumerate() {
            let p = mean * dist.sample(rng);
            if i == serving {
                signal = p;
            } else {
                interference += p;
            }
        }
        if signal / (interference + noise) < threshold {
            outages += 1;
        }
    }
    outages
}

/// Ergodic outage duration `dt * sum(TOP)`.
pub fn eod(top_per_step: &[f64], dt: f64) -> f64 {
    dt * top_per_step.iter().sum::<f64>()
}

/// Static radio environment: buildings, sectors and link parameters.
#[derive(Debug, Clone)]
pub struct RadioEnv {
    pub airspace: Airspace,
    pub buildings: BuildingMap,
    pub sectors: Vec<SectorConfig>,
    pub fading: FadingModel,
    pub params: RadioParams,
    evaluators: Vec<GainEvaluator<f64>>,
}

impl RadioEnv {
    pub fn new(
        airspace: Airspace,
        buildings: BuildingMap,
        mut sectors: Vec<SectorConfig>,
        fading: FadingModel,
        params: RadioParams,
    ) -> Result<Self> {
        if sectors.is_empty() {
            return Err(Error::param("sectors", "at least one sector required"));
        }
        fading.validate()?;
        params.validate()?;
        sectors.sort_by_key(|s| s.id);
        let evaluators = sectors.iter().map(|s| GainEvaluator::new(&s.ula)).collect();
        Ok(Self { airspace, buildings, sectors, fading, params, evaluators })
    }

    /// One link state per sector, ordered by sector id.
    pub fn link_states(&self, uav: Vec3) -> Vec<LinkState> {
        self.sectors
            .iter()
            .zip(&self.evaluators)
            .map(|(sector, eval)| {
                let distance = uav.distance(sector.bs_position).max(1e-9);
                let los = !los_blocked(sector.bs_position, uav, &self.buildings);
                let f_ghz = sector.ula.carrier_hz / 1e9;
                let pathloss_db = pathloss_db(distance, uav.z.max(1e-9), f_ghz, los).expect("positive distance");
                LinkState {
                    sector_id: sector.id,
                    tx_power_dbm: self.params.tx_power_dbm,
                    gain_db: eval.gain_db(angles_from_positions(sector, uav)),
                    pathloss_db,
                    los,
                    distance,
                }
            })
            .collect()
    }

    /// Associate and estimate TOP at `uav`.
    pub fn measure<R: Rng + ?Sized>(&self, uav: Vec3, rng: &mut R) -> (u32, f64) {
        let states = self.link_states(uav);
        let assoc = associate_sector(&states);
        (assoc, top_estimate(&states, assoc, &self.params, &self.fading, rng))
    }

    /// Outage draws out of `L` at `uav`.
    pub fn measure_outages<R: Rng + ?Sized>(&self, uav: Vec3, rng: &mut R) -> usize {
        let states = self.link_states(uav);
        let assoc = associate_sector(&states);
        outage_count(&states, assoc, &self.params, &self.fading, rng)
    }
}

/// TOP sampled at grid-cell centers at a fixed altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct TopMap {
    pub resolution: f64,
    pub altitude: f64,
    pub seed: u64,
    pub measurements: usize,
    pub origin: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row `j` is the `j`-th cell along +y.
    pub values: Vec<f64>,
}

fn cells_along(extent: f64, resolution: f64) -> Result<usize> {
    let n = (extent / resolution).round();
    if n < 1.0 || (n * resolution - extent).abs() > 1e-6 * extent.max(1.0) {
        return Err(Error::param("resolution", format!("{resolution} m does not divide extent {extent} m")));
    }
    Ok(n as usize)
}

/// Evaluate TOP at every grid center; cell `c` uses its own RNG stream
/// derived from `(seed, c)`, so the map is identical regardless of thread count.
pub fn build_top_map(env: &RadioEnv, resolution: f64, altitude: f64, seed_val: u64) -> Result<TopMap> {
    let nx = cells_along(env.airspace.width(), resolution)?;
    let ny = cells_along(env.airspace.depth(), resolution)?;
    let origin = (env.airspace.lo.x, env.airspace.lo.y);
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|c| {
            let (j, i) = (c / nx, c % nx);
            let p = Vec3::new(origin.0 + (i as f64 + 0.5) * resolution, origin.1 + (j as f64 + 0.5) * resolution, altitude);
            let mut rng = seed::indexed_stream(seed_val, seed::TOPMAP, c as u64);
            env.measure(p, &mut rng).1
        })
        .collect();
    Ok(TopMap { resolution, altitude, seed: seed_val, measurements: env.params.measurements, origin, nx, ny, values })
}

impl TopMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Value of the cell containing `p`, clamped to the grid.
    pub fn value_at(&self, p: Vec3) -> f64 {
        let i = (((p.x - self.origin.0) / self.resolution).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((p.y - self.origin.1) / self.resolution).floor().max(0.0) as usize).min(self.ny - 1);
        self.get(i, j)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.ny {
            let row: Vec<String> = (0..self.nx).map(|i| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Sidecar metadata, `key=value` per line.
    pub fn metadata(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# qier-topmap v1");
        let _ = writeln!(out, "resolution={}", self.resolution);
        let _ = writeln!(out, "altitude={}", self.altitude);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "L={}", self.measurements);
        let _ = writeln!(out, "origin_x={}", self.origin.0);
        let _ = writeln!(out, "origin_y={}", self.origin.1);
        let _ = writeln!(out, "nx={}", self.nx);
        let _ = writeln!(out, "ny={}", self.ny);
        out
    }

    /// 8-bit binary PGM, brighter means higher TOP, top row is max y.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                out.push((self.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }
}
