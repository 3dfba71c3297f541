//! Urban geometry: airspace, statistical building field, base-station
//! sectors and line-of-sight blockage.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::antenna::UlaConfig;
use crate::error::{Error, Result};
use crate::seed::SimRng;

/// Point or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn horizontal_distance(self, o: Vec3) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Axis-aligned box the UAV must stay in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Airspace {
    pub lo: Vec3,
    pub up: Vec3,
}

impl Airspace {
    pub fn new(lo: Vec3, up: Vec3) -> Result<Self> {
        if !(lo.is_finite() && up.is_finite()) {
            return Err(Error::param("airspace", "non-finite corner"));
        }
        if lo.x > up.x || lo.y > up.y || lo.z > up.z {
            return Err(Error::param("airspace", "lower corner exceeds upper corner"));
        }
        Ok(Self { lo, up })
    }

    /// Square airspace `[0, side] x [0, side] x [0, height]`.
    pub fn square(side_m: f64, height_m: f64) -> Result<Self> {
        Self::new(Vec3::default(), Vec3::new(side_m, side_m, height_m))
    }

    pub fn width(&self) -> f64 {
        self.up.x - self.lo.x
    }

    pub fn depth(&self) -> f64 {
        self.up.y - self.lo.y
    }

    /// Inclusive containment.
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.lo.x
            && p.x <= self.up.x
            && p.y >= self.lo.y
            && p.y <= self.up.y
            && p.z >= self.lo.z
            && p.z <= self.up.z
    }

    /// Horizontal position mapped to `[0,1]^2`.
    pub fn normalize_xy(&self, p: Vec3) -> [f64; 2] {
        [(p.x - self.lo.x) / self.width(), (p.y - self.lo.y) / self.depth()]
    }
}

/// Rectangular footprint extruded from the ground to `height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Building {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub height: f64,
}

impl Building {
    pub fn footprint_area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    /// Strict interior test; faces and roof do not block.
    #[inline]
    pub fn contains_strict(&self, p: Vec3) -> bool {
        p.x > self.x_min
            && p.x < self.x_max
            && p.y > self.y_min
            && p.y < self.y_max
            && p.z > 0.0
            && p.z < self.height
    }
}

/// ITU statistical building parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItuParams {
    /// Fraction of land covered by buildings.
    pub alpha_hat: f64,
    /// Buildings per square kilometer.
    pub beta_hat: f64,
    /// Mean of the Rayleigh height distribution, meters.
    pub gamma_hat: f64,
    pub h_max: f64,
}

impl Default for ItuParams {
    fn default() -> Self {
        Self { alpha_hat: 0.3, beta_hat: 118.0, gamma_hat: 25.0, h_max: 70.0 }
    }
}

impl ItuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_hat > 0.0 && self.alpha_hat.is_finite()) {
            return Err(Error::param("alpha_hat", "must be positive"));
        }
        if self.alpha_hat > 1.0 {
            return Err(Error::param("alpha_hat", "total footprint ratio exceeds 1"));
        }
        if !(self.beta_hat > 0.0 && self.beta_hat.is_finite()) {
            return Err(Error::param("beta_hat", "must be positive"));
        }
        if !(self.gamma_hat > 0.0 && self.gamma_hat.is_finite()) {
            return Err(Error::param("gamma_hat", "must be positive"));
        }
        if !(self.h_max > 0.0 && self.h_max.is_finite()) {
            return Err(Error::param("h_max", "must be positive"));
        }
        Ok(())
    }

    /// Expected footprint of a single building in km².
    pub fn expected_footprint_km2(&self) -> f64 {
        self.alpha_hat / self.beta_hat
    }

    /// Rayleigh scale giving mean `gamma_hat`.
    pub fn rayleigh_sigma(&self) -> f64 {
        self.gamma_hat / std::f64::consts::FRAC_PI_2.sqrt()
    }
}

/// One Rayleigh-distributed height draw before clipping.
pub fn sample_rayleigh_height(gamma_hat: f64, rng: &mut SimRng) -> f64 {
    let sigma = gamma_hat / std::f64::consts::FRAC_PI_2.sqrt();
    let u: f64 = Open01.sample(rng);
    sigma * (-2.0 * u.ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingMap {
    pub buildings: Vec<Building>,
    pub seed: u64,
}

const BUILDING_TABLE_MAGIC: &str = "# qier-buildings v1";

/// Synthesize one realization of the ITU building field.
///
/// Buildings are squares placed on a jittered grid. Side lengths are uniform
/// in `[0.5, 1.5]` times a nominal side chosen so the expected footprint is
/// exactly `alpha_hat / beta_hat`; each square stays inside its grid cell so
/// footprints never overlap.
pub fn generate_buildings(params: &ItuParams, airspace: &Airspace, seed: u64) -> Result<BuildingMap> {
    params.validate()?;
    let rng = &mut crate::seed::stream(seed, crate::seed::BUILDINGS);
    let width = airspace.width();
    let depth = airspace.depth();
    if width <= 0.0 || depth <= 0.0 {
        return Err(Error::param("airspace", "empty horizontal extent"));
    }
    let area_km2 = width * depth / 1.0e6;
    let count = (params.beta_hat * area_km2).round() as usize;
    if count == 0 {
        return Ok(BuildingMap { buildings: Vec::new(), seed });
    }

    let cols = ((count as f64 * width / depth).sqrt().ceil() as usize).max(1);
    let rows = count.div_ceil(cols);
    let cell_w = width / cols as f64;
    let cell_h = depth / rows as f64;

    // E[u^2] = 13/12 for u ~ U[0.5, 1.5].
    let nominal_side = (params.expected_footprint_km2() * 12.0 / 13.0).sqrt() * 1000.0;

    let mut cells: Vec<usize> = (0..rows * cols).collect();
    // Partial Fisher-Yates: keep `count` distinct cells.
    for i in 0..count {
        let j = rng.random_range(i..cells.len());
        cells.swap(i, j);
    }
    let mut chosen = cells[..count].to_vec();
    chosen.sort_unstable();

    let mut buildings = Vec::with_capacity(count);
    for cell in chosen {
        let (r, c) = (cell / cols, cell % cols);
        let x0 = airspace.lo.x + c as f64 * cell_w;
        let y0 = airspace.lo.y + r as f64 * cell_h;
        let side = (nominal_side * rng.random_range(0.5..1.5)).min(cell_w).min(cell_h);
        let x_min = x0 + rng.random::<f64>() * (cell_w - side);
        let y_min = y0 + rng.random::<f64>() * (cell_h - side);
        let height = sample_rayleigh_height(params.gamma_hat, rng).min(params.h_max);
        buildings.push(Building { x_min, y_min, x_max: x_min + side, y_max: y_min + side, height });
    }
    Ok(BuildingMap { buildings, seed })
}

impl BuildingMap {
    pub fn empty() -> Self {
        Self { buildings: Vec::new(), seed: 0 }
    }

    /// Fraction of the horizontal extent covered by footprints.
    pub fn coverage(&self, airspace: &Airspace) -> f64 {
        let total: f64 = self.buildings.iter().map(Building::footprint_area).sum();
        total / (airspace.width() * airspace.depth())
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(BUILDING_TABLE_MAGIC);
        out.push('\n');
        let _ = writeln!(out, "# seed={}", self.seed);
        out.push_str("x_min,y_min,x_max,y_max,height\n");
        for b in &self.buildings {
            let _ = writeln!(out, "{},{},{},{},{}", b.x_min, b.y_min, b.x_max, b.y_max, b.height);
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == BUILDING_TABLE_MAGIC => {}
            _ => return Err(Error::parse(1, "missing building table header")),
        }
        let mut seed = 0;
        let mut buildings = Vec::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with("x_min") {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# seed=") {
                seed = rest.parse().map_err(|_| Error::parse(i + 1, "bad seed"))?;
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(i + 1, "non-numeric field"))?;
            if vals.len() != 5 {
                return Err(Error::parse(i + 1, "expected 5 fields"));
            }
            buildings.push(Building { x_min: vals[0], y_min: vals[1], x_max: vals[2], y_max: vals[3], height: vals[4] });
        }
        Ok(Self { buildings, seed })
    }
}

/// Maximum spacing between sampled points of a LoS segment, meters.
pub const LOS_PITCH_M: f64 = 5.0;

fn lex_le(a: Vec3, b: Vec3) -> bool {
    (a.x, a.y, a.z) <= (b.x, b.y, b.z)
}

/// True iff some sampled point of the segment lies strictly inside a building.
pub fn los_blocked(p1: Vec3, p2: Vec3, map: &BuildingMap) -> bool {
    los_blocked_with_pitch(p1, p2, map, LOS_PITCH_M)
}

pub fn los_blocked_with_pitch(p1: Vec3, p2: Vec3, map: &BuildingMap, pitch: f64) -> bool {
    // Canonical endpoint order makes the sample set independent of direction.
    let (a, b) = if lex_le(p1, p2) { (p1, p2) } else { (p2, p1) };
    let d = b - a;
    let segments = ((d.norm() / pitch).ceil() as usize).max(1);
    let (zmin, xmin, xmax, ymin, ymax) = (a.z.min(b.z), a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y));
    map.buildings.iter().any(|bld| {
        if zmin >= bld.height || xmax <= bld.x_min || xmin >= bld.x_max || ymax <= bld.y_min || ymin >= bld.y_max {
            return false;
        }
        (0..=segments).any(|i| bld.contains_strict(a + d * (i as f64 / segments as f64)))
    })
}

/// One sector antenna of a base station.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorConfig {
    /// 1-based label in `[1, 3B]`.
    pub id: u32,
    pub bs_position: Vec3,
    /// Degrees, counterclockwise from +x.
    pub boresight_azimuth: f64,
    pub ula: UlaConfig<f64>,
}

/// Three sectors per BS with boresights 120° apart.
pub fn sector_layout(bs_positions: &[Vec3], base_azimuth: f64, ula: &UlaConfig<f64>) -> Vec<SectorConfig> {
    bs_positions
        .iter()
        .enumerate()
        .flat_map(|(b, &pos)| {
            (0..3).map(move |j| SectorConfig {
                id: (3 * b + j + 1) as u32,
                bs_position: pos,
                boresight_azimuth: (base_azimuth + 120.0 * j as f64).rem_euclid(360.0),
                ula: ula.clone(),
            })
        })
        .collect()
}
