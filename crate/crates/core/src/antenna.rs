//! 3GPP sectorized vertical ULA: element patterns, electrical downtilt
//! weights, array factor and 3D gain.
//!
//! Angles are degrees at the interface. In each ULA's local frame the array
//! axis is +z and the boresight lies at `phi = 0`; element `m` (0-based here)
//! sits at `z_m = m * d_v`.

use num_complex::Complex;

use crate::envgeo::{SectorConfig, Vec3};
use crate::num::Real;

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Pattern floor in dB.
const SIDE_LOBE_LIMIT_DB: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct UlaConfig<T> {
    /// Number of vertical elements `M`.
    pub elements: usize,
    /// Element spacing `d_v`, meters.
    pub spacing_m: T,
    pub carrier_hz: T,
    pub tilt_deg: T,
    /// Vertical half-power beamwidth.
    pub theta_3db_deg: T,
    /// Horizontal half-power beamwidth.
    pub phi_3db_deg: T,
}

impl<T: Real> UlaConfig<T> {
    /// 8 elements at half-wavelength spacing, 2 GHz, 100° tilt, 65°/65°.
    pub fn paper() -> Self {
        Self {
            elements: 8,
            spacing_m: T::lit(0.075),
            carrier_hz: T::lit(2.0e9),
            tilt_deg: T::lit(100.0),
            theta_3db_deg: T::lit(65.0),
            phi_3db_deg: T::lit(65.0),
        }
    }

    pub fn wavelength(&self) -> T {
        T::lit(SPEED_OF_LIGHT) / self.carrier_hz
    }

    fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength()
    }
}

/// Steering angles of a UAV seen from a ULA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair<T> {
    /// From the array axis, `[0, 180]`.
    pub theta_deg: T,
    /// From boresight, `(-180, 180]`.
    pub phi_deg: T,
}

impl<T: Real> AnglePair<T> {
    pub fn new(theta_deg: T, phi_deg: T) -> Self {
        Self { theta_deg, phi_deg }
    }
}

fn clipped_parabola<T: Real>(offset: T, beamwidth: T) -> T {
    let r = offset / beamwidth;
    -(T::lit(12.0) * r * r).min(T::lit(SIDE_LOBE_LIMIT_DB))
}

/// `A_V(theta)`.
pub fn vertical_pattern_db<T: Real>(theta_deg: T, cfg: &UlaConfig<T>) -> T {
    clipped_parabola(theta_deg - T::lit(90.0), cfg.theta_3db_deg)
}

/// `A_H(phi)`.
pub fn horizontal_pattern_db<T: Real>(phi_deg: T, cfg: &UlaConfig<T>) -> T {
    clipped_parabola(phi_deg, cfg.phi_3db_deg)
}

/// Combined element pattern, floored at -30 dB.
pub fn element_pattern_db<T: Real>(a: AnglePair<T>, cfg: &UlaConfig<T>) -> T {
    let sum = vertical_pattern_db(a.theta_deg, cfg) + horizontal_pattern_db(a.phi_deg, cfg);
    -(-sum).min(T::lit(SIDE_LOBE_LIMIT_DB))
}

/// Downtilt weights `w_m = exp(-j k m d_v cos(tilt)) / M`.
pub fn steering_weights<T: Real>(cfg: &UlaConfig<T>) -> Vec<Complex<T>> {
    let m_inv = T::one() / T::from_usize(cfg.elements).unwrap();
    let step = -cfg.wavenumber() * cfg.spacing_m * cfg.tilt_deg.deg_to_rad().cos();
    (0..cfg.elements)
        .map(|m| Complex::from_polar(m_inv, step * T::from_usize(m).unwrap()))
        .collect()
}

/// Conjugated weights against the steering vector `exp(-j k . (0,0,z_m))`.
pub fn array_factor<T: Real>(a: AnglePair<T>, cfg: &UlaConfig<T>) -> Complex<T> {
    let weights = steering_weights(cfg);
    array_factor_with(a, cfg, &weights)
}

fn array_factor_with<T: Real>(a: AnglePair<T>, cfg: &UlaConfig<T>, weights: &[Complex<T>]) -> Complex<T> {
    let kz = cfg.wavenumber() * a.theta_deg.deg_to_rad().cos();
    weights
        .iter()
        .enumerate()
        .map(|(m, w)| {
            let z = cfg.spacing_m * T::from_usize(m).unwrap();
            w.conj() * Complex::from_polar(T::one(), -kz * z)
        })
        .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + v)
}

/// 3D gain in dB; `-inf` in an exact array null.
pub fn gain_db<T: Real>(a: AnglePair<T>, cfg: &UlaConfig<T>) -> T {
    let af = array_factor(a, cfg).norm();
    if af == T::zero() {
        return T::neg_infinity();
    }
    element_pattern_db(a, cfg) + T::lit(20.0) * af.log10()
}

/// Angles of `uav` in the local frame of `sector`'s ULA.
pub fn angles_from_positions(sector: &SectorConfig, uav: Vec3) -> AnglePair<f64> {
    let v = uav - sector.bs_position;
    let r = v.norm();
    let theta = (v.z / r).clamp(-1.0, 1.0).acos().to_degrees();
    let azimuth = v.y.atan2(v.x).to_degrees();
    AnglePair::new(theta, wrap_degrees(azimuth - sector.boresight_azimuth))
}

/// Wrap to `(-180, 180]`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

/// Precomputed weights for repeated gain evaluation of one ULA.
#[derive(Debug, Clone)]
pub struct GainEvaluator<T> {
    cfg: UlaConfig<T>,
    weights: Vec<Complex<T>>,
}

impl<T: Real> GainEvaluator<T> {
    pub fn new(cfg: &UlaConfig<T>) -> Self {
        Self { cfg: cfg.clone(), weights: steering_weights(cfg) }
    }

    pub fn gain_db(&self, a: AnglePair<T>) -> T {
        let af = array_factor_with(a, &self.cfg, &self.weights).norm();
        if af == T::zero() {
            return T::neg_infinity();
        }
        element_pattern_db(a, &self.cfg) + T::lit(20.0) * af.log10()
    }
}
