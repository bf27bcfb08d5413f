//! Antenna geometry and array responses.
//!
//! The base station carries a full-dimensional lens array: antennas sit on the
//! focal hemisphere of an electromagnetic lens at elevation/azimuth indices
//! `(m_e, m_a)`, and the response to a plane wave from `(theta, phi)` is a
//! product of two sincs. Mobile stations use a plain uniform planar array.

mod aperture;

pub use aperture::{aperture_integration_oracle, ApertureOracleOptions, ApertureSample};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when flooring grid limits such as `10 * cos(asin(0.6))`, which
/// is 8 mathematically but may evaluate to 7.999999999999999.
const FLOOR_SLACK: f64 = 1e-9;

/// `sin(pi x) / (pi x)`, with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Physical description of the lens: electric dimensions (in wavelengths),
/// angular coverage and the focal ratio used by the aperture oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensArrayConfig {
    pub d_y: f64,
    pub d_z: f64,
    /// Elevation coverage angle in radians.
    pub theta_cov: f64,
    /// Azimuth coverage angle in radians.
    pub phi_cov: f64,
    /// Focal length over lens dimension, `F / max(d_y, d_z)`.
    #[serde(default = "default_focal_ratio")]
    pub focal_ratio: f64,
    /// Common phase from the lens aperture to the focal surface.
    #[serde(default)]
    pub common_phase: f64,
}

fn default_focal_ratio() -> f64 {
    10.0
}

impl LensArrayConfig {
    /// Lens with full `180 x 180` degree coverage.
    pub fn full_coverage(d_y: f64, d_z: f64) -> Self {
        Self {
            d_y,
            d_z,
            theta_cov: PI,
            phi_cov: PI,
            focal_ratio: default_focal_ratio(),
            common_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.d_y > 0.0 && self.d_y.is_finite()) {
            return bad(format!("lens d_y must be positive, got {}", self.d_y));
        }
        if !(self.d_z > 0.0 && self.d_z.is_finite()) {
            return bad(format!("lens d_z must be positive, got {}", self.d_z));
        }
        if !(0.0..=PI).contains(&self.theta_cov) {
            return bad(format!("theta_cov must lie in [0, pi], got {}", self.theta_cov));
        }
        if !(self.phi_cov > 0.0 && self.phi_cov <= PI) {
            return bad(format!("phi_cov must lie in (0, pi], got {}", self.phi_cov));
        }
        if !(self.focal_ratio >= 1.0) {
            return bad(format!("focal_ratio must be >= 1, got {}", self.focal_ratio));
        }
        Ok(())
    }

    /// Largest elevation index magnitude.
    pub fn max_elevation_index(&self) -> i32 {
        (self.d_z * (self.theta_cov / 2.0).sin() + FLOOR_SLACK).floor() as i32
    }

    /// Largest azimuth index magnitude in the elevation row `m_e`.
    pub fn max_azimuth_index(&self, m_e: i32) -> i32 {
        let s = f64::from(m_e) / self.d_z;
        let cos_theta = (1.0 - s * s).max(0.0).sqrt();
        (self.d_y * cos_theta * (self.phi_cov / 2.0).sin() + FLOOR_SLACK).floor() as i32
    }
}

/// Elevation and azimuth index of one lens antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AntennaIndex {
    pub m_e: i32,
    pub m_a: i32,
}

impl AntennaIndex {
    pub fn new(m_e: i32, m_a: i32) -> Self {
        Self { m_e, m_a }
    }
}

/// All antennas of the lens array, ordered lexicographically by `(m_e, m_a)`.
pub fn antenna_grid(config: &LensArrayConfig) -> Vec<AntennaIndex> {
    let max_e = config.max_elevation_index();
    let mut grid = Vec::new();
    for m_e in -max_e..=max_e {
        let max_a = config.max_azimuth_index(m_e);
        grid.extend((-max_a..=max_a).map(|m_a| AntennaIndex { m_e, m_a }));
    }
    grid
}

/// One complex response per antenna, in the array's canonical order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrayResponse(pub Vec<Complex64>);

impl ArrayResponse {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `self^H other`.
    pub fn inner(&self, other: &ArrayResponse) -> Complex64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

fn check_half_pi(name: &'static str, value: f64) -> Result<()> {
    let limit = PI / 2.0;
    if value.is_finite() && value.abs() <= limit + 1e-12 {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange { name, value, limit })
    }
}

/// Closed-form response of a single lens antenna.
pub fn lens_element_response(
    config: &LensArrayConfig,
    antenna: AntennaIndex,
    theta: f64,
    phi: f64,
) -> Complex64 {
    let amplitude = (config.d_y * config.d_z).sqrt();
    let elevation = sinc(f64::from(antenna.m_e) - config.d_z * theta.sin());
    let azimuth = sinc(f64::from(antenna.m_a) - config.d_y * theta.cos() * phi.sin());
    Complex64::from_polar(amplitude, -config.common_phase) * (elevation * azimuth)
}

/// Lens array response for a plane wave arriving from `(theta, phi)`.
pub fn lens_response(config: &LensArrayConfig, theta: f64, phi: f64) -> Result<ArrayResponse> {
    check_half_pi("theta", theta)?;
    check_half_pi("phi", phi)?;
    Ok(ArrayResponse(
        antenna_grid(config)
            .into_iter()
            .map(|a| lens_element_response(config, a, theta, phi))
            .collect(),
    ))
}

/// A lens configuration together with its precomputed antenna grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LensArray {
    config: LensArrayConfig,
    antennas: Vec<AntennaIndex>,
}

impl LensArray {
    pub fn new(config: LensArrayConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            antennas: antenna_grid(&config),
            config,
        })
    }

    pub fn config(&self) -> &LensArrayConfig {
        &self.config
    }

    pub fn antennas(&self) -> &[AntennaIndex] {
        &self.antennas
    }

    pub fn len(&self) -> usize {
        self.antennas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antennas.is_empty()
    }

    /// Canonical position of an antenna, if it is on the grid.
    pub fn position(&self, antenna: AntennaIndex) -> Option<usize> {
        self.antennas.binary_search(&antenna).ok()
    }

    pub fn response(&self, theta: f64, phi: f64) -> Result<ArrayResponse> {
        check_half_pi("theta", theta)?;
        check_half_pi("phi", phi)?;
        Ok(ArrayResponse(
            self.antennas
                .iter()
                .map(|&a| lens_element_response(&self.config, a, theta, phi))
                .collect(),
        ))
    }

    /// Grid antenna closest to the focal point of `(theta, phi)`.
    pub fn focus_antenna(&self, theta: f64, phi: f64) -> AntennaIndex {
        let max_e = self.config.max_elevation_index();
        let m_e = ((self.config.d_z * theta.sin()).round() as i32).clamp(-max_e, max_e);
        let max_a = self.config.max_azimuth_index(m_e);
        let m_a = ((self.config.d_y * theta.cos() * phi.sin()).round() as i32).clamp(-max_a, max_a);
        AntennaIndex { m_e, m_a }
    }
}

/// Uniform planar array geometry of a mobile station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpaConfig {
    pub n_y: usize,
    pub n_z: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl UpaConfig {
    pub fn new(n_y: usize, n_z: usize) -> Self {
        Self {
            n_y,
            n_z,
            spacing: default_spacing(),
        }
    }

    pub fn num_elements(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_y == 0 || self.n_z == 0 {
            return Err(Error::InvalidConfig(format!(
                "UPA needs at least one element per axis, got {}x{}",
                self.n_y, self.n_z
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "UPA spacing must be positive, got {}",
                self.spacing
            )));
        }
        Ok(())
    }
}

/// Unit-norm planar steering vector. Element `(p, q)` sits at index
/// `p * n_z + q` with phase `2 pi spacing (p cos(theta) sin(phi) + q sin(theta))`.
pub fn upa_response(config: &UpaConfig, theta: f64, phi: f64) -> ArrayResponse {
    let n = config.num_elements();
    let scale = 1.0 / (n as f64).sqrt();
    let u = theta.cos() * phi.sin();
    let w = theta.sin();
    let k = 2.0 * PI * config.spacing;
    let mut values = Vec::with_capacity(n);
    for p in 0..config.n_y {
        for q in 0..config.n_z {
            let phase = k * (p as f64 * u + q as f64 * w);
            values.push(Complex64::from_polar(scale, phase));
        }
    }
    ArrayResponse(values)
}
