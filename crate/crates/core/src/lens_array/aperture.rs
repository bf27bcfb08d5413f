//! Brute-force aperture integration of the lens.
//!
//! Integrates the incident plane wave against the exact phase delay from every
//! aperture point to the antenna position on the focal hemisphere, without the
//! far-focus linearisation behind the closed-form sinc response. Distances are
//! in wavelengths.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_half_pi, AntennaIndex, LensArrayConfig};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, Tolerance};

/// Focal ratio below which the oracle refuses to run.
pub const MIN_FOCAL_RATIO: f64 = 5.0;
/// Focal ratio below which a warning is logged.
pub const WARN_FOCAL_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct ApertureOracleOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for ApertureOracleOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSample {
    /// Received signal normalised by the incident amplitude at the lens center.
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Numerically evaluates the normalised received signal `r_m / x_0` at
/// `antenna` for a plane wave from `(theta, phi)`.
pub fn aperture_integration_oracle(
    config: &LensArrayConfig,
    theta: f64,
    phi: f64,
    antenna: AntennaIndex,
    options: ApertureOracleOptions,
) -> Result<ApertureSample> {
    config.validate()?;
    check_half_pi("theta", theta)?;
    check_half_pi("phi", phi)?;
    if config.focal_ratio < MIN_FOCAL_RATIO {
        return Err(Error::InvalidConfig(format!(
            "aperture oracle needs focal_ratio >= {MIN_FOCAL_RATIO}, got {}",
            config.focal_ratio
        )));
    }
    if config.focal_ratio < WARN_FOCAL_RATIO {
        log::warn!(
            "focal_ratio {} < {WARN_FOCAL_RATIO}: the sinc response is a coarse approximation here",
            config.focal_ratio
        );
    }

    let (d_y, d_z) = (config.d_y, config.d_z);
    let focal = config.focal_ratio * d_y.max(d_z);
    // antenna direction cosines on the focal hemisphere
    let c_y = f64::from(antenna.m_a) / d_y;
    let c_z = f64::from(antenna.m_e) / d_z;
    let u_in = theta.cos() * phi.sin();
    let w_in = theta.sin();
    let k0 = 2.0 * PI;
    let norm = 1.0 / (d_y * d_z).sqrt();
    let common = config.common_phase;

    let integrand = |y: f64, z: f64| {
        let base = focal * focal + y * y + z * z;
        let shifted = base - 2.0 * focal * (y * c_y + z * c_z);
        // sqrt(shifted) - sqrt(base) without cancellation
        let path_difference = (shifted - base) / (shifted.sqrt() + base.sqrt());
        let lens_delay = common + k0 * path_difference;
        let incident = -k0 * (y * u_in + z * w_in);
        Complex64::from_polar(norm, incident - lens_delay)
    };

    let tol = Tolerance {
        abs: options.abs_tol,
        rel: options.rel_tol,
        max_subdivisions: options.max_subdivisions,
    };
    let q = integrate_2d(integrand, (-d_y / 2.0, d_y / 2.0), (-d_z / 2.0, d_z / 2.0), tol);
    if !q.converged {
        return Err(Error::IntegrationNonConvergence {
            value_re: q.value.re,
            value_im: q.value.im,
            estimated_error: q.error,
            tolerance: options.abs_tol.max(options.rel_tol * q.value.norm()),
        });
    }
    Ok(ApertureSample {
        value: q.value,
        error_estimate: q.error,
        evaluations: q.evaluations,
    })
}
