//! Oracle checks that tie the fast closed-form paths to independent
//! computations: brute-force aperture integration, noiseless LS recovery,
//! waveform-measured SINR, exhaustive beam search and the overhead formulas.

use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{discretize, effective_matrices, sample_channel, ScenarioConfig};
use crate::codebook::{beamsteering_codebook, omni_beamformer, training_matrix, CodebookConfig};
use crate::error::Result;
use crate::estimation::{training_overhead, PilotDesign, Trainer, TrainingConfig, TrainingDesign};
use crate::instances::separated_on_grid;
use crate::lens_array::{
    antenna_grid, aperture_integration_oracle, lens_element_response, AntennaIndex, ApertureOracleOptions, LensArray,
    LensArrayConfig, UpaConfig,
};
use crate::linksim::{genie_power, measure_sinr, transmit_receive, Modulation};
use crate::pdma::{evaluate_sinr, exhaustive_p1_oracle, mmse_design, mrc_design, select_antennas};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured deviation, in the units of `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<22} measured {:.3e} (tolerance {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

fn check(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Check {
    Check {
        name,
        passed: measured <= tolerance,
        measured,
        tolerance,
        detail,
    }
}

fn failed(name: &'static str, detail: String) -> Check {
    Check {
        name,
        passed: false,
        measured: f64::INFINITY,
        tolerance: 0.0,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn grid_count_check() -> Check {
    let n = antenna_grid(&LensArrayConfig::full_coverage(10.0, 10.0)).len();
    check("antenna-grid", (n as f64 - 317.0).abs(), 0.0, format!("10 x 10 full-coverage lens has {n} antennas"))
}

pub fn overhead_check() -> Check {
    let a = training_overhead(317, 10, 16, 50, 5);
    let b = training_overhead(317, 3, 16, 50, 1);
    let dev = (a.total as f64 - 503.0).abs() + (a.brute_force as f64 - 128000.0).abs() + (b.total as f64 - 373.0).abs();
    check(
        "training-overhead",
        dev,
        0.0,
        format!("T = {}, T' = {}, single-user T = {}", a.total, a.brute_force, b.total),
    )
}

/// Focal ratio at which the closed-form response is compared with the
/// integrated aperture; the residual focusing aberration is negligible there.
pub const APERTURE_CHECK_FOCAL_RATIO: f64 = 1000.0;
/// Allowed magnitude deviation as a fraction of the peak gain `sqrt(d_y d_z)`.
pub const APERTURE_CHECK_TOLERANCE: f64 = 0.002;

/// Compares `response` with aperture integration on the focus antenna and
/// its 8 neighbours for a few fixed directions.
pub fn aperture_check<F>(response: F) -> Check
where
    F: Fn(&LensArrayConfig, AntennaIndex, f64, f64) -> Complex64,
{
    let config = LensArrayConfig {
        focal_ratio: APERTURE_CHECK_FOCAL_RATIO,
        ..LensArrayConfig::full_coverage(8.0, 8.0)
    };
    let lens = match LensArray::new(config) {
        Ok(l) => l,
        Err(e) => return failed("aperture-oracle", e.to_string()),
    };
    let peak = (config.d_y * config.d_z).sqrt();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (t, p) in [(0.0f64, 0.0f64), (10.0, -15.0), (-20.0, 25.0), (30.0, 5.0)] {
        let (theta, phi) = (t.to_radians(), p.to_radians());
        let focus = lens.focus_antenna(theta, phi);
        for de in -1..=1 {
            for da in -1..=1 {
                let a = AntennaIndex::new(focus.m_e + de, focus.m_a + da);
                if lens.position(a).is_none() {
                    continue;
                }
                let sample = match aperture_integration_oracle(&config, theta, phi, a, ApertureOracleOptions::default()) {
                    Ok(s) => s,
                    Err(e) => return failed("aperture-oracle", e.to_string()),
                };
                let closed = response(&config, a, theta, phi);
                worst = worst.max((sample.value.norm() - closed.norm()).abs() / peak);
                compared += 1;
            }
        }
    }
    check(
        "aperture-oracle",
        worst,
        APERTURE_CHECK_TOLERANCE,
        format!("{compared} antennas, |oracle| vs |closed form| relative to the peak gain"),
    )
}

fn exact_omni_design(n_users: usize, mu: usize) -> Result<TrainingDesign> {
    let upa = UpaConfig::new(1, 1);
    Ok(TrainingDesign {
        omni: omni_beamformer(&upa, 60.0, 60.0),
        pilots: PilotDesign::new(n_users, mu, n_users * (mu + 1), 1, 8)?,
        training: training_matrix(1),
    })
}

/// Largest phase-2 tap estimation error on a noiseless single-antenna-MS instance.
pub fn phase2_exactness_error(seed: u64, n_users: usize, m_rf: usize) -> Result<f64> {
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let sc = ScenarioConfig::paper_default(n_users);
    let mu = sc.mu();
    let upa = UpaConfig::new(1, 1);
    let d = discretize(&sample_channel(&sc, seed), &lens, &upa, sc.bandwidth_hz);
    let design = exact_omni_design(n_users, mu)?;
    let trainer = Trainer::new(&d, &design, &TrainingConfig::default(), mu, m_rf, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p1 = trainer.phase1(&mut rng)?;
    let p2 = trainer.phase2(&p1.selected, &mut rng);
    let mut worst: f64 = 0.0;
    for (est, &m) in p2.beta_hat.iter().zip(&p1.selected) {
        for k in 0..n_users {
            for (i, truth) in d.tap_betas(m, k, mu).iter().enumerate() {
                worst = worst.max((est[i * n_users + k] - truth).norm());
            }
        }
    }
    Ok(worst)
}

/// Largest phase-3 effective-channel error on a noiseless separated instance.
pub fn phase3_exactness_error(seed: u64, n_users: usize) -> Result<f64> {
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let sc = ScenarioConfig::paper_default(n_users);
    let mu = sc.mu();
    let upa = UpaConfig::new(4, 4);
    let d = discretize(&separated_on_grid(&sc, &lens, seed), &lens, &upa, sc.bandwidth_hz);
    let design = TrainingDesign {
        omni: omni_beamformer(&upa, 60.0, 60.0),
        pilots: PilotDesign::new(n_users, mu, n_users * (mu + 1), 1, 8)?,
        training: training_matrix(16),
    };
    let trainer = Trainer::new(&d, &design, &TrainingConfig::default(), mu, n_users * sc.n_paths, 0.0)?;
    let report = trainer.run(&mut ChaCha8Rng::seed_from_u64(seed))?;
    let mut worst: f64 = 0.0;
    for k in 0..n_users {
        for (row, &r) in report.g_hat[k].iter().zip(&report.members[k]) {
            let m = report.selected[r];
            let delay = report.associations[r].expect("member rows are associated").delay;
            let truth = d.tap_at(k, delay).map(|t| t.row(m).to_vec()).unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); 16]);
            for (a, b) in row.iter().zip(&truth) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok(worst)
}

pub fn ls_exactness_check() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        for r in [phase2_exactness_error(seed, 2, 10), phase3_exactness_error(seed, 2)] {
            match r {
                Ok(e) => worst = worst.max(e),
                Err(e) => return failed("ls-exactness", e.to_string()),
            }
        }
    }
    check("ls-exactness", worst, 1e-9, "noiseless phase-2 taps and phase-3 effective channels".into())
}

/// Largest `|empirical - analytic| / sigma` over the users of one instance.
pub fn sinr_agreement(seed: u64, n_symbols: usize, snr_db: f64, m_rf: usize) -> Result<Vec<(f64, f64, f64)>> {
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let mut sc = ScenarioConfig::paper_default(2);
    sc.n_paths = 2;
    let upa = UpaConfig::new(4, 4);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::default())?;
    let d = discretize(&sample_channel(&sc, seed), &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), m_rf)?);
    let p = crate::linksim::snr_to_power(snr_db);
    let powers = [p, p];
    let (set, _) = mmse_design(&eff, &powers, crate::linksim::NOISE_VAR, &cb)?;
    let analytic = evaluate_sinr(&eff, &set, &powers, crate::linksim::NOISE_VAR)?;
    let v: Vec<_> = set.users.iter().map(|u| u.v.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000));
    let streams = transmit_receive(&d, &eff.selected, &v, &powers, crate::linksim::NOISE_VAR, n_symbols, Modulation::Gaussian, &mut rng);
    let measured = measure_sinr(&streams, &set, &d, &eff, &powers, sc.mu())?;
    Ok(analytic
        .sinr
        .iter()
        .zip(&measured)
        .map(|(a, m)| (*a, m.sinr, m.std_err))
        .collect())
}

pub fn sinr_check() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..2 {
        match sinr_agreement(seed, 100_000, 0.0, 8) {
            Ok(v) => {
                for (a, m, s) in v {
                    worst = worst.max((a - m).abs() / s);
                }
            }
            Err(e) => return failed("sinr-waveform", e.to_string()),
        }
    }
    check("sinr-waveform", worst, 3.0, "|measured - analytic| in Monte Carlo standard errors".into())
}

/// Sum rates of the exhaustive search and of the MMSE design on a toy instance.
pub fn p1_gap(seed: u64, separated: bool) -> Result<(f64, f64)> {
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let sc = ScenarioConfig::paper_default(2);
    let upa = UpaConfig::new(2, 2);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::with_grid(2, 4))?;
    let real = if separated {
        separated_on_grid(&sc, &lens, seed)
    } else {
        sample_channel(&sc, seed)
    };
    let d = discretize(&real, &lens, &upa, sc.bandwidth_hz);
    let m_rf = if separated { 6 } else { 8 };
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), m_rf)?);
    let powers = [1.0, 1.0];
    let (_, oracle) = exhaustive_p1_oracle(&eff, &powers, 1.0, &cb)?;
    let (set, _) = mmse_design(&eff, &powers, 1.0, &cb)?;
    let mmse = evaluate_sinr(&eff, &set, &powers, 1.0)?;
    Ok((oracle.sum_rate, mmse.sum_rate))
}

pub fn p1_check() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        match p1_gap(seed, false) {
            Ok((o, m)) => worst = worst.max(m - o),
            Err(e) => return failed("p1-dominance", e.to_string()),
        }
    }
    check("p1-dominance", worst.max(0.0), 1e-9, "MMSE design sum rate never exceeds exhaustive search".into())
}

/// Largest per-user rate difference between MRC and MMSE on a separated instance.
pub fn mrc_mmse_gap(seed: u64, n_users: usize) -> Result<f64> {
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let sc = ScenarioConfig::paper_default(n_users);
    let upa = UpaConfig::new(4, 4);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::default())?;
    let d = discretize(&separated_on_grid(&sc, &lens, seed), &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), n_users * sc.n_paths)?);
    let powers = vec![10.0; n_users];
    let mrc = evaluate_sinr(&eff, &mrc_design(&eff, &cb), &powers, 1.0)?;
    let (set, _) = mmse_design(&eff, &powers, 1.0, &cb)?;
    let mmse = evaluate_sinr(&eff, &set, &powers, 1.0)?;
    Ok(mrc.rate.iter().zip(&mmse.rate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn mrc_mmse_check() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        match mrc_mmse_gap(seed, 3) {
            Ok(g) => worst = worst.max(g),
            Err(e) => return failed("mrc-mmse-separated", e.to_string()),
        }
    }
    check("mrc-mmse-separated", worst, 1e-9, "per-user rate difference on separated on-grid paths".into())
}

/// Runs every oracle check.
pub fn run_all() -> ValidationReport {
    ValidationReport {
        checks: vec![
            grid_count_check(),
            overhead_check(),
            aperture_check(lens_element_response),
            ls_exactness_check(),
            sinr_check(),
            p1_check(),
            mrc_mmse_check(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        assert!(grid_count_check().passed);
        assert!(overhead_check().passed);
        assert!(ls_exactness_check().passed, "{}", ls_exactness_check());
        assert!(mrc_mmse_check().passed, "{}", mrc_mmse_check());
    }

    #[test]
    fn aperture_check_catches_perturbed_response() {
        let good = aperture_check(lens_element_response);
        assert!(good.passed, "{good}");
        let bad = aperture_check(|c, a, t, p| lens_element_response(c, a, t, p) * 1.01);
        assert!(!bad.passed, "{bad}");
    }
}
