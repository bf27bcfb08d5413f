//! Acceptance suite. Each criterion prints one PASS/FAIL line with the
//! measured quantity and its tolerance; the process exits non-zero if any
//! criterion fails. Pass substrings as arguments to run a subset.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lens_pdma::channel::{discretize, effective_matrices, sample_channel, ScenarioConfig};
use lens_pdma::codebook::{beamsteering_codebook, omni_beamformer, training_matrix, CodebookConfig};
use lens_pdma::config::{ExperimentConfig, RfChains, Scheme, Sweep, SweepAxis};
use lens_pdma::estimation::{training_overhead, PilotDesign, Trainer, TrainingConfig, TrainingDesign};
use lens_pdma::instances::separated_on_grid;
use lens_pdma::lens_array::{
    antenna_grid, aperture_integration_oracle, lens_element_response, AntennaIndex, LensArray, LensArrayConfig,
    UpaConfig,
};
use lens_pdma::linksim::{genie_power, measure_sinr, run_experiment, snr_to_power, transmit_receive, Modulation, SweepResult, NOISE_VAR};
use lens_pdma::pdma::{evaluate_sinr, exhaustive_p1_oracle, mmse_design, mrc_design, select_antennas};
use lens_pdma::results::write_csv;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: String) -> Outcome {
    Outcome { passed, summary }
}

fn paper_lens() -> LensArray {
    LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0)).unwrap()
}

fn antenna_count() -> Outcome {
    let cfg = LensArrayConfig::full_coverage(10.0, 10.0);
    let start = Instant::now();
    let n = antenna_grid(&cfg).len();
    let elapsed = start.elapsed();
    outcome(
        n == 317 && elapsed < Duration::from_millis(1),
        format!("{n} antennas (expected 317) in {elapsed:?} (limit 1 ms)"),
    )
}

fn overhead() -> Outcome {
    let a = training_overhead(317, 10, 16, 50, 5);
    let b = training_overhead(317, 3, 16, 50, 1);
    outcome(
        a.total == 503 && a.brute_force == 128_000 && b.total == 373,
        format!("T = {} (503), T' = {} (128000), single-user T = {} (373)", a.total, a.brute_force, b.total),
    )
}

fn aperture_oracle() -> Outcome {
    let cfg = LensArrayConfig::full_coverage(10.0, 10.0);
    let lens = LensArray::new(cfg).unwrap();
    let peak = (cfg.d_y * cfg.d_z).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut failing_angles = 0;
    let mut errors = 0;
    for _ in 0..20 {
        let theta = rng.random_range(-45f64..=45.0).to_radians();
        let phi = rng.random_range(-45f64..=45.0).to_radians();
        let focus = lens.focus_antenna(theta, phi);
        let mut angle_worst: f64 = 0.0;
        for de in -1..=1 {
            for da in -1..=1 {
                let a = AntennaIndex::new(focus.m_e + de, focus.m_a + da);
                if lens.position(a).is_none() {
                    continue;
                }
                match aperture_integration_oracle(&cfg, theta, phi, a, Default::default()) {
                    Ok(s) => {
                        let closed = lens_element_response(&cfg, a, theta, phi);
                        angle_worst = angle_worst.max((s.value.norm() - closed.norm()).abs() / peak);
                    }
                    Err(_) => errors += 1,
                }
            }
        }
        if angle_worst > 0.05 {
            failing_angles += 1;
        }
        worst = worst.max(angle_worst);
    }
    outcome(
        worst <= 0.05 && errors == 0,
        format!(
            "focal ratio 10: worst | |oracle| - |closed form| | = {worst:.4} of sqrt(d_y d_z) (tolerance 0.05); {failing_angles}/20 angles exceed; {errors} integration failures"
        ),
    )
}

fn ls_exactness() -> Outcome {
    let lens = paper_lens();
    let upa = UpaConfig::new(1, 1);
    let design = |k: usize| TrainingDesign {
        omni: omni_beamformer(&upa, 60.0, 60.0),
        pilots: PilotDesign::new(k, 50, k * 51, 1, 8).unwrap(),
        training: training_matrix(1),
    };
    let mut phase2: f64 = 0.0;
    let mut phase3: f64 = 0.0;
    for seed in 0..50u64 {
        // phase 2 on random multi-user instances
        let k = 2 + (seed as usize % 4);
        let sc = ScenarioConfig::paper_default(k);
        let d = discretize(&sample_channel(&sc, seed), &lens, &upa, sc.bandwidth_hz);
        let dz = design(k);
        let trainer = Trainer::new(&d, &dz, &TrainingConfig::default(), 50, 10, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p1 = trainer.phase1(&mut rng).unwrap();
        let p2 = trainer.phase2(&p1.selected, &mut rng);
        for (est, &m) in p2.beta_hat.iter().zip(&p1.selected) {
            for kk in 0..k {
                for (i, truth) in d.tap_betas(m, kk, 50).iter().enumerate() {
                    phase2 = phase2.max((est[i * k + kk] - truth).norm());
                }
            }
        }

        // phase 3: random single-user instances and separated multi-user ones
        for (k, real) in [
            (1, sample_channel(&ScenarioConfig::paper_default(1), seed)),
            (3, separated_on_grid(&ScenarioConfig::paper_default(3), &lens, seed)),
        ] {
            let d = discretize(&real, &lens, &upa, 500e6);
            let dz = design(k);
            let m_rf = if k == 1 { 10 } else { 9 };
            let report = Trainer::new(&d, &dz, &TrainingConfig::default(), 50, m_rf, 0.0)
                .unwrap()
                .run(&mut ChaCha8Rng::seed_from_u64(seed))
                .unwrap();
            for kk in 0..k {
                for (row, &r) in report.g_hat[kk].iter().zip(&report.members[kk]) {
                    let m = report.selected[r];
                    let delay = report.associations[r].unwrap().delay;
                    let truth = d.tap_at(kk, delay).map_or(Complex64::new(0.0, 0.0), |t| t.row(m)[0]);
                    phase3 = phase3.max((row[0] - truth).norm());
                }
            }
        }
    }
    outcome(
        phase2 <= 1e-9 && phase3 <= 1e-9,
        format!("50 seeds: max phase-2 error {phase2:.2e}, max phase-3 error {phase3:.2e} (tolerance 1e-9)"),
    )
}

fn sinr_agreement() -> Outcome {
    let lens = paper_lens();
    let upa = UpaConfig::new(4, 4);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::default()).unwrap();
    let mut sc = ScenarioConfig::paper_default(2);
    sc.n_paths = 2;
    let p = snr_to_power(10.0);
    let powers = [p, p];
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for seed in 0..20u64 {
        let d = discretize(&sample_channel(&sc, seed), &lens, &upa, sc.bandwidth_hz);
        let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), 8).unwrap());
        let set = if seed % 2 == 0 { mrc_design(&eff, &cb) } else { mmse_design(&eff, &powers, NOISE_VAR, &cb).unwrap().0 };
        let analytic = evaluate_sinr(&eff, &set, &powers, NOISE_VAR).unwrap();
        let v: Vec<_> = set.users.iter().map(|u| u.v.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let streams = transmit_receive(&d, &eff.selected, &v, &powers, NOISE_VAR, 100_000, Modulation::Gaussian, &mut rng);
        let measured = measure_sinr(&streams, &set, &d, &eff, &powers, sc.mu()).unwrap();
        for (a, m) in analytic.sinr.iter().zip(&measured) {
            let z = (m.sinr - a).abs() / m.std_err;
            worst = worst.max(z);
            if z > 3.0 {
                outside += 1;
            }
        }
    }
    outcome(
        outside == 0,
        format!("20 instances, 40 users: worst |measured - analytic| = {worst:.2} sigma (tolerance 3); {outside} outside"),
    )
}

fn separated_rate_gap(seed: u64) -> f64 {
    let lens = paper_lens();
    let sc = ScenarioConfig::paper_default(3);
    let upa = UpaConfig::new(4, 4);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::default()).unwrap();
    let d = discretize(&separated_on_grid(&sc, &lens, seed), &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), 9).unwrap());
    let powers = [10.0; 3];
    let mrc = evaluate_sinr(&eff, &mrc_design(&eff, &cb), &powers, NOISE_VAR).unwrap();
    let mmse = evaluate_sinr(&eff, &mmse_design(&eff, &powers, NOISE_VAR, &cb).unwrap().0, &powers, NOISE_VAR).unwrap();
    mrc.rate.iter().zip(&mmse.rate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn mrc_equals_mmse() -> Outcome {
    let start = Instant::now();
    let worst = (0..20).map(separated_rate_gap).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("20 separated instances: max per-user rate gap {worst:.2e} (tolerance 1e-9) in {elapsed:.1?}"),
    )
}

fn p1_rates(seed: u64, separated: bool) -> (f64, f64) {
    let lens = paper_lens();
    let sc = ScenarioConfig::paper_default(2);
    let upa = UpaConfig::new(2, 2);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::with_grid(2, 4)).unwrap();
    assert_eq!(cb.len(), 8);
    let real = if separated { separated_on_grid(&sc, &lens, seed) } else { sample_channel(&sc, seed) };
    let d = discretize(&real, &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), 6).unwrap());
    let powers = [snr_to_power(5.0); 2];
    let (_, oracle) = exhaustive_p1_oracle(&eff, &powers, NOISE_VAR, &cb).unwrap();
    let (set, _) = mmse_design(&eff, &powers, NOISE_VAR, &cb).unwrap();
    (oracle.sum_rate, evaluate_sinr(&eff, &set, &powers, NOISE_VAR).unwrap().sum_rate)
}

fn p1_dominance() -> Outcome {
    let mut violations = 0;
    let mut worst_excess: f64 = 0.0;
    let mut strict = 0;
    for seed in 0..100 {
        let (oracle, mmse) = p1_rates(seed, false);
        worst_excess = worst_excess.max(mmse - oracle);
        if mmse > oracle * (1.0 + 1e-12) {
            violations += 1;
        }
        if oracle > mmse * (1.0 + 1e-9) {
            strict += 1;
        }
    }
    let mut worst_gap: f64 = 0.0;
    for seed in 0..20 {
        let (oracle, mmse) = p1_rates(seed, true);
        worst_gap = worst_gap.max((oracle - mmse).abs() / oracle);
    }
    outcome(
        violations == 0 && worst_gap <= 1e-9,
        format!(
            "100 instances: {violations} with MMSE above exhaustive (max excess {worst_excess:.1e}), exhaustive strictly better on {strict}; 20 separated: max relative gap {worst_gap:.1e} (tolerance 1e-9)"
        ),
    )
}

fn series(result: &SweepResult, scheme: &str) -> Vec<(f64, f64)> {
    result.rows.iter().filter(|r| r.scheme == scheme).map(|r| (r.axis_value, r.mean_sum_rate)).collect()
}

fn rf_chain_claim(n_users: usize, m_rf: usize, trials: usize, training_snr_db: f64, threshold: f64) -> Outcome {
    let mut cfg = ExperimentConfig::paper_defaults();
    cfg.scenario = ScenarioConfig::paper_default(n_users);
    cfg.training.training_snr_db = training_snr_db;
    cfg.sim.snr_db = -10.0;
    cfg.sim.n_trials = trials;
    cfg.m_rf = RfChains::All;
    cfg.sweep = Sweep {
        axis: SweepAxis::MRf,
        values: vec![m_rf as f64, 317.0],
    };
    let result = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let mut passed = true;
    let mut parts = Vec::new();
    for scheme in &cfg.schemes {
        let s = series(&result, &scheme.label());
        let ratio = s[0].1 / s[1].1;
        passed &= ratio >= threshold;
        parts.push(format!("{} {:.4}", scheme.label(), ratio));
    }
    let failed: usize = result.rows.iter().map(|r| r.failed_trials).sum();
    passed &= failed == 0;
    outcome(
        passed,
        format!(
            "K={n_users}, {trials} trials, rate(M_RF={m_rf}) / rate(all 317): {} (threshold {threshold}); {failed} failed trials",
            parts.join(", ")
        ),
    )
}

fn estimated_csi_claim() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, m_rf, training_snr_db) in [(1, 3, 10.0), (5, 10, 20.0)] {
        let mut cfg = ExperimentConfig::paper_defaults();
        cfg.scenario = ScenarioConfig::paper_default(k);
        cfg.training.training_snr_db = training_snr_db;
        cfg.m_rf = RfChains::Count(m_rf);
        cfg.sim.n_trials = 300;
        cfg.schemes = vec![Scheme::MRC_PERFECT, Scheme::MRC_ESTIMATED];
        let result = match run_experiment(&cfg) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("run failed: {e}")),
        };
        let perfect = series(&result, &Scheme::MRC_PERFECT.label());
        let estimated = series(&result, &Scheme::MRC_ESTIMATED.label());
        let worst = perfect
            .iter()
            .zip(&estimated)
            .map(|(p, e)| (p.0, e.1 / p.1))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        passed &= worst.1 >= 0.9;
        parts.push(format!("K={k}: min ratio {:.4} at {} dB", worst.1, worst.0));
    }
    outcome(
        passed,
        format!("estimated / perfect MRC over -20..10 dB, 300 trials: {} (threshold 0.9)", parts.join("; ")),
    )
}

fn table_bytes(threads: usize) -> Vec<u8> {
    let cfg = ExperimentConfig::paper_defaults();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let result = pool.install(|| run_experiment(&cfg)).unwrap();
    let mut out = Vec::new();
    write_csv(&result, &mut out).unwrap();
    out
}

fn determinism() -> Outcome {
    let a = table_bytes(1);
    let b = table_bytes(3);
    outcome(
        a == b && !a.is_empty(),
        format!("paper defaults run twice (1 and 3 worker threads): {} vs {} bytes, identical = {}", a.len(), b.len(), a == b),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "antenna-count", antenna_count, Duration::from_secs(1)),
        (2, "training-overhead", overhead, Duration::from_secs(1)),
        (3, "aperture-oracle", aperture_oracle, Duration::from_secs(60)),
        (4, "ls-exactness", ls_exactness, Duration::from_secs(60)),
        (5, "sinr-agreement", sinr_agreement, Duration::from_secs(300)),
        (6, "mrc-mmse-separated", mrc_equals_mmse, Duration::from_secs(10)),
        (7, "p1-dominance", p1_dominance, Duration::from_secs(300)),
        (8, "single-user-rf-chains", || rf_chain_claim(1, 5, 500, 10.0, 0.97), Duration::from_secs(900)),
        (9, "multi-user-rf-chains", || rf_chain_claim(5, 20, 300, 20.0, 0.85), Duration::from_secs(1800)),
        (10, "estimated-csi", estimated_csi_claim, Duration::from_secs(1800)),
        (11, "determinism", determinism, Duration::from_secs(600)),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (id, name, run, budget) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = o.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {name:<22} {}  {} [{elapsed:.1?}, budget {budget:?}{}]",
            if passed { "PASS" } else { "FAIL" },
            o.summary,
            if in_time { "" } else { ", over budget" }
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
