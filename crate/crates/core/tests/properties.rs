//! Randomised invariants over channels, designs and file formats.

use num_complex::Complex64;
use proptest::prelude::*;

use lens_pdma::channel::{discretize, effective_matrices, sample_channel, EffectiveChannels, ScenarioConfig};
use lens_pdma::codebook::{beamsteering_codebook, Codebook, CodebookConfig};
use lens_pdma::config::{Csi, SweepAxis};
use lens_pdma::estimation::training_overhead;
use lens_pdma::linalg::dot;
use lens_pdma::lens_array::{lens_element_response, upa_response, AntennaIndex, LensArray, LensArrayConfig, UpaConfig};
use lens_pdma::linksim::{derive_seed, genie_power, SweepResult, SweepRow};
use lens_pdma::pdma::{evaluate_sinr, mmse_design, mmse_for_codewords, mrc_design, select_antennas, CombiningMode};
use lens_pdma::results::{read_csv, read_jsonl, write_csv, write_jsonl};

fn setup(n_users: usize, seed: u64, m_rf: usize) -> (EffectiveChannels, Codebook) {
    let sc = ScenarioConfig::paper_default(n_users);
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0)).unwrap();
    let upa = UpaConfig::new(2, 2);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::with_size(16)).unwrap();
    let d = discretize(&sample_channel(&sc, seed), &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), m_rf).unwrap());
    (eff, cb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steering_vectors_have_unit_norm(theta in -1.5f64..1.5, phi in -1.5f64..1.5, ny in 1usize..6, nz in 1usize..6) {
        let b = upa_response(&UpaConfig::new(ny, nz), theta, phi);
        let norm: f64 = b.as_slice().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lens_response_is_bounded_by_aperture_gain(theta in -1.5f64..1.5, phi in -1.5f64..1.5, me in -4i32..=4, ma in -4i32..=4) {
        let cfg = LensArrayConfig::full_coverage(8.0, 6.0);
        let a = lens_element_response(&cfg, AntennaIndex::new(me, ma), theta, phi);
        prop_assert!(a.norm() <= (cfg.d_y * cfg.d_z).sqrt() + 1e-12);
    }

    #[test]
    fn mmse_combining_beats_mrc_for_the_same_codewords(seed in 0u64..10_000, snr_db in -20.0f64..20.0) {
        let (eff, cb) = setup(3, seed, 6);
        let powers = vec![10f64.powf(snr_db / 10.0); 3];
        let mrc = mrc_design(&eff, &cb);
        let mrc_rates = evaluate_sinr(&eff, &mrc, &powers, 1.0).unwrap();
        let (mmse, closed) = mmse_for_codewords(&eff, &powers, 1.0, &cb, &mrc.codewords()).unwrap();
        let mmse_rates = evaluate_sinr(&eff, &mmse, &powers, 1.0).unwrap();
        for k in 0..3 {
            prop_assert!(mmse_rates.sinr[k] >= mrc_rates.sinr[k] * (1.0 - 1e-9) - 1e-12);
            prop_assert!((mmse_rates.sinr[k] - closed[k]).abs() <= 1e-8 * closed[k].max(1.0));
        }
    }

    #[test]
    fn mmse_sinr_never_drops_when_antennas_are_added(seed in 0u64..10_000, drop in 0usize..8) {
        let (eff, cb) = setup(2, seed, 8);
        let powers = [1.0, 1.0];
        let (set, full) = mmse_design(&eff, &powers, 1.0, &cb).unwrap();
        let rows: Vec<usize> = (0..eff.n_rows()).filter(|&r| r != drop).collect();
        let fewer = eff.restrict(&rows);
        let (_, reduced) = mmse_for_codewords(&fewer, &powers, 1.0, &cb, &set.codewords()).unwrap();
        for k in 0..2 {
            prop_assert!(reduced[k] <= full[k] * (1.0 + 1e-9) + 1e-12, "user {k}: {} > {}", reduced[k], full[k]);
        }
    }

    #[test]
    fn sinr_is_invariant_to_common_power_scaling(seed in 0u64..10_000, scale in 1e-3f64..1e3) {
        let (eff, cb) = setup(3, seed, 6);
        let powers = vec![2.0, 0.5, 1.0];
        let scaled: Vec<f64> = powers.iter().map(|p| p * scale).collect();
        for mode in [CombiningMode::Mrc, CombiningMode::Mmse] {
            let set = match mode {
                CombiningMode::Mrc => mrc_design(&eff, &cb),
                CombiningMode::Mmse => mmse_design(&eff, &powers, 1.0, &cb).unwrap().0,
            };
            let a = evaluate_sinr(&eff, &set, &powers, 1.0).unwrap();
            let b = evaluate_sinr(&eff, &set, &scaled, scale).unwrap();
            for k in 0..3 {
                prop_assert!((a.sinr[k] - b.sinr[k]).abs() <= 1e-9 * a.sinr[k].max(1.0));
            }
        }
    }

    #[test]
    fn codeword_choice_ignores_common_channel_phase(seed in 0u64..10_000, psi in 0.0f64..std::f64::consts::TAU) {
        let (eff, cb) = setup(1, seed, 4);
        let g = eff.g_self[0].clone();
        let rotated = g.map(|z| z * Complex64::from_polar(1.0, psi));
        let (i, gain) = cb.best_for(&g);
        let (j, rotated_gain) = cb.best_for(&rotated);
        prop_assert!((gain - rotated_gain).abs() <= 1e-12 * gain.max(1e-300));
        // a different index is only allowed as a numerical tie
        if i != j {
            let gain_j: f64 = (0..g.nrows())
                .map(|r| dot(&g.row(r).iter().copied().collect::<Vec<_>>(), cb.get(j)).norm_sqr())
                .sum();
            prop_assert!((gain - gain_j).abs() <= 1e-12 * gain);
        }
    }

    #[test]
    fn overhead_matches_phase_durations(m_rf in 1usize..40, m_ms in 1usize..32, mu in 0usize..80, k in 1usize..8) {
        let m_bs = 317;
        let o = training_overhead(m_bs, m_rf, m_ms, mu, k);
        let scan = m_bs.div_ceil(m_rf);
        prop_assert_eq!(o.t1, scan + mu);
        prop_assert_eq!(o.total, scan + k * (mu + 1) + m_ms + 4 * mu);
        prop_assert_eq!(o.brute_force, scan * mu * k * m_ms);
    }

    #[test]
    fn derived_seeds_are_reproducible_and_distinct(master in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assert_eq!(derive_seed(master, &[a, 1]), derive_seed(master, &[a, 1]));
        if a != b {
            prop_assert_ne!(derive_seed(master, &[a, 1]), derive_seed(master, &[b, 1]));
        }
        prop_assert_ne!(derive_seed(master, &[a, 1]), derive_seed(master, &[a, 2]));
    }

    #[test]
    fn result_tables_round_trip(
        values in prop::collection::vec((-1e6f64..1e6, 1usize..1000, 0usize..10, prop::collection::vec(0.0f64..50.0, 1..6), prop::option::of(0usize..2000)), 1..8)
    ) {
        let rows: Vec<SweepRow> = values
            .into_iter()
            .map(|(x, trials, failed, per_user, overhead)| SweepRow {
                axis_value: x,
                scheme: if overhead.is_some() { "mrc-estimated".into() } else { "mmse-perfect".into() },
                mode: if overhead.is_some() { CombiningMode::Mrc } else { CombiningMode::Mmse },
                csi: if overhead.is_some() { Csi::Estimated } else { Csi::Perfect },
                trials,
                failed_trials: failed,
                mean_sum_rate: per_user.iter().sum(),
                std_err: x.abs().sqrt() / 7.0,
                per_user_rate: per_user,
                overhead,
                empirical_sum_rate: overhead.map(|o| o as f64 / 3.0),
            })
            .collect();
        let result = SweepResult { axis: SweepAxis::SnrDb, rows };
        let mut csv = Vec::new();
        write_csv(&result, &mut csv).unwrap();
        prop_assert_eq!(&read_csv(csv.as_slice()).unwrap(), &result);
        let mut jsonl = Vec::new();
        write_jsonl(&result, &mut jsonl).unwrap();
        prop_assert_eq!(&read_jsonl(jsonl.as_slice()).unwrap(), &result);
    }
}
