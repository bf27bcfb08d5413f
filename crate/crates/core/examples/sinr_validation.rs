//! Pushes random symbols through the multipath channel and compares the
//! SINR measured at the combiner output with the closed-form value.
//!
//! cargo run --release --example sinr_validation

use lens_pdma::channel::{discretize, effective_matrices, sample_channel, ScenarioConfig};
use lens_pdma::codebook::{beamsteering_codebook, CodebookConfig};
use lens_pdma::lens_array::{LensArray, LensArrayConfig, UpaConfig};
use lens_pdma::linksim::{genie_power, measure_sinr, snr_to_power, transmit_receive, Modulation, NOISE_VAR};
use lens_pdma::pdma::{evaluate_sinr, mmse_design, mrc_design, select_antennas};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lens_pdma::Result<()> {
    let mut sc = ScenarioConfig::paper_default(3);
    sc.n_paths = 2;
    let upa = UpaConfig::new(4, 4);
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let cb = beamsteering_codebook(&upa, &CodebookConfig::default())?;
    let d = discretize(&sample_channel(&sc, 5), &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), 8)?);
    let powers = vec![snr_to_power(10.0); sc.n_users];

    for (name, set) in [
        ("MRC", mrc_design(&eff, &cb)),
        ("MMSE", mmse_design(&eff, &powers, NOISE_VAR, &cb)?.0),
    ] {
        let analytic = evaluate_sinr(&eff, &set, &powers, NOISE_VAR)?;
        let v: Vec<_> = set.users.iter().map(|u| u.v.clone()).collect();
        let streams = transmit_receive(
            &d,
            &eff.selected,
            &v,
            &powers,
            NOISE_VAR,
            100_000,
            Modulation::Qpsk,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        let measured = measure_sinr(&streams, &set, &d, &eff, &powers, sc.mu())?;
        println!("{name}:");
        for (k, (a, m)) in analytic.sinr.iter().zip(&measured).enumerate() {
            println!(
                "  user {k}: analytic {a:8.4}, measured {:8.4} +- {:.4} ({:+.2} sigma); ISI {:.2e}, IUI {:.2e}",
                m.sinr,
                m.std_err,
                (m.sinr - a) / m.std_err,
                m.isi,
                m.iui
            );
        }
    }
    Ok(())
}
