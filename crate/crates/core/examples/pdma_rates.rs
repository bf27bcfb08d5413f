//! MRC and MMSE PDMA designs on one perfect-CSI channel: per-user SINR
//! terms and rates across SNR.
//!
//! cargo run --release --example pdma_rates

use lens_pdma::channel::{discretize, effective_matrices, sample_channel, ScenarioConfig};
use lens_pdma::codebook::{beamsteering_codebook, CodebookConfig};
use lens_pdma::lens_array::{LensArray, LensArrayConfig, UpaConfig};
use lens_pdma::linksim::{genie_power, snr_to_power, NOISE_VAR};
use lens_pdma::pdma::{evaluate_sinr, mmse_design, mrc_design, select_antennas, sinr_terms};

fn main() -> lens_pdma::Result<()> {
    let sc = ScenarioConfig::paper_default(5);
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let upa = UpaConfig::new(4, 4);
    let cb = beamsteering_codebook(&upa, &CodebookConfig::default())?;
    let d = discretize(&sample_channel(&sc, 3), &lens, &upa, sc.bandwidth_hz);
    let eff = effective_matrices(&d, &select_antennas(&genie_power(&d), 10)?);
    println!("users served by each selected antenna: {:?}", eff.members);

    println!("snr_db  mrc_sum  mmse_sum");
    for snr_db in [-20.0, -10.0, 0.0, 10.0, 20.0] {
        let powers = vec![snr_to_power(snr_db); sc.n_users];
        let mrc = evaluate_sinr(&eff, &mrc_design(&eff, &cb), &powers, NOISE_VAR)?;
        let (set, _) = mmse_design(&eff, &powers, NOISE_VAR, &cb)?;
        let mmse = evaluate_sinr(&eff, &set, &powers, NOISE_VAR)?;
        println!("{snr_db:6.0}  {:7.3}  {:8.3}", mrc.sum_rate, mmse.sum_rate);
    }

    let powers = vec![snr_to_power(10.0); sc.n_users];
    let set = mrc_design(&eff, &cb);
    println!("MRC at 10 dB, per user:");
    for (k, t) in sinr_terms(&eff, &set, &powers, NOISE_VAR)?.iter().enumerate() {
        println!(
            "  user {k}: codeword {:3}, desired {:.3e}, ISI {:.3e}, IUI {:.3e}, noise {:.3e}, SINR {:.2}",
            set.users[k].codeword,
            t.desired,
            t.isi,
            t.iui,
            t.noise,
            t.sinr()
        );
    }
    Ok(())
}
