//! The three-phase training protocol on one channel: power-based antenna
//! selection, pilot-based path association and reduced channel estimation,
//! compared with the true channel.
//!
//! cargo run --release --example channel_estimation

use lens_pdma::channel::{discretize, sample_channel, ScenarioConfig};
use lens_pdma::estimation::{Trainer, TrainingConfig, TrainingDesign};
use lens_pdma::lens_array::{LensArray, LensArrayConfig, UpaConfig};
use lens_pdma::linksim::NOISE_VAR;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lens_pdma::Result<()> {
    let sc = ScenarioConfig::paper_default(5);
    let upa = UpaConfig::new(4, 4);
    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let d = discretize(&sample_channel(&sc, 11), &lens, &upa, sc.bandwidth_hz);
    let training = TrainingConfig {
        training_snr_db: 20.0,
        ..TrainingConfig::default()
    };
    let design = TrainingDesign::new(&sc, &upa, &training)?;
    println!(
        "omni probe: gain C = {:.3}, ripple {:.2}; pilot noise gain {:.2}",
        design.omni.gain, design.omni.ripple, design.pilots.noise_gain
    );

    let trainer = Trainer::new(&d, &design, &training, sc.mu(), 10, NOISE_VAR)?;
    let report = trainer.run(&mut ChaCha8Rng::seed_from_u64(1))?;
    let o = report.overhead;
    println!(
        "training length T = {} (phase 1 {}, phase 2 {}, phase 3 {}); brute force would need {}",
        o.total, o.t1, o.t2_total, o.t3, o.brute_force
    );

    for (r, (&m, a)) in report.selected.iter().zip(&report.associations).enumerate() {
        let (k, l) = d.strongest_path(m);
        let truth = format!("user {k} delay {}", d.path_delay[k][l]);
        match a {
            Some(a) => println!("row {r}: antenna {m:3} -> user {} delay {:2}   (strongest true path: {truth})", a.user, a.delay),
            None => println!("row {r}: antenna {m:3} unassociated"),
        }
    }

    for k in 0..sc.n_users {
        let mut err = 0.0;
        let mut norm = 0.0;
        for (row, &r) in report.g_hat[k].iter().zip(&report.members[k]) {
            let m = report.selected[r];
            let delay = report.associations[r].expect("member rows are associated").delay;
            let truth = d.tap_at(k, delay).map(|t| t.row(m).to_vec()).unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); d.n_ms]);
            for (a, b) in row.iter().zip(&truth) {
                err += (a - b).norm_sqr();
                norm += b.norm_sqr();
            }
        }
        println!("user {k}: {} rows, relative estimation error {:.2e}", report.members[k].len(), (err / norm).sqrt());
    }
    println!("feedback: {} bits for a 256-entry codebook", report.feedback_bits(256));
    Ok(())
}
