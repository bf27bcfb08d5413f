//! Runs every oracle check and shows that a 1% error in the lens response
//! is caught by aperture integration.
//!
//! cargo run --release --example oracle_report

use lens_pdma::lens_array::lens_element_response;
use lens_pdma::validate::{aperture_check, run_all};

fn main() {
    let report = run_all();
    for c in &report.checks {
        println!("{c}");
    }
    println!("perturbed response:");
    println!("{}", aperture_check(|cfg, a, t, p| lens_element_response(cfg, a, t, p) * 1.01));
}
