//! Parameter sweep over the number of BS RF chains, written as CSV with its
//! metadata and merged into a comparison table.
//!
//! cargo run --release --example rf_chain_sweep [trials]

use lens_pdma::channel::ScenarioConfig;
use lens_pdma::config::{ExperimentConfig, RfChains, Sweep, SweepAxis};
use lens_pdma::linksim::run_experiment;
use lens_pdma::results::{merge, write_csv};

fn main() -> lens_pdma::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let mut cfg = ExperimentConfig::paper_defaults();
    cfg.scenario = ScenarioConfig::paper_default(1);
    cfg.training.training_snr_db = 10.0;
    cfg.sim.snr_db = -10.0;
    cfg.sim.n_trials = trials;
    cfg.m_rf = RfChains::All;
    cfg.sweep = Sweep {
        axis: SweepAxis::MRf,
        values: vec![1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 317.0],
    };
    let result = run_experiment(&cfg)?;
    write_csv(&result, std::io::stdout().lock())?;

    let full = result.rows.iter().filter(|r| r.axis_value == 317.0);
    for f in full {
        let at5 = result.rows.iter().find(|r| r.axis_value == 5.0 && r.scheme == f.scheme).unwrap();
        println!("# {}: 5 RF chains reach {:.1}% of the full-array rate", f.scheme, 100.0 * at5.mean_sum_rate / f.mean_sum_rate);
    }

    println!("# plot-ready table");
    merge(&[("single-user".to_string(), result)])?.write_csv(std::io::stdout().lock())?;
    Ok(())
}
