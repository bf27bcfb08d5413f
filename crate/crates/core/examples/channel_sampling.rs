//! Draws a multi-user multipath channel, maps it onto the lens antennas and
//! the delay taps, and round-trips the realization through CSV.
//!
//! cargo run --release --example channel_sampling

use lens_pdma::channel::{discretize, sample_channel, ChannelRealization, ScenarioConfig};
use lens_pdma::lens_array::{LensArray, LensArrayConfig, UpaConfig};

fn main() -> lens_pdma::Result<()> {
    let sc = ScenarioConfig::paper_default(3);
    let real = sample_channel(&sc, 7);
    for (k, paths) in real.paths.iter().enumerate() {
        for (l, p) in paths.iter().enumerate() {
            println!(
                "user {k} path {l}: |alpha|^2 = {:.3}, delay {:5.1} ns, AoA ({:6.1}, {:6.1}) deg",
                p.gain.norm_sqr(),
                p.delay_s * 1e9,
                p.aoa.0.to_degrees(),
                p.aoa.1.to_degrees()
            );
        }
    }

    let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0))?;
    let d = discretize(&real, &lens, &UpaConfig::new(4, 4), sc.bandwidth_hz);
    println!("largest tap delay {} (frame guard mu = {}), {} BS antennas, {} MS antennas", d.mu, sc.mu(), d.n_bs, d.n_ms);
    for k in 0..d.n_users() {
        let delays: Vec<usize> = d.taps[k].iter().map(|t| t.delay).collect();
        println!("user {k}: taps at {delays:?}");
    }
    let (m, (k, l)) = (0..d.n_bs)
        .map(|m| (m, d.strongest_path(m)))
        .max_by(|a, b| d.beta(a.0, a.1 .0, a.1 .1).norm().total_cmp(&d.beta(b.0, b.1 .0, b.1 .1).norm()))
        .unwrap();
    println!("strongest coupling: antenna {m} {:?} <- user {k} path {l}", lens.antennas()[m]);

    let mut csv = Vec::new();
    real.write_csv(&mut csv)?;
    let back = ChannelRealization::read_csv(csv.as_slice())?;
    println!("CSV round trip exact: {}", back == real);
    Ok(())
}
