//! Lens array geometry and its sinc-type response, checked against direct
//! aperture integration.
//!
//! cargo run --release --example lens_response

use lens_pdma::lens_array::{
    antenna_grid, aperture_integration_oracle, lens_element_response, AntennaIndex, LensArray, LensArrayConfig,
};

fn main() -> lens_pdma::Result<()> {
    let cfg = LensArrayConfig::full_coverage(10.0, 10.0);
    println!("10 x 10 lens with full coverage: {} antennas", antenna_grid(&cfg).len());

    let lens = LensArray::new(cfg)?;
    let (theta, phi) = (12f64.to_radians(), -25f64.to_radians());
    let focus = lens.focus_antenna(theta, phi);
    println!("plane wave from (12, -25) deg focuses on antenna (m_e, m_a) = ({}, {})", focus.m_e, focus.m_a);

    println!("|a_m| around the focus (rows m_e, columns m_a):");
    for de in (-2..=2).rev() {
        let row: Vec<String> = (-2..=2)
            .map(|da| {
                let a = AntennaIndex::new(focus.m_e + de, focus.m_a + da);
                format!("{:6.3}", lens_element_response(&cfg, a, theta, phi).norm())
            })
            .collect();
        println!("  {}", row.join(" "));
    }

    let total: f64 = lens.antennas().iter().map(|&a| lens_element_response(&cfg, a, theta, phi).norm_sqr()).sum();
    println!("sum of |a_m|^2 = {total:.2} (aperture area {})", cfg.d_y * cfg.d_z);

    for focal_ratio in [10.0, 100.0, 1000.0] {
        let cfg = LensArrayConfig { focal_ratio, ..cfg };
        let s = aperture_integration_oracle(&cfg, theta, phi, focus, Default::default())?;
        let closed = lens_element_response(&cfg, focus, theta, phi);
        println!(
            "F/D = {focal_ratio:>6}: integrated |r| = {:.4}, closed form {:.4} ({} evaluations)",
            s.value.norm(),
            closed.norm(),
            s.evaluations
        );
    }
    Ok(())
}
