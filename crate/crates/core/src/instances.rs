//! Constructed channel instances with known structure, used by the oracle
//! checks, the acceptance suite and the examples.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_channel, ChannelRealization, ScenarioConfig};
use crate::lens_array::{AntennaIndex, LensArray, LensArrayConfig};

/// Direction `(theta, phi)` whose closed-form response is focused entirely
/// on `antenna`.
pub fn on_grid_direction(config: &LensArrayConfig, antenna: AntennaIndex) -> (f64, f64) {
    let theta = (f64::from(antenna.m_e) / config.d_z).asin();
    let phi = (f64::from(antenna.m_a) / (config.d_y * theta.cos())).asin();
    (theta, phi)
}

/// Samples a channel from `scenario`, then moves every AoA onto a distinct
/// lens antenna within the angular support, so that each antenna receives
/// at most one path. Gains, delays and AoDs keep their sampled values.
pub fn separated_on_grid(scenario: &ScenarioConfig, lens: &LensArray, seed: u64) -> ChannelRealization {
    let mut real = sample_channel(scenario, seed);
    let el = scenario.elevation_support_deg.to_radians();
    let az = scenario.azimuth_support_deg.to_radians();
    let mut candidates: Vec<AntennaIndex> = lens
        .antennas()
        .iter()
        .copied()
        .filter(|&a| {
            let (t, p) = on_grid_direction(lens.config(), a);
            t.abs() <= el && p.abs() <= az
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    candidates.shuffle(&mut rng);
    let mut next = candidates.into_iter();
    for user in &mut real.paths {
        for path in user.iter_mut() {
            let a = next.next().expect("more antennas than paths");
            path.aoa = on_grid_direction(lens.config(), a);
        }
    }
    real
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens_array::lens_element_response;

    #[test]
    fn on_grid_direction_focuses_on_antenna() {
        let cfg = LensArrayConfig::full_coverage(10.0, 10.0);
        let (t, p) = on_grid_direction(&cfg, AntennaIndex::new(-4, 5));
        assert!((lens_element_response(&cfg, AntennaIndex::new(-4, 5), t, p).norm() - 10.0).abs() < 1e-12);
        assert!(lens_element_response(&cfg, AntennaIndex::new(-4, 4), t, p).norm() < 1e-12);
    }

    #[test]
    fn separated_paths_use_distinct_antennas() {
        let lens = LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0)).unwrap();
        let sc = ScenarioConfig::paper_default(5);
        let real = separated_on_grid(&sc, &lens, 3);
        let mut seen = std::collections::BTreeSet::new();
        for p in real.paths.iter().flatten() {
            assert!(seen.insert(lens.focus_antenna(p.aoa.0, p.aoa.1)));
            assert!(p.aoa.0.abs() <= 60f64.to_radians() + 1e-12);
        }
    }
}
