//! Waveform-level Monte Carlo: symbols are pushed through the symbol-rate
//! channel, delay-compensated and combined, and the SINR is measured from
//! the regenerated signal, interference and noise terms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{discretize, effective_matrices, sample_channel, DiscreteChannel, EffectiveChannels};
use crate::codebook::{beamsteering_codebook, Codebook};
use crate::config::{Csi, ExperimentConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::estimation::{Trainer, TrainingDesign, TrainingOverhead};
use crate::lens_array::LensArray;
use crate::linalg::{dot, ZERO};
use crate::pdma::{
    evaluate_sinr, mmse_design, mrc_design, select_antennas, BeamformerSet, CombiningMode, RateReport, UserBeamformer,
    UserFlag,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// Unit-power circular complex Gaussian.
    #[default]
    Gaussian,
    Qpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_symbols: usize,
    pub n_trials: usize,
    /// Data-phase SNR `p / sigma^2`, dB; overridden by an SNR sweep.
    pub snr_db: f64,
    pub seed: u64,
    pub modulation: Modulation,
    /// Also measure SINR on simulated waveforms, not just analytically.
    pub measure_waveform: bool,
    /// Coherence block length in symbols used for the training overhead.
    pub coherence_symbols: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_symbols: 10_000,
            n_trials: 100,
            snr_db: 0.0,
            seed: 1,
            modulation: Modulation::Gaussian,
            measure_waveform: false,
            coherence_symbols: 50_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, mu: usize) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        if self.measure_waveform && self.n_symbols <= 2 * mu {
            return Err(Error::InvalidConfig(format!(
                "n_symbols = {} must exceed twice the delay spread ({})",
                self.n_symbols,
                2 * mu
            )));
        }
        if self.coherence_symbols == 0 {
            return Err(Error::InvalidConfig("coherence_symbols must be positive".into()));
        }
        Ok(())
    }
}

/// Noise variance of every simulation; SNRs scale the transmit power.
pub const NOISE_VAR: f64 = 1.0;

pub fn snr_to_power(snr_db: f64) -> f64 {
    NOISE_VAR * 10f64.powf(snr_db / 10.0)
}

fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

fn draw_symbol(rng: &mut ChaCha8Rng, modulation: Modulation) -> Complex64 {
    match modulation {
        Modulation::Gaussian => complex_normal(rng, 1.0),
        Modulation::Qpsk => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            Complex64::new(
                if rng.random::<bool>() { s } else { -s },
                if rng.random::<bool>() { s } else { -s },
            )
        }
    }
}

/// Received streams on the selected antennas, split by origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedStreams {
    /// `symbols[k][n]`.
    pub symbols: Vec<Vec<Complex64>>,
    /// `per_user[k][r][n]`: noiseless contribution of user `k` at selected antenna `r`.
    pub per_user: Vec<Vec<Vec<Complex64>>>,
    /// `noise[r][n]`.
    pub noise: Vec<Vec<Complex64>>,
}

impl ReceivedStreams {
    pub fn len(&self) -> usize {
        self.noise.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total received sample `y_r[n]`.
    pub fn received(&self, r: usize, n: usize) -> Complex64 {
        self.per_user.iter().map(|u| u[r][n]).sum::<Complex64>() + self.noise[r][n]
    }
}

/// Delayed superposition of every user's beamformed symbols through every
/// tap, plus i.i.d. circular Gaussian noise of variance `noise_var`.
/// Symbols before time zero are zero.
#[allow(clippy::too_many_arguments)]
pub fn transmit_receive(
    discrete: &DiscreteChannel,
    selected: &[usize],
    v: &[Vec<Complex64>],
    powers: &[f64],
    noise_var: f64,
    n_symbols: usize,
    modulation: Modulation,
    rng: &mut ChaCha8Rng,
) -> ReceivedStreams {
    let n_users = discrete.n_users();
    let symbols: Vec<Vec<Complex64>> = (0..n_users)
        .map(|_| (0..n_symbols).map(|_| draw_symbol(rng, modulation)).collect())
        .collect();
    transmit_symbols(discrete, selected, v, powers, noise_var, symbols, rng)
}

/// As [`transmit_receive`] with caller-supplied symbols.
pub fn transmit_symbols(
    discrete: &DiscreteChannel,
    selected: &[usize],
    v: &[Vec<Complex64>],
    powers: &[f64],
    noise_var: f64,
    symbols: Vec<Vec<Complex64>>,
    rng: &mut ChaCha8Rng,
) -> ReceivedStreams {
    let n_symbols = symbols.first().map_or(0, Vec::len);
    let per_user = discrete
        .taps
        .iter()
        .enumerate()
        .map(|(k, taps)| {
            let amp = powers[k].sqrt();
            selected
                .iter()
                .map(|&m| {
                    let mut y = vec![ZERO; n_symbols];
                    for tap in taps {
                        let g = dot(tap.row(m), &v[k]) * amp;
                        for n in tap.delay..n_symbols {
                            y[n] += g * symbols[k][n - tap.delay];
                        }
                    }
                    y
                })
                .collect()
        })
        .collect();
    let noise = selected
        .iter()
        .map(|_| {
            (0..n_symbols)
                .map(|_| if noise_var > 0.0 { complex_normal(rng, noise_var) } else { ZERO })
                .collect()
        })
        .collect();
    ReceivedStreams {
        symbols,
        per_user,
        noise,
    }
}

/// Measured SINR of one user together with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSinr {
    pub sinr: f64,
    pub std_err: f64,
    /// Mean powers of the regenerated terms at the combiner output.
    pub desired: f64,
    pub isi: f64,
    pub iui: f64,
    pub noise: f64,
    /// Mean power of the total combiner output, noise excluded.
    pub signal_total: f64,
    /// Largest amplitude mismatch between the noiseless output and the sum of
    /// its desired, ISI and IUI parts.
    pub decomposition_error: f64,
}

impl EmpiricalSinr {
    fn zero() -> Self {
        Self {
            sinr: 0.0,
            std_err: 0.0,
            desired: 0.0,
            isi: 0.0,
            iui: 0.0,
            noise: 0.0,
            signal_total: 0.0,
            decomposition_error: 0.0,
        }
    }
}

const TARGET_BATCHES: usize = 50;

/// Applies each user's delay compensation and combiner to the streams and
/// accumulates the desired, ISI, IUI and noise powers.
///
/// The desired term is regenerated from the known symbols and the true tap
/// each antenna is aligned to; ISI is the rest of the user's own
/// contribution and IUI everything the other users contribute. Samples are
/// taken for `n` in `[mu, N - mu)` so every term is fully present.
pub fn measure_sinr(
    streams: &ReceivedStreams,
    beamformers: &BeamformerSet,
    discrete: &DiscreteChannel,
    effective: &EffectiveChannels,
    powers: &[f64],
    mu: usize,
) -> Result<Vec<EmpiricalSinr>> {
    let n = streams.len();
    if n <= 2 * mu {
        return Err(Error::StreamTooShort { needed: 2 * mu, got: n });
    }
    let window = mu..n - mu;
    let count = window.len();
    let batch = (count / TARGET_BATCHES).max(2 * mu + 1).min(count);
    let n_batches = count / batch;
    (0..effective.n_users)
        .map(|k| {
            let Some(u) = beamformers.full_combiner(effective, k) else {
                return Ok(EmpiricalSinr::zero());
            };
            let v = &beamformers.users[k].v;
            let rows: Vec<(usize, usize, Complex64)> = u
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != ZERO)
                .filter_map(|(r, w)| effective.sync[k][r].map(|d| (r, d, w.conj())))
                .collect();
            // combined desired gain: sum_r conj(u_r) h^H v at the aligned tap
            let desired_gain: Complex64 = rows
                .iter()
                .map(|&(r, d, w)| {
                    discrete
                        .tap_at(k, d)
                        .map_or(ZERO, |t| w * dot(t.row(effective.selected[r]), v))
                })
                .sum::<Complex64>()
                * powers[k].sqrt();
            let mut acc = [0.0f64; 5];
            let mut batches: Vec<(f64, f64)> = Vec::with_capacity(n_batches);
            let mut batch_acc = (0.0, 0.0);
            let mut max_err: f64 = 0.0;
            for (idx, t) in window.clone().enumerate() {
                let mut own = ZERO;
                let mut other = ZERO;
                let mut noise = ZERO;
                let mut total = ZERO;
                for &(r, d, w) in &rows {
                    let s = t + d;
                    for (k2, user) in streams.per_user.iter().enumerate() {
                        let x = w * user[r][s];
                        if k2 == k {
                            own += x;
                        } else {
                            other += x;
                        }
                    }
                    noise += w * streams.noise[r][s];
                    total += w * (streams.received(r, s) - streams.noise[r][s]);
                }
                let desired = desired_gain * streams.symbols[k][t];
                let isi = own - desired;
                max_err = max_err.max((total - (desired + isi + other)).norm());
                let dp = desired.norm_sqr();
                let ip = (isi + other + noise).norm_sqr();
                acc[0] += dp;
                acc[1] += isi.norm_sqr();
                acc[2] += other.norm_sqr();
                acc[3] += noise.norm_sqr();
                acc[4] += total.norm_sqr();
                if idx / batch < n_batches {
                    batch_acc.0 += dp;
                    batch_acc.1 += ip;
                    if (idx + 1) % batch == 0 {
                        batches.push(batch_acc);
                        batch_acc = (0.0, 0.0);
                    }
                }
            }
            let c = count as f64;
            let (desired, isi, iui, noise, signal_total) = (acc[0] / c, acc[1] / c, acc[2] / c, acc[3] / c, acc[4] / c);
            let a: f64 = batches.iter().map(|b| b.0).sum();
            let b: f64 = batches.iter().map(|b| b.1).sum();
            let (sinr, std_err) = if a == 0.0 {
                (0.0, 0.0)
            } else if b == 0.0 {
                (f64::INFINITY, 0.0)
            } else {
                let ratio = a / b;
                let nb = batches.len() as f64;
                let mean_b = b / nb;
                let var = batches.iter().map(|(x, y)| (x - ratio * y).powi(2)).sum::<f64>() / (nb - 1.0).max(1.0);
                (ratio, (var / nb).sqrt() / mean_b)
            };
            Ok(EmpiricalSinr {
                sinr,
                std_err,
                desired,
                isi,
                iui,
                noise,
                signal_total,
                decomposition_error: max_err,
            })
        })
        .collect()
}

/// Per-user power of every antenna as seen with perfect channel knowledge:
/// the summed power of all taps of all users.
pub fn genie_power(discrete: &DiscreteChannel) -> Vec<f64> {
    (0..discrete.n_bs)
        .map(|m| discrete.taps.iter().flatten().map(|t| t.beta[m].norm_sqr()).sum())
        .collect()
}

/// Outcome of one scheme on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub analytic: RateReport,
    /// Rate after the training overhead factor; equal to the analytic rate with perfect CSI.
    pub effective_rate: Vec<f64>,
    pub empirical: Option<Vec<EmpiricalSinr>>,
    pub overhead: Option<TrainingOverhead>,
}

impl TrialResult {
    pub fn empirical_rate(&self) -> Option<Vec<f64>> {
        self.empirical
            .as_ref()
            .map(|e| e.iter().map(|x| (1.0 + x.sinr).log2()).collect())
    }

    pub fn effective_sum_rate(&self) -> f64 {
        self.effective_rate.iter().sum()
    }
}

/// MRC transceivers designed on estimated channels.
pub fn mrc_from_estimates(g_hat: &[crate::linalg::CMatrix], codebook: &Codebook) -> BeamformerSet {
    let users = g_hat
        .iter()
        .map(|g| {
            let (codeword, score) = codebook.best_for(g);
            let v = codebook.get(codeword).to_vec();
            let u = (score > 0.0)
                .then(|| {
                    let gv = g * crate::linalg::CVector::from_column_slice(&v);
                    crate::linalg::normalized(gv.as_slice())
                })
                .flatten();
            let flag = u.is_none().then_some(UserFlag::NoChannel);
            UserBeamformer { codeword, v, u, flag }
        })
        .collect();
    BeamformerSet {
        mode: CombiningMode::Mrc,
        users,
    }
}

/// Everything fixed for one grid point of a sweep.
pub struct TrialContext {
    pub config: ExperimentConfig,
    pub lens: LensArray,
    pub codebook: Codebook,
    pub training: Option<TrainingDesign>,
    pub m_rf: usize,
    pub power: f64,
}

impl TrialContext {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let lens = LensArray::new(config.lens)?;
        let codebook = beamsteering_codebook(&config.upa, &config.codebook)?;
        let m_rf = config.m_rf.resolve(lens.len());
        let training = if config.schemes.iter().any(|s| s.csi == Csi::Estimated) {
            Some(TrainingDesign::new(&config.scenario, &config.upa, &config.training)?)
        } else {
            None
        };
        let power = snr_to_power(config.sim.snr_db);
        Ok(Self {
            config,
            lens,
            codebook,
            training,
            m_rf,
            power,
        })
    }

    pub fn channel_seed(&self, trial: usize) -> u64 {
        derive_seed(self.config.sim.seed, &[trial as u64, 0])
    }

    /// Runs every configured scheme on trial `trial`.
    pub fn run_trial(&self, trial: usize) -> Vec<Result<TrialResult>> {
        let cfg = &self.config;
        let real = sample_channel(&cfg.scenario, self.channel_seed(trial));
        let discrete = discretize(&real, &self.lens, &cfg.upa, cfg.scenario.bandwidth_hz);
        let powers = vec![self.power; cfg.scenario.n_users];
        let genie = select_antennas(&genie_power(&discrete), self.m_rf).map(|sel| effective_matrices(&discrete, &sel));
        cfg.schemes
            .iter()
            .enumerate()
            .map(|(si, scheme)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.sim.seed, &[trial as u64, 1 + si as u64]));
                let (effective, set, overhead) = match (scheme.mode, scheme.csi) {
                    (CombiningMode::Mrc, Csi::Perfect) => {
                        let eff = genie.clone()?;
                        let set = mrc_design(&eff, &self.codebook);
                        (eff, set, None)
                    }
                    (CombiningMode::Mmse, Csi::Perfect) => {
                        let eff = genie.clone()?;
                        let (set, _) = mmse_design(&eff, &powers, NOISE_VAR, &self.codebook)?;
                        (eff, set, None)
                    }
                    (CombiningMode::Mrc, Csi::Estimated) => {
                        let design = self.training.as_ref().expect("training design prepared");
                        let trainer = Trainer::new(&discrete, design, &cfg.training, cfg.scenario.mu(), self.m_rf, NOISE_VAR)?;
                        let report = trainer.run(&mut rng)?;
                        let g_hat: Vec<_> = (0..discrete.n_users()).map(|k| report.g_hat_matrix(k)).collect();
                        let set = mrc_from_estimates(&g_hat, &self.codebook);
                        (report.effective_channels(&discrete), set, Some(report.overhead))
                    }
                    (CombiningMode::Mmse, Csi::Estimated) => {
                        return Err(Error::InvalidConfig("MMSE with estimated CSI is not supported".into()))
                    }
                };
                let analytic = evaluate_sinr(&effective, &set, &powers, NOISE_VAR)?;
                let factor = overhead.map_or(1.0, |o| o.rate_factor(cfg.sim.coherence_symbols));
                let effective_rate = analytic.rate.iter().map(|r| r * factor).collect();
                let empirical = if cfg.sim.measure_waveform {
                    let v: Vec<_> = set.users.iter().map(|u| u.v.clone()).collect();
                    let streams = transmit_receive(
                        &discrete,
                        &effective.selected,
                        &v,
                        &powers,
                        NOISE_VAR,
                        cfg.sim.n_symbols,
                        cfg.sim.modulation,
                        &mut rng,
                    );
                    Some(measure_sinr(&streams, &set, &discrete, &effective, &powers, cfg.scenario.mu())?)
                } else {
                    None
                };
                Ok(TrialResult {
                    analytic,
                    effective_rate,
                    empirical,
                    overhead,
                })
            })
            .collect()
    }
}

/// Mixes a master seed with stream identifiers into an independent seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    for &p in parts {
        rng.set_stream(p);
        rng = ChaCha8Rng::seed_from_u64(rng.random::<u64>());
    }
    rng.random()
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub scheme: String,
    pub mode: CombiningMode,
    pub csi: Csi,
    pub trials: usize,
    pub failed_trials: usize,
    pub mean_sum_rate: f64,
    pub std_err: f64,
    pub per_user_rate: Vec<f64>,
    /// Training duration in symbols, estimated-CSI rows only.
    pub overhead: Option<usize>,
    /// Mean sum of waveform-measured rates, when measured.
    pub empirical_sum_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

fn mean_and_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every grid point of the sweep. Trials run in parallel on the current
/// rayon pool; results are gathered in trial order so the output does not
/// depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut values = config.sweep.values.clone();
    values.sort_by(f64::total_cmp);
    for &value in &values {
        let point = config.at_axis_value(value)?;
        let ctx = TrialContext::new(point)?;
        let outcomes: Vec<Vec<Result<TrialResult>>> =
            (0..config.sim.n_trials).into_par_iter().map(|t| ctx.run_trial(t)).collect();
        for (si, scheme) in config.schemes.iter().enumerate() {
            let ok: Vec<&TrialResult> = outcomes.iter().filter_map(|o| o[si].as_ref().ok()).collect();
            for o in outcomes.iter() {
                if let Err(e) = &o[si] {
                    log::warn!("{} at {} = {value}: trial failed: {e}", scheme.label(), config.sweep.axis);
                }
            }
            let sums: Vec<f64> = ok.iter().map(|r| r.effective_sum_rate()).collect();
            let (mean_sum_rate, std_err) = mean_and_err(&sums);
            let n_users = ctx.config.scenario.n_users;
            let per_user_rate = (0..n_users)
                .map(|k| mean_and_err(&ok.iter().map(|r| r.effective_rate[k]).collect::<Vec<_>>()).0)
                .collect();
            let overhead = ok.iter().find_map(|r| r.overhead.map(|o| o.total));
            let empirical_sum_rate = config.sim.measure_waveform.then(|| {
                let factor = |r: &TrialResult| r.overhead.map_or(1.0, |o| o.rate_factor(config.sim.coherence_symbols));
                mean_and_err(
                    &ok.iter()
                        .filter_map(|r| r.empirical_rate().map(|e| e.iter().sum::<f64>() * factor(r)))
                        .collect::<Vec<_>>(),
                )
                .0
            });
            rows.push(SweepRow {
                axis_value: value,
                scheme: scheme.label(),
                mode: scheme.mode,
                csi: scheme.csi,
                trials: ok.len(),
                failed_trials: config.sim.n_trials - ok.len(),
                mean_sum_rate,
                std_err,
                per_user_rate,
                overhead,
                empirical_sum_rate,
            });
        }
    }
    Ok(SweepResult {
        axis: config.sweep.axis,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelRealization, PathParams, ScenarioConfig};
    use crate::lens_array::{LensArrayConfig, UpaConfig};

    fn lens() -> LensArray {
        LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0)).unwrap()
    }

    #[test]
    fn single_path_stream_is_scaled_delayed_symbols() {
        let lens = lens();
        let upa = UpaConfig::new(2, 2);
        let real = ChannelRealization {
            paths: vec![vec![PathParams {
                gain: Complex64::new(0.3, 0.1),
                delay_s: 4.0 / 500e6,
                aoa: (0.2, 0.1),
                aod: (0.1, 0.2),
            }]],
            rng_seed: 0,
        };
        let d = discretize(&real, &lens, &upa, 500e6);
        let v = vec![crate::lens_array::upa_response(&upa, 0.0, 0.3).into_inner()];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = transmit_receive(&d, &[150, 160], &v, &[2.0], 0.0, 100, Modulation::Qpsk, &mut rng);
        for (r, &m) in [150, 160].iter().enumerate() {
            let g = dot(d.taps[0][0].row(m), &v[0]) * 2f64.sqrt();
            for n in 0..100 {
                let expected = if n >= 4 { g * s.symbols[0][n - 4] } else { ZERO };
                assert!((s.received(r, n) - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn impulse_reads_off_taps() {
        let lens = lens();
        let upa = UpaConfig::new(1, 1);
        let sc = ScenarioConfig::paper_default(1);
        let d = discretize(&sample_channel(&sc, 3), &lens, &upa, sc.bandwidth_hz);
        let mut impulse = vec![ZERO; 60];
        impulse[0] = Complex64::new(1.0, 0.0);
        let v = vec![vec![Complex64::new(1.0, 0.0)]];
        let s = transmit_symbols(&d, &[100], &v, &[1.0], 0.0, vec![impulse], &mut ChaCha8Rng::seed_from_u64(0));
        for n in 0..60 {
            let expected = d.tap_at(0, n).map_or(ZERO, |t| t.row(100)[0]);
            assert!((s.received(0, n) - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn noise_only_output_power() {
        let lens = lens();
        let upa = UpaConfig::new(1, 1);
        let real = ChannelRealization {
            paths: vec![vec![PathParams {
                gain: ZERO,
                delay_s: 0.0,
                aoa: (0.0, 0.0),
                aod: (0.0, 0.0),
            }]],
            rng_seed: 0,
        };
        let d = discretize(&real, &lens, &upa, 500e6);
        let sel = [10, 11, 12];
        let eff = EffectiveChannels::from_sync(&d, &sel, vec![vec![Some(0); 3]], vec![vec![0, 1, 2]]);
        let u = crate::linalg::normalized(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)]).unwrap();
        let set = BeamformerSet {
            mode: CombiningMode::Mrc,
            users: vec![UserBeamformer {
                codeword: 0,
                v: vec![Complex64::new(1.0, 0.0)],
                u: Some(u),
                flag: None,
            }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = transmit_receive(&d, &sel, &[set.users[0].v.clone()], &[1.0], 2.0, 40_000, Modulation::Gaussian, &mut rng);
        let m = measure_sinr(&s, &set, &d, &eff, &[1.0], 0).unwrap();
        let n = 40_000.0;
        // |z|^2 of CN(0, 2) has standard deviation 2
        assert!((m[0].noise - 2.0).abs() < 3.0 * 2.0 / f64::sqrt(n));
        assert_eq!(m[0].sinr, 0.0);
    }

    #[test]
    fn stream_too_short_is_an_error() {
        let streams = ReceivedStreams {
            symbols: vec![vec![ZERO; 10]],
            per_user: vec![vec![vec![ZERO; 10]]],
            noise: vec![vec![ZERO; 10]],
        };
        let lens = lens();
        let upa = UpaConfig::new(1, 1);
        let d = discretize(&sample_channel(&ScenarioConfig::paper_default(1), 0), &lens, &upa, 500e6);
        let eff = effective_matrices(&d, &[0]);
        let set = mrc_design(&eff, &beamsteering_codebook(&upa, &crate::codebook::CodebookConfig::with_size(1)).unwrap());
        assert!(matches!(
            measure_sinr(&streams, &set, &d, &eff, &[1.0], 5),
            Err(Error::StreamTooShort { .. })
        ));
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 0]);
        assert_eq!(a, derive_seed(1, &[0, 0]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
    }
}
