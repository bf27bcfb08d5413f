//! Three-phase uplink training: power-based antenna selection, per-antenna
//! path estimation and association, and LS estimation of the reduced
//! effective MIMO channels. The whole frame, guard intervals included, is
//! simulated on one timeline through the true symbol-rate channel.

use nalgebra::Cholesky;
use nalgebra::Dyn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{DiscreteChannel, EffectiveChannels, ScenarioConfig};
use crate::codebook::{omni_beamformer, training_matrix, OmniBeamformer, TrainingMatrix};
use crate::lens_array::UpaConfig;
use crate::error::{Error, Result};
use crate::linalg::{dot, CMatrix, CVector, ZERO};
use crate::pdma::select_antennas;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    /// Training power over noise power, dB.
    pub training_snr_db: f64,
    /// Association threshold; an antenna is used only if its strongest path
    /// holds at least `rho` times the power of all others.
    pub rho: f64,
    /// Pilot length of phase 2; the minimum `K (mu + 1)` when unset.
    pub t2: Option<usize>,
    pub pilot_seed: u64,
    /// Number of pseudo-random pilot sets tried when designing pilots.
    pub pilot_candidates: usize,
    /// Power snapshots averaged per antenna during the phase-1 scan.
    pub phase1_samples: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            training_snr_db: 10.0,
            rho: 0.0,
            t2: None,
            pilot_seed: 1,
            pilot_candidates: 32,
            phase1_samples: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, n_users: usize, mu: usize) -> Result<()> {
        if !(self.rho >= 0.0) {
            return Err(Error::InvalidConfig(format!("rho must be non-negative, got {}", self.rho)));
        }
        if let Some(t2) = self.t2 {
            if t2 < n_users * (mu + 1) {
                return Err(Error::InvalidConfig(format!(
                    "phase-2 length {t2} is below K (mu + 1) = {}",
                    n_users * (mu + 1)
                )));
            }
        }
        if self.phase1_samples == 0 {
            return Err(Error::InvalidConfig("phase1_samples must be at least 1".into()));
        }
        if !self.training_snr_db.is_finite() {
            return Err(Error::InvalidConfig("training SNR must be finite".into()));
        }
        Ok(())
    }

    /// Training power for the given noise variance.
    pub fn training_power(&self, noise_var: f64) -> f64 {
        let scale = if noise_var > 0.0 { noise_var } else { 1.0 };
        scale * 10f64.powf(self.training_snr_db / 10.0)
    }

    pub fn phase2_length(&self, n_users: usize, mu: usize) -> usize {
        self.t2.unwrap_or(n_users * (mu + 1))
    }
}

/// Training durations in symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingOverhead {
    /// Antenna scan plus the initial discard.
    pub t1: usize,
    /// Guard plus pilots.
    pub t2_total: usize,
    /// Guard, training beams and the delay-spread tail.
    pub t3: usize,
    pub total: usize,
    /// Full channel impulse response training with the same RF chains.
    pub brute_force: usize,
}

impl TrainingOverhead {
    pub fn new(m_bs: usize, m_rf: usize, m_ms: usize, mu: usize, n_users: usize, t2: usize) -> Self {
        let scan = m_bs.div_ceil(m_rf);
        let t1 = scan + mu;
        let t2_total = mu + t2;
        let t3 = m_ms + 2 * mu;
        Self {
            t1,
            t2_total,
            t3,
            total: t1 + t2_total + t3,
            brute_force: scan * mu * n_users * m_ms,
        }
    }

    /// Fraction of a coherence block of `tc` symbols spent on training.
    pub fn ratio(&self, tc: usize) -> f64 {
        self.total as f64 / tc as f64
    }

    /// Multiplier applied to rates to account for training, `1 - T / T_c`.
    pub fn rate_factor(&self, tc: usize) -> f64 {
        (1.0 - self.ratio(tc)).max(0.0)
    }
}

/// Overhead with the minimum phase-2 length.
pub fn training_overhead(m_bs: usize, m_rf: usize, m_ms: usize, mu: usize, n_users: usize) -> TrainingOverhead {
    TrainingOverhead::new(m_bs, m_rf, m_ms, mu, n_users, n_users * (mu + 1))
}

/// Phase-2 pilots and the factorised normal matrix of their Toeplitz system.
#[derive(Debug, Clone)]
pub struct PilotDesign {
    pub n_users: usize,
    pub mu: usize,
    /// `pilots[k][n]`, unit modulus.
    pub pilots: Vec<Vec<Complex64>>,
    /// Largest diagonal entry of `(S^H S)^-1`: worst-case noise gain of a tap estimate.
    pub noise_gain: f64,
    normal: Cholesky<Complex64, Dyn>,
}

impl PartialEq for PilotDesign {
    fn eq(&self, other: &Self) -> bool {
        self.pilots == other.pilots
    }
}

/// `T2 x K(mu+1)` matrix with entry `(n, i K + k) = s_k[n - i]`.
pub fn pilot_matrix(pilots: &[Vec<Complex64>], mu: usize) -> CMatrix {
    let k_users = pilots.len();
    let t2 = pilots.first().map_or(0, Vec::len);
    CMatrix::from_fn(t2, k_users * (mu + 1), |n, col| {
        let (i, k) = (col / k_users, col % k_users);
        if n >= i {
            pilots[k][n - i]
        } else {
            ZERO
        }
    })
}

fn qpsk(rng: &mut ChaCha8Rng) -> Complex64 {
    match rng.random_range(0..4u8) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn normal_factor(pilots: &[Vec<Complex64>], mu: usize) -> Option<(Cholesky<Complex64, Dyn>, f64)> {
    let s = pilot_matrix(pilots, mu);
    let chol = (s.adjoint() * &s).cholesky()?;
    let n = chol.l_dirty().nrows();
    let inv = chol.inverse();
    let gain = (0..n).map(|i| inv[(i, i)].re).fold(0.0, f64::max);
    (gain.is_finite() && gain > 0.0).then_some((chol, gain))
}

impl PilotDesign {
    /// Picks, among the all-ones pilot set and `candidates` seeded QPSK sets,
    /// the one with the smallest worst-case noise gain.
    pub fn new(n_users: usize, mu: usize, t2: usize, seed: u64, candidates: usize) -> Result<Self> {
        if t2 < n_users * (mu + 1) {
            return Err(Error::InvalidConfig(format!(
                "phase-2 length {t2} is below K (mu + 1) = {}",
                n_users * (mu + 1)
            )));
        }
        let mut best: Option<(Vec<Vec<Complex64>>, Cholesky<Complex64, Dyn>, f64)> = None;
        let mut consider = |pilots: Vec<Vec<Complex64>>| {
            if let Some((chol, gain)) = normal_factor(&pilots, mu) {
                if best.as_ref().is_none_or(|b| gain < b.2) {
                    best = Some((pilots, chol, gain));
                }
            }
        };
        consider(vec![vec![Complex64::new(1.0, 0.0); t2]; n_users]);
        for c in 0..candidates as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            consider((0..n_users).map(|_| (0..t2).map(|_| qpsk(&mut rng)).collect()).collect());
        }
        let (pilots, normal, noise_gain) = best.ok_or_else(|| {
            Error::SingularMatrix("no candidate pilot set gives a non-singular Toeplitz system".into())
        })?;
        Ok(Self {
            n_users,
            mu,
            pilots,
            noise_gain,
            normal,
        })
    }

    pub fn len(&self) -> usize {
        self.pilots.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// LS solution `(S^H S)^-1 S^H r`, ordered `i K + k`.
    pub fn solve(&self, r: &[Complex64]) -> Vec<Complex64> {
        let k_users = self.n_users;
        let unknowns = k_users * (self.mu + 1);
        let mut rhs = CVector::zeros(unknowns);
        for (col, x) in rhs.iter_mut().enumerate() {
            let (i, k) = (col / k_users, col % k_users);
            *x = (i..r.len()).map(|n| self.pilots[k][n - i].conj() * r[n]).sum();
        }
        self.normal.solve(&rhs).as_slice().to_vec()
    }

    /// Condition number of the pilot matrix.
    pub fn condition(&self) -> f64 {
        let sv = pilot_matrix(&self.pilots, self.mu).singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Beamformers and pilots shared by every training frame of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDesign {
    pub omni: OmniBeamformer,
    pub pilots: PilotDesign,
    pub training: TrainingMatrix,
}

impl TrainingDesign {
    /// Omni beamformer over the scenario's angular support, searched pilots
    /// and the DFT training matrix.
    pub fn new(scenario: &ScenarioConfig, upa: &UpaConfig, training: &TrainingConfig) -> Result<Self> {
        let k = scenario.n_users;
        let mu = scenario.mu();
        Ok(Self {
            omni: omni_beamformer(upa, scenario.elevation_support_deg, scenario.azimuth_support_deg),
            pilots: PilotDesign::new(k, mu, training.phase2_length(k, mu), training.pilot_seed, training.pilot_candidates)?,
            training: training_matrix(upa.num_elements()),
        })
    }
}

/// Start times of each phase on the frame timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub mu: usize,
    pub scan_slots: usize,
    pub phase1_samples: usize,
    pub t2: usize,
    pub m_ms: usize,
}

impl Frame {
    pub fn new(m_bs: usize, m_rf: usize, m_ms: usize, mu: usize, t2: usize, phase1_samples: usize) -> Self {
        Self {
            mu,
            scan_slots: m_bs.div_ceil(m_rf),
            phase1_samples,
            t2,
            m_ms,
        }
    }

    pub fn t1(&self) -> usize {
        self.scan_slots * self.phase1_samples + self.mu
    }

    /// First pilot symbol of phase 2.
    pub fn pilot_start(&self) -> usize {
        self.t1() + self.mu
    }

    /// First training beam of phase 3.
    pub fn beam_start(&self) -> usize {
        self.pilot_start() + self.t2 + self.mu
    }

    pub fn len(&self) -> usize {
        self.beam_start() + self.m_ms + self.mu
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Beam {
    Omni,
    Train(usize),
}

/// Per-user, per-tap gains `h^H f` of one BS antenna for every beam in use.
struct AntennaGains {
    /// `[k] -> [(delay, omni gain, training gains)]`.
    taps: Vec<Vec<(usize, Complex64, Vec<Complex64>)>>,
}

struct Timeline<'a> {
    discrete: &'a DiscreteChannel,
    design: &'a TrainingDesign,
    frame: Frame,
    amplitude: f64,
    symbol: Complex64,
    noise_sd: f64,
}

impl Timeline<'_> {
    fn gains(&self, m: usize) -> AntennaGains {
        let training = &self.design.training;
        let taps = self
            .discrete
            .taps
            .iter()
            .map(|user| {
                user.iter()
                    .map(|tap| {
                        let row = tap.row(m);
                        let omni = dot(row, &self.design.omni.vector);
                        let train = (0..training.dim()).map(|n| dot(row, training.matrix.column(n).as_slice())).collect();
                        (tap.delay, omni, train)
                    })
                    .collect()
            })
            .collect();
        AntennaGains { taps }
    }

    /// What user `k` emits at time `t`.
    fn emitted(&self, k: usize, t: i64) -> Option<(Beam, Complex64)> {
        let f = &self.frame;
        if t < 0 {
            return None;
        }
        let t = t as usize;
        if t < f.t1() {
            Some((Beam::Omni, self.symbol))
        } else if (f.pilot_start()..f.pilot_start() + f.t2).contains(&t) {
            Some((Beam::Omni, self.design.pilots.pilots[k][t - f.pilot_start()]))
        } else if (f.beam_start()..f.beam_start() + f.m_ms).contains(&t) {
            Some((Beam::Train(t - f.beam_start()), self.symbol))
        } else {
            None
        }
    }

    fn noiseless(&self, gains: &AntennaGains, t: usize) -> Complex64 {
        let mut y = ZERO;
        for (k, taps) in gains.taps.iter().enumerate() {
            for (delay, omni, train) in taps {
                if let Some((beam, s)) = self.emitted(k, t as i64 - *delay as i64) {
                    let g = match beam {
                        Beam::Omni => *omni,
                        Beam::Train(n) => train[n],
                    };
                    y += g * s;
                }
            }
        }
        y * self.amplitude
    }

    fn sample(&self, gains: &AntennaGains, t: usize, rng: &mut ChaCha8Rng) -> Complex64 {
        let y = self.noiseless(gains, t);
        if self.noise_sd > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            y + Complex64::new(re, im) * self.noise_sd
        } else {
            y
        }
    }
}

/// Path associated with a selected antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub user: usize,
    pub delay: usize,
}

/// Strongest `(user, delay)` of one antenna's estimated taps, kept only if it
/// holds at least `rho` times the power of all other taps together.
pub fn associate(beta_hat: &[Complex64], n_users: usize, rho: f64) -> Option<Association> {
    let mut best = (0, 0.0);
    let mut total = 0.0;
    for k in 0..n_users {
        for i in 0..beta_hat.len() / n_users {
            let p = beta_hat[i * n_users + k].norm_sqr();
            total += p;
            if p > best.1 {
                best = (i * n_users + k, p);
            }
        }
    }
    (best.1 > 0.0 && best.1 >= rho * (total - best.1)).then_some(Association {
        user: best.0 % n_users,
        delay: best.0 / n_users,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1 {
    /// Measured power of every BS antenna, canonical order.
    pub power: Vec<f64>,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2 {
    /// Per selected antenna, tap estimates ordered `i K + k`.
    pub beta_hat: Vec<Vec<Complex64>>,
    pub associations: Vec<Option<Association>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub selected: Vec<usize>,
    pub power: Vec<f64>,
    pub beta_hat: Vec<Vec<Complex64>>,
    pub associations: Vec<Option<Association>>,
    /// `members[k]`: rows (into `selected`) associated with user `k`, ascending.
    pub members: Vec<Vec<usize>>,
    /// `g_hat[k][row][j]`, rows in the order of `members[k]`.
    pub g_hat: Vec<Vec<Vec<Complex64>>>,
    pub overhead: TrainingOverhead,
    pub pilot_noise_gain: f64,
    /// Users left without associated antennas.
    pub unserved: Vec<usize>,
}

impl TrainingReport {
    pub fn g_hat_matrix(&self, k: usize) -> CMatrix {
        let rows = &self.g_hat[k];
        let cols = rows.first().map_or(0, Vec::len);
        CMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c])
    }

    /// True effective channels seen with the estimated associations and delays.
    pub fn effective_channels(&self, discrete: &DiscreteChannel) -> EffectiveChannels {
        let n_users = discrete.n_users();
        let mut sync = vec![vec![None; self.selected.len()]; n_users];
        for (r, a) in self.associations.iter().enumerate() {
            if let Some(a) = a {
                sync[a.user][r] = Some(a.delay);
            }
        }
        EffectiveChannels::from_sync(discrete, &self.selected, sync, self.members.clone())
    }

    pub fn feedback_bits(&self, codebook_size: usize) -> f64 {
        self.members.len() as f64 * (codebook_size as f64).log2()
    }
}

/// Simulates one training frame and returns everything the BS learns.
pub struct Trainer<'a> {
    timeline: Timeline<'a>,
    m_rf: usize,
    rho: f64,
}

impl<'a> Trainer<'a> {
    pub fn new(
        discrete: &'a DiscreteChannel,
        design: &'a TrainingDesign,
        config: &TrainingConfig,
        mu: usize,
        m_rf: usize,
        noise_var: f64,
    ) -> Result<Self> {
        let n_users = discrete.n_users();
        config.validate(n_users, mu)?;
        if discrete.mu > mu {
            return Err(Error::InvalidConfig(format!(
                "channel delay {} exceeds the frame delay spread {mu}",
                discrete.mu
            )));
        }
        if design.pilots.n_users != n_users || design.pilots.mu != mu {
            return Err(Error::DimensionMismatch(format!(
                "pilots designed for K={}, mu={} used with K={n_users}, mu={mu}",
                design.pilots.n_users, design.pilots.mu
            )));
        }
        if design.training.dim() != discrete.n_ms || design.omni.vector.len() != discrete.n_ms {
            return Err(Error::DimensionMismatch("training beams do not match the MS array".into()));
        }
        if m_rf == 0 || m_rf > discrete.n_bs {
            return Err(Error::InvalidConfig(format!("M_RF = {m_rf} must lie in 1..={}", discrete.n_bs)));
        }
        let frame = Frame::new(discrete.n_bs, m_rf, discrete.n_ms, mu, design.pilots.len(), config.phase1_samples);
        Ok(Self {
            timeline: Timeline {
                discrete,
                design,
                frame,
                amplitude: config.training_power(noise_var).sqrt(),
                symbol: Complex64::new(1.0, 0.0),
                noise_sd: (noise_var / 2.0).sqrt(),
            },
            m_rf,
            rho: config.rho,
        })
    }

    pub fn frame(&self) -> Frame {
        self.timeline.frame
    }

    /// Scans all antennas `m_rf` at a time after the first `mu` symbols and
    /// keeps the `m_rf` strongest.
    pub fn phase1(&self, rng: &mut ChaCha8Rng) -> Result<Phase1> {
        let tl = &self.timeline;
        let f = tl.frame;
        let power = (0..tl.discrete.n_bs)
            .map(|m| {
                let gains = tl.gains(m);
                let slot = m / self.m_rf;
                let start = f.mu + slot * f.phase1_samples;
                (start..start + f.phase1_samples)
                    .map(|t| tl.sample(&gains, t, rng).norm_sqr())
                    .sum::<f64>()
                    / f.phase1_samples as f64
            })
            .collect::<Vec<_>>();
        let selected = select_antennas(&power, self.m_rf)?;
        Ok(Phase1 { power, selected })
    }

    /// LS tap estimates and path association on the selected antennas.
    pub fn phase2(&self, selected: &[usize], rng: &mut ChaCha8Rng) -> Phase2 {
        let tl = &self.timeline;
        let f = tl.frame;
        let scale = 1.0 / (tl.amplitude * tl.design.omni.gain);
        let n_users = tl.discrete.n_users();
        let beta_hat: Vec<Vec<Complex64>> = selected
            .iter()
            .map(|&m| {
                let gains = tl.gains(m);
                let r: Vec<Complex64> = (0..f.t2).map(|n| tl.sample(&gains, f.pilot_start() + n, rng)).collect();
                tl.design.pilots.solve(&r).into_iter().map(|b| b * scale).collect()
            })
            .collect();
        let associations = beta_hat.iter().map(|b| associate(b, n_users, self.rho)).collect();
        Phase2 { beta_hat, associations }
    }

    /// LS estimate of each user's effective channel on its associated antennas.
    pub fn phase3(
        &self,
        selected: &[usize],
        associations: &[Option<Association>],
        rng: &mut ChaCha8Rng,
    ) -> (Vec<Vec<usize>>, Vec<Vec<Vec<Complex64>>>) {
        let tl = &self.timeline;
        let f = tl.frame;
        let n_users = tl.discrete.n_users();
        let m_ms = f.m_ms;
        let f_inv = tl.design.training.inverse();
        let scale = tl.symbol.conj() / tl.amplitude;
        let mut members = vec![Vec::new(); n_users];
        let mut g_hat = vec![Vec::new(); n_users];
        for (r, (&m, a)) in selected.iter().zip(associations).enumerate() {
            let gains = tl.gains(m);
            let window: Vec<Complex64> = (0..m_ms + f.mu).map(|n| tl.sample(&gains, f.beam_start() + n, rng)).collect();
            let Some(a) = a else { continue };
            let shifted = &window[a.delay..a.delay + m_ms];
            let row: Vec<Complex64> = (0..m_ms)
                .map(|j| (0..m_ms).map(|n| shifted[n] * f_inv[(n, j)]).sum::<Complex64>() * scale)
                .collect();
            members[a.user].push(r);
            g_hat[a.user].push(row);
        }
        (members, g_hat)
    }

    /// Runs all three phases.
    pub fn run(&self, rng: &mut ChaCha8Rng) -> Result<TrainingReport> {
        let p1 = self.phase1(rng)?;
        let p2 = self.phase2(&p1.selected, rng);
        let (members, g_hat) = self.phase3(&p1.selected, &p2.associations, rng);
        let f = self.timeline.frame;
        let d = self.timeline.discrete;
        let overhead = TrainingOverhead::new(d.n_bs, self.m_rf, d.n_ms, f.mu, d.n_users(), f.t2);
        let overhead = TrainingOverhead {
            t1: f.t1(),
            total: f.t1() + overhead.t2_total + overhead.t3,
            ..overhead
        };
        let unserved = (0..d.n_users()).filter(|&k| members[k].is_empty()).collect();
        Ok(TrainingReport {
            selected: p1.selected,
            power: p1.power,
            beta_hat: p2.beta_hat,
            associations: p2.associations,
            members,
            g_hat,
            overhead,
            pilot_noise_gain: self.timeline.design.pilots.noise_gain,
            unserved,
        })
    }

    /// Noise-free received sample of antenna `m` at frame time `t`.
    pub fn noiseless_sample(&self, m: usize, t: usize) -> Complex64 {
        self.timeline.noiseless(&self.timeline.gains(m), t)
    }
}
