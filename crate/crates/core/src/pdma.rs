//! Path division multiple access: antenna selection, MRC and MMSE transceiver
//! design on the effective channels, and the SINR that results from treating
//! inter-symbol and inter-user interference as noise.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannels;
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::linalg::{condition_bound, dot, normalized, solve_hpd, CMatrix, CVector, ZERO};

/// Above this bound on the condition number of the MMSE covariance a user is flagged.
pub const CONDITION_WARN: f64 = 1e12;
/// Largest codebook product space the exhaustive search accepts.
pub const EXHAUSTIVE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombiningMode {
    Mrc,
    Mmse,
}

impl std::fmt::Display for CombiningMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CombiningMode::Mrc => "mrc",
            CombiningMode::Mmse => "mmse",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserFlag {
    /// No usable effective channel; the user is assigned zero rate.
    NoChannel,
    /// The MMSE covariance condition bound exceeded [`CONDITION_WARN`].
    IllConditioned(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserBeamformer {
    pub codeword: usize,
    pub v: Vec<Complex64>,
    /// Unit-norm combiner: over `M_k` for MRC, over `M_S` for MMSE.
    pub u: Option<Vec<Complex64>>,
    pub flag: Option<UserFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub mode: CombiningMode,
    pub users: Vec<UserBeamformer>,
}

impl BeamformerSet {
    /// Combiner of user `k` laid out over all selected antennas.
    pub fn full_combiner(&self, effective: &EffectiveChannels, k: usize) -> Option<Vec<Complex64>> {
        let u = self.users[k].u.as_ref()?;
        match self.mode {
            CombiningMode::Mmse => Some(u.clone()),
            CombiningMode::Mrc => {
                let mut full = vec![ZERO; effective.n_rows()];
                for (&r, &z) in effective.members[k].iter().zip(u) {
                    full[r] = z;
                }
                Some(full)
            }
        }
    }

    pub fn codewords(&self) -> Vec<usize> {
        self.users.iter().map(|u| u.codeword).collect()
    }
}

/// Per-user power of each term of the SINR.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SinrTerms {
    pub desired: f64,
    pub isi: f64,
    pub iui: f64,
    pub noise: f64,
}

impl SinrTerms {
    pub fn sinr(&self) -> f64 {
        let den = self.isi + self.iui + self.noise;
        if self.desired == 0.0 {
            0.0
        } else {
            self.desired / den
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub sum_rate: f64,
    pub flags: Vec<Option<UserFlag>>,
}

impl RateReport {
    pub fn from_sinr(sinr: Vec<f64>, flags: Vec<Option<UserFlag>>) -> Self {
        let rate: Vec<f64> = sinr.iter().map(|g| (1.0 + g).log2()).collect();
        let sum_rate = rate.iter().sum();
        Self { sinr, rate, sum_rate, flags }
    }
}

/// Indices of the `m_rf` largest entries of `power`, ties broken by lower
/// index, returned in ascending order.
pub fn select_antennas(power: &[f64], m_rf: usize) -> Result<Vec<usize>> {
    if m_rf > power.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot select {m_rf} antennas out of {}",
            power.len()
        )));
    }
    let mut order: Vec<usize> = (0..power.len()).collect();
    order.sort_by(|&a, &b| power[b].total_cmp(&power[a]).then(a.cmp(&b)));
    order.truncate(m_rf);
    order.sort_unstable();
    Ok(order)
}

fn desired_block_gain(effective: &EffectiveChannels, k: usize, f: &[Complex64]) -> f64 {
    effective
        .get(k, k, 0)
        .map_or(0.0, |rows| rows.entries.iter().map(|(_, row)| dot(row, f).norm_sqr()).sum())
}

/// MRC transceivers: each user steers to maximise `||G_k v||^2` and combines
/// over its own antenna group `M_k`.
pub fn mrc_design(effective: &EffectiveChannels, codebook: &Codebook) -> BeamformerSet {
    let users = (0..effective.n_users)
        .map(|k| {
            let g = &effective.g_self[k];
            let (codeword, score) = codebook.best_for(g);
            let v = codebook.get(codeword).to_vec();
            let u = if score > 0.0 {
                let gv = g * CVector::from_column_slice(&v);
                normalized(gv.as_slice())
            } else {
                None
            };
            let flag = u.is_none().then_some(UserFlag::NoChannel);
            UserBeamformer { codeword, v, u, flag }
        })
        .collect();
    BeamformerSet {
        mode: CombiningMode::Mrc,
        users,
    }
}

/// Interference-plus-noise covariance of user `k` for fixed beamformers.
pub fn interference_covariance(
    effective: &EffectiveChannels,
    k: usize,
    v: &[Vec<Complex64>],
    powers: &[f64],
    noise_var: f64,
) -> CMatrix {
    let n = effective.n_rows();
    let mut c = CMatrix::identity(n, n) * Complex64::new(noise_var, 0.0);
    for (k2, i, rows) in effective.blocks(k) {
        if k2 == k && i == 0 {
            continue;
        }
        let w = rows.apply(&v[k2], n);
        let support: Vec<usize> = (0..n).filter(|&r| w[r] != ZERO).collect();
        for &a in &support {
            for &b in &support {
                c[(a, b)] += w[a] * w[b].conj() * powers[k2];
            }
        }
    }
    c
}

/// MMSE combiners and the resulting SINRs for fixed transmit beamformers.
fn mmse_combiners(
    effective: &EffectiveChannels,
    v: &[Vec<Complex64>],
    powers: &[f64],
    noise_var: f64,
) -> Result<Vec<(Option<Vec<Complex64>>, f64, Option<UserFlag>)>> {
    let n = effective.n_rows();
    (0..effective.n_users)
        .map(|k| {
            let gv = effective
                .get(k, k, 0)
                .map_or_else(|| vec![ZERO; n], |rows| rows.apply(&v[k], n));
            if gv.iter().all(|z| *z == ZERO) {
                return Ok((None, 0.0, Some(UserFlag::NoChannel)));
            }
            let c = interference_covariance(effective, k, v, powers, noise_var);
            let cond = condition_bound(&c, noise_var);
            let gv = CVector::from_vec(gv);
            let x = solve_hpd(c, &gv)?;
            let sinr = powers[k] * gv.dotc(&x).re;
            let flag = (cond > CONDITION_WARN).then_some(UserFlag::IllConditioned(cond));
            Ok((normalized(x.as_slice()), sinr.max(0.0), flag))
        })
        .collect()
}

/// MMSE transceivers: each user steers to maximise the desired-signal gain
/// `||G_kk[0] v||^2`; the combiner is `C_k^-1 G_kk[0] v` normalised.
/// Returns the beamformers and the closed-form SINRs `p_k v^H G^H C_k^-1 G v`.
pub fn mmse_design(
    effective: &EffectiveChannels,
    powers: &[f64],
    noise_var: f64,
    codebook: &Codebook,
) -> Result<(BeamformerSet, Vec<f64>)> {
    check_inputs(effective, powers, noise_var)?;
    let codewords: Vec<usize> = (0..effective.n_users)
        .map(|k| codebook.argmax_by(|f| desired_block_gain(effective, k, f)).0)
        .collect();
    mmse_for_codewords(effective, powers, noise_var, codebook, &codewords)
}

/// MMSE combiners for fixed codebook indices, with the closed-form SINRs.
pub fn mmse_for_codewords(
    effective: &EffectiveChannels,
    powers: &[f64],
    noise_var: f64,
    codebook: &Codebook,
    codewords: &[usize],
) -> Result<(BeamformerSet, Vec<f64>)> {
    let v: Vec<Vec<Complex64>> = codewords.iter().map(|&i| codebook.get(i).to_vec()).collect();
    let designs = mmse_combiners(effective, &v, powers, noise_var)?;
    let mut sinr = Vec::with_capacity(designs.len());
    let users = designs
        .into_iter()
        .zip(codewords.iter().zip(v))
        .map(|((u, g, flag), (&codeword, v))| {
            sinr.push(g);
            UserBeamformer { codeword, v, u, flag }
        })
        .collect();
    Ok((
        BeamformerSet {
            mode: CombiningMode::Mmse,
            users,
        },
        sinr,
    ))
}

fn check_inputs(effective: &EffectiveChannels, powers: &[f64], noise_var: f64) -> Result<()> {
    if powers.len() != effective.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} transmit powers for {} users",
            powers.len(),
            effective.n_users
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::InvalidConfig(format!("noise variance must be positive, got {noise_var}")));
    }
    Ok(())
}

/// Desired, ISI, IUI and noise power seen by every user's combiner.
pub fn sinr_terms(
    effective: &EffectiveChannels,
    beamformers: &BeamformerSet,
    powers: &[f64],
    noise_var: f64,
) -> Result<Vec<SinrTerms>> {
    check_inputs(effective, powers, noise_var)?;
    if beamformers.users.len() != effective.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} beamformers for {} users",
            beamformers.users.len(),
            effective.n_users
        )));
    }
    let n = effective.n_rows();
    (0..effective.n_users)
        .map(|k| {
            let Some(u) = beamformers.full_combiner(effective, k) else {
                return Ok(SinrTerms {
                    noise: noise_var,
                    ..SinrTerms::default()
                });
            };
            if u.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "combiner of user {k} has length {}, expected {n}",
                    u.len()
                )));
            }
            let mut terms = SinrTerms {
                noise: noise_var * crate::linalg::norm_sqr(&u),
                ..SinrTerms::default()
            };
            for (k2, i, rows) in effective.blocks(k) {
                let v = &beamformers.users[k2].v;
                let y: Complex64 = rows.entries.iter().map(|(r, row)| u[*r].conj() * dot(row, v)).sum();
                let p = powers[k2] * y.norm_sqr();
                match (k2 == k, i == 0) {
                    (true, true) => terms.desired += p,
                    (true, false) => terms.isi += p,
                    (false, _) => terms.iui += p,
                }
            }
            Ok(terms)
        })
        .collect()
}

/// SINR and rate of every user, treating ISI and IUI as noise.
pub fn evaluate_sinr(
    effective: &EffectiveChannels,
    beamformers: &BeamformerSet,
    powers: &[f64],
    noise_var: f64,
) -> Result<RateReport> {
    let terms = sinr_terms(effective, beamformers, powers, noise_var)?;
    let sinr = terms.iter().map(SinrTerms::sinr).collect();
    let flags = beamformers.users.iter().map(|u| u.flag).collect();
    Ok(RateReport::from_sinr(sinr, flags))
}

/// Exact sum-rate optimum over every codeword tuple, each evaluated with its
/// MMSE combiners. Ties go to the lexicographically smallest tuple.
pub fn exhaustive_p1_oracle(
    effective: &EffectiveChannels,
    powers: &[f64],
    noise_var: f64,
    codebook: &Codebook,
) -> Result<(BeamformerSet, RateReport)> {
    check_inputs(effective, powers, noise_var)?;
    let k_users = effective.n_users;
    let combinations = (codebook.len() as f64).powi(k_users as i32);
    if combinations > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            combinations,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut tuple = vec![0usize; k_users];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let v: Vec<Vec<Complex64>> = tuple.iter().map(|&i| codebook.get(i).to_vec()).collect();
        let sum: f64 = mmse_combiners(effective, &v, powers, noise_var)?
            .iter()
            .map(|(_, g, _)| (1.0 + g).log2())
            .sum();
        if best.as_ref().is_none_or(|(b, _)| sum > *b) {
            best = Some((sum, tuple.clone()));
        }
        let mut pos = k_users;
        loop {
            if pos == 0 {
                let (_, codewords) = best.expect("at least one tuple");
                let (set, _) = mmse_for_codewords(effective, powers, noise_var, codebook, &codewords)?;
                let report = evaluate_sinr(effective, &set, powers, noise_var)?;
                return Ok((set, report));
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < codebook.len() {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// Dense `G v` for any effective block; a convenience for tests and examples.
pub fn apply_block(effective: &EffectiveChannels, k: usize, k2: usize, i: i64, v: &[Complex64]) -> DVector<Complex64> {
    let n = effective.n_rows();
    DVector::from_vec(effective.get(k, k2, i).map_or_else(|| vec![ZERO; n], |rows| rows.apply(v, n)))
}
