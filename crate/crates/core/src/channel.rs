//! Random multipath channels, their symbol-rate tap representation, and the
//! delay-compensated effective matrices every combiner is computed on.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lens_array::{lens_element_response, upa_response, LensArray, UpaConfig};
use crate::linalg::{dot, CMatrix, ZERO};

/// Stand-in path-loss and power-division model.
///
/// Gains are `alpha = sqrt(PL(d) w) e^{j psi}` with `PL(d) = (d / d_ref)^-n`,
/// path power fractions `w` drawn from a symmetric Dirichlet conditioned on the
/// strongest path holding at least `dominant_fraction`, and `psi` uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossConfig {
    pub exponent: f64,
    pub reference_distance_m: f64,
    pub concentration: f64,
    pub dominant_fraction: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            exponent: 2.9,
            reference_distance_m: 100.0,
            concentration: 1.0,
            dominant_fraction: 0.5,
        }
    }
}

impl PathLossConfig {
    /// Linear power gain at distance `d` metres.
    pub fn path_loss(&self, distance_m: f64) -> f64 {
        (distance_m / self.reference_distance_m).powf(-self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_users: usize,
    pub n_paths: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub max_delay_s: f64,
    /// Half-width of the elevation support of AoAs and AoDs, degrees.
    #[serde(default = "default_support")]
    pub elevation_support_deg: f64,
    /// Half-width of the azimuth support of AoAs and AoDs, degrees.
    #[serde(default = "default_support")]
    pub azimuth_support_deg: f64,
    /// One distance for every user, or one per user.
    pub distances_m: Vec<f64>,
    #[serde(default)]
    pub pathloss: PathLossConfig,
}

fn default_support() -> f64 {
    60.0
}

impl ScenarioConfig {
    /// 28 GHz, 500 MHz, 100 ns delay spread, users 100 m away.
    pub fn paper_default(n_users: usize) -> Self {
        Self {
            n_users,
            n_paths: 3,
            carrier_hz: 28e9,
            bandwidth_hz: 500e6,
            max_delay_s: 100e-9,
            elevation_support_deg: 60.0,
            azimuth_support_deg: 60.0,
            distances_m: vec![100.0],
            pathloss: PathLossConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_users == 0 {
            return bad("scenario needs at least one user".into());
        }
        if self.n_paths == 0 {
            return bad("scenario needs at least one path per user".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth_hz));
        }
        if !(self.max_delay_s >= 0.0) {
            return bad(format!("max delay must be non-negative, got {}", self.max_delay_s));
        }
        for (name, v) in [("elevation", self.elevation_support_deg), ("azimuth", self.azimuth_support_deg)] {
            if !(0.0..=90.0).contains(&v) {
                return bad(format!("{name} support must lie in [0, 90] degrees, got {v}"));
            }
        }
        if self.distances_m.len() != 1 && self.distances_m.len() != self.n_users {
            return bad(format!(
                "distances_m must have 1 or {} entries, got {}",
                self.n_users,
                self.distances_m.len()
            ));
        }
        if self.distances_m.iter().any(|d| !(*d > 0.0)) {
            return bad("distances must be positive".into());
        }
        let pl = &self.pathloss;
        if !(pl.reference_distance_m > 0.0 && pl.concentration > 0.0) {
            return bad("path-loss reference distance and concentration must be positive".into());
        }
        if !(0.0..=1.0).contains(&pl.dominant_fraction) {
            return bad(format!("dominant_fraction must lie in [0, 1], got {}", pl.dominant_fraction));
        }
        Ok(())
    }

    pub fn distance(&self, user: usize) -> f64 {
        if self.distances_m.len() == 1 {
            self.distances_m[0]
        } else {
            self.distances_m[user]
        }
    }

    /// System delay spread in symbols, `round(B T_m)`.
    pub fn mu(&self) -> usize {
        (self.max_delay_s * self.bandwidth_hz).round() as usize
    }
}

/// One propagation path: complex gain, delay, arrival and departure angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub gain: Complex64,
    pub delay_s: f64,
    /// `(elevation, azimuth)` of arrival, radians.
    pub aoa: (f64, f64),
    /// `(elevation, azimuth)` of departure, radians.
    pub aod: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `paths[k][l]`.
    pub paths: Vec<Vec<PathParams>>,
    pub rng_seed: u64,
}

impl ChannelRealization {
    pub fn n_users(&self) -> usize {
        self.paths.len()
    }
}

fn power_fractions(rng: &mut ChaCha8Rng, n: usize, cfg: &PathLossConfig) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(cfg.concentration, 1.0).expect("validated concentration");
    let draw = |rng: &mut ChaCha8Rng| {
        let g: Vec<f64> = (0..n).map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE)).collect();
        let total: f64 = g.iter().sum();
        g.into_iter().map(|x| x / total).collect::<Vec<_>>()
    };
    let mut w = draw(rng);
    for _ in 0..1000 {
        if w.iter().cloned().fold(0.0, f64::max) >= cfg.dominant_fraction {
            return w;
        }
        w = draw(rng);
    }
    // fall back to pulling the largest fraction up to the threshold
    let (j, wj) = w
        .iter()
        .cloned()
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let lambda = (cfg.dominant_fraction - wj) / (1.0 - wj);
    for (i, x) in w.iter_mut().enumerate() {
        *x = (1.0 - lambda) * *x + if i == j { lambda } else { 0.0 };
    }
    w
}

/// Draws a channel realization; identical seeds give identical realizations.
pub fn sample_channel(scenario: &ScenarioConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let el = scenario.elevation_support_deg.to_radians();
    let az = scenario.azimuth_support_deg.to_radians();
    let angle = |rng: &mut ChaCha8Rng, half: f64| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };
    let paths = (0..scenario.n_users)
        .map(|k| {
            let pl = scenario.pathloss.path_loss(scenario.distance(k));
            let w = power_fractions(&mut rng, scenario.n_paths, &scenario.pathloss);
            w.into_iter()
                .map(|wl| {
                    let phase = rng.random_range(0.0..2.0 * PI);
                    let delay_s = if scenario.max_delay_s > 0.0 {
                        rng.random_range(0.0..=scenario.max_delay_s)
                    } else {
                        0.0
                    };
                    let aoa = (angle(&mut rng, el), angle(&mut rng, az));
                    let aod = (angle(&mut rng, el), angle(&mut rng, az));
                    PathParams {
                        gain: Complex64::from_polar((pl * wl).sqrt(), phase),
                        delay_s,
                        aoa,
                        aod,
                    }
                })
                .collect()
        })
        .collect();
    ChannelRealization { paths, rng_seed: seed }
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRecord {
    user: usize,
    path: usize,
    gain_re: f64,
    gain_im: f64,
    delay_s: f64,
    aoa_theta: f64,
    aoa_phi: f64,
    aod_theta: f64,
    aod_phi: f64,
}

impl ChannelRealization {
    /// Writes one CSV record per path, preceded by a `# rng_seed = N` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# rng_seed = {}", self.rng_seed)?;
        let mut w = csv::Writer::from_writer(out);
        for (k, user) in self.paths.iter().enumerate() {
            for (l, p) in user.iter().enumerate() {
                w.serialize(PathRecord {
                    user: k,
                    path: l,
                    gain_re: p.gain.re,
                    gain_im: p.gain.im,
                    delay_s: p.delay_s,
                    aoa_theta: p.aoa.0,
                    aoa_phi: p.aoa.1,
                    aod_theta: p.aod.0,
                    aod_phi: p.aod.1,
                })
                .map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let rng_seed = first
            .trim()
            .strip_prefix("# rng_seed =")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected '# rng_seed = N' header, got {first:?}")))?;
        let mut reader = csv::Reader::from_reader(input);
        let mut paths: Vec<Vec<PathParams>> = Vec::new();
        for rec in reader.deserialize::<PathRecord>() {
            let r = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if r.user > paths.len() {
                return Err(Error::Parse(format!("records out of order at user {} path {}", r.user, r.path)));
            }
            if r.user == paths.len() {
                paths.push(Vec::new());
            }
            if r.path != paths[r.user].len() {
                return Err(Error::Parse(format!("records out of order at user {} path {}", r.user, r.path)));
            }
            paths[r.user].push(PathParams {
                gain: Complex64::new(r.gain_re, r.gain_im),
                delay_s: r.delay_s,
                aoa: (r.aoa_theta, r.aoa_phi),
                aod: (r.aod_theta, r.aod_phi),
            });
        }
        let l = paths.first().map_or(0, Vec::len);
        if paths.iter().any(|p| p.len() != l) {
            return Err(Error::Parse("every user must carry the same number of paths".into()));
        }
        Ok(Self { paths, rng_seed })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// All paths of one user that land on the same symbol delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Tap {
    /// Delay in symbols.
    pub delay: usize,
    /// Indices of the merged paths, ascending.
    pub paths: Vec<usize>,
    /// Per BS antenna: summed `alpha * a_m(theta, phi)` of the merged paths.
    pub beta: Vec<Complex64>,
    /// Row-major `M_BS x M_MS` block; row `m` is `h_m^H`.
    rows: Vec<Complex64>,
    n_ms: usize,
}

impl Tap {
    /// `h_m^H` for BS antenna `m` (canonical position).
    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.rows[m * self.n_ms..(m + 1) * self.n_ms]
    }
}

/// Symbol-rate channel: per user a list of taps over all BS antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    pub n_bs: usize,
    pub n_ms: usize,
    /// `taps[k]`, ordered by lowest contained path index.
    pub taps: Vec<Vec<Tap>>,
    /// `path_delay[k][l]` in symbols.
    pub path_delay: Vec<Vec<usize>>,
    /// `path_beta[k][l][m]`.
    path_beta: Vec<Vec<Vec<Complex64>>>,
    /// Largest tap delay.
    pub mu: usize,
}

/// Quantises delays to symbols and evaluates every tap row exactly.
pub fn discretize(
    realization: &ChannelRealization,
    lens: &LensArray,
    upa: &UpaConfig,
    bandwidth_hz: f64,
) -> DiscreteChannel {
    let n_bs = lens.len();
    let n_ms = upa.num_elements();
    let mut taps = Vec::new();
    let mut path_delay = Vec::new();
    let mut path_beta = Vec::new();
    let mut mu = 0;
    for user in &realization.paths {
        let mut user_taps: Vec<Tap> = Vec::new();
        let mut delays = Vec::new();
        let mut betas = Vec::new();
        for (l, p) in user.iter().enumerate() {
            let delay = (p.delay_s * bandwidth_hz).round().max(0.0) as usize;
            mu = mu.max(delay);
            let beta: Vec<Complex64> = lens
                .antennas()
                .iter()
                .map(|&a| p.gain * lens_element_response(lens.config(), a, p.aoa.0, p.aoa.1))
                .collect();
            let b_conj: Vec<Complex64> = upa_response(upa, p.aod.0, p.aod.1).0.iter().map(|z| z.conj()).collect();
            let tap = match user_taps.iter_mut().position(|t| t.delay == delay) {
                Some(i) => &mut user_taps[i],
                None => {
                    user_taps.push(Tap {
                        delay,
                        paths: Vec::new(),
                        beta: vec![ZERO; n_bs],
                        rows: vec![ZERO; n_bs * n_ms],
                        n_ms,
                    });
                    user_taps.last_mut().unwrap()
                }
            };
            tap.paths.push(l);
            for m in 0..n_bs {
                tap.beta[m] += beta[m];
                for (j, bj) in b_conj.iter().enumerate() {
                    tap.rows[m * n_ms + j] += beta[m] * bj;
                }
            }
            delays.push(delay);
            betas.push(beta);
        }
        taps.push(user_taps);
        path_delay.push(delays);
        path_beta.push(betas);
    }
    DiscreteChannel {
        n_bs,
        n_ms,
        taps,
        path_delay,
        path_beta,
        mu,
    }
}

impl DiscreteChannel {
    pub fn n_users(&self) -> usize {
        self.taps.len()
    }

    /// `beta_mkl = alpha_kl a_m(theta_kl, phi_kl)` for path `l` of user `k`.
    pub fn beta(&self, m: usize, k: usize, l: usize) -> Complex64 {
        self.path_beta[k][l][m]
    }

    /// Tap of user `k` at symbol delay `delay`, if any.
    pub fn tap_at(&self, k: usize, delay: usize) -> Option<&Tap> {
        self.taps[k].iter().find(|t| t.delay == delay)
    }

    /// Tap-domain gains `beta_mk[i]` for `i = 0..=mu`.
    pub fn tap_betas(&self, m: usize, k: usize, mu: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; mu + 1];
        for t in &self.taps[k] {
            if t.delay <= mu {
                out[t.delay] += t.beta[m];
            }
        }
        out
    }

    /// Index of the strongest tap of user `k` at antenna `m`; ties go to the
    /// lower index.
    pub fn strongest_tap(&self, m: usize, k: usize) -> usize {
        let mut best = 0;
        let mut best_power = f64::NEG_INFINITY;
        for (i, t) in self.taps[k].iter().enumerate() {
            let p = t.beta[m].norm_sqr();
            if p > best_power {
                best = i;
                best_power = p;
            }
        }
        best
    }

    /// Strongest `(user, tap)` pair at antenna `m` over all users.
    pub fn strongest_path(&self, m: usize) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_power = f64::NEG_INFINITY;
        for (k, user) in self.taps.iter().enumerate() {
            for (i, t) in user.iter().enumerate() {
                let p = t.beta[m].norm_sqr();
                if p > best_power {
                    best = (k, i);
                    best_power = p;
                }
            }
        }
        best
    }
}

/// Sparse rows of one effective matrix; absent rows are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    /// `(row index into the selected antennas, row vector)`.
    pub entries: Vec<(usize, Vec<Complex64>)>,
}

impl SparseRows {
    /// `G v` as a dense vector of length `n_rows`.
    pub fn apply(&self, v: &[Complex64], n_rows: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; n_rows];
        for (r, row) in &self.entries {
            out[*r] += dot(row, v);
        }
        out
    }
}

/// Delay-compensated effective channels on a selected antenna set.
///
/// For user `k`, selected antenna `r` is synchronised to delay `sync[k][r]`;
/// `G_{kk'}[i]` then carries the tap of user `k'` whose delay exceeds that
/// synchronisation delay by `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    /// Canonical antenna positions of the selected set, ascending.
    pub selected: Vec<usize>,
    pub n_ms: usize,
    pub n_users: usize,
    /// `sync[k][r]`: delay antenna `selected[r]` is aligned to when detecting user `k`.
    pub sync: Vec<Vec<Option<usize>>>,
    /// `members[k]`: rows (into `selected`) assigned to user `k` for MRC.
    pub members: Vec<Vec<usize>>,
    /// `g_self[k]`: `|M_k| x M_MS` MRC effective channel.
    pub g_self: Vec<CMatrix>,
    /// `(k, k', i)` -> rows of `G_{kk'}[i]`.
    pub cross: BTreeMap<(usize, usize, i64), SparseRows>,
}

impl EffectiveChannels {
    /// Builds the matrices for arbitrary synchronisation delays and MRC
    /// memberships. Rows without a synchronisation delay are left empty.
    pub fn from_sync(
        discrete: &DiscreteChannel,
        selected: &[usize],
        sync: Vec<Vec<Option<usize>>>,
        members: Vec<Vec<usize>>,
    ) -> Self {
        let n_users = discrete.n_users();
        let n_ms = discrete.n_ms;
        let mut cross: BTreeMap<(usize, usize, i64), SparseRows> = BTreeMap::new();
        for k in 0..n_users {
            for (r, &m) in selected.iter().enumerate() {
                let Some(base) = sync[k][r] else { continue };
                for (k2, user) in discrete.taps.iter().enumerate() {
                    for tap in user {
                        let i = tap.delay as i64 - base as i64;
                        cross
                            .entry((k, k2, i))
                            .or_default()
                            .entries
                            .push((r, tap.row(m).to_vec()));
                    }
                }
            }
        }
        let g_self = (0..n_users)
            .map(|k| {
                CMatrix::from_fn(members[k].len(), n_ms, |row, j| {
                    let r = members[k][row];
                    sync[k][r]
                        .and_then(|d| discrete.tap_at(k, d))
                        .map_or(ZERO, |t| t.row(selected[r])[j])
                })
            })
            .collect();
        Self {
            selected: selected.to_vec(),
            n_ms,
            n_users,
            sync,
            members,
            g_self,
            cross,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.selected.len()
    }

    /// Rows of `G_{kk'}[i]`, if any are non-zero.
    pub fn get(&self, k: usize, k2: usize, i: i64) -> Option<&SparseRows> {
        self.cross.get(&(k, k2, i))
    }

    /// Dense `|M_S| x M_MS` copy of `G_{kk'}[i]`.
    pub fn dense(&self, k: usize, k2: usize, i: i64) -> CMatrix {
        let mut g = CMatrix::zeros(self.n_rows(), self.n_ms);
        if let Some(rows) = self.get(k, k2, i) {
            for (r, row) in &rows.entries {
                for (j, z) in row.iter().enumerate() {
                    g[(*r, j)] += z;
                }
            }
        }
        g
    }

    /// Iterates the stored `(k', i, rows)` blocks for user `k`.
    pub fn blocks(&self, k: usize) -> impl Iterator<Item = (usize, i64, &SparseRows)> {
        self.cross
            .range((k, 0, i64::MIN)..=(k, usize::MAX, i64::MAX))
            .map(|(&(_, k2, i), rows)| (k2, i, rows))
    }

    /// Restricts the matrices to a subset of the selected rows.
    pub fn restrict(&self, rows: &[usize]) -> Self {
        let mut index = vec![None; self.n_rows()];
        for (new, &old) in rows.iter().enumerate() {
            index[old] = Some(new);
        }
        let cross = self
            .cross
            .iter()
            .filter_map(|(key, sr)| {
                let entries: Vec<_> = sr
                    .entries
                    .iter()
                    .filter_map(|(r, row)| index[*r].map(|n| (n, row.clone())))
                    .collect();
                (!entries.is_empty()).then_some((*key, SparseRows { entries }))
            })
            .collect();
        let members: Vec<Vec<usize>> = self
            .members
            .iter()
            .map(|ms| ms.iter().filter_map(|r| index[*r]).collect())
            .collect();
        let g_self = self
            .members
            .iter()
            .zip(&self.g_self)
            .map(|(ms, g)| {
                let keep: Vec<usize> = ms.iter().enumerate().filter(|(_, r)| index[**r].is_some()).map(|(i, _)| i).collect();
                CMatrix::from_fn(keep.len(), self.n_ms, |a, j| g[(keep[a], j)])
            })
            .collect();
        Self {
            selected: rows.iter().map(|&r| self.selected[r]).collect(),
            n_ms: self.n_ms,
            n_users: self.n_users,
            sync: self.sync.iter().map(|s| rows.iter().map(|&r| s[r]).collect()).collect(),
            members,
            g_self,
            cross,
        }
    }
}

/// Genie effective matrices: each antenna is synchronised per user to that
/// user's strongest path, and `M_k` collects the antennas whose overall
/// strongest path belongs to user `k`.
pub fn effective_matrices(discrete: &DiscreteChannel, selected: &[usize]) -> EffectiveChannels {
    let n_users = discrete.n_users();
    let mut sync = vec![vec![None; selected.len()]; n_users];
    let mut members = vec![Vec::new(); n_users];
    for (r, &m) in selected.iter().enumerate() {
        for (k, s) in sync.iter_mut().enumerate() {
            s[r] = Some(discrete.taps[k][discrete.strongest_tap(m, k)].delay);
        }
        let (k, _) = discrete.strongest_path(m);
        members[k].push(r);
    }
    EffectiveChannels::from_sync(discrete, selected, sync, members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens_array::LensArrayConfig;

    fn arrays() -> (LensArray, UpaConfig) {
        (LensArray::new(LensArrayConfig::full_coverage(10.0, 10.0)).unwrap(), UpaConfig::new(4, 4))
    }

    fn single_path(gain: Complex64, delay_s: f64, aoa: (f64, f64), aod: (f64, f64)) -> PathParams {
        PathParams { gain, delay_s, aoa, aod }
    }

    #[test]
    fn sampling_is_deterministic() {
        let sc = ScenarioConfig::paper_default(5);
        assert_eq!(sample_channel(&sc, 42), sample_channel(&sc, 42));
        assert_ne!(sample_channel(&sc, 42), sample_channel(&sc, 43));
    }

    #[test]
    fn delays_bounded_by_spread() {
        let sc = ScenarioConfig::paper_default(5);
        assert_eq!(sc.mu(), 50);
        let (lens, upa) = arrays();
        for seed in 0..20 {
            let d = discretize(&sample_channel(&sc, seed), &lens, &upa, sc.bandwidth_hz);
            assert!(d.mu <= 50);
            assert!(d.path_delay.iter().flatten().all(|&n| n <= 50));
        }
    }

    #[test]
    fn azimuth_mean_is_centered() {
        let mut sc = ScenarioConfig::paper_default(1);
        sc.n_paths = 1;
        let n = 10_000;
        let mean: f64 = (0..n).map(|s| sample_channel(&sc, s).paths[0][0].aoa.1).sum::<f64>() / n as f64;
        let half = 60f64.to_radians();
        let sigma = half / 3f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean} sigma {sigma}");
    }

    #[test]
    fn power_fractions_respect_dominance() {
        let sc = ScenarioConfig::paper_default(5);
        for seed in 0..50 {
            for user in sample_channel(&sc, seed).paths {
                let p: Vec<f64> = user.iter().map(|p| p.gain.norm_sqr()).collect();
                let total: f64 = p.iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
                assert!(p.iter().cloned().fold(0.0, f64::max) >= 0.5 - 1e-12);
            }
        }
    }

    #[test]
    fn single_path_tap_row() {
        let (lens, upa) = arrays();
        let p = single_path(Complex64::new(0.3, -0.4), 0.0, (0.2, -0.1), (0.3, 0.5));
        let real = ChannelRealization { paths: vec![vec![p]], rng_seed: 0 };
        let d = discretize(&real, &lens, &upa, 500e6);
        assert_eq!(d.taps[0].len(), 1);
        assert_eq!(d.taps[0][0].delay, 0);
        let b = upa_response(&upa, 0.3, 0.5);
        for m in [0, 100, 158, 316] {
            let am = lens_element_response(lens.config(), lens.antennas()[m], 0.2, -0.1);
            for j in 0..16 {
                let expected = p.gain * am * b.0[j].conj();
                assert!((d.taps[0][0].row(m)[j] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn equal_delays_merge() {
        let (lens, upa) = arrays();
        let b = 500e6;
        let p1 = single_path(Complex64::new(0.5, 0.0), 7.2 / b, (0.1, 0.2), (0.0, 0.0));
        let p2 = single_path(Complex64::new(0.0, 0.5), 7.2 / b, (-0.3, 0.4), (0.2, -0.2));
        let d = discretize(&ChannelRealization { paths: vec![vec![p1, p2]], rng_seed: 0 }, &lens, &upa, b);
        assert_eq!(d.taps[0].len(), 1);
        assert_eq!(d.taps[0][0].delay, 7);
        assert_eq!(d.taps[0][0].paths, vec![0, 1]);
        let d1 = discretize(&ChannelRealization { paths: vec![vec![p1]], rng_seed: 0 }, &lens, &upa, b);
        let d2 = discretize(&ChannelRealization { paths: vec![vec![p2]], rng_seed: 0 }, &lens, &upa, b);
        for m in [3, 150, 200] {
            for j in 0..16 {
                let sum = d1.taps[0][0].row(m)[j] + d2.taps[0][0].row(m)[j];
                assert!((d.taps[0][0].row(m)[j] - sum).norm() < 1e-14);
            }
        }
        let d = discretize(&ChannelRealization { paths: vec![vec![single_path(p1.gain, 100e-9, p1.aoa, p1.aod)]], rng_seed: 0 }, &lens, &upa, b);
        assert_eq!(d.taps[0][0].delay, 50);
    }

    #[test]
    fn beta_on_and_off_grid() {
        let (lens, upa) = arrays();
        let theta = (0.3f64).asin();
        let phi = (2.0 / (10.0 * theta.cos())).asin();
        let alpha = Complex64::new(0.6, 0.8);
        let d = discretize(
            &ChannelRealization { paths: vec![vec![single_path(alpha, 0.0, (theta, phi), (0.0, 0.0))]], rng_seed: 0 },
            &lens,
            &upa,
            500e6,
        );
        let focus = lens.position(crate::lens_array::AntennaIndex::new(3, 2)).unwrap();
        assert!((d.beta(focus, 0, 0) - alpha * 10.0).norm() < 1e-9);
        assert!(d.beta(focus + 1, 0, 0).norm() < 1e-9);

        let d = discretize(
            &ChannelRealization { paths: vec![vec![single_path(alpha, 0.0, (0.37, -0.52), (0.0, 0.0))]], rng_seed: 0 },
            &lens,
            &upa,
            500e6,
        );
        let total: f64 = (0..lens.len()).map(|m| d.beta(m, 0, 0).norm_sqr()).sum();
        assert!((total - 100.0).abs() / 100.0 < 0.05, "{total}");
    }

    #[test]
    fn csv_roundtrip() {
        let real = sample_channel(&ScenarioConfig::paper_default(3), 9);
        let mut buf = Vec::new();
        real.write_csv(&mut buf).unwrap();
        let back = ChannelRealization::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, real);
        assert!(ChannelRealization::read_csv(std::io::Cursor::new(b"user,path\n".to_vec())).is_err());
    }

    #[test]
    fn scenario_validation() {
        let mut sc = ScenarioConfig::paper_default(2);
        assert!(sc.validate().is_ok());
        sc.distances_m = vec![10.0, 20.0, 30.0];
        assert!(sc.validate().is_err());
        sc.distances_m = vec![10.0, 20.0];
        assert!(sc.validate().is_ok());
        sc.n_paths = 0;
        assert!(sc.validate().is_err());
    }
}
