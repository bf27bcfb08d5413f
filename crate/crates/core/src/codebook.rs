//! Analog beamforming at the mobile station: the beamsteering codebook, the
//! omnidirectional probing vector and the unitary training matrix.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lens_array::{upa_response, UpaConfig};
use crate::linalg::{dot, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookConfig {
    /// Number of codewords; must be a perfect square (elevation x azimuth grid).
    pub size: usize,
    /// Half-width of the quantised elevation range, degrees.
    pub elevation_support_deg: f64,
    /// Half-width of the quantised azimuth range, degrees.
    pub azimuth_support_deg: f64,
    /// `[elevation points, azimuth points]`; a square grid when unset.
    pub grid: Option<[usize; 2]>,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            size: 256,
            elevation_support_deg: 90.0,
            azimuth_support_deg: 90.0,
            grid: None,
        }
    }
}

impl CodebookConfig {
    pub fn with_size(size: usize) -> Self {
        Self {
            size,
            ..Self::default()
        }
    }

    /// Codebook of `n_el x n_az` steering directions.
    pub fn with_grid(n_el: usize, n_az: usize) -> Self {
        Self {
            size: n_el * n_az,
            grid: Some([n_el, n_az]),
            ..Self::default()
        }
    }

    /// Number of elevation and azimuth points.
    pub fn grid_dims(&self) -> Result<(usize, usize)> {
        match self.grid {
            Some([e, a]) if e * a == self.size && self.size > 0 => Ok((e, a)),
            Some([e, a]) => Err(Error::InvalidConfig(format!(
                "codebook grid {e} x {a} does not give {} codewords",
                self.size
            ))),
            None => {
                let side = (self.size as f64).sqrt().round() as usize;
                if self.size == 0 || side * side != self.size {
                    return Err(Error::InvalidConfig(format!(
                        "codebook size {} is not a perfect square; set grid explicitly",
                        self.size
                    )));
                }
                Ok((side, side))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_dims()?;
        for v in [self.elevation_support_deg, self.azimuth_support_deg] {
            if !(0.0..=90.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "codebook support must lie in [0, 90] degrees, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Finite set of unit-norm constant-modulus beamformers.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub vectors: Vec<Vec<Complex64>>,
    /// `(elevation, azimuth)` in radians each codeword steers to.
    pub angle_grid: Vec<(f64, f64)>,
}

/// `n` uniformly spaced angles on `[-half, half)`; contains 0 for even `n`.
fn quantized_angles(half_deg: f64, n: usize) -> Vec<f64> {
    let half = half_deg.to_radians();
    (0..n).map(|i| -half + 2.0 * half * i as f64 / n as f64).collect()
}

/// Steering vectors on a uniform elevation x azimuth grid. Codeword
/// `i * n_az + j` steers to elevation `i` and azimuth `j`.
pub fn beamsteering_codebook(upa: &UpaConfig, config: &CodebookConfig) -> Result<Codebook> {
    config.validate()?;
    upa.validate()?;
    let (n_el, n_az) = config.grid_dims()?;
    let elevations = quantized_angles(config.elevation_support_deg, n_el);
    let azimuths = quantized_angles(config.azimuth_support_deg, n_az);
    let mut vectors = Vec::with_capacity(config.size);
    let mut angle_grid = Vec::with_capacity(config.size);
    for &theta in &elevations {
        for &phi in &azimuths {
            vectors.push(upa_response(upa, theta, phi).into_inner());
            angle_grid.push((theta, phi));
        }
    }
    Ok(Codebook { vectors, angle_grid })
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn get(&self, index: usize) -> &[Complex64] {
        &self.vectors[index]
    }

    /// Index maximising `score`; ties go to the lowest index.
    pub fn argmax_by<F: FnMut(&[Complex64]) -> f64>(&self, mut score: F) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, f) in self.vectors.iter().enumerate() {
            let s = score(f);
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }

    /// Codeword maximising `||G f||^2`.
    pub fn best_for(&self, g: &CMatrix) -> (usize, f64) {
        self.argmax_by(|f| {
            (0..g.nrows())
                .map(|r| {
                    let row: Vec<Complex64> = g.row(r).iter().cloned().collect();
                    dot(&row, f).norm_sqr()
                })
                .sum()
        })
    }

    /// Bits needed to feed back one index per user.
    pub fn feedback_bits(&self, n_users: usize) -> f64 {
        n_users as f64 * (self.len() as f64).log2()
    }
}

/// Constant-modulus probing vector with a nearly flat pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct OmniBeamformer {
    pub vector: Vec<Complex64>,
    /// Mean of `|b^H f|` over the evaluation grid.
    pub gain: f64,
    /// Max over min of `|b^H f|` over the evaluation grid.
    pub ripple: f64,
}

/// Candidate phase sequences searched exhaustively up to this length.
const EXHAUSTIVE_AXIS_LEN: usize = 12;
const AXIS_SAMPLES: usize = 721;
const PATTERN_GRID: usize = 181;

fn axis_pattern(seq: &[Complex64], spacing: f64, u: f64) -> f64 {
    seq.iter()
        .enumerate()
        .map(|(p, c)| c * Complex64::from_polar(1.0, -2.0 * PI * spacing * p as f64 * u))
        .sum::<Complex64>()
        .norm()
}

fn axis_ripple(seq: &[Complex64], spacing: f64, u_max: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..AXIS_SAMPLES {
        let u = -u_max + 2.0 * u_max * i as f64 / (AXIS_SAMPLES - 1) as f64;
        let a = axis_pattern(seq, spacing, u);
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Flattest constant-modulus sequence of length `n` along one axis, where
/// the direction cosine spans `[-u_max, u_max]`.
fn axis_sequence(n: usize, spacing: f64, u_max: f64) -> Vec<Complex64> {
    if n == 1 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let (alphabet, search): (Vec<Complex64>, bool) = if n <= 6 {
        (
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, -1.0),
            ],
            true,
        )
    } else {
        (vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], n <= EXHAUSTIVE_AXIS_LEN)
    };
    if search {
        let q = alphabet.len();
        let total = q.pow((n - 1) as u32);
        let mut best = (f64::INFINITY, Vec::new());
        let mut seq = vec![alphabet[0]; n];
        for code in 0..total {
            let mut c = code;
            for s in seq.iter_mut().skip(1) {
                *s = alphabet[c % q];
                c /= q;
            }
            let r = axis_ripple(&seq, spacing, u_max);
            if r < best.0 {
                best = (r, seq.clone());
            }
        }
        return best.1;
    }
    // longer axes: coordinate descent over QPSK phases starting from a chirp
    let qpsk: Vec<Complex64> = (0..4).map(|i| Complex64::from_polar(1.0, PI / 2.0 * i as f64)).collect();
    let mut seq: Vec<Complex64> = (0..n)
        .map(|p| Complex64::from_polar(1.0, PI * (p * p) as f64 / n as f64))
        .collect();
    let mut best = axis_ripple(&seq, spacing, u_max);
    for _ in 0..8 {
        let mut improved = false;
        for p in 1..n {
            let mut chosen = seq[p];
            for &c in &qpsk {
                seq[p] = c;
                let r = axis_ripple(&seq, spacing, u_max);
                if r < best {
                    best = r;
                    chosen = c;
                    improved = true;
                }
            }
            seq[p] = chosen;
        }
        if !improved {
            break;
        }
    }
    seq
}

/// Separable probing vector: the Kronecker product of the flattest
/// sequence along each UPA axis, designed and evaluated over elevations and
/// azimuths within the given half-widths (degrees).
pub fn omni_beamformer(upa: &UpaConfig, elevation_support_deg: f64, azimuth_support_deg: f64) -> OmniBeamformer {
    let el = elevation_support_deg.to_radians();
    let az = azimuth_support_deg.to_radians();
    let fy = axis_sequence(upa.n_y, upa.spacing, az.sin());
    let fz = axis_sequence(upa.n_z, upa.spacing, el.sin());
    let scale = 1.0 / (upa.num_elements() as f64).sqrt();
    let mut vector = Vec::with_capacity(upa.num_elements());
    for a in &fy {
        for b in &fz {
            vector.push(a * b * scale);
        }
    }
    let (gain, ripple) = pattern_stats(upa, &vector, elevation_support_deg, azimuth_support_deg);
    OmniBeamformer { vector, gain, ripple }
}

/// Mean and max/min of `|b^H f|` on a 181 x 181 elevation/azimuth grid.
pub fn pattern_stats(upa: &UpaConfig, f: &[Complex64], elevation_support_deg: f64, azimuth_support_deg: f64) -> (f64, f64) {
    let el = elevation_support_deg.to_radians();
    let az = azimuth_support_deg.to_radians();
    let step = |half: f64, i: usize| -half + 2.0 * half * i as f64 / (PATTERN_GRID - 1) as f64;
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..PATTERN_GRID {
        for j in 0..PATTERN_GRID {
            let b = upa_response(upa, step(el, i), step(az, j));
            let g = crate::linalg::inner(b.as_slice(), f).norm();
            sum += g;
            lo = lo.min(g);
            hi = hi.max(g);
        }
    }
    let ripple = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    (sum / (PATTERN_GRID * PATTERN_GRID) as f64, ripple)
}

/// Unitary DFT training matrix; column `n` is the beamformer sent in the
/// `n`-th training symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMatrix {
    pub matrix: CMatrix,
}

pub fn training_matrix(m_ms: usize) -> TrainingMatrix {
    let scale = 1.0 / (m_ms as f64).sqrt();
    let matrix = CMatrix::from_fn(m_ms, m_ms, |p, n| {
        Complex64::from_polar(scale, -2.0 * PI * (p * n) as f64 / m_ms as f64)
    });
    TrainingMatrix { matrix }
}

impl TrainingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn column(&self, n: usize) -> Vec<Complex64> {
        self.matrix.column(n).iter().cloned().collect()
    }

    /// `F^-1`, which is `F^H` for this construction.
    pub fn inverse(&self) -> CMatrix {
        self.matrix.adjoint()
    }
}
