//! Doubly dispersive channel with integer delay and integer Doppler.
//!
//! A path `(l, alpha, h)` delays the time signal by `l` samples and rotates it
//! by `exp(-i 2π alpha n / N)`. In the DAFT domain it becomes a single
//! circulant band: row `p` couples to column `(p + loc) mod N` with
//! `loc = alpha + (2 alpha_max + 1) l`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{AfdmError, Result};
use crate::params::{cis, AfdmParams};
use crate::transform::{cpp_phase, TimeSignal};

/// Dense complex matrix used for oracles and the time-domain channel.
pub type DenseMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPath {
    /// Delay in samples.
    pub l: usize,
    /// Doppler in subcarrier spacings.
    pub alpha: i64,
    pub h: Complex64,
}

impl ChannelPath {
    pub fn new(l: usize, alpha: i64, h: Complex64) -> Self {
        ChannelPath { l, alpha, h }
    }

    fn check(&self, params: &AfdmParams) -> Result<()> {
        let a = params.alpha_max() as i64;
        if self.l > params.l_max() || self.alpha < -a || self.alpha > a {
            return Err(AfdmError::InvalidProfile(format!(
                "path (l={}, alpha={}) outside the grid l <= {}, |alpha| <= {a}",
                self.l,
                self.alpha,
                params.l_max()
            )));
        }
        Ok(())
    }
}

/// A non-empty set of paths with pairwise distinct `(l, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DDProfile {
    paths: Vec<ChannelPath>,
}

impl DDProfile {
    pub fn new(paths: Vec<ChannelPath>, params: &AfdmParams) -> Result<Self> {
        if paths.is_empty() {
            return Err(AfdmError::InvalidProfile("profile has no paths".into()));
        }
        for (i, p) in paths.iter().enumerate() {
            p.check(params)?;
            if paths[..i].iter().any(|o| o.l == p.l && o.alpha == p.alpha) {
                return Err(AfdmError::InvalidProfile(format!(
                    "duplicate path (l={}, alpha={})",
                    p.l, p.alpha
                )));
            }
        }
        Ok(DDProfile { paths })
    }

    pub fn paths(&self) -> &[ChannelPath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    fn sorted(mut self) -> Self {
        self.paths.sort_by_key(|p| (p.l, p.alpha));
        self
    }
}

/// Combined DAFT-domain shift of a path, in `[-alpha_max, Q - alpha_max]`.
pub fn loc_of(path: &ChannelPath, params: &AfdmParams) -> i64 {
    path.alpha + (params.delay_stride() * path.l) as i64
}

/// Inverse of [`loc_of`] over the grid.
pub(crate) fn path_of_loc(loc: i64, params: &AfdmParams) -> (usize, i64) {
    let a = params.alpha_max() as i64;
    let stride = params.delay_stride() as i64;
    let l = (loc + a).div_euclid(stride);
    (l as usize, loc - stride * l)
}

/// Phase of the DAFT-domain coupling from column `q` to row `p` for delay `l`:
/// `exp(i 2π/N (N c1 l² - q l + N c2 (q² - p²)))`.
pub(crate) fn coupling_phase(params: &AfdmParams, l: usize, q: usize, p: usize) -> Complex64 {
    let l = l as i128;
    let (q, p) = (q as i128, p as i128);
    let turns = params.c1_turns(l * l) - params.bin_turns(q * l) + params.c2_turns(q * q - p * p);
    cis(turns)
}

/// Sparse `N x N` DAFT-domain channel matrix, stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl EffectiveChannel {
    pub fn zeros(n: usize) -> Self {
        EffectiveChannel {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    fn add(&mut self, p: usize, q: usize, v: Complex64) {
        let row = &mut self.rows[p];
        match row.binary_search_by_key(&q, |e| e.0) {
            Ok(i) => row[i].1 += v,
            Err(i) => row.insert(i, (q, v)),
        }
    }

    /// Stored entries of row `p`, ascending by column.
    pub fn row(&self, p: usize) -> &[(usize, Complex64)] {
        &self.rows[p]
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.rows[p]
            .binary_search_by_key(&q, |e| e.0)
            .map(|i| self.rows[p][i].1)
            .unwrap_or_default()
    }

    /// Entries of every column as `(row, value)`, ascending by row.
    pub fn columns(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut cols = vec![Vec::new(); self.n()];
        for (p, row) in self.rows.iter().enumerate() {
            for &(q, v) in row {
                cols[q].push((p, v));
            }
        }
        cols
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(q, v)| v * x[q]).sum())
            .collect()
    }

    /// Adds `self * x` into `acc`.
    pub fn mul_vec_add(&self, x: &[Complex64], acc: &mut [Complex64]) {
        for (a, row) in acc.iter_mut().zip(&self.rows) {
            for &(q, v) in row {
                *a += v * x[q];
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for (p, row) in self.rows.iter().enumerate() {
            for &(q, v) in row {
                m[(p, q)] = v;
            }
        }
        m
    }

    pub fn max_abs_diff(&self, dense: &DenseMatrix) -> f64 {
        let mine = self.to_dense();
        mine.iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .all(|(_, v)| v.re.is_finite() && v.im.is_finite())
    }
}

/// DAFT-domain channel matrix assembled band by band.
pub fn effective_matrix(profile: &DDProfile, params: &AfdmParams) -> EffectiveChannel {
    let n = params.n();
    let mut h = EffectiveChannel::zeros(n);
    for path in profile.paths() {
        let loc = loc_of(path, params);
        for p in 0..n {
            let q = (p as i64 + loc).rem_euclid(n as i64) as usize;
            h.add(p, q, path.h * coupling_phase(params, path.l, q, p));
        }
    }
    h
}

/// Time-domain channel matrix acting on one `N`-sample block, with the
/// chirp-periodic prefix folded into the wrapped entries.
///
/// `H[n, (n - l) mod N] += h exp(-i 2π alpha n / N)`.
pub fn build_time_channel(profile: &DDProfile, params: &AfdmParams) -> DenseMatrix {
    let n = params.n();
    let mut h = DenseMatrix::zeros(n, n);
    for path in profile.paths() {
        for row in 0..n {
            let doppler = cis(-params.bin_turns(path.alpha as i128 * row as i128));
            let (col, wrap) = if row >= path.l {
                (row - path.l, Complex64::new(1.0, 0.0))
            } else {
                let k = path.l - row;
                (n - k, cpp_phase(params, k))
            };
            h[(row, col)] += path.h * doppler * wrap;
        }
    }
    h
}

fn chirp_diag(params: &AfdmParams, chirp: impl Fn(i128) -> f64) -> DenseMatrix {
    let n = params.n();
    DenseMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        (0..n as i128).map(|k| cis(-chirp(k * k))),
    ))
}

/// Dense factorization `Λc2 F Λc1 H Λc1ᴴ Fᴴ Λc2ᴴ`; an oracle for
/// [`effective_matrix`].
pub fn effective_matrix_oracle(profile: &DDProfile, params: &AfdmParams) -> DenseMatrix {
    let n = params.n();
    let scale = 1.0 / (n as f64).sqrt();
    let f = DenseMatrix::from_fn(n, n, |r, c| cis(-params.bin_turns((r * c) as i128)) * scale);
    let l1 = chirp_diag(params, |k| params.c1_turns(k));
    let l2 = chirp_diag(params, |k| params.c2_turns(k));
    let h = build_time_channel(profile, params);
    let left = &l2 * &f * &l1;
    let right = left.adjoint();
    left * h * right
}

/// Circular complex Gaussian sample with the given variance.
pub(crate) fn complex_gaussian(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Passes the prefixed signal through every path, without noise.
///
/// Samples before the start of the block are taken as zero.
pub fn propagate(s_cpp: &TimeSignal, profile: &DDProfile, params: &AfdmParams) -> Result<TimeSignal> {
    let n = params.n();
    let len = s_cpp.len();
    if len < n + params.l_max() {
        return Err(AfdmError::LengthMismatch {
            expected: n + params.l_max(),
            actual: len,
        });
    }
    let l_cpp = (len - n) as i128;
    let mut out = TimeSignal::zeros(len);
    for path in profile.paths() {
        for j in path.l..len {
            let t = j as i128 - l_cpp;
            let doppler = cis(-params.bin_turns(path.alpha as i128 * t));
            out[j] += path.h * doppler * s_cpp[j - path.l];
        }
    }
    Ok(out)
}

/// Adds circular complex Gaussian noise of variance `noise_var` per sample.
pub fn add_awgn(r: &mut [Complex64], noise_var: f64, rng: &mut impl Rng) -> Result<()> {
    if !(noise_var >= 0.0) {
        return Err(AfdmError::InvalidArgument(format!(
            "noise variance {noise_var} must be non-negative"
        )));
    }
    if noise_var > 0.0 {
        for v in r.iter_mut() {
            *v += complex_gaussian(rng, noise_var);
        }
    }
    Ok(())
}

/// Time-domain channel: all paths plus white noise.
pub fn apply_channel(
    s_cpp: &TimeSignal,
    profile: &DDProfile,
    params: &AfdmParams,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<TimeSignal> {
    if !(noise_var >= 0.0) {
        return Err(AfdmError::InvalidArgument(format!(
            "noise variance {noise_var} must be non-negative"
        )));
    }
    let mut out = propagate(s_cpp, profile, params)?;
    add_awgn(&mut out, noise_var, rng)?;
    Ok(out)
}

/// Tapped power-delay profile in sample units.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    taps: Vec<(usize, f64)>,
}

impl PowerDelayProfile {
    /// Several taps may share one sample delay.
    pub fn new(taps: Vec<(usize, f64)>) -> Result<Self> {
        if taps.is_empty() {
            return Err(AfdmError::InvalidProfile("power-delay profile is empty".into()));
        }
        if let Some((_, p)) = taps.iter().find(|(_, p)| !p.is_finite()) {
            return Err(AfdmError::InvalidProfile(format!("tap power {p} dB is not finite")));
        }
        Ok(PowerDelayProfile { taps })
    }

    /// Extended Vehicular A powers with the nine taps folded onto sample
    /// delays 0, 1 and 2.
    pub fn eva() -> Self {
        PowerDelayProfile {
            taps: vec![
                (0, 0.0),
                (0, -1.5),
                (0, -1.4),
                (1, -3.6),
                (1, -0.6),
                (1, -9.1),
                (2, -7.0),
                (2, -12.0),
                (2, -16.9),
            ],
        }
    }

    pub fn taps(&self) -> &[(usize, f64)] {
        &self.taps
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.0).max().unwrap_or(0)
    }

    /// Linear tap powers scaled to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps.iter().map(|t| 10f64.powf(t.1 / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }
}

/// Integer Jakes Doppler `round(alpha_max cos theta)`, ties away from zero.
pub fn jakes_doppler(theta: f64, alpha_max: usize) -> i64 {
    let a = alpha_max as f64;
    (a * theta.cos()).round().clamp(-a, a) as i64
}

/// Draws one random profile: a Jakes Doppler and a Rayleigh gain per tap.
/// Taps landing on the same `(l, alpha)` are merged by adding gains.
pub fn generate_profile(
    pdp: &PowerDelayProfile,
    params: &AfdmParams,
    rng: &mut impl Rng,
) -> Result<DDProfile> {
    if pdp.max_delay() > params.l_max() {
        return Err(AfdmError::InvalidProfile(format!(
            "tap delay {} exceeds l_max = {}",
            pdp.max_delay(),
            params.l_max()
        )));
    }
    let angle = Uniform::new_inclusive(-PI, PI).expect("finite bounds");
    let mut paths: Vec<ChannelPath> = Vec::with_capacity(pdp.taps().len());
    for (&(l, _), power) in pdp.taps().iter().zip(pdp.normalized_powers()) {
        let alpha = jakes_doppler(angle.sample(rng), params.alpha_max());
        let h = complex_gaussian(rng, power);
        match paths.iter_mut().find(|p| p.l == l && p.alpha == alpha) {
            Some(p) => p.h += h,
            None => paths.push(ChannelPath::new(l, alpha, h)),
        }
    }
    Ok(DDProfile::new(paths, params)?.sorted())
}
