//! Inverse and forward discrete affine Fourier transform (IDAFT/DAFT) and the
//! chirp-periodic prefix.
//!
//! Both transforms are evaluated as direct `O(N^2)` sums with a precomputed
//! twiddle table. With `Λc = diag(exp(-i 2π c n²))` and `F` the unitary DFT,
//! `idaft = Λc1ᴴ Fᴴ Λc2ᴴ` and `daft = Λc2 F Λc1`.

use std::ops::{Deref, DerefMut};

use num_complex::Complex64;

use crate::error::{AfdmError, Result};
use crate::params::{cis, AfdmParams};

/// Time-domain samples, with or without the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal(pub Vec<Complex64>);

/// One frame of `N` DAFT-domain symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DaftFrame(pub Vec<Complex64>);

macro_rules! deref_samples {
    ($t:ty) => {
        impl Deref for $t {
            type Target = [Complex64];
            fn deref(&self) -> &[Complex64] {
                &self.0
            }
        }

        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [Complex64] {
                &mut self.0
            }
        }

        impl From<Vec<Complex64>> for $t {
            fn from(v: Vec<Complex64>) -> Self {
                Self(v)
            }
        }

        impl $t {
            pub fn zeros(len: usize) -> Self {
                Self(vec![Complex64::new(0.0, 0.0); len])
            }

            pub fn into_inner(self) -> Vec<Complex64> {
                self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }
        }
    };
}

deref_samples!(TimeSignal);
deref_samples!(DaftFrame);

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(AfdmError::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// `exp(i 2π c1 n²)` for n = 0..N.
fn chirp1(params: &AfdmParams) -> Vec<Complex64> {
    (0..params.n() as i128)
        .map(|n| cis(params.c1_turns(n * n)))
        .collect()
}

/// `exp(i 2π c2 m²)` for m = 0..N.
fn chirp2(params: &AfdmParams) -> Vec<Complex64> {
    (0..params.n() as i128)
        .map(|m| cis(params.c2_turns(m * m)))
        .collect()
}

/// `exp(i 2π k / N)` for k = 0..N.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| cis(k as f64 / n as f64))
        .collect()
}

/// Unitary DFT with sign `+1` (inverse) or `-1` (forward), direct evaluation.
fn dft(input: &[Complex64], tw: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = 0usize;
            for x in input {
                let w = tw[idx];
                acc += x * if inverse { w } else { w.conj() };
                idx += k;
                if idx >= n {
                    idx -= n;
                }
            }
            acc * scale
        })
        .collect()
}

/// Maps DAFT-domain symbols to `N` time-domain samples.
pub fn idaft(x: &DaftFrame, params: &AfdmParams) -> Result<TimeSignal> {
    let n = params.n();
    check_len(x.len(), n)?;
    let c1 = chirp1(params);
    let c2 = chirp2(params);
    let pre: Vec<Complex64> = x.iter().zip(&c2).map(|(x, c)| x * c).collect();
    let mut s = dft(&pre, &twiddles(n), true);
    for (s, c) in s.iter_mut().zip(&c1) {
        *s *= c;
    }
    Ok(TimeSignal(s))
}

/// Maps `N` received time-domain samples back to the DAFT domain.
pub fn daft(r: &TimeSignal, params: &AfdmParams) -> Result<DaftFrame> {
    let n = params.n();
    check_len(r.len(), n)?;
    let c1 = chirp1(params);
    let c2 = chirp2(params);
    let pre: Vec<Complex64> = r.iter().zip(&c1).map(|(r, c)| r * c.conj()).collect();
    let mut y = dft(&pre, &twiddles(n), false);
    for (y, c) in y.iter_mut().zip(&c2) {
        *y *= c.conj();
    }
    Ok(DaftFrame(y))
}

/// Phase of the chirp-periodic extension: `s[-k] = s[N-k] * cpp_phase(k)`.
pub(crate) fn cpp_phase(params: &AfdmParams, k: usize) -> Complex64 {
    let n = params.n() as i128;
    let k = k as i128;
    cis(-params.c1_turns(n * n - 2 * n * k))
}

/// Prepends `l_cpp` chirp-periodic prefix samples.
pub fn add_cpp(s: &TimeSignal, l_cpp: usize, params: &AfdmParams) -> Result<TimeSignal> {
    let n = params.n();
    check_len(s.len(), n)?;
    if l_cpp < params.l_max() {
        return Err(AfdmError::InvalidArgument(format!(
            "prefix length {l_cpp} is shorter than the maximum delay {}",
            params.l_max()
        )));
    }
    if l_cpp > n {
        return Err(AfdmError::InvalidArgument(format!(
            "prefix length {l_cpp} exceeds the frame length {n}"
        )));
    }
    let mut out = Vec::with_capacity(n + l_cpp);
    for k in (1..=l_cpp).rev() {
        out.push(s[n - k] * cpp_phase(params, k));
    }
    out.extend_from_slice(s);
    Ok(TimeSignal(out))
}

/// Drops the first `l_cpp` samples of an `N + l_cpp` sample block.
pub fn remove_cpp(r: &TimeSignal, l_cpp: usize, params: &AfdmParams) -> Result<TimeSignal> {
    check_len(r.len(), params.n() + l_cpp)?;
    Ok(TimeSignal(r[l_cpp..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn random_frame(n: usize, rng: &mut impl Rng) -> DaftFrame {
        DaftFrame(
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    /// Independent double loop straight from the synthesis sum.
    fn idaft_direct(x: &[Complex64], p: &AfdmParams) -> Vec<Complex64> {
        let n = p.n();
        let (c1, c2) = (p.c1(), p.c2());
        (0..n)
            .map(|t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, xm) in x.iter().enumerate() {
                    let (mf, tf) = (m as f64, t as f64);
                    let ph = TAU * (c2 * mf * mf + mf * tf / n as f64 + c1 * tf * tf);
                    acc += xm * Complex64::from_polar(1.0, ph);
                }
                acc / (n as f64).sqrt()
            })
            .collect()
    }

    fn max_abs(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zeros_map_to_zeros() {
        let p = AfdmParams::new(16, 1, 1, None).unwrap();
        let z = DaftFrame::zeros(16);
        assert!(idaft(&z, &p).unwrap().iter().all(|s| s.norm() == 0.0));
        let z = TimeSignal::zeros(16);
        assert!(daft(&z, &p).unwrap().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn impulse_is_a_chirp() {
        let p = AfdmParams::new(64, 2, 1, None).unwrap();
        let mut x = DaftFrame::zeros(64);
        x[0] = Complex64::new(1.0, 0.0);
        let s = idaft(&x, &p).unwrap();
        let chirp: Vec<Complex64> = (0..64)
            .map(|n| Complex64::from_polar(1.0 / 8.0, TAU * p.c1() * (n * n) as f64))
            .collect();
        assert!(max_abs(&s, &chirp) < 1e-12);
        assert!(max_abs(&s, &idaft_direct(&x, &p)) < 1e-12);

        let back = daft(&TimeSignal(chirp), &p).unwrap();
        assert!((back[0] - 1.0).norm() < 1e-12);
        assert!(back[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn matches_direct_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, a, l) in &[(8, 0, 0), (31, 1, 2), (64, 4, 2)] {
            let p = AfdmParams::new(n, a, l, None).unwrap();
            let x = random_frame(n, &mut rng);
            assert!(max_abs(&idaft(&x, &p).unwrap(), &idaft_direct(&x, &p)) < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &n in &[8usize, 64, 256] {
            let p = AfdmParams::new(n, 1, 1, None).unwrap();
            for _ in 0..100 {
                let x = random_frame(n, &mut rng);
                let s = idaft(&x, &p).unwrap();
                let back = daft(&s, &p).unwrap();
                assert!(max_abs(&back, &x) < 1e-10);
                let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
                let es: f64 = s.iter().map(|v| v.norm_sqr()).sum();
                assert!((ex - es).abs() / ex < 1e-10);
            }
        }
    }

    #[test]
    fn length_mismatch() {
        let p = AfdmParams::new(16, 1, 1, None).unwrap();
        assert!(matches!(
            idaft(&DaftFrame::zeros(15), &p),
            Err(AfdmError::LengthMismatch { expected: 16, actual: 15 })
        ));
        assert!(daft(&TimeSignal::zeros(17), &p).is_err());
        assert!(remove_cpp(&TimeSignal::zeros(17), 2, &p).is_err());
    }

    #[test]
    fn prefix_is_cyclic_for_even_n() {
        let p = AfdmParams::new(64, 4, 2, None).unwrap();
        for k in 1..=8 {
            assert!((cpp_phase(&p, k) - 1.0).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = idaft(&random_frame(64, &mut rng), &p).unwrap();
        let out = add_cpp(&s, 4, &p).unwrap();
        assert_eq!(out.len(), 68);
        assert!(max_abs(&out[..4], &s[60..]) < 1e-12);
    }

    #[test]
    fn prefix_continues_the_chirp_for_odd_n() {
        // The synthesis sum evaluated at negative n is the chirp-periodic
        // extension; the prefix must reproduce it.
        let p = AfdmParams::new(15, 1, 2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_frame(15, &mut rng);
        let s = idaft(&x, &p).unwrap();
        let out = add_cpp(&s, 3, &p).unwrap();
        let (c1, c2) = (p.c1(), p.c2());
        for k in 1..=3usize {
            let t = -(k as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, xm) in x.iter().enumerate() {
                let mf = m as f64;
                acc += xm * Complex64::from_polar(1.0, TAU * (c2 * mf * mf + mf * t / 15.0 + c1 * t * t));
            }
            acc /= 15f64.sqrt();
            assert!((out[3 - k] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn prefix_bounds() {
        let p = AfdmParams::new(16, 1, 2, None).unwrap();
        let s = TimeSignal::zeros(16);
        assert!(add_cpp(&s, 1, &p).is_err());
        assert!(add_cpp(&s, 17, &p).is_err());
        let p0 = AfdmParams::new(16, 1, 0, None).unwrap();
        let s: TimeSignal = (0..16).map(|k| Complex64::new(k as f64, 0.0)).collect::<Vec<_>>().into();
        assert_eq!(add_cpp(&s, 0, &p0).unwrap(), s);
        assert_eq!(remove_cpp(&s, 0, &p0).unwrap(), s);
    }

    #[test]
    fn remove_keeps_tail() {
        let r: TimeSignal = (0..10).map(|k| Complex64::new(k as f64, 0.0)).collect::<Vec<_>>().into();
        let p = AfdmParams::new(8, 0, 0, None).unwrap();
        let out = remove_cpp(&r, 2, &p).unwrap();
        assert_eq!(&out[..], &r[2..]);
    }

    proptest::proptest! {
        #[test]
        fn cpp_round_trip(seed in 0u64..1000, l in 2usize..6) {
            let p = AfdmParams::new(32, 1, 2, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = idaft(&random_frame(32, &mut rng), &p).unwrap();
            let back = remove_cpp(&add_cpp(&s, l, &p).unwrap(), l, &p).unwrap();
            proptest::prop_assert_eq!(back, s);
        }
    }
}
