//! System parameterization: subcarrier count, delay/Doppler spread and the
//! two chirp rates.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{AfdmError, Result};

/// AFDM system parameters.
///
/// `c1 = (2 alpha_max + 1) / (2N)` is held as an exact rational so that chirp
/// phases can be reduced modulo one full turn in integer arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct AfdmParams {
    n: usize,
    alpha_max: usize,
    l_max: usize,
    c2: f64,
    q: usize,
}

impl AfdmParams {
    /// Builds parameters with `c2 = 1 / (2N^2)` unless `c2` is given.
    pub fn new(n: usize, alpha_max: usize, l_max: usize, c2: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(AfdmError::InvalidParams("N must be positive".into()));
        }
        let q = 2 * l_max * alpha_max + 2 * alpha_max + l_max;
        if q + 1 > n {
            return Err(AfdmError::InvalidParams(format!(
                "Q + 1 = {} exceeds N = {n}; the frame cannot host one pilot block",
                q + 1
            )));
        }
        let limit = 1.0 / (2.0 * n as f64);
        let c2 = match c2 {
            None => 1.0 / (2.0 * (n as f64) * (n as f64)),
            Some(c) if !c.is_finite() => {
                return Err(AfdmError::InvalidParams(format!("c2 = {c} is not finite")))
            }
            Some(c) if c >= limit => {
                return Err(AfdmError::InvalidParams(format!(
                    "c2 = {c} must be below 1/(2N) = {limit}"
                )))
            }
            Some(c) => c,
        };
        Ok(AfdmParams {
            n,
            alpha_max,
            l_max,
            c2,
            q,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha_max(&self) -> usize {
        self.alpha_max
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Number of extra DAFT-domain positions one symbol can spread into.
    pub fn q(&self) -> usize {
        self.q
    }

    /// `2 N c1 = 2 alpha_max + 1`, the DAFT-domain shift per unit of delay.
    pub fn delay_stride(&self) -> usize {
        2 * self.alpha_max + 1
    }

    pub fn c1(&self) -> f64 {
        self.delay_stride() as f64 / (2.0 * self.n as f64)
    }

    /// Fractional part of `c1 * k` computed exactly.
    pub(crate) fn c1_turns(&self, k: i128) -> f64 {
        let den = 2 * self.n as i128;
        (self.delay_stride() as i128 * k).rem_euclid(den) as f64 / den as f64
    }

    /// Fractional part of `k / N` computed exactly.
    pub(crate) fn bin_turns(&self, k: i128) -> f64 {
        let n = self.n as i128;
        k.rem_euclid(n) as f64 / n as f64
    }

    pub(crate) fn c2_turns(&self, k: i128) -> f64 {
        (self.c2 * k as f64).fract()
    }
}

/// Unit phasor `exp(i 2 pi turns)`.
pub(crate) fn cis(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * turns)
}
