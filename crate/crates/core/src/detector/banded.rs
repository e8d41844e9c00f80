//! Cholesky factorization of Hermitian positive-definite band matrices.

use num_complex::Complex64;

use crate::error::{AfdmError, Result};

/// Lower band of a Hermitian matrix, `bw` sub-diagonals wide.
#[derive(Debug, Clone)]
pub struct HermitianBand {
    n: usize,
    bw: usize,
    /// Row `i` holds columns `i - bw ..= i` at offsets `0 ..= bw`.
    data: Vec<Complex64>,
}

impl HermitianBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        HermitianBand {
            n,
            bw,
            data: vec![Complex64::new(0.0, 0.0); n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` at `(i, j)` with `j <= i`.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += v;
        }
    }

    /// In-place `L Lᴴ` factorization followed by the two triangular solves.
    pub fn solve(mut self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.data[self.idx(i, j)];
                let kl = lo.max(j.saturating_sub(bw));
                for k in kl..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)].conj();
                }
                if i == j {
                    if !(s.re > 0.0) || !s.re.is_finite() {
                        return Err(AfdmError::Singular(i));
                    }
                    let k = self.idx(i, i);
                    self.data[k] = Complex64::new(s.re.sqrt(), 0.0);
                } else {
                    let d = self.data[self.idx(j, j)].re;
                    let k = self.idx(i, j);
                    self.data[k] = s / d;
                }
            }
        }
        // L z = b
        let mut z = rhs.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[self.idx(i, k)] * z[k];
            }
            z[i] = s / self.data[self.idx(i, i)].re;
        }
        // Lᴴ x = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.data[self.idx(k, i)].conj() * z[k];
            }
            z[i] = s / self.data[self.idx(i, i)].re;
        }
        Ok(z)
    }
}
