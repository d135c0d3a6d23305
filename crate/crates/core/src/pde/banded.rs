//! Square band matrices with equal lower and upper bandwidth, and an LU
//! factorization without pivoting for the complex shifted systems of the
//! Crank-Nicolson step (their Hermitian part is positive definite).

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Banded<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Copy + Default + std::ops::AddAssign> Banded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::default(); n * (2 * bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + j + self.bw - i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.bw {
            T::default()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Column range `[lo, hi)` of row `i` inside the band.
    #[inline]
    pub fn cols(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.bw), (i + self.bw + 1).min(self.n))
    }

    /// Zeroes row `i` and column `i`.
    pub fn clear_cross(&mut self, i: usize) {
        let (lo, hi) = self.cols(i);
        for j in lo..hi {
            self.set(i, j, T::default());
            self.set(j, i, T::default());
        }
    }
}

impl Banded<f64> {
    /// `out = A x` for a complex vector.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.cols(i);
            let row = &self.data[i * (2 * self.bw + 1)..];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..hi {
                acc += x[j] * row[j + self.bw - i];
            }
            *o = acc;
        }
    }

    /// Largest absolute row sum of `D^{-1} A`.
    pub fn gershgorin_scaled(&self, diag: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.cols(i);
                (lo..hi).map(|j| self.get(i, j).abs()).sum::<f64>() / diag[i]
            })
            .fold(0.0, f64::max)
    }
}

/// In-place LU factors of a complex band matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: Banded<Complex64>,
    inv_diag: Vec<Complex64>,
}

impl BandedLu {
    pub fn factor(mut m: Banded<Complex64>) -> Result<Self> {
        let n = m.n;
        let bw = m.bw;
        for k in 0..n {
            let pivot = m.get(k, k);
            if !(pivot.norm() > 0.0) || !pivot.is_finite() {
                return Err(Error::NonConvergence(format!("zero pivot in banded LU at row {k}")));
            }
            let hi = (k + bw + 1).min(n);
            for i in k + 1..hi {
                let l = m.get(i, k) / pivot;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                m.set(i, k, l);
                for j in k + 1..hi {
                    let v = m.get(k, j);
                    let w = m.idx(i, j);
                    m.data[w] -= l * v;
                }
            }
        }
        let inv_diag = (0..n).map(|i| m.get(i, i).inv()).collect();
        Ok(Self { m, inv_diag })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.m.n;
        let bw = self.m.bw;
        let width = 2 * bw + 1;
        let data = &self.m.data;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &data[i * width + bw - i..];
            let mut acc = b[i];
            for j in lo..i {
                acc -= row[j] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let row = &data[i * width + bw - i..];
            let mut acc = b[i];
            for j in i + 1..hi {
                acc -= row[j] * b[j];
            }
            b[i] = acc * self.inv_diag[i];
        }
    }
}
