//! Banded LU factorization with partial pivoting.
//!
//! The implicit flow steps produce pentadiagonal systems and the Newton
//! refinement an interleaved two-component system of bandwidth four, plus
//! dense constraint borders handled by the caller via Schur complements.
//! Storage is the standard band layout: element (i, j) lives at storage
//! row kl + ku + i - j of column j, with kl extra rows for pivot fill-in.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// (2kl + ku + 1) storage rows by n columns, column-major.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let rows = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; rows * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i, "({i},{j}) outside band");
        (self.kl + self.ku + i - j) * self.n + j
    }

    /// True when (i, j) lies inside the writable band (including fill-in
    /// rows above the upper band).
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku + self.kl >= j && j + self.kl >= i
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// y = A x (band part only), for residual checks.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let jlo = i.saturating_sub(self.kl);
            let jhi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in jlo..=jhi {
                acc += self.data[self.idx(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// In-place LU with partial pivoting; the upper bandwidth grows by kl.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut piv = k;
            let mut pmax = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > pmax {
                    piv = i;
                    pmax = v;
                }
            }
            if !(pmax > 0.0) || !pmax.is_finite() {
                return Err(Error::LinearSolve(format!(
                    "zero or non-finite pivot at column {k}"
                )));
            }
            ipiv[k] = piv;
            let last_col = (k + ku + kl).min(n - 1);
            if piv != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(piv, j);
                    self.data.swap(a, b);
                }
            }
            let dkk = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let m = self.data[ik] / dkk;
                self.data[ik] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let akj = self.data[self.idx(k, j)];
                        if akj != 0.0 {
                            let t = self.idx(i, j);
                            self.data[t] -= m * akj;
                        }
                    }
                }
            }
        }
        Ok(BandLu { mat: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    mat: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.mat.n
    }

    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        let n = self.mat.n;
        if b.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: b.len() });
        }
        let (kl, ku) = (self.mat.kl, self.mat.ku);
        for k in 0..n {
            let piv = self.ipiv[k];
            if piv != k {
                b.swap(k, piv);
            }
            let last_row = (k + kl).min(n - 1);
            for i in k + 1..=last_row {
                b[i] -= self.mat.data[self.mat.idx(i, k)] * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + ku + kl).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=last_col {
                acc -= self.mat.data[self.mat.idx(k, j)] * b[j];
            }
            b[k] = acc / self.mat.data[self.mat.idx(k, k)];
        }
        Ok(())
    }
}
