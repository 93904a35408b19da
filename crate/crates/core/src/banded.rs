//! Gaussian elimination with partial pivoting for complex banded systems.

use crate::error::{Error, Result};
use crate::model::C64;

/// A square matrix with `lower` sub-diagonals and `upper` super-diagonals,
/// stored row-wise with room for the fill-in produced by row pivoting.
pub(crate) struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![C64::new(0.0, 0.0); n * width],
        }
    }

    #[inline]
    fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.lower >= row && col <= row + self.lower + self.upper);
        row * self.width + (col + self.lower - row)
    }

    pub fn set(&mut self, row: usize, col: usize, v: C64) {
        assert!(
            col + self.lower >= row && col <= row + self.upper,
            "entry ({row}, {col}) outside the band"
        );
        let i = self.index(row, col);
        self.data[i] = v;
    }

    pub fn add(&mut self, row: usize, col: usize, v: C64) {
        assert!(
            col + self.lower >= row && col <= row + self.upper,
            "entry ({row}, {col}) outside the band"
        );
        let i = self.index(row, col);
        self.data[i] += v;
    }

    pub fn clear_row(&mut self, row: usize) {
        let start = row * self.width;
        self.data[start..start + self.width].fill(C64::new(0.0, 0.0));
    }

    /// Solve `A x = b`, consuming the matrix.
    pub fn solve(mut self, mut b: Vec<C64>) -> Result<Vec<C64>> {
        let n = self.n;
        let reach = self.lower + self.upper;
        for k in 0..n {
            let last_row = (k + self.lower).min(n - 1);
            let mut pivot = k;
            let mut best = self.data[self.index(k, k)].norm();
            for i in k + 1..=last_row {
                let v = self.data[self.index(i, k)].norm();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular);
            }
            let last_col = (k + reach).min(n - 1);
            if pivot != k {
                for j in k..=last_col {
                    let a = self.index(k, j);
                    let p = self.index(pivot, j);
                    self.data.swap(a, p);
                }
                b.swap(k, pivot);
            }
            let diag = self.data[self.index(k, k)];
            for i in k + 1..=last_row {
                let lik = self.index(i, k);
                let factor = self.data[lik] / diag;
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                self.data[lik] = C64::new(0.0, 0.0);
                for j in k + 1..=last_col {
                    let kj = self.data[self.index(k, j)];
                    let ij = self.index(i, j);
                    self.data[ij] -= factor * kj;
                }
                let bk = b[k];
                b[i] -= factor * bk;
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=last_col {
                s -= self.data[self.index(k, j)] * x[j];
            }
            x[k] = s / self.data[self.index(k, k)];
        }
        Ok(x)
    }
}
