//! Symmetric banded matrices with an in-place LDL^T factorization.

use nalgebra::{DMatrix, DVector};

/// Lower band of a symmetric `n x n` matrix with half-bandwidth `b`.
/// Row `i` stores columns `i - b ..= i` contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, b: usize) -> Self {
        SymBand {
            n,
            b,
            data: vec![0.0; n * (b + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // j <= i, i - j <= b
        i * (self.b + 1) + self.b + j - i
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.b {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    ///
    /// Panics if the entry lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.b, "entry ({i}, {j}) outside band {}", self.b);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn copy_from(&mut self, other: &SymBand) {
        debug_assert_eq!((self.n, self.b), (other.n, other.b));
        self.data.copy_from_slice(&other.data);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.b);
            for j in j0..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Factorizes in place; `None` if a pivot is (numerically) zero.
    pub fn factor(mut self) -> Option<LdlBand> {
        let n = self.n;
        let b = self.b;
        let w = b + 1;
        let scale = (0..n).map(|i| self.data[self.idx(i, i)].abs()).fold(0.0, f64::max);
        let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
        let mut d = vec![0.0; n];
        let mut ld = vec![0.0; w];
        for j in 0..n {
            let k0 = j.saturating_sub(b);
            let row_j = j * w + b - j;
            // ld[k - k0] = L[j][k] d[k]
            let mut djj = self.data[row_j + j];
            for k in k0..j {
                let ljk = self.data[row_j + k];
                ld[k - k0] = ljk * d[k];
                djj -= ljk * ld[k - k0];
            }
            if !(djj.abs() > tiny) {
                return None;
            }
            d[j] = djj;
            let i_end = (j + b).min(n - 1);
            for i in j + 1..=i_end {
                let row_i = i * w + b - i;
                let k_start = i.saturating_sub(b).max(k0);
                let mut s = self.data[row_i + j];
                for k in k_start..j {
                    s -= self.data[row_i + k] * ld[k - k0];
                }
                self.data[row_i + j] = s / djj;
            }
        }
        Some(LdlBand { l: self, d })
    }
}

/// `A = L D L^T` with unit lower band `L`.
#[derive(Debug, Clone)]
pub struct LdlBand {
    l: SymBand,
    d: Vec<f64>,
}

impl LdlBand {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let b = self.l.b;
        let w = b + 1;
        let data = &self.l.data;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let row_i = i * w + b - i;
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= data[row_i + k] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let row_i = i * w + b - i;
            for k in i.saturating_sub(b)..i {
                x[k] -= data[row_i + k] * xi;
            }
        }
        x
    }

    /// Number of negative pivots (inertia of the factorized matrix).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&d| d < 0.0).count()
    }
}

/// Dense LU fallback for matrices the unpivoted band factorization rejects.
pub fn dense_solve(a: &SymBand, rhs: &[f64]) -> Option<Vec<f64>> {
    let lu = a.to_dense().lu();
    lu.solve(&DVector::from_column_slice(rhs)).map(|x| x.as_slice().to_vec())
}
