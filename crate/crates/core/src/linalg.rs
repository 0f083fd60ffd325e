//! Banded symmetric positive definite factorization.

use crate::error::{Error, Result};

/// Cholesky factor `L` of a symmetric positive definite band matrix with
/// half-bandwidth `p`, stored row-wise: row `i` holds `L[i, i-p..=i]`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    p: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors the matrix whose lower-band entries are `entry(i, j)` for
    /// `i - p <= j <= i`.
    pub fn factor(n: usize, p: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = p + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let mut sum = entry(i, j);
                let k0 = j0.max(j.saturating_sub(p));
                for k in k0..j {
                    sum -= l[i * w + (k + p - i)] * l[j * w + (k + p - j)];
                }
                if j == i {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::LinearSolve(format!("matrix is not positive definite at row {i}")));
                    }
                    l[i * w + p] = sum.sqrt();
                } else {
                    l[i * w + (j + p - i)] = sum / l[j * w + p];
                }
            }
        }
        Ok(Self { n, p, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "right-hand side length mismatch");
        let (p, w) = (self.p, self.p + 1);
        for i in 0..self.n {
            let j0 = i.saturating_sub(p);
            let mut sum = x[i];
            for j in j0..i {
                sum -= self.l[i * w + (j + p - i)] * x[j];
            }
            x[i] = sum / self.l[i * w + p];
        }
        for i in (0..self.n).rev() {
            let mut sum = x[i];
            for k in i + 1..(i + p + 1).min(self.n) {
                sum -= self.l[k * w + (i + p - k)] * x[k];
            }
            x[i] = sum / self.l[i * w + p];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

/// `a + s b`
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
