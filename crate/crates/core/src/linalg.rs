//! Dense-free linear solvers: Thomas algorithm for tridiagonal systems,
//! banded Cholesky for the symmetric positive definite triangle Laplacian,
//! and conjugate gradients for systems too large to factor.

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are
/// ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Solves `A x = rhs` without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.lower[i] * c[i - 1];
            }
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Solver(format!("zero pivot in row {i}")));
            }
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            d[i] = if i == 0 {
                rhs[0] / denom
            } else {
                (rhs[i] - self.lower[i] * d[i - 1]) / denom
            };
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Symmetric banded matrix, lower band stored row-wise:
/// `band[i][k]` holds `A[i][i - bandwidth + k]`.
#[derive(Debug, Clone)]
pub struct SymmetricBanded {
    n: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl SymmetricBanded {
    pub fn new(n: usize, bandwidth: usize) -> Self {
        SymmetricBanded {
            n,
            bandwidth,
            band: vec![0.0; n * (bandwidth + 1)],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (self.bandwidth - (i - j))
    }

    /// Adds `v` to `A[i][j]` (and, implicitly, `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bandwidth, "entry ({i},{j}) outside band");
        let s = self.slot(i, j);
        self.band[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.band[self.slot(i, j)]
        }
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let bw = self.bandwidth;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.band[self.slot(i, j)];
                for k in k0..j {
                    s -= self.band[self.slot(i, k)] * self.band[self.slot(j, k)];
                }
                let slot = self.slot(i, j);
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::Solver(format!(
                            "matrix not positive definite at row {i}"
                        )));
                    }
                    self.band[slot] = s.sqrt();
                } else {
                    self.band[slot] = s / self.band[self.slot(j, j)];
                }
            }
        }
        Ok(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    factor: SymmetricBanded,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bandwidth);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.band[l.slot(i, k)] * y[k];
            }
            y[i] = s / l.band[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= l.band[l.slot(k, i)] * y[k];
            }
            y[i] = s / l.band[l.slot(i, i)];
        }
        y
    }
}

/// Conjugate gradients for an SPD operator given as a closure.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let norm_b = dot(rhs, rhs).sqrt();
    if norm_b == 0.0 {
        return Ok(x);
    }
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= rel_tol * norm_b {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::Solver(format!(
        "conjugate gradient did not reach {rel_tol:e} in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_poisson_stencil() {
        let n = 9;
        let mut a = Tridiagonal::new(n);
        for i in 0..n {
            a.lower[i] = -1.0;
            a.diag[i] = 2.0;
            a.upper[i] = -1.0;
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = Tridiagonal::new(3);
        assert!(a.solve(&[1.0, 1.0, 1.0]).is_err());
    }

    fn banded_test_matrix(n: usize, bw: usize) -> SymmetricBanded {
        let mut a = SymmetricBanded::new(n, bw);
        for i in 0..n {
            a.add(i, i, 4.0 + i as f64 * 0.01);
            if i >= 1 {
                a.add(i, i - 1, -1.0);
            }
            if i >= bw {
                a.add(i, i - bw, -1.0);
            }
        }
        a
    }

    #[test]
    fn banded_cholesky_and_cg_agree() {
        let (n, bw) = (60, 7);
        let a = banded_test_matrix(n, bw);
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j) * x_true[j]).sum())
            .collect();
        let x = a.clone().cholesky().unwrap().solve(&b);
        let y = conjugate_gradient(
            |v, out| {
                for i in 0..n {
                    out[i] = (0..n).map(|j| a.get(i, j) * v[j]).sum();
                }
            },
            &b,
            1e-13,
            1000,
        )
        .unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-11);
            assert!((y[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = SymmetricBanded::new(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}
