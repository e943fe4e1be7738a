//! Small dense linear-algebra helpers for symmetric matrices.
//!
//! Covariances at desk scale are tiny (D up to a few hundred), so plain
//! row-major `Vec<f64>` storage and textbook algorithms are enough.

use crate::error::{Error, Result};

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &SymMatrix, factor: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * factor;
        }
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Lower-triangular Cholesky factor of a positive semidefinite matrix.
///
/// Exact zero pivots are tolerated (rank-deficient covariances of small
/// classes): when a pivot is within `tol` of zero and the rest of its column
/// is too, the column of the factor is set to zero. A pivot below `-tol`
/// means the matrix is not PSD and the factorization fails.
pub fn cholesky_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let n = m.dim;
    let scale = m.trace().abs().max(1.0) / n.max(1) as f64;
    let tol = 1e-12 * scale;
    let mut l = SymMatrix::zeros(n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d > tol {
            let root = d.sqrt();
            l.set(j, j, root);
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / root);
            }
        } else if d >= -tol {
            // Semidefinite direction: the whole column must vanish.
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if s.abs() > tol.sqrt() * scale.max(1.0) {
                    return Err(Error::CholeskyFailed);
                }
            }
        } else {
            return Err(Error::CholeskyFailed);
        }
    }
    Ok(l)
}

/// Cholesky with a ridge fallback: on failure, retries once with
/// `1e-8 * (trace/D) * I` added to the diagonal.
pub fn cholesky_with_ridge(m: &SymMatrix) -> Result<SymMatrix> {
    match cholesky_psd(m) {
        Ok(l) => Ok(l),
        Err(_) => {
            let ridge = 1e-8 * m.trace() / m.dim.max(1) as f64;
            let mut fixed = m.clone();
            for i in 0..m.dim {
                fixed.set(i, i, fixed.get(i, i) + ridge);
            }
            cholesky_psd(&fixed)
        }
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
///
/// Used by tests to check positive semidefiniteness; accuracy well beyond
/// the 1e-9 tolerances involved.
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim;
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.trace().abs()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    a.diagonal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        // A = L0 L0^T for a fixed lower-triangular L0.
        let l0 = SymMatrix::from_rows(vec![
            vec![2.0, 0.0, 0.0],
            vec![0.5, 1.5, 0.0],
            vec![-1.0, 0.25, 0.75],
        ])
        .unwrap();
        let n = 3;
        let mut a = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += l0.get(i, k) * l0.get(j, k);
                }
                a.set(i, j, s);
            }
        }
        let l = cholesky_psd(&a).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += l.get(i, k) * l.get(j, k);
                }
                assert!((s - a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_of_zero_matrix_is_zero() {
        let z = SymMatrix::zeros(4);
        let l = cholesky_psd(&z).unwrap();
        assert!(l.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = SymMatrix::identity(2);
        m.set(1, 1, -1.0);
        assert!(cholesky_psd(&m).is_err());
        // Ridge cannot fix a genuinely indefinite matrix either.
        assert!(cholesky_with_ridge(&m).is_err());
    }

    #[test]
    fn jacobi_eigenvalues_of_diagonal() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 0, 3.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 2.0);
        let mut ev = symmetric_eigenvalues(&m);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 2.0).abs() < 1e-12);
        assert!((ev[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_known_2x2() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 2.0);
        let mut ev = symmetric_eigenvalues(&m);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }
}
