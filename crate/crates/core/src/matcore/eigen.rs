//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

use super::{Matrix, SymMatrix};

pub const DEFAULT_MAX_SWEEPS: usize = 64;

/// Orthogonal factor `q` (eigenvectors as columns) and eigenvalues sorted
/// descending, so that `qᵀ G q = diag(eigenvalues)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub q: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.from_eigenbasis(&Matrix::from_diag(&self.eigenvalues))
    }

    /// `Q diag(f(λ_i)) Qᵀ`, symmetrized.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let diag: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.assemble(&diag)
    }

    /// `Q diag(values) Qᵀ`, symmetrized.
    pub fn assemble(&self, values: &[f64]) -> SymMatrix {
        assert_eq!(values.len(), self.dim(), "one value per eigenvector");
        let m = self.from_eigenbasis(&Matrix::from_diag(values));
        super::sym_part(&m)
    }

    /// Same eigenvectors, eigenvalues replaced by `f(λ_i)`. The order of
    /// the new eigenvalues is not re-sorted.
    pub fn with_eigenvalues(&self, f: impl Fn(f64) -> f64) -> EigenDecomposition {
        EigenDecomposition {
            q: self.q.clone(),
            eigenvalues: self.eigenvalues.iter().map(|&l| f(l)).collect(),
        }
    }

    /// `Qᵀ X Q`.
    pub fn to_eigenbasis(&self, x: &Matrix) -> Matrix {
        &(&self.q.transpose() * x) * &self.q
    }

    /// `Q Y Qᵀ`.
    pub fn from_eigenbasis(&self, y: &Matrix) -> Matrix {
        &(&self.q * y) * &self.q.transpose()
    }

    /// `‖QᵀQ − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let qtq = &self.q.transpose() * &self.q;
        (&qtq - &Matrix::identity(self.dim())).frobenius_norm()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps continue until the off-diagonal mass reaches rounding level. If
/// that does not happen within [`DEFAULT_MAX_SWEEPS`] the result is still
/// accepted when the off-diagonal norm is below `tol · ‖S‖_F`; otherwise
/// [`Error::EigenNoConvergence`] is returned.
pub fn eigendecompose_symmetric(s: &SymMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("eigensolver tolerance must be positive, got {tol}")));
    }
    jacobi(s, tol, DEFAULT_MAX_SWEEPS)
}

pub(crate) fn jacobi(s: &SymMatrix, tol: f64, max_sweeps: usize) -> Result<EigenDecomposition> {
    let n = s.dim();
    let mut a = s.as_slice().to_vec();
    let mut v = Matrix::identity(n).as_slice().to_vec();
    let norm = s.frobenius_norm();
    let target = f64::EPSILON * norm;

    let mut off = off_diagonal_norm(&a, n);
    let mut sweeps = 0;
    while off > target && off > 0.0 {
        if sweeps == max_sweeps {
            if off <= tol * norm {
                break;
            }
            return Err(Error::EigenNoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        // threshold pass for the first few sweeps, as in the classical scheme
        let threshold = if sweeps < 4 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
                rotated = true;
            }
        }
        off = off_diagonal_norm(&a, n);
        if !rotated && threshold == 0.0 {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let q = Matrix::from_fn(n, |row, col| v[row * n + order[col]]);
    Ok(EigenDecomposition { q, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
        let m = Matrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        crate::matcore::sym_part(&m)
    }

    #[test]
    fn identity_and_diagonal() {
        let e = eigendecompose_symmetric(&SymMatrix::identity(3), 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(e.orthogonality_defect() <= 1e-12);

        let e = eigendecompose_symmetric(&SymMatrix::from_diag(&[2.0, 7.0, 5.0]), 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![7.0, 5.0, 2.0]);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // x^2 - 4x + 3 = (x - 3)(x - 1)
        let s = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = eigendecompose_symmetric(&s, 1e-12).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_tol() {
        assert!(eigendecompose_symmetric(&SymMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_sym(&mut rng, 6);
        match jacobi(&s, 1e-300, 1) {
            Err(Error::EigenNoConvergence { sweeps: 1, off_norm }) => assert!(off_norm > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reconstruction_over_random_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10_000 {
            let d = [2, 3, 5][trial % 3];
            let s = random_sym(&mut rng, d);
            let e = eigendecompose_symmetric(&s, 1e-12).unwrap();
            let resid = (&e.reconstruct() - &s).frobenius_norm();
            assert!(resid <= 1e-12 * (1.0 + s.frobenius_norm()), "trial {trial}: {resid:e}");
            assert!(e.orthogonality_defect() <= 1e-12);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvalues_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = random_sym(&mut rng, 5);
            let perm = [3, 0, 4, 1, 2];
            let p = SymMatrix::new(Matrix::from_fn(5, |i, j| s.get(perm[i], perm[j]))).unwrap();
            let a = eigendecompose_symmetric(&s, 1e-12).unwrap().eigenvalues;
            let b = eigendecompose_symmetric(&p, 1e-12).unwrap().eigenvalues;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
