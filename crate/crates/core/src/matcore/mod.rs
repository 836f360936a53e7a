//! Dense square matrices and their symmetric / skew / SPD refinements.
//!
//! [`Matrix`] is a plain value type (row-major `Vec<f64>`). The refinement
//! newtypes check their predicate once at construction and deref to the
//! underlying matrix, so every operation that accepts `&Matrix` also accepts
//! the refined types.

mod eigen;

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{eigendecompose_symmetric, EigenDecomposition, DEFAULT_MAX_SWEEPS};

/// Relative symmetry tolerance: `|a_ij - a_ji| <= SYM_TOL * (1 + max|a|)`.
pub const SYM_TOL: f64 = 1e-10;

/// Default eigensolver tolerance.
pub const EIG_TOL: f64 = 1e-12;

/// Relative positivity margin for SPD checks: `min λ > SPD_TOL * (1 + max|λ|)`.
pub const SPD_TOL: f64 = 1e-14;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. Rejects empty or non-square
    /// input and non-finite entries.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidShape("dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidShape(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / dim, col: k % dim });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidShape(format!(
                    "row {i} has {} entries, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds a matrix entry by entry. Panics if `f` yields a non-finite value.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self::new(dim, data).expect("from_fn produced an invalid matrix")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise (Schur/Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    /// `self^k` for `k >= 0` by repeated squaring.
    pub fn powi(&self, k: u32) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        result
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .unwrap();
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                for j in col..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
            }
        }
        det
    }

    /// Largest asymmetry `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6e}")).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

// Operator impls panic on dimension mismatch; the checked `try_*` / `matmul`
// methods are the fallible surface.
impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix addition")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix subtraction")
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson { dim: self.dim, rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.rows.len() != raw.dim {
            return Err(serde::de::Error::custom(format!(
                "dim is {} but {} rows given",
                raw.dim,
                raw.rows.len()
            )));
        }
        Matrix::from_rows(&raw.rows).map_err(serde::de::Error::custom)
    }
}

/// Checked matrix product.
pub fn multiply(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul(b)
}

/// `<U, V> = Tr(U V^T)`, the entrywise sum of products.
pub fn frobenius_dot(u: &Matrix, v: &Matrix) -> Result<f64> {
    u.check_dim(v)?;
    Ok(u.data.iter().zip(&v.data).map(|(a, b)| a * b).sum())
}

pub fn sym_part(a: &Matrix) -> SymMatrix {
    let t = a.transpose();
    SymMatrix((a + &t).scale(0.5))
}

pub fn skew_part(a: &Matrix) -> SkewMatrix {
    let t = a.transpose();
    SkewMatrix((a - &t).scale(0.5))
}

fn sym_tolerance(m: &Matrix) -> f64 {
    SYM_TOL * (1.0 + m.max_abs())
}

/// A symmetric matrix. Construction symmetrizes inputs whose asymmetry is
/// within [`SYM_TOL`] and rejects the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let tol = sym_tolerance(&m);
        let asym = m.asymmetry();
        if asym > tol {
            return Err(Error::NotSymmetric { asymmetry: asym, tolerance: tol });
        }
        Ok(sym_part(&m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(Matrix::identity(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diag(diag))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(Matrix::zeros(dim))
    }

    pub fn scale(&self, factor: f64) -> Self {
        SymMatrix(self.0.scale(factor))
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        eigendecompose_symmetric(self, EIG_TOL)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl TryFrom<Matrix> for SymMatrix {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}

/// A skew-symmetric matrix with an exactly zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix(Matrix);

impl SkewMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let tol = sym_tolerance(&m);
        let mut defect: f64 = 0.0;
        for i in 0..m.dim() {
            for j in i..m.dim() {
                defect = defect.max((m.get(i, j) + m.get(j, i)).abs());
            }
        }
        if defect > tol {
            return Err(Error::NotSkew { defect, tolerance: tol });
        }
        Ok(skew_part(&m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn zeros(dim: usize) -> Self {
        SkewMatrix(Matrix::zeros(dim))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Deref for SkewMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl TryFrom<Matrix> for SkewMatrix {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}

/// A symmetric positive definite matrix. Keeps the eigendecomposition that
/// certified positivity so spectral functions need no second solve.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    sym: SymMatrix,
    eig: EigenDecomposition,
}

impl SpdMatrix {
    pub fn new(sym: SymMatrix) -> Result<Self> {
        let eig = sym.eigen()?;
        let max = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let min = eig.min_eigenvalue();
        if !(min > SPD_TOL * (1.0 + max)) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(Self { sym, eig })
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    /// Assembles `Q diag(λ) Qᵀ` from a known orthogonal factor and positive
    /// eigenvalues.
    pub fn from_eigen(eig: EigenDecomposition) -> Result<Self> {
        if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: bad });
        }
        let sym = SymMatrix::new(eig.reconstruct())?;
        Ok(Self { sym, eig })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SymMatrix::identity(dim)).expect("identity is SPD")
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    /// `self^k` for any integer `k`, evaluated spectrally.
    pub fn powi(&self, k: i32) -> Matrix {
        self.eig.map_eigenvalues(|l| l.powi(k)).into_matrix()
    }
}

impl Deref for SpdMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.sym
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.sym == other.sym
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn multiply_examples() {
        let x = m(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(multiply(&Matrix::identity(2), &x).unwrap(), x);
        let p = multiply(&Matrix::from_diag(&[1.0, 2.0]), &Matrix::from_diag(&[3.0, 4.0])).unwrap();
        assert_eq!(p, Matrix::from_diag(&[3.0, 8.0]));
        let e12 = m(&[[0.0, 1.0], [0.0, 0.0]]);
        let e21 = m(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(multiply(&e12, &e21).unwrap(), m(&[[1.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn multiply_dimension_mismatch() {
        let err = multiply(&Matrix::identity(2), &Matrix::identity(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn frobenius_dot_examples() {
        assert_eq!(frobenius_dot(&Matrix::identity(3), &Matrix::identity(3)).unwrap(), 3.0);
        let x = m(&[[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(frobenius_dot(&x, &x).unwrap(), 1.0);
        let u = m(&[[1.0, 2.0], [3.0, 4.0]]);
        let v = m(&[[5.0, 6.0], [7.0, 8.0]]);
        assert_eq!(frobenius_dot(&u, &v).unwrap(), 70.0);
        assert!(frobenius_dot(&u, &Matrix::identity(3)).is_err());
    }

    #[test]
    fn sym_skew_split() {
        let a = m(&[[0.0, 2.0], [0.0, 0.0]]);
        assert_eq!(*sym_part(&a), m(&[[0.0, 1.0], [1.0, 0.0]]));
        assert_eq!(*skew_part(&a), m(&[[0.0, 1.0], [-1.0, 0.0]]));
        let s = m(&[[1.0, 3.0], [3.0, -2.0]]);
        assert_eq!(*sym_part(&s), s);
        assert_eq!(*skew_part(&s), Matrix::zeros(2));
        let g = m(&[[0.3, -1.7], [2.2, 5.0]]);
        assert!((&(&*sym_part(&g) + &*skew_part(&g)) - &g).max_abs() <= 1e-15);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(Matrix::new(0, vec![]).is_err());
        assert!(Matrix::new(2, vec![1.0; 3]).is_err());
        assert_eq!(
            Matrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).unwrap_err(),
            Error::NonFinite { row: 0, col: 1 }
        );
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn symmetric_constructor_symmetrizes_borderline() {
        let s = SymMatrix::from_rows(&[[1.0, 2.0 + 1e-12], [2.0, 1.0]]).unwrap();
        assert_eq!(s.get(0, 1), s.get(1, 0));
        assert!(matches!(
            SymMatrix::from_rows(&[[1.0, 2.1], [2.0, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn skew_constructor_zeroes_diagonal() {
        let w = SkewMatrix::from_rows(&[[1e-13, 1.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(w.get(0, 0), 0.0);
        assert!(SkewMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn spd_check() {
        assert!(SpdMatrix::from_matrix(Matrix::from_diag(&[2.0, 1.0])).is_ok());
        match SpdMatrix::from_matrix(Matrix::from_diag(&[2.0, -0.5])) {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => assert_eq!(min_eigenvalue, -0.5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SpdMatrix::from_matrix(Matrix::from_diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn determinant_and_powers() {
        let a = m(&[[2.0, 1.0], [1.0, 3.0]]);
        assert!((a.determinant() - 5.0).abs() < 1e-14);
        assert_eq!(a.powi(0), Matrix::identity(2));
        assert_eq!(a.powi(3), &(&a * &a) * &a);
        let spd = SpdMatrix::from_matrix(a.clone()).unwrap();
        let inv = spd.powi(-1);
        assert!((&(&inv * &a) - &Matrix::identity(2)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn json_shape() {
        let a = m(&[[1.0, 2.0], [3.0, 4.5]]);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"{"dim":2,"rows":[[1.0,2.0],[3.0,4.5]]}"#);
        let back: Matrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<Matrix>(r#"{"dim":3,"rows":[[1.0,2.0],[3.0,4.5]]}"#).is_err());
    }
}
