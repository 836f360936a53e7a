//! Commutator calculus on square matrices.
//!
//! Two evaluation routes exist throughout. The spectral route works for
//! symmetric arguments without any convergence restriction: `f(ad_G)` acts
//! as a Hadamard product with `K_ij = f(g_i − g_j)` in the eigenbasis of `G`.
//! The series route sums `Σ f_n ad_A^n [X]` for general `A` and fails loudly
//! when the partial sums stop converging.

mod derivatives;
mod series;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{float::FloatCore, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matcore::{EigenDecomposition, Matrix, SymMatrix};
use crate::scalarfun::{Parity, ScalarKernel};

pub use derivatives::*;
pub use series::{f_of_ad_series, matfun_series, PowerSeriesSpec, SeriesOutcome, StopRule};

/// `ad_A[X] = AX − XA`.
///
/// Each entry `Σ_k a_ik x_kj − x_ik a_kj` is accumulated as a compensated
/// dot product, so it is accurate relative to the result even when the two
/// products nearly cancel.
pub fn ad(a: &Matrix, x: &Matrix) -> Result<Matrix> {
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: x.dim() });
    }
    let (hi, lo) = ad_compensated(a.as_slice(), x.as_slice(), None, a.dim());
    Matrix::new(a.dim(), hi.iter().zip(&lo).map(|(h, l)| h + l).collect())
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    (s, (a - (s - bp)) + (b - bp))
}

/// `ad_A[X_hi + X_lo]` as an unevaluated sum `hi + lo`.
fn ad_compensated(a: &[f64], x_hi: &[f64], x_lo: Option<&[f64]>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut hi_out = Vec::with_capacity(n * n);
    let mut lo_out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (mut hi, mut lo) = (0.0_f64, 0.0_f64);
            for k in 0..n {
                for (p, q) in [(a[i * n + k], x_hi[k * n + j]), (-x_hi[i * n + k], a[k * n + j])] {
                    let prod = p * q;
                    let (sum, err) = two_sum(hi, prod);
                    hi = sum;
                    lo += p.mul_add(q, -prod) + err;
                }
                if let Some(x_lo) = x_lo {
                    lo += a[i * n + k] * x_lo[k * n + j] - x_lo[i * n + k] * a[k * n + j];
                }
            }
            let (h, l) = two_sum(hi, lo);
            hi_out.push(h);
            lo_out.push(l);
        }
    }
    (hi_out, lo_out)
}

/// Maximum nesting depth accepted by [`ad_power`].
pub const MAX_AD_POWER: u32 = 64;

/// `ad_A^m[X]` by m-fold nesting.
pub fn ad_power(a: &Matrix, x: &Matrix, m: u32) -> Result<Matrix> {
    if m > MAX_AD_POWER {
        return Err(Error::InvalidArgument(format!("ad power {m} exceeds {MAX_AD_POWER}")));
    }
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: x.dim() });
    }
    let n = a.dim();
    let mut hi = x.as_slice().to_vec();
    let mut lo = vec![0.0; n * n];
    for _ in 0..m {
        (hi, lo) = ad_compensated(a.as_slice(), &hi, Some(&lo), n);
    }
    Matrix::new(n, hi.iter().zip(&lo).map(|(h, l)| h + l).collect())
}

/// `Σ_{k=0}^{m} C(m,k) A^k X (−A)^{m−k}`, the closed form of `ad_A^m[X]`.
///
/// The sum is carried out exactly over the integers (every `f64` is a
/// dyadic rational) and rounded once at the end, so heavy cancellation
/// between the binomial terms costs nothing.
pub fn ad_power_binomial(a: &Matrix, x: &Matrix, m: u32) -> Result<Matrix> {
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: x.dim() });
    }
    if m > MAX_AD_POWER {
        return Err(Error::InvalidArgument(format!("ad power {m} exceeds {MAX_AD_POWER}")));
    }
    let n = a.dim();
    let (ai, ea) = dyadic(a);
    let (xi, ex) = dyadic(x);
    let neg_a: Vec<BigInt> = ai.iter().map(|v| -v).collect();
    let mut left = vec![int_identity(n)];
    let mut right = vec![int_identity(n)];
    for k in 1..=m as usize {
        left.push(int_matmul(&left[k - 1], &ai, n));
        right.push(int_matmul(&right[k - 1], &neg_a, n));
    }
    let mut sum = vec![BigInt::zero(); n * n];
    let mut binom = BigInt::one();
    for k in 0..=m as usize {
        let term = int_matmul(&int_matmul(&left[k], &xi, n), &right[m as usize - k], n);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += &binom * t;
        }
        binom = binom * (m as usize - k) / (k + 1);
    }
    let exponent = i64::from(m) * ea + ex;
    Matrix::new(n, sum.into_iter().map(|v| dyadic_to_f64(v, exponent)).collect())
}

/// Integer entries and a shared binary exponent with `m = ints · 2^exp`.
fn dyadic(m: &Matrix) -> (Vec<BigInt>, i64) {
    let parts: Vec<(u64, i16, i8)> = m.as_slice().iter().map(|v| v.integer_decode()).collect();
    let exp = parts.iter().filter(|p| p.0 != 0).map(|p| i64::from(p.1)).min().unwrap_or(0);
    let ints = parts
        .iter()
        .map(|&(mant, e, sign)| {
            let v = BigInt::from(mant) << (i64::from(e) - exp) as usize;
            if sign < 0 { -v } else { v }
        })
        .collect();
    (ints, exp)
}

fn dyadic_to_f64(v: BigInt, exp: i64) -> f64 {
    let r = if exp >= 0 {
        BigRational::from_integer(v << exp as usize)
    } else {
        BigRational::new(v, BigInt::one() << (-exp) as usize)
    };
    r.to_f64().unwrap_or(f64::NAN)
}

fn int_identity(n: usize) -> Vec<BigInt> {
    (0..n * n).map(|i| if i % (n + 1) == 0 { BigInt::one() } else { BigInt::zero() }).collect()
}

fn int_matmul(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = &a[i * n + k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * &b[k * n + j];
            }
        }
    }
    c
}

/// `Q diag(f(λ_i)) Qᵀ` from an existing decomposition.
pub fn matfun_from_eigen(f: impl Fn(f64) -> f64, eig: &EigenDecomposition) -> Result<SymMatrix> {
    let mut values = Vec::with_capacity(eig.dim());
    for &l in &eig.eigenvalues {
        let v = f(l);
        if !v.is_finite() {
            return Err(Error::FunctionUndefined { at: l });
        }
        values.push(v);
    }
    Ok(eig.assemble(&values))
}

/// Spectral matrix function `f(S) = Σ f(λ_i) v_i v_iᵀ`.
pub fn matfun_spectral(f: impl Fn(f64) -> f64, s: &SymMatrix) -> Result<SymMatrix> {
    matfun_from_eigen(f, &s.eigen()?)
}

/// Precomputed `f(ad_G)` for symmetric `G`: eigenbasis of `G` plus the
/// kernel table `K_ij = f(g_i − g_j)`. Immutable; reuse it for many `X`.
#[derive(Clone, Debug)]
pub struct SpectralAdOperator {
    source: SymMatrix,
    decomposition: EigenDecomposition,
    kernel_name: String,
    parity: Parity,
    kernel_table: Matrix,
}

impl SpectralAdOperator {
    pub fn new(kernel: &ScalarKernel, g: &SymMatrix) -> Result<Self> {
        let decomposition = g.eigen()?;
        Self::with_decomposition(kernel, g.clone(), decomposition)
    }

    /// Builds the operator from a decomposition that is already known, e.g.
    /// the one of `B` reused for `½ ln B`.
    pub fn from_decomposition(kernel: &ScalarKernel, decomposition: &EigenDecomposition) -> Result<Self> {
        let source = crate::matcore::sym_part(&decomposition.reconstruct());
        Self::with_decomposition(kernel, source, decomposition.clone())
    }

    fn with_decomposition(kernel: &ScalarKernel, source: SymMatrix, decomposition: EigenDecomposition) -> Result<Self> {
        let g = &decomposition.eigenvalues;
        let d = g.len();
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let arg = g[i] - g[j];
                let v = kernel.eval(arg);
                if !v.is_finite() {
                    return Err(Error::KernelUndefined { kernel: kernel.name().to_string(), at: arg });
                }
                data.push(v);
            }
        }
        let kernel_table = Matrix::new(d, data)?;
        Ok(Self {
            source,
            decomposition,
            kernel_name: kernel.name().to_string(),
            parity: kernel.parity(),
            kernel_table,
        })
    }

    /// `Q (K ∘ QᵀXQ) Qᵀ`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.dim() != self.kernel_table.dim() {
            return Err(Error::DimensionMismatch { expected: self.kernel_table.dim(), found: x.dim() });
        }
        let rotated = self.decomposition.to_eigenbasis(x);
        let weighted = self.kernel_table.hadamard(&rotated)?;
        Ok(self.decomposition.from_eigenbasis(&weighted))
    }

    pub fn source(&self) -> &SymMatrix {
        &self.source
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        &self.decomposition
    }

    pub fn kernel_name(&self) -> &str {
        &self.kernel_name
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn kernel_table(&self) -> &Matrix {
        &self.kernel_table
    }
}

/// `f(ad_G)[X]` via the Hadamard-kernel definition.
pub fn f_of_ad_spectral(kernel: &ScalarKernel, g: &SymMatrix, x: &Matrix) -> Result<Matrix> {
    SpectralAdOperator::new(kernel, g)?.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::TrialRng;
    use crate::scalarfun::{constant_kernel, exp_kernel, identity_kernel, sigma_kernel, r_q_kernel};

    fn e12() -> Matrix {
        Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap()
    }

    #[test]
    fn ad_examples() {
        let mut rng = TrialRng::new(1, 0);
        let x = rng.general(3, 1.0);
        assert_eq!(ad(&Matrix::identity(3), &x).unwrap(), Matrix::zeros(3));
        let r = ad(&Matrix::from_diag(&[1.0, 2.0]), &e12()).unwrap();
        assert_eq!(r, Matrix::from_rows(&[[0.0, -1.0], [0.0, 0.0]]).unwrap());
        let a = rng.general(3, 1.0);
        assert!(ad(&a, &(&a * &a)).unwrap().frobenius_norm() < 1e-14);
        assert!(ad(&Matrix::identity(2), &Matrix::identity(3)).is_err());
    }

    #[test]
    fn ad_power_small_cases() {
        let mut rng = TrialRng::new(2, 0);
        let (a, x) = (rng.general(3, 1.0), rng.general(3, 1.0));
        assert_eq!(ad_power(&a, &x, 0).unwrap(), x);
        assert_eq!(ad_power(&a, &x, 1).unwrap(), ad(&a, &x).unwrap());
        assert!(ad_power(&a, &x, 65).is_err());
    }

    #[test]
    fn ad_power_matches_binomial_sum() {
        for t in 0..50 {
            let mut rng = TrialRng::new(3, t);
            let (a, x) = (rng.general(3, 1.0), rng.general(3, 1.0));
            for m in 0..=8 {
                let nested = ad_power(&a, &x, m).unwrap();
                let closed = ad_power_binomial(&a, &x, m).unwrap();
                let scale = 1.0 + nested.frobenius_norm();
                assert!((&nested - &closed).frobenius_norm() <= 1e-12 * scale, "m={m}");
            }
        }
    }

    #[test]
    fn ad_power_m5_random() {
        let mut rng = TrialRng::new(4, 0);
        let (a, x) = (rng.general(3, 1.0), rng.general(3, 1.0));
        let nested = ad_power(&a, &x, 5).unwrap();
        let closed = ad_power_binomial(&a, &x, 5).unwrap();
        assert!((&nested - &closed).frobenius_norm() <= 1e-12 * nested.frobenius_norm());
    }

    #[test]
    fn matfun_spectral_examples() {
        let mut rng = TrialRng::new(5, 0);
        let s = rng.symmetric(3, 1.0);
        let id = matfun_spectral(|v| v, &s).unwrap();
        assert!((&*id - &*s).frobenius_norm() < 1e-14);
        let e2 = 2f64.exp();
        let d = matfun_spectral(f64::ln, &SymMatrix::from_diag(&[e2, e2 * e2])).unwrap();
        assert!((&*d - &Matrix::from_diag(&[2.0, 4.0])).frobenius_norm() < 1e-14);
        let a = rng.spd(3, 1e3);
        let back = matfun_spectral(f64::exp, &matfun_spectral(f64::ln, a.as_sym()).unwrap()).unwrap();
        assert!((&*back - &*a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        let f = matfun_spectral(f64::exp, &s).unwrap();
        assert!(ad(&f, &s).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn matfun_spectral_reports_undefined() {
        let s = SymMatrix::from_diag(&[1.0, -2.0]);
        assert_eq!(matfun_spectral(f64::ln, &s).unwrap_err(), Error::FunctionUndefined { at: -2.0 });
    }

    #[test]
    fn f_of_ad_examples() {
        let mut rng = TrialRng::new(6, 0);
        let g = rng.symmetric(3, 1.0);
        let x = rng.general(3, 1.0);
        let one = f_of_ad_spectral(&constant_kernel(1.0), &g, &x).unwrap();
        assert!((&one - &x).frobenius_norm() < 1e-14);
        let lin = f_of_ad_spectral(&identity_kernel(), &g, &x).unwrap();
        let direct = ad(&g, &x).unwrap();
        assert!((&lin - &direct).frobenius_norm() <= 1e-13 * (1.0 + direct.frobenius_norm()));
        let campbell = f_of_ad_spectral(&exp_kernel(1.0), &g, &x).unwrap();
        let eg = matfun_spectral(f64::exp, &g).unwrap();
        let emg = matfun_spectral(|v| (-v).exp(), &g).unwrap();
        let triple = &(&*eg * &x) * &*emg;
        assert!((&campbell - &triple).frobenius_norm() <= 1e-12 * triple.frobenius_norm());
    }

    #[test]
    fn kernel_table_structure() {
        let mut rng = TrialRng::new(7, 0);
        let g = rng.symmetric(4, 1.0);
        let odd = SpectralAdOperator::new(sigma_kernel(), &g).unwrap();
        let even = SpectralAdOperator::new(&r_q_kernel(2.0), &g).unwrap();
        let (ko, ke) = (odd.kernel_table(), even.kernel_table());
        for i in 0..4 {
            assert_eq!(ko.get(i, i), 0.0);
            assert_eq!(ke.get(i, i), 2.0);
            for j in 0..4 {
                assert!((ko.get(i, j) + ko.get(j, i)).abs() <= 1e-14);
                assert!((ke.get(i, j) - ke.get(j, i)).abs() <= 1e-14);
            }
        }
        assert_eq!(odd.kernel_name(), "sigma");
    }

    #[test]
    fn undefined_kernel_is_reported() {
        let pole = ScalarKernel::new("1/x", Parity::Odd, |x| 1.0 / x);
        let g = SymMatrix::from_diag(&[1.0, 2.0]);
        assert!(matches!(f_of_ad_spectral(&pole, &g, &e12()), Err(Error::KernelUndefined { .. })));
    }

    #[test]
    fn linearity() {
        for t in 0..200 {
            let mut rng = TrialRng::new(8, t);
            let g = rng.symmetric(3, 1.0);
            let (x, y) = (rng.general(3, 1.0), rng.general(3, 1.0));
            let (al, be) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            let op = SpectralAdOperator::new(sigma_kernel(), &g).unwrap();
            let lhs = op.apply(&(&x.scale(al) + &y.scale(be))).unwrap();
            let rhs = &op.apply(&x).unwrap().scale(al) + &op.apply(&y).unwrap().scale(be);
            assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * (1.0 + lhs.frobenius_norm()));
        }
    }

    #[test]
    fn f_of_ad_commutes_with_ad() {
        for t in 0..100 {
            let mut rng = TrialRng::new(9, t);
            let g = rng.symmetric(3, 1.0);
            let x = rng.general(3, 1.0);
            let op = SpectralAdOperator::new(sigma_kernel(), &g).unwrap();
            let a = op.apply(&ad(&g, &x).unwrap()).unwrap();
            let b = ad(&g, &op.apply(&x).unwrap()).unwrap();
            assert!((&a - &b).frobenius_norm() <= 1e-12 * (1.0 + a.frobenius_norm()));
        }
    }
}
