//! Directional derivatives of the matrix exponential and logarithm, and the
//! commutator identities built on them.

use crate::error::{Error, Result};
use crate::matcore::{frobenius_dot, Matrix, SpdMatrix, SymMatrix};
use crate::scalarfun::{
    coth_half_times_x_kernel, dlog_kernel, dlog_shifted_kernel, eta_neg_kernel, exp_kernel, r_q_kernel,
    sinh_ratio_kernel_for, ScalarKernel,
};

use super::series::{f_of_ad_series, matfun_series, PowerSeriesSpec};
use super::{ad, matfun_spectral, SpectralAdOperator};

/// Default central-difference step for Gâteaux oracles.
pub const FD_STEP: f64 = 1e-5;

/// `f(ad_{ln A})` built from the decomposition `A` already carries.
pub fn log_ad_operator(kernel: &ScalarKernel, a: &SpdMatrix) -> Result<SpectralAdOperator> {
    let ln_eig = a.eigen().with_eigenvalues(f64::ln);
    SpectralAdOperator::from_decomposition(kernel, &ln_eig)
}

/// `ln A` from the stored decomposition.
pub fn log_spd(a: &SpdMatrix) -> SymMatrix {
    a.eigen().map_eigenvalues(f64::ln)
}

/// `e^A η(−ad_A)[X]` for symmetric `A`.
pub fn d_exp(a: &SymMatrix, x: &Matrix) -> Result<Matrix> {
    let op = SpectralAdOperator::new(eta_neg_kernel(), a)?;
    let inner = op.apply(x)?;
    let ea = op.decomposition().map_eigenvalues(f64::exp);
    ea.matmul(&inner)
}

/// The same derivative with both factors summed as power series, for
/// general `A`.
pub fn d_exp_series(a: &Matrix, x: &Matrix) -> Result<Matrix> {
    let ea = matfun_series(&PowerSeriesSpec::exp(), a)?.value;
    let inner = f_of_ad_series(&PowerSeriesSpec::eta_neg(), a, x)?.value;
    ea.matmul(&inner)
}

/// `ad_Y/(1 − e^{−ad_Y}) [e^{−Y} X]` with `Y = ln A`.
pub fn d_log(a: &SpdMatrix, x: &Matrix) -> Result<Matrix> {
    let op = log_ad_operator(dlog_kernel(), a)?;
    op.apply(&a.powi(-1).matmul(x)?)
}

fn check_exponents(p: i32, s: i32) -> Result<()> {
    if p - s != 1 {
        return Err(Error::InvalidExponents { p, s });
    }
    Ok(())
}

/// `ad/(1 − e^{−ad}) e^{s·ad}` at `ln A` applied to `Y`, which equals
/// `d_log(A, Aᵖ Y A⁻ˢ)` when `p − s = 1`.
pub fn dlog_sandwich(a: &SpdMatrix, y: &Matrix, p: i32, s: i32) -> Result<Matrix> {
    check_exponents(p, s)?;
    log_ad_operator(&dlog_shifted_kernel(s as f64), a)?.apply(y)
}

/// `d_log(A, Aᵖ Y A⁻ˢ)` formed explicitly.
pub fn dlog_sandwich_direct(a: &SpdMatrix, y: &Matrix, p: i32, s: i32) -> Result<Matrix> {
    check_exponents(p, s)?;
    let arg = a.powi(p).matmul(y)?.matmul(&a.powi(-s))?;
    d_log(a, &arg)
}

/// `d_log(A, AY − YA) − ad_{ln A}[Y]`.
pub fn dlog_commutator_identity(a: &SpdMatrix, y: &Matrix) -> Result<Matrix> {
    let lhs = d_log(a, &ad(a, y)?)?;
    let rhs = ad(&log_spd(a), y)?;
    lhs.try_sub(&rhs)
}

/// `coth(½ ad_{ln A}) ad_{ln A}[Y]`, which equals `d_log(A, AY + YA)`.
pub fn dlog_anticommutator(a: &SpdMatrix, y: &Matrix) -> Result<Matrix> {
    log_ad_operator(coth_half_times_x_kernel(), a)?.apply(y)
}

/// Whether the two conjugated terms are subtracted or added.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSign {
    Minus,
    Plus,
}

impl PairSign {
    pub fn from_int(sign: i32) -> Result<Self> {
        match sign {
            -1 => Ok(Self::Minus),
            1 => Ok(Self::Plus),
            other => Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {other}"))),
        }
    }
}

/// The hyperbolic-ratio form of `d_log(A, AᵖXA⁻ˢ ∓ A⁻ˢXAᵖ)`:
/// `sinh(q/2 ad)/sinh(½ad) ad [X]` for `Minus`, `r_q(ad)[X]` for `Plus`,
/// with `q = p + s` and `ad = ad_{ln A}`.
pub fn dlog_sinh_pair(a: &SpdMatrix, x: &Matrix, p: i32, s: i32, sign: PairSign) -> Result<Matrix> {
    check_exponents(p, s)?;
    let q = (p + s) as f64;
    let kernel = match sign {
        PairSign::Minus => sinh_ratio_kernel_for(q),
        PairSign::Plus => r_q_kernel(q),
    };
    log_ad_operator(&kernel, a)?.apply(x)
}

/// `d_log` of the explicit sum or difference.
pub fn dlog_sinh_pair_direct(a: &SpdMatrix, x: &Matrix, p: i32, s: i32, sign: PairSign) -> Result<Matrix> {
    check_exponents(p, s)?;
    let (ap, ams) = (a.powi(p), a.powi(-s));
    let first = ap.matmul(x)?.matmul(&ams)?;
    let second = ams.matmul(x)?.matmul(&ap)?;
    let arg = match sign {
        PairSign::Minus => first.try_sub(&second)?,
        PairSign::Plus => first.try_add(&second)?,
    };
    d_log(a, &arg)
}

/// `(‖d_log(A, AX + XA) − 2X‖_F, ‖AX − XA‖_F)`.
pub fn lemma3_residual(a: &SpdMatrix, x: &Matrix) -> Result<(f64, f64)> {
    let lhs = dlog_anticommutator(a, x)?;
    let residual = lhs.try_sub(&x.scale(2.0))?.frobenius_norm();
    let commutator = ad(a, x)?.frobenius_norm();
    Ok((residual, commutator))
}

/// `e^{s·ad_A}[Y]` through the Hadamard kernel.
pub fn campbell(a: &SymMatrix, y: &Matrix, s: f64) -> Result<Matrix> {
    if s == 0.0 {
        return Ok(y.clone());
    }
    SpectralAdOperator::new(&exp_kernel(s), a)?.apply(y)
}

/// `e^{s·ad_A}[Y]` as a power series in `ad_A`, for general `A`.
pub fn campbell_series(a: &Matrix, y: &Matrix, s: f64) -> Result<Matrix> {
    Ok(f_of_ad_series(&PowerSeriesSpec::exp_scaled(s), a, y)?.value)
}

/// `e^{sA} Y e^{−sA}` as a plain triple product.
pub fn campbell_direct(a: &SymMatrix, y: &Matrix, s: f64) -> Result<Matrix> {
    let e = matfun_spectral(|v| (s * v).exp(), a)?;
    let einv = matfun_spectral(|v| (-s * v).exp(), a)?;
    e.matmul(y)?.matmul(&einv)
}

/// Residuals of the transpose rule `(f(ad_A)[X])ᵀ = f(−ad_A)[Xᵀ]` and of the
/// symmetry `⟨f(ad_A)[X], Y⟩ = ⟨X, f(ad_A)[Y]⟩`.
pub fn ad_transpose_check(a: &SymMatrix, x: &Matrix, kernel: &ScalarKernel, y: &Matrix) -> Result<(f64, f64)> {
    let op = SpectralAdOperator::new(kernel, a)?;
    let neg = SpectralAdOperator::from_decomposition(&kernel.negated(), op.decomposition())?;
    let fx = op.apply(x)?;
    let r1 = fx.transpose().try_sub(&neg.apply(&x.transpose())?)?.frobenius_norm();
    let fy = op.apply(y)?;
    let r2 = (frobenius_dot(&fx, y)? - frobenius_dot(x, &fy)?).abs();
    Ok((r1, r2))
}

/// Central difference `(f(A + hX) − f(A − hX)) / 2h`.
pub fn gateaux_fd(f: impl Fn(&Matrix) -> Result<Matrix>, a: &Matrix, x: &Matrix, h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let plus = f(&a.try_add(&x.scale(h))?)?;
    let minus = f(&a.try_sub(&x.scale(h))?)?;
    Ok(plus.try_sub(&minus)?.scale(0.5 / h))
}

/// Richardson extrapolation of [`gateaux_fd`] over steps `h` and `h/2`.
pub fn gateaux_fd_richardson(f: impl Fn(&Matrix) -> Result<Matrix>, a: &Matrix, x: &Matrix, h: f64) -> Result<Matrix> {
    let coarse = gateaux_fd(&f, a, x, h)?;
    let fine = gateaux_fd(&f, a, x, 0.5 * h)?;
    Ok(fine.scale(4.0).try_sub(&coarse)?.scale(1.0 / 3.0))
}

/// `exp` evaluated by its power series; usable on non-symmetric arguments.
pub fn exp_general(a: &Matrix) -> Result<Matrix> {
    Ok(matfun_series(&PowerSeriesSpec::exp(), a)?.value)
}
