//! Isotropic matrix functions, their directional derivatives, and the two
//! quadratic forms whose signs are compared by [`equivalence_check`].

use std::fmt;
use std::sync::Arc;

use crate::calculus::{dlog_sinh_pair, f_of_ad_spectral, log_spd, matfun_series, matfun_spectral, ad, PairSign, PowerSeriesSpec};
use crate::error::{Error, Result};
use crate::matcore::{frobenius_dot, EigenDecomposition, Matrix, SpdMatrix, SymMatrix, SYM_TOL};
use crate::par::map_trials;
use crate::sample::TrialRng;
use crate::scalarfun::{r_q_kernel, sqrt_r_q_kernel};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Eigenvalue gap below which a divided difference is replaced by the
/// derivative at the midpoint.
const CONFLUENT_GAP: f64 = 1e-7;

/// `A ↦ Σ g(λ_i) v_i v_iᵀ` for a scalar generator `g`.
#[derive(Clone)]
pub struct IsotropicFunction {
    name: String,
    generator: ScalarFn,
    derivative: ScalarFn,
    polynomial: Option<Vec<f64>>,
    series: Option<PowerSeriesSpec>,
}

impl fmt::Debug for IsotropicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IsotropicFunction").field("name", &self.name).field("polynomial", &self.polynomial).finish()
    }
}

impl IsotropicFunction {
    pub fn new(
        name: impl Into<String>,
        generator: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            generator: Arc::new(generator),
            derivative: Arc::new(derivative),
            polynomial: None,
            series: None,
        }
    }

    /// `Σ c_k x^k`.
    pub fn polynomial(name: impl Into<String>, coeffs: Vec<f64>) -> Self {
        let (c1, c2) = (coeffs.clone(), coeffs.clone());
        let g = move |x: f64| c1.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let dg = move |x: f64| c2.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c);
        let mut f = Self::new(name, g, dg);
        f.polynomial = Some(coeffs);
        f
    }

    pub fn identity() -> Self {
        Self::polynomial("x", vec![0.0, 1.0])
    }

    pub fn negation() -> Self {
        Self::polynomial("-x", vec![0.0, -1.0])
    }

    pub fn square() -> Self {
        Self::polynomial("x^2", vec![0.0, 0.0, 1.0])
    }

    pub fn cube() -> Self {
        Self::polynomial("x^3", vec![0.0, 0.0, 0.0, 1.0])
    }

    pub fn cube_plus_x() -> Self {
        Self::polynomial("x^3+x", vec![0.0, 1.0, 0.0, 1.0])
    }

    pub fn exp() -> Self {
        let mut f = Self::new("exp", f64::exp, f64::exp);
        f.series = Some(PowerSeriesSpec::exp());
        f
    }

    pub fn ln() -> Self {
        Self::new("ln", f64::ln, |x| 1.0 / x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scalar(&self, x: f64) -> f64 {
        (self.generator)(x)
    }

    pub fn scalar_derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial.is_some()
    }

    /// Spectral evaluation on a symmetric argument.
    pub fn apply(&self, a: &SymMatrix) -> Result<SymMatrix> {
        let g = self.generator.clone();
        matfun_spectral(move |x| g(x), a)
    }

    /// Evaluation on a general matrix, available for polynomials and for
    /// generators with a power series.
    pub fn apply_general(&self, a: &Matrix) -> Result<Matrix> {
        if let Some(c) = &self.polynomial {
            let mut acc = Matrix::zeros(a.dim());
            for &ck in c.iter().rev() {
                acc = &(&acc * a) + &Matrix::identity(a.dim()).scale(ck);
            }
            return Ok(acc);
        }
        match &self.series {
            Some(spec) => Ok(matfun_series(spec, a)?.value),
            None => Err(Error::InvalidArgument(format!("{} has no evaluation for non-symmetric arguments", self.name))),
        }
    }

    /// `Df(A)[Y]` in closed form: the product-rule sum for polynomials,
    /// first divided differences in the eigenbasis otherwise.
    pub fn derivative_exact(&self, a: &SymMatrix, y: &Matrix) -> Result<Matrix> {
        match &self.polynomial {
            Some(c) => polynomial_derivative(c, a, y),
            None => self.divided_difference_derivative(&a.eigen()?, y),
        }
    }

    /// `Q (Δ ∘ QᵀYQ) Qᵀ` with `Δ_ij = (f(λ_i) − f(λ_j))/(λ_i − λ_j)`.
    pub fn divided_difference_derivative(&self, eig: &EigenDecomposition, y: &Matrix) -> Result<Matrix> {
        if y.dim() != eig.dim() {
            return Err(Error::DimensionMismatch { expected: eig.dim(), found: y.dim() });
        }
        let l = &eig.eigenvalues;
        let n = l.len();
        let scale = 1.0 + l.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let weights = Matrix::from_fn(n, |i, j| {
            let gap = l[i] - l[j];
            if gap.abs() <= CONFLUENT_GAP * scale {
                self.scalar_derivative(0.5 * (l[i] + l[j]))
            } else {
                (self.scalar(l[i]) - self.scalar(l[j])) / gap
            }
        });
        let rotated = eig.to_eigenbasis(y);
        let out = eig.from_eigenbasis(&weights.hadamard(&rotated)?);
        if !out.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::FunctionUndefined { at: eig.min_eigenvalue() });
        }
        Ok(out)
    }

    /// Central difference `(f(A + hY) − f(A − hY))/2h`. Symmetric `Y` keeps
    /// the spectral route; other directions need [`Self::apply_general`].
    pub fn derivative_fd(&self, a: &SymMatrix, y: &Matrix, h: f64) -> Result<Matrix> {
        let symmetric = y.asymmetry() <= SYM_TOL * (1.0 + y.max_abs());
        let eval = |m: Matrix| -> Result<Matrix> {
            if symmetric {
                Ok(self.apply(&SymMatrix::new(m)?)?.into_matrix())
            } else {
                self.apply_general(&m)
            }
        };
        crate::calculus::gateaux_fd(|m| eval(m.clone()), a, y, h)
    }
}

fn polynomial_derivative(c: &[f64], a: &Matrix, y: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    if y.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.dim() });
    }
    let powers: Vec<Matrix> = (0..c.len()).scan(Matrix::identity(n), |p, _| {
        let cur = p.clone();
        *p = &*p * a;
        Some(cur)
    }).collect();
    let mut out = Matrix::zeros(n);
    for (k, &ck) in c.iter().enumerate().skip(1) {
        if ck == 0.0 {
            continue;
        }
        for j in 0..k {
            out = &out + &(&(&powers[j] * y) * &powers[k - 1 - j]).scale(ck);
        }
    }
    Ok(out)
}

/// How `Df(A)[Y]` is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMethod {
    Exact,
    FiniteDifference { h: f64 },
}

impl IsotropicFunction {
    pub fn derivative(&self, a: &SymMatrix, y: &Matrix, method: DerivativeMethod) -> Result<Matrix> {
        match method {
            DerivativeMethod::Exact => self.derivative_exact(a, y),
            DerivativeMethod::FiniteDifference { h } => self.derivative_fd(a, y, h),
        }
    }
}

/// `‖ad_A[Df(A)[Y]] − Df(A)[ad_A[Y]]‖_F`.
pub fn lemma5_residual(f: &IsotropicFunction, a: &SymMatrix, y: &Matrix, method: DerivativeMethod) -> Result<f64> {
    let lhs = ad(a, &f.derivative(a, y, method)?)?;
    let rhs = f.derivative(a, &ad(a, y)?, method)?;
    Ok(lhs.try_sub(&rhs)?.frobenius_norm())
}

/// `√r_q(ad_G)[X]`.
pub fn sqrt_r_operator(g: &SymMatrix, q: f64, x: &Matrix) -> Result<Matrix> {
    f_of_ad_spectral(&sqrt_r_q_kernel(q), g, x)
}

/// `r_q(ad_G)[X]`.
pub fn r_operator(g: &SymMatrix, q: f64, x: &Matrix) -> Result<Matrix> {
    f_of_ad_spectral(&r_q_kernel(q), g, x)
}

fn nonzero(x: &SymMatrix) -> Result<()> {
    if x.frobenius_norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok(())
}

/// `⟨D(f∘ln)(A)[AᵖXA⁻ˢ + A⁻ˢXAᵖ], X⟩`, by the chain rule through `d_log`.
pub fn bilinear_lhs(f: &IsotropicFunction, a: &SpdMatrix, x: &SymMatrix, p: i32, s: i32) -> Result<f64> {
    nonzero(x)?;
    let inner = dlog_sinh_pair(a, x, p, s, PairSign::Plus)?;
    let ln_a = log_spd(a);
    let outer = match &f.polynomial {
        Some(_) => f.derivative_exact(&ln_a, &inner)?,
        None => f.divided_difference_derivative(&a.eigen().with_eigenvalues(f64::ln), &inner)?,
    };
    frobenius_dot(&outer, x)
}

/// `⟨Df(G)[X], X⟩`.
pub fn bilinear_rhs(f: &IsotropicFunction, g: &SymMatrix, x: &SymMatrix) -> Result<f64> {
    nonzero(x)?;
    frobenius_dot(&f.derivative_exact(g, x)?, x)
}

/// One trial of [`equivalence_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceTrial {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / (1 + |lhs|)`.
    pub relative_residual: f64,
}

impl EquivalenceTrial {
    pub fn signs_agree(&self) -> bool {
        (self.lhs > 0.0) == (self.rhs > 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub function: String,
    pub p: i32,
    pub s: i32,
    pub trials: Vec<EquivalenceTrial>,
}

impl EquivalenceReport {
    pub fn max_relative_residual(&self) -> f64 {
        self.trials.iter().map(|t| t.relative_residual).fold(0.0, f64::max)
    }

    pub fn sign_agreements(&self) -> usize {
        self.trials.iter().filter(|t| t.signs_agree()).count()
    }

    pub fn positive_lhs(&self) -> usize {
        self.trials.iter().filter(|t| t.lhs > 0.0).count()
    }

    pub fn positive_rhs(&self) -> usize {
        self.trials.iter().filter(|t| t.rhs > 0.0).count()
    }
}

/// Draws `A = e^S` (entries of `S` uniform in ±1.5) and symmetric `X` per
/// trial, and compares the quadratic form at `A` with the one at `G = S`
/// evaluated on `√r_{p+s}(ad_G)[X]`.
pub fn equivalence_check(f: &IsotropicFunction, trials: u64, seed: u64, p: i32, s: i32) -> Result<EquivalenceReport> {
    if p - s != 1 {
        return Err(Error::InvalidExponents { p, s });
    }
    let results = map_trials(trials, |t| -> Result<EquivalenceTrial> {
        let mut rng = TrialRng::new(seed, t);
        let (a, g) = rng.spd_exp(3, 1.5);
        let x = loop {
            let x = rng.symmetric(3, 1.0);
            if x.frobenius_norm() > 0.0 {
                break x;
            }
        };
        let lhs = bilinear_lhs(f, &a, &x, p, s)?;
        let y = SymMatrix::new(sqrt_r_operator(&g, (p + s) as f64, &x)?)?;
        let rhs = bilinear_rhs(f, &g, &y)?;
        Ok(EquivalenceTrial { lhs, rhs, relative_residual: (lhs - rhs).abs() / (1.0 + lhs.abs()) })
    });
    Ok(EquivalenceReport {
        function: f.name().to_string(),
        p,
        s,
        trials: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd() -> DerivativeMethod {
        DerivativeMethod::FiniteDifference { h: 1e-5 }
    }

    #[test]
    fn isotropic_function_commutes_and_is_equivariant() {
        for t in 0..50 {
            let mut rng = TrialRng::new(60, t);
            let a = rng.symmetric(3, 1.0);
            let r = rng.orthogonal(3);
            for f in [IsotropicFunction::exp(), IsotropicFunction::cube_plus_x()] {
                let fa = f.apply(&a).unwrap();
                assert!(ad(&fa, &a).unwrap().frobenius_norm() <= 1e-12);
                let rotated = SymMatrix::new(&(&r * &*a) * &r.transpose()).unwrap();
                let lhs = f.apply(&rotated).unwrap();
                let rhs = &(&r * &*fa) * &r.transpose();
                assert!((&*lhs - &rhs).frobenius_norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn polynomial_apply_routes_agree() {
        let mut rng = TrialRng::new(61, 0);
        let a = rng.symmetric(3, 1.0);
        let f = IsotropicFunction::cube_plus_x();
        let spectral = f.apply(&a).unwrap();
        let direct = f.apply_general(&a).unwrap();
        assert!((&*spectral - &direct).frobenius_norm() <= 1e-13);
        assert!(IsotropicFunction::ln().apply_general(&a).is_err());
    }

    #[test]
    fn derivative_routes_agree() {
        for t in 0..30 {
            let mut rng = TrialRng::new(62, t);
            let a = rng.symmetric(3, 1.0);
            let y = rng.general(3, 1.0);
            for f in [IsotropicFunction::exp(), IsotropicFunction::cube()] {
                let exact = f.derivative_exact(&a, &y).unwrap();
                let dd = f.divided_difference_derivative(&a.eigen().unwrap(), &y).unwrap();
                let num = f.derivative(&a, &y, fd()).unwrap();
                assert!((&exact - &dd).frobenius_norm() <= 1e-12 * (1.0 + exact.frobenius_norm()));
                assert!((&exact - &num).frobenius_norm() <= 1e-7 * (1.0 + exact.frobenius_norm()));
            }
            let spd = rng.spd(3, 10.0);
            let ys = rng.symmetric(3, 1.0);
            let ln = IsotropicFunction::ln();
            let exact = ln.derivative_exact(spd.as_sym(), &ys).unwrap();
            let num = ln.derivative(spd.as_sym(), &ys, fd()).unwrap();
            assert!((&exact - &num).frobenius_norm() <= 1e-7 * (1.0 + exact.frobenius_norm()));
        }
    }

    #[test]
    fn lemma5_cases() {
        let mut rng = TrialRng::new(63, 0);
        let a = rng.symmetric(3, 1.0);
        let commuting = IsotropicFunction::square().apply(&a).unwrap();
        let r = lemma5_residual(&IsotropicFunction::exp(), &a, &commuting, DerivativeMethod::Exact).unwrap();
        assert!(r <= 1e-13);
        for t in 0..50 {
            let mut rng = TrialRng::new(63, t + 1);
            let a = rng.symmetric(3, 1.0);
            let y = rng.general(3, 1.0);
            assert!(lemma5_residual(&IsotropicFunction::exp(), &a, &y, fd()).unwrap() <= 1e-5);
            assert!(lemma5_residual(&IsotropicFunction::square(), &a, &y, DerivativeMethod::Exact).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn square_derivative_is_anticommutator() {
        let mut rng = TrialRng::new(64, 0);
        let a = rng.symmetric(3, 1.0);
        let y = rng.general(3, 1.0);
        let d = IsotropicFunction::square().derivative_exact(&a, &y).unwrap();
        let expect = &(&*a * &y) + &(&y * &*a);
        assert!((&d - &expect).frobenius_norm() <= 1e-15);
    }

    #[test]
    fn sqrt_r_cases() {
        let g = SymMatrix::from_diag(&[0.5, -1.0, 2.0]);
        let x = Matrix::from_diag(&[1.0, 2.0, 3.0]);
        let out = sqrt_r_operator(&g, 1.0, &x).unwrap();
        assert!((&out - &x.scale(2f64.sqrt())).frobenius_norm() <= 1e-14);
        for t in 0..50 {
            let mut rng = TrialRng::new(65, t);
            let g = rng.symmetric(3, 2.0);
            let x = rng.general(3, 1.0);
            for q in [1.0, 3.0, -1.0] {
                let twice = sqrt_r_operator(&g, q, &sqrt_r_operator(&g, q, &x).unwrap()).unwrap();
                let once = r_operator(&g, q, &x).unwrap();
                assert!((&twice - &once).frobenius_norm() <= 1e-12 * (1.0 + once.frobenius_norm()));
                let back = f_of_ad_spectral(
                    &crate::scalarfun::inv_sqrt_r_q_kernel(q),
                    &g,
                    &sqrt_r_operator(&g, q, &x).unwrap(),
                )
                .unwrap();
                assert!((&back - &x).frobenius_norm() <= 1e-12);
            }
            let xs = rng.symmetric(3, 1.0);
            assert!(sqrt_r_operator(&g, 3.0, &xs).unwrap().asymmetry() <= 1e-12);
        }
    }

    #[test]
    fn bilinear_examples() {
        let mut rng = TrialRng::new(66, 0);
        let x = rng.symmetric(3, 1.0);
        let id = IsotropicFunction::identity();
        assert!((bilinear_rhs(&id, &rng.symmetric(3, 1.0), &x).unwrap() - x.frobenius_norm().powi(2)).abs() < 1e-14);
        let zero = SymMatrix::zeros(3);
        assert!((bilinear_rhs(&IsotropicFunction::exp(), &zero, &x).unwrap() - x.frobenius_norm().powi(2)).abs() < 1e-14);
        let g = SymMatrix::from_diag(&[0.0, 4f64.ln()]);
        let x2 = SymMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let expect = 2.0 * 3.0 / 4f64.ln();
        assert!((bilinear_rhs(&IsotropicFunction::exp(), &g, &x2).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 4.328_085).abs() < 1e-6);
        assert_eq!(bilinear_rhs(&id, &g, &SymMatrix::zeros(2)).unwrap_err(), Error::ZeroDirection);

        let a = rng.spd(3, 1e2);
        assert!(bilinear_lhs(&id, &a, &x, 1, 0).unwrap() > 0.0);
        let f = IsotropicFunction::exp();
        let at_identity = bilinear_lhs(&f, &SpdMatrix::identity(3), &x, 1, 0).unwrap();
        let expect = 2.0 * bilinear_rhs(&f, &SymMatrix::zeros(3), &x).unwrap();
        assert!((at_identity - expect).abs() <= 1e-14 * expect);
    }

    #[test]
    fn equivalence_small_batches() {
        for f in [IsotropicFunction::exp(), IsotropicFunction::identity(), IsotropicFunction::negation()] {
            for (p, s) in [(1, 0), (2, 1), (0, -1)] {
                let rep = equivalence_check(&f, 40, 67, p, s).unwrap();
                assert!(rep.max_relative_residual() <= 1e-9, "{} ({p},{s})", f.name());
                assert_eq!(rep.sign_agreements(), 40);
            }
        }
        let neg = equivalence_check(&IsotropicFunction::negation(), 20, 68, 1, 0).unwrap();
        assert_eq!(neg.positive_lhs() + neg.positive_rhs(), 0);
        assert!(equivalence_check(&IsotropicFunction::exp(), 1, 0, 1, 1).is_err());
    }
}
