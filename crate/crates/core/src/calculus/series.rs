//! Power-series evaluation of `f(A)` and `f(ad_A)[X]` for general matrices.

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::scalarfun::{sigma_series_coefficient, ScalarKernel};

use super::ad;

/// Consecutive growing terms that trigger the divergence signal.
pub const DIVERGENCE_RUN: usize = 5;

/// Coefficients `f_0, f_1, …` of `Σ f_n (A − c·I)^n` with stopping controls.
///
/// `radius_hint = Some(f64::INFINITY)` marks an entire function and
/// disables the divergence heuristic (the exponential series has growing
/// leading terms whenever `‖A‖ > 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeriesSpec {
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub max_terms: usize,
    pub tol: f64,
    pub radius_hint: Option<f64>,
}

impl PowerSeriesSpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let spec = Self { max_terms: coefficients.len().max(1), coefficients, center: 0.0, tol: 1e-15, radius_hint: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 1 {
            return Err(Error::InvalidArgument("max_terms must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("series tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// `e^{s·x} = Σ s^n x^n / n!`.
    pub fn exp_scaled(s: f64) -> Self {
        let max_terms = 400;
        let mut c = Vec::with_capacity(max_terms);
        let mut term = 1.0;
        for n in 0..max_terms {
            c.push(term);
            term *= s / (n + 1) as f64;
        }
        Self { coefficients: c, center: 0.0, max_terms, tol: 1e-16, radius_hint: Some(f64::INFINITY) }
    }

    pub fn exp() -> Self {
        Self::exp_scaled(1.0)
    }

    /// `ln x = Σ_{n≥1} (−1)^{n+1} (x − 1)^n / n`, centered at 1.
    pub fn log() -> Self {
        let max_terms = 2000;
        let c = (0..max_terms)
            .map(|n| if n == 0 { 0.0 } else if n % 2 == 1 { 1.0 / n as f64 } else { -1.0 / n as f64 })
            .collect();
        Self { coefficients: c, center: 1.0, max_terms, tol: 1e-16, radius_hint: Some(1.0) }
    }

    /// `η(−x) = (1 − e^{−x})/x = Σ (−1)^n x^n / (n+1)!`.
    pub fn eta_neg() -> Self {
        let max_terms = 400;
        let mut c = Vec::with_capacity(max_terms);
        let mut f = 1.0;
        for n in 0..max_terms {
            f /= (n + 1) as f64;
            c.push(if n % 2 == 0 { f } else { -f });
        }
        Self { coefficients: c, center: 0.0, max_terms, tol: 1e-16, radius_hint: Some(f64::INFINITY) }
    }

    /// `σ(x) = coth x − 1/x` from the Bernoulli numbers up to `B_40`.
    pub fn sigma() -> Self {
        let mut c = vec![0.0; 40];
        for n in 1..=20 {
            c[2 * n - 1] = sigma_series_coefficient(n).expect("index within Bernoulli table");
        }
        Self { max_terms: c.len(), coefficients: c, center: 0.0, tol: 1e-16, radius_hint: Some(std::f64::consts::PI) }
    }

    /// The Taylor coefficients a kernel carries near the origin.
    pub fn from_kernel(kernel: &ScalarKernel) -> Self {
        let c = kernel.taylor_coefficients().to_vec();
        Self { max_terms: c.len().max(1), coefficients: c, center: 0.0, tol: 1e-16, radius_hint: None }
    }

    fn divergence_check(&self) -> bool {
        !matches!(self.radius_hint, Some(r) if r.is_infinite())
    }
}

/// Which rule ended the summation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// A term fell below `tol · (1 + ‖partial sum‖)`.
    Converged,
    /// `max_terms` (or the coefficient list) was exhausted first.
    MaxTerms,
}

#[derive(Clone, Debug)]
pub struct SeriesOutcome {
    pub value: Matrix,
    pub terms: usize,
    pub stop: StopRule,
}

fn sum_series(spec: &PowerSeriesSpec, first: Matrix, step: impl Fn(&Matrix) -> Result<Matrix>) -> Result<SeriesOutcome> {
    spec.validate()?;
    let dim = first.dim();
    let mut acc = Matrix::zeros(dim);
    let mut power = first;
    let mut prev_norm: Option<f64> = None;
    let mut growth = 0;
    let limit = spec.max_terms.min(spec.coefficients.len());
    let check_divergence = spec.divergence_check();
    for n in 0..limit {
        let c = spec.coefficients[n];
        if c != 0.0 {
            let term = power.scale(c);
            let tn = term.frobenius_norm();
            acc = &acc + &term;
            if tn < spec.tol * (1.0 + acc.frobenius_norm()) {
                return Ok(SeriesOutcome { value: acc, terms: n + 1, stop: StopRule::Converged });
            }
            if check_divergence {
                if let Some(prev) = prev_norm {
                    if tn > prev {
                        growth += 1;
                        if growth >= DIVERGENCE_RUN {
                            return Err(Error::SeriesDiverging { terms: n + 1, last_norm: tn });
                        }
                    } else {
                        growth = 0;
                    }
                }
            }
            prev_norm = Some(tn);
        }
        if n + 1 < limit {
            power = step(&power)?;
        }
    }
    Ok(SeriesOutcome { value: acc, terms: limit, stop: StopRule::MaxTerms })
}

/// `Σ f_n (A − c·I)^n` by partial sums.
pub fn matfun_series(spec: &PowerSeriesSpec, a: &Matrix) -> Result<SeriesOutcome> {
    let shifted = if spec.center == 0.0 { a.clone() } else { a - &Matrix::identity(a.dim()).scale(spec.center) };
    sum_series(spec, Matrix::identity(a.dim()), |p| p.matmul(&shifted))
}

/// `Σ f_n ad_A^n[X]`; `center` is ignored since `ad_{A − cI} = ad_A`.
pub fn f_of_ad_series(spec: &PowerSeriesSpec, a: &Matrix, x: &Matrix) -> Result<SeriesOutcome> {
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: x.dim() });
    }
    sum_series(spec, x.clone(), |p| ad(a, p))
}
