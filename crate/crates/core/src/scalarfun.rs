//! Scalar kernels that parameterize the `f(ad)` operators.
//!
//! Every kernel is a total function on ℝ. Kernels with a removable
//! singularity at the origin carry a Taylor expansion that replaces the
//! direct formula for `|x| < switch_radius`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest supported Bernoulli index.
pub const MAX_BERNOULLI: usize = 40;

/// Radius below which the Taylor branch is used.
pub const SWITCH_RADIUS: f64 = 0.5;

/// Highest power kept in the Taylor branches.
pub const TAYLOR_DEGREE: usize = 30;

fn bernoulli_table() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // sum_{k=0}^{n} C(n+1, k) B_k = 0, B_0 = 1
        let mut b: Vec<BigRational> = Vec::with_capacity(MAX_BERNOULLI + 1);
        b.push(BigRational::one());
        for n in 1..=MAX_BERNOULLI {
            let mut acc = BigRational::zero();
            let mut binom = BigInt::one(); // C(n+1, 0)
            for (k, bk) in b.iter().enumerate() {
                acc += BigRational::from_integer(binom.clone()) * bk;
                binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k + 1);
            }
            // binom is now C(n+1, n) = n + 1
            b.push(-acc / BigRational::from_integer(binom));
        }
        b
    })
}

/// Exact Bernoulli number `B_n` (convention `B_1 = -1/2`).
pub fn bernoulli(n: usize) -> Result<BigRational> {
    bernoulli_table().get(n).cloned().ok_or(Error::BernoulliOutOfRange(n))
}

pub fn bernoulli_f64(n: usize) -> Result<f64> {
    Ok(to_f64(&bernoulli(n)?))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn pow2(n: usize) -> BigInt {
    BigInt::one() << n
}

/// Truncated power series helpers, coefficients indexed by power.
pub(crate) mod series {
    use super::*;

    pub type Coeffs = Vec<f64>;

    pub fn mul(a: &[f64], b: &[f64]) -> Coeffs {
        let mut out = vec![0.0; TAYLOR_DEGREE + 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if i + j > TAYLOR_DEGREE {
                    break;
                }
                out[i + j] += ai * bj;
            }
        }
        out
    }

    /// `exp(a·x)`.
    pub fn exp_scaled(a: f64) -> Coeffs {
        let mut c = vec![0.0; TAYLOR_DEGREE + 1];
        let mut term = 1.0;
        for (n, slot) in c.iter_mut().enumerate() {
            *slot = term;
            term *= a / (n + 1) as f64;
        }
        c
    }

    /// `sinh(a·x)`.
    pub fn sinh_scaled(a: f64) -> Coeffs {
        exp_scaled(a)
            .into_iter()
            .enumerate()
            .map(|(n, v)| if n % 2 == 1 { v } else { 0.0 })
            .collect()
    }

    /// `cosh(a·x)`.
    pub fn cosh_scaled(a: f64) -> Coeffs {
        exp_scaled(a)
            .into_iter()
            .enumerate()
            .map(|(n, v)| if n % 2 == 0 { v } else { 0.0 })
            .collect()
    }

    /// `x·coth(x/2) = 2 Σ B_{2n} x^{2n} / (2n)!`.
    pub fn x_coth_half() -> Coeffs {
        let mut c = vec![0.0; TAYLOR_DEGREE + 1];
        for n in 0..=TAYLOR_DEGREE / 2 {
            let b = bernoulli(2 * n).unwrap();
            c[2 * n] = to_f64(&(b * BigRational::from_integer(BigInt::from(2)) / BigRational::from_integer(factorial(2 * n))));
        }
        c
    }

    /// `x / sinh(x/2) = 2 Σ (2 − 2^{2n}) B_{2n} (x/2)^{2n} / (2n)!`.
    pub fn x_over_sinh_half() -> Coeffs {
        let mut c = vec![0.0; TAYLOR_DEGREE + 1];
        for n in 0..=TAYLOR_DEGREE / 2 {
            let b = bernoulli(2 * n).unwrap();
            let num = BigRational::from_integer(BigInt::from(2) * (BigInt::from(2) - pow2(2 * n)));
            let den = BigRational::from_integer(factorial(2 * n) * pow2(2 * n));
            c[2 * n] = to_f64(&(num * b / den));
        }
        c
    }

    /// `x / (1 − e^{−x}) = Σ (−1)^n B_n x^n / n!`.
    pub fn x_over_one_minus_exp_neg() -> Coeffs {
        (0..=TAYLOR_DEGREE)
            .map(|n| {
                let b = bernoulli(n).unwrap() / BigRational::from_integer(factorial(n));
                let v = to_f64(&b);
                if n % 2 == 1 { -v } else { v }
            })
            .collect()
    }

    pub fn eval(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
    }
}

/// Symmetry of a kernel under `x ↦ −x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named real function with an optional near-zero Taylor branch.
#[derive(Clone)]
pub struct ScalarKernel {
    name: String,
    direct: KernelFn,
    taylor: Vec<f64>,
    switch_radius: f64,
    parity: Parity,
}

impl fmt::Debug for ScalarKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarKernel")
            .field("name", &self.name)
            .field("parity", &self.parity)
            .field("switch_radius", &self.switch_radius)
            .field("taylor_terms", &self.taylor.len())
            .finish()
    }
}

impl ScalarKernel {
    /// A kernel evaluated by `f` everywhere.
    pub fn new(name: impl Into<String>, parity: Parity, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), direct: Arc::new(f), taylor: Vec::new(), switch_radius: 0.0, parity }
    }

    /// A kernel whose direct formula is replaced by the given Taylor
    /// coefficients (indexed by power) inside [`SWITCH_RADIUS`].
    pub fn with_taylor(
        name: impl Into<String>,
        parity: Parity,
        taylor: Vec<f64>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), direct: Arc::new(f), taylor, switch_radius: SWITCH_RADIUS, parity }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn switch_radius(&self) -> f64 {
        self.switch_radius
    }

    /// Non-zero Taylor terms as `(power, coefficient)` pairs.
    pub fn taylor_terms(&self) -> Vec<(u32, f64)> {
        self.taylor
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(p, &c)| (p as u32, c))
            .collect()
    }

    pub fn taylor_coefficients(&self) -> &[f64] {
        &self.taylor
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if !self.taylor.is_empty() && x.abs() < self.switch_radius {
            series::eval(&self.taylor, x)
        } else {
            (self.direct)(x)
        }
    }

    pub fn eval_direct(&self, x: f64) -> f64 {
        (self.direct)(x)
    }

    /// Taylor branch regardless of `x`, or `None` if the kernel has none.
    pub fn eval_taylor(&self, x: f64) -> Option<f64> {
        (!self.taylor.is_empty()).then(|| series::eval(&self.taylor, x))
    }

    /// `x ↦ f(−x)`.
    pub fn negated(&self) -> Self {
        let inner = self.clone();
        let taylor = self
            .taylor
            .iter()
            .enumerate()
            .map(|(n, &c)| if n % 2 == 1 { -c } else { c })
            .collect();
        Self {
            name: format!("{}(-x)", self.name),
            direct: Arc::new(move |x| inner.eval_direct(-x)),
            taylor,
            switch_radius: self.switch_radius,
            parity: self.parity,
        }
    }

    /// `x ↦ f(x)·g(x)`, Taylor branches multiplied when both exist.
    pub fn product(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let parity = match (self.parity, other.parity) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (p, q) if p == q => Parity::Even,
            _ => Parity::Odd,
        };
        let name = format!("{}*{}", self.name, other.name);
        if !self.taylor.is_empty() && !other.taylor.is_empty() {
            let taylor = series::mul(&self.taylor, &other.taylor);
            let (da, db) = (self.clone(), other.clone());
            Self::with_taylor(name, parity, taylor, move |x| da.eval_direct(x) * db.eval_direct(x))
        } else {
            Self::new(name, parity, move |x| a.eval(x) * b.eval(x))
        }
    }

    /// `x ↦ h(f(x))` for a smooth outer `h`; no separate Taylor branch.
    pub fn compose_outer(&self, name: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let inner = self.clone();
        Self::new(name, self.parity_of_even_outer(), move |x| h(inner.eval(x)))
    }

    fn parity_of_even_outer(&self) -> Parity {
        if self.parity == Parity::Even { Parity::Even } else { Parity::None }
    }
}

fn sigma_coeffs() -> Vec<f64> {
    // σ(x) = Σ_{n≥1} 2^{2n} B_{2n} x^{2n−1} / (2n)!
    let mut c = vec![0.0; TAYLOR_DEGREE + 1];
    let mut n = 1;
    while 2 * n - 1 <= TAYLOR_DEGREE {
        let b = bernoulli(2 * n).unwrap();
        let v = b * BigRational::from_integer(pow2(2 * n)) / BigRational::from_integer(factorial(2 * n));
        c[2 * n - 1] = to_f64(&v);
        n += 1;
    }
    c
}

/// Coefficient of `x^{2n−1}` in the σ series, from the exact Bernoulli table.
pub fn sigma_series_coefficient(n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let b = bernoulli(2 * n)?;
    Ok(to_f64(&(b * BigRational::from_integer(pow2(2 * n)) / BigRational::from_integer(factorial(2 * n)))))
}

/// `σ(x) = coth x − 1/x`, odd, `σ(0) = 0`.
pub fn sigma_kernel() -> &'static ScalarKernel {
    static K: OnceLock<ScalarKernel> = OnceLock::new();
    K.get_or_init(|| ScalarKernel::with_taylor("sigma", Parity::Odd, sigma_coeffs(), |x| 1.0 / x.tanh() - 1.0 / x))
}

/// `γ(x) = (x·coth(x/2) − 2)/x²`, even, `γ(0) = 1/6`.
pub fn gamma() -> &'static ScalarKernel {
    static K: OnceLock<ScalarKernel> = OnceLock::new();
    K.get_or_init(|| {
        let c = series::x_coth_half();
        let taylor: Vec<f64> = (0..=TAYLOR_DEGREE).map(|n| c.get(n + 2).copied().unwrap_or(0.0)).collect();
        ScalarKernel::with_taylor("gamma", Parity::Even, taylor, |x| (x / (0.5 * x).tanh() - 2.0) / (x * x))
    })
}

/// `x·coth(x/2)`, even, value 2 at the origin.
pub fn coth_half_times_x_kernel() -> &'static ScalarKernel {
    static K: OnceLock<ScalarKernel> = OnceLock::new();
    K.get_or_init(|| {
        ScalarKernel::with_taylor("x*coth(x/2)", Parity::Even, series::x_coth_half(), |x| x / (0.5 * x).tanh())
    })
}

/// `η(x) = (eˣ − 1)/x`, `η(0) = 1`.
pub fn eta_kernel() -> &'static ScalarKernel {
    static K: OnceLock<ScalarKernel> = OnceLock::new();
    K.get_or_init(|| {
        let mut taylor = vec![0.0; TAYLOR_DEGREE + 1];
        let mut f = 1.0;
        for (n, slot) in taylor.iter_mut().enumerate() {
            f /= (n + 1) as f64;
            *slot = f;
        }
        ScalarKernel::with_taylor("eta", Parity::None, taylor, |x| x.exp_m1() / x)
    })
}

/// `η(−x) = (1 − e^{−x})/x`, the kernel of the exponential derivative.
pub fn eta_neg_kernel() -> &'static ScalarKernel {
    static K: OnceLock<ScalarKernel> = OnceLock::new();
    K.get_or_init(|| {
        let k = eta_kernel().negated();
        ScalarKernel { name: "eta(-x)".into(), ..k }
    })
}

/// `x/(1 − e^{−x})`, the reciprocal of `η(−x)`; positive on ℝ.
pub fn dlog_kernel() -> &'static ScalarKernel {
    static K: OnceLock<ScalarKernel> = OnceLock::new();
    K.get_or_init(|| {
        ScalarKernel::with_taylor("x/(1-exp(-x))", Parity::None, series::x_over_one_minus_exp_neg(), |x| {
            x / -(-x).exp_m1()
        })
    })
}

/// `e^{s x} · x/(1 − e^{−x})`.
pub fn dlog_shifted_kernel(s: f64) -> ScalarKernel {
    if s == 0.0 {
        return dlog_kernel().clone();
    }
    let taylor = series::mul(&series::exp_scaled(s), &series::x_over_one_minus_exp_neg());
    ScalarKernel::with_taylor(format!("exp({s}x)*x/(1-exp(-x))"), Parity::None, taylor, move |x| {
        (s * x).exp() * x / -(-x).exp_m1()
    })
}

/// `e^{s x}`.
pub fn exp_kernel(s: f64) -> ScalarKernel {
    ScalarKernel::new(format!("exp({s}x)"), Parity::None, move |x| (s * x).exp())
}

pub fn constant_kernel(c: f64) -> ScalarKernel {
    ScalarKernel::new(format!("{c}"), Parity::Even, move |_| c)
}

pub fn identity_kernel() -> ScalarKernel {
    ScalarKernel::new("x", Parity::Odd, |x| x)
}

/// `r_q(x) = cosh(q x/2) · x / sinh(x/2)`, even and positive, `r_q(0) = 2`.
pub fn r_q_kernel(q: f64) -> ScalarKernel {
    let taylor = series::mul(&series::cosh_scaled(0.5 * q), &series::x_over_sinh_half());
    ScalarKernel::with_taylor(format!("r_{q}"), Parity::Even, taylor, move |x| {
        let ax = x.abs();
        let aq = q.abs();
        ax * ((aq - 1.0) * 0.5 * ax).exp() * (1.0 + (-aq * ax).exp()) / -(-ax).exp_m1()
    })
}

/// `sinh(q x/2)/sinh(x/2) · x`, odd, zero at the origin.
pub fn sinh_ratio_kernel_for(q: f64) -> ScalarKernel {
    let taylor = series::mul(&series::sinh_scaled(0.5 * q), &series::x_over_sinh_half());
    ScalarKernel::with_taylor(format!("sinh({q}x/2)/sinh(x/2)*x"), Parity::Odd, taylor, move |x| {
        let ax = x.abs();
        let aq = q.abs();
        let ratio = q.signum() * ((aq - 1.0) * 0.5 * ax).exp() * -(-aq * ax).exp_m1() / -(-ax).exp_m1();
        if q == 0.0 { 0.0 } else { ratio * x }
    })
}

/// `√r_q`, even and positive.
pub fn sqrt_r_q_kernel(q: f64) -> ScalarKernel {
    r_q_kernel(q).compose_outer(format!("sqrt(r_{q})"), f64::sqrt)
}

/// `1/√r_q`.
pub fn inv_sqrt_r_q_kernel(q: f64) -> ScalarKernel {
    r_q_kernel(q).compose_outer(format!("1/sqrt(r_{q})"), |v| 1.0 / v.sqrt())
}

pub fn sigma(x: f64) -> f64 {
    sigma_kernel().eval(x)
}

pub fn gamma_kernel(x: f64) -> f64 {
    gamma().eval(x)
}

pub fn eta(x: f64) -> f64 {
    eta_kernel().eval(x)
}

pub fn r_kernel(q: f64, x: f64) -> f64 {
    r_q_kernel(q).eval(x)
}

pub fn coth_half_times_x(x: f64) -> f64 {
    coth_half_times_x_kernel().eval(x)
}

pub fn sinh_ratio_kernel(q: f64, x: f64) -> f64 {
    sinh_ratio_kernel_for(q).eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn all_kernels() -> Vec<ScalarKernel> {
        let mut v = vec![
            sigma_kernel().clone(),
            gamma().clone(),
            coth_half_times_x_kernel().clone(),
            eta_kernel().clone(),
            eta_neg_kernel().clone(),
            dlog_kernel().clone(),
        ];
        for q in [0.0, 1.0, 2.0, 3.0, -1.0] {
            v.push(r_q_kernel(q));
            v.push(sinh_ratio_kernel_for(q));
        }
        for s in [-1.0, 1.0, 2.0] {
            v.push(dlog_shifted_kernel(s));
        }
        v
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0).unwrap(), BigRational::one());
        assert_eq!(bernoulli(1).unwrap(), BigRational::new(BigInt::from(-1), BigInt::from(2)));
        assert_eq!(bernoulli(2).unwrap(), BigRational::new(BigInt::from(1), BigInt::from(6)));
        for n in (3..=MAX_BERNOULLI).step_by(2) {
            assert!(bernoulli(n).unwrap().is_zero(), "B_{n}");
        }
        assert_eq!(bernoulli(12).unwrap(), BigRational::new(BigInt::from(-691), BigInt::from(2730)));
        assert_eq!(
            bernoulli(40).unwrap(),
            BigRational::new(
                BigInt::from_i128(-261_082_718_496_449_122_051).unwrap(),
                BigInt::from(13_530)
            )
        );
        assert_eq!(bernoulli(41), Err(Error::BernoulliOutOfRange(41)));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(0.0), 0.0);
        assert_eq!(sigma(-0.7), -sigma(0.7));
        let e = 1f64.exp();
        let direct = (e + 1.0 / e) / (e - 1.0 / e) - 1.0;
        assert!(close(sigma(1.0), direct, 1e-15));
        assert!(close(sigma(1.0), 0.313_035_285_499_331_5, 1e-15));
    }

    #[test]
    fn sigma_leading_coefficients() {
        let k = sigma_kernel();
        let c = k.taylor_coefficients();
        assert!(close(c[1], 1.0 / 3.0, 1e-15));
        assert!(close(c[3], -1.0 / 45.0, 1e-15));
        assert!(close(c[5], 2.0 / 945.0, 1e-15));
        for n in 1..=3 {
            assert!(close(c[2 * n - 1], sigma_series_coefficient(n).unwrap(), 1e-15));
        }
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_kernel(0.0), 1.0 / 6.0);
        for x in [0.1, 1.0, 10.0] {
            assert!(gamma_kernel(x) > 0.0 && gamma_kernel(-x) > 0.0);
        }
        let expected = (2.0 / 1f64.tanh() - 2.0) / 4.0;
        assert!(close(gamma_kernel(2.0), expected, 1e-15));
        assert!(close(gamma_kernel(2.0), 0.156_517_642_749_665_8, 1e-15));
    }

    #[test]
    fn gamma_positive_on_interval() {
        for i in 0..=4000 {
            let x = -20.0 + i as f64 * 0.01;
            assert!(gamma_kernel(x) >= 1e-3, "gamma({x})");
        }
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(0.0), 1.0);
        assert!(close(eta(1.0), 1.718_281_828_459_045, 1e-15));
        let x = 0.5;
        assert!(close(eta_neg_kernel().eval(x) * x.exp(), eta(x), 1e-15));
    }

    #[test]
    fn r_kernel_examples() {
        for q in [0.0, 1.0, 2.0] {
            assert!(close(r_kernel(q, 0.0), 2.0, 1e-15));
        }
        assert_eq!(r_kernel(1.0, 0.9), r_kernel(1.0, -0.9));
        let oracle = 2.0 * 1f64.cosh() / 1f64.sinh();
        assert!(close(r_kernel(1.0, 2.0), oracle, 1e-14));
        assert!(close(r_kernel(1.0, 2.0), 2.626_070_570_998_663, 1e-14));
    }

    #[test]
    fn r_kernel_positive() {
        for qi in 0..=60 {
            let q = -3.0 + 0.1 * qi as f64;
            let k = r_q_kernel(q);
            for xi in 0..=400 {
                let x = -20.0 + 0.1 * xi as f64;
                assert!(k.eval(x) >= 1e-6, "r_{q}({x}) = {}", k.eval(x));
            }
        }
    }

    #[test]
    fn coth_half_examples() {
        assert_eq!(coth_half_times_x(0.0), 2.0);
        assert!(close(coth_half_times_x(1.0), 2.163_953_413_738_653, 1e-15));
        let x = 3.0;
        assert!(close(coth_half_times_x(x), 2.0 + gamma_kernel(x) * x * x, 1e-12));
    }

    #[test]
    fn sinh_ratio_examples() {
        for x in [-3.0, -0.2, 0.0, 0.4, 1.7] {
            assert!(close(sinh_ratio_kernel(1.0, x), x, 1e-15));
        }
        assert_eq!(sinh_ratio_kernel(3.0, 0.0), 0.0);
        assert!(close(sinh_ratio_kernel(3.0, 1.0), 4.086_161_269_630_488, 1e-14));
    }

    #[test]
    fn taylor_and_direct_agree_on_ring() {
        for k in all_kernels() {
            let r = k.switch_radius();
            for i in 0..100 {
                let x = r / 2.0 + (2.0 * r - r / 2.0) * i as f64 / 99.0;
                for x in [x, -x] {
                    let t = k.eval_taylor(x).unwrap();
                    let d = k.eval_direct(x);
                    assert!(close(t, d, 1e-12), "{}: x={x} taylor={t} direct={d}", k.name());
                }
            }
        }
    }

    #[test]
    fn declared_parities_hold() {
        for k in all_kernels() {
            for i in 1..200 {
                let x = i as f64 * 0.05;
                let (a, b) = (k.eval(x), k.eval(-x));
                let tol = 1e-14 * (1.0 + a.abs());
                match k.parity() {
                    Parity::Even => assert!(close(a, b, tol), "{} even at {x}", k.name()),
                    Parity::Odd => assert!(close(a, -b, tol), "{} odd at {x}", k.name()),
                    Parity::None => {}
                }
            }
        }
    }

    #[test]
    fn kernels_are_finite_at_origin() {
        for k in all_kernels() {
            assert!(k.eval(0.0).is_finite(), "{}", k.name());
        }
        assert!(close(dlog_kernel().eval(0.0), 1.0, 0.0));
        assert!(close(sqrt_r_q_kernel(2.0).eval(0.0), 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        for x in [-700.0, -50.0, 50.0, 700.0] {
            assert!(sigma(x).is_finite());
            assert!(gamma_kernel(x).is_finite());
            assert!(dlog_kernel().eval(x).is_finite());
            assert!(r_kernel(2.0, x).is_finite());
        }
    }
}
