//! Prescribed velocity-gradient histories and their RK4 trajectories.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcore::{sym_part, Matrix, SkewMatrix, SpdMatrix, SymMatrix};
use crate::sample::TrialRng;

use super::{hencky, hencky_rate, jaumann_spin, log_spin_commutator, log_spin_spectral, theorem1_residual};

/// Relative eigenvalue gap below which the projection form merges eigenspaces.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// A velocity gradient `L(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum VelocityGradientField {
    /// `L = κ e₁ ⊗ e₂`.
    SimpleShear { dim: usize, kappa: f64 },
    /// `L = diag(rates)`.
    PureStretch { rates: Vec<f64> },
    /// `L = Ω`, constant.
    RigidRotation { omega: SkewMatrix },
    /// `L(t) = Σ_k C_k t^k`, coefficient entries drawn uniformly in
    /// `±scale` from trial stream 0 of `seed`.
    Polynomial { coeffs: Vec<Matrix>, seed: u64 },
}

impl VelocityGradientField {
    pub fn simple_shear(kappa: f64) -> Self {
        Self::SimpleShear { dim: 3, kappa }
    }

    /// `diag(α, −α, 0, …)`.
    pub fn pure_stretch(dim: usize, alpha: f64) -> Self {
        let mut rates = vec![0.0; dim];
        rates[0] = alpha;
        if dim > 1 {
            rates[1] = -alpha;
        }
        Self::PureStretch { rates }
    }

    /// Rotation about the last axis with angular rate `omega`.
    pub fn rigid_rotation(dim: usize, omega: f64) -> Self {
        let m = Matrix::from_fn(dim, |i, j| match (i, j) {
            (0, 1) => -omega,
            (1, 0) => omega,
            _ => 0.0,
        });
        Self::RigidRotation { omega: SkewMatrix::new(m).expect("skew by construction") }
    }

    pub fn polynomial(dim: usize, degree: usize, scale: f64, seed: u64) -> Self {
        let mut rng = TrialRng::new(seed, 0);
        let coeffs = (0..=degree).map(|_| rng.general(dim, scale)).collect();
        Self::Polynomial { coeffs, seed }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::SimpleShear { dim, .. } => *dim,
            Self::PureStretch { rates } => rates.len(),
            Self::RigidRotation { omega } => omega.dim(),
            Self::Polynomial { coeffs, .. } => coeffs[0].dim(),
        }
    }

    pub fn eval(&self, t: f64) -> Matrix {
        match self {
            Self::SimpleShear { dim, kappa } => Matrix::from_fn(*dim, |i, j| if (i, j) == (0, 1) { *kappa } else { 0.0 }),
            Self::PureStretch { rates } => Matrix::from_diag(rates),
            Self::RigidRotation { omega } => omega.as_matrix().clone(),
            Self::Polynomial { coeffs, .. } => {
                let mut acc = Matrix::zeros(coeffs[0].dim());
                for c in coeffs.iter().rev() {
                    acc = &acc.scale(t) + c;
                }
                acc
            }
        }
    }
}

/// Named motion presets accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionKind {
    SimpleShear,
    PureStretch,
    RigidRotation,
    Polynomial,
}

impl MotionKind {
    /// The field for this preset with rate parameter `rate` (κ, α or ω).
    pub fn field(self, dim: usize, rate: f64, seed: u64) -> Result<VelocityGradientField> {
        let min_dim = if self == Self::SimpleShear { 3 } else { 2 };
        if dim < min_dim {
            return Err(Error::InvalidArgument(format!("motion {self} needs dim >= {min_dim}, got {dim}")));
        }
        Ok(match self {
            Self::SimpleShear => VelocityGradientField::SimpleShear { dim, kappa: rate },
            Self::PureStretch => VelocityGradientField::pure_stretch(dim, rate),
            Self::RigidRotation => VelocityGradientField::rigid_rotation(dim, rate),
            Self::Polynomial => VelocityGradientField::polynomial(dim, 2, 0.5 * rate, seed),
        })
    }
}

impl fmt::Display for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SimpleShear => "simple_shear",
            Self::PureStretch => "pure_stretch",
            Self::RigidRotation => "rigid_rotation",
            Self::Polynomial => "polynomial",
        })
    }
}

impl FromStr for MotionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple_shear" => Ok(Self::SimpleShear),
            "pure_stretch" => Ok(Self::PureStretch),
            "rigid_rotation" => Ok(Self::RigidRotation),
            "polynomial" => Ok(Self::Polynomial),
            other => Err(Error::InvalidArgument(format!("unknown motion '{other}'"))),
        }
    }
}

/// One recorded state of a trajectory.
#[derive(Clone, Debug)]
pub struct MotionSample {
    pub t: f64,
    pub f: Matrix,
    pub l: Matrix,
    pub b: SpdMatrix,
    pub h: SymMatrix,
    pub d: SymMatrix,
    pub w: SkewMatrix,
    pub omega_log: SkewMatrix,
    /// Identity residual with the analytic Hencky rate.
    pub residual_eq5: f64,
    /// `‖Ḃ − LB − BLᵀ‖_F` with `Ḃ` differenced over the recorded samples.
    pub residual_eq40: f64,
    /// `‖Ω_projection − Ω_commutator‖_F`.
    pub spin_agreement: f64,
    pub det_f: f64,
}

impl MotionSample {
    pub fn new(t: f64, f: Matrix, l: Matrix) -> Result<Self> {
        let det_f = f.determinant();
        let b = SpdMatrix::from_matrix(f.matmul(&f.transpose())?)?;
        let h = hencky(&b);
        let d = sym_part(&l);
        let w = jaumann_spin(&l);
        let omega_log = log_spin_commutator(&b, &d, &w)?;
        let spectral = log_spin_spectral(&b, &d, &w, DEFAULT_CLUSTER_TOL)?;
        let spin_agreement = spectral.try_sub(&omega_log)?.frobenius_norm();
        let h_dot = hencky_rate(&b, &l)?;
        let residual_eq5 = theorem1_residual(&h, &h_dot, &omega_log, &d)?;
        Ok(Self { t, f, l, b, h, d, w, omega_log, residual_eq5, residual_eq40: f64::NAN, spin_agreement, det_f })
    }
}

fn rk4_step(field: &VelocityGradientField, t: f64, f: &Matrix, dt: f64) -> Matrix {
    let k1 = &field.eval(t) * f;
    let k2 = &field.eval(t + 0.5 * dt) * &(f + &k1.scale(0.5 * dt));
    let k3 = &field.eval(t + 0.5 * dt) * &(f + &k2.scale(0.5 * dt));
    let k4 = &field.eval(t + dt) * &(f + &k3.scale(dt));
    let incr = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
    f + &incr.scale(dt / 6.0)
}

/// Second-order derivative estimates on a uniform grid: central in the
/// interior, one-sided three-point at both ends.
fn differentiate(values: &[Matrix], spacing: f64) -> Vec<Matrix> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let m = if k == 0 {
                &(&values[1].scale(4.0) - &values[0].scale(3.0)) - &values[2]
            } else if k == n - 1 {
                &(&values[n - 1].scale(3.0) - &values[n - 2].scale(4.0)) + &values[n - 3]
            } else {
                &values[k + 1] - &values[k - 1]
            };
            m.scale(0.5 / spacing)
        })
        .collect()
}

/// Classical RK4 on `dF/dt = L(t) F` from `F(0) = f0`, recording every
/// `record_every`-th step (including the initial state).
pub fn integrate_motion(
    field: &VelocityGradientField,
    f0: &Matrix,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Vec<MotionSample>> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")));
    }
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be at least 1".into()));
    }
    if f0.dim() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: f0.dim() });
    }
    let det0 = f0.determinant();
    if !(det0 > 0.0) {
        return Err(Error::IntegratorAbort { step: 0, det: det0 });
    }
    let steps = (t_end / dt).round() as usize;
    let mut f = f0.clone();
    let mut samples = vec![MotionSample::new(0.0, f.clone(), field.eval(0.0))?];
    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * dt;
        f = rk4_step(field, t_prev, &f, dt);
        let det = f.determinant();
        if !(det > 0.0) {
            return Err(Error::IntegratorAbort { step, det });
        }
        if step % record_every == 0 {
            let t = step as f64 * dt;
            samples.push(MotionSample::new(t, f.clone(), field.eval(t))?);
        }
    }
    if samples.len() >= 3 {
        let spacing = dt * record_every as f64;
        let bs: Vec<Matrix> = samples.iter().map(|s| (*s.b).clone()).collect();
        for (s, b_dot) in samples.iter_mut().zip(differentiate(&bs, spacing)) {
            let uc = super::upper_convected_rate(&s.b, &b_dot, &s.l)?;
            s.residual_eq40 = uc.frobenius_norm();
        }
    }
    Ok(samples)
}

/// Source of the Hencky rate used in the identity residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HDotMethod {
    /// `½ d_log(B, LB + BLᵀ)`.
    Analytic,
    /// Differences of the recorded `H` values.
    FiniteDifference,
}

/// Per-sample `‖Ḣ + HΩ_log − Ω_log H − D‖_F`.
pub fn verify_theorem1(samples: &[MotionSample], method: HDotMethod) -> Result<Vec<f64>> {
    match method {
        HDotMethod::Analytic => samples
            .iter()
            .map(|s| theorem1_residual(&s.h, &hencky_rate(&s.b, &s.l)?, &s.omega_log, &s.d))
            .collect(),
        HDotMethod::FiniteDifference => {
            if samples.len() < 3 {
                return Err(Error::InsufficientSamples { needed: 3, got: samples.len() });
            }
            let spacing = samples[1].t - samples[0].t;
            let uniform = samples.windows(2).all(|w| ((w[1].t - w[0].t) - spacing).abs() <= 1e-9 * spacing.abs());
            if !(spacing > 0.0) || !uniform {
                return Err(Error::InvalidArgument("finite differences need uniformly spaced samples".into()));
            }
            let hs: Vec<Matrix> = samples.iter().map(|s| s.h.as_matrix().clone()).collect();
            samples
                .iter()
                .zip(differentiate(&hs, spacing))
                .map(|(s, h_dot)| theorem1_residual(&s.h, &h_dot, &s.omega_log, &s.d))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max(v: &[f64]) -> f64 {
        v.iter().cloned().fold(0.0, f64::max)
    }

    #[test]
    fn zero_field_keeps_f0() {
        let field = VelocityGradientField::PureStretch { rates: vec![0.0; 3] };
        let f0 = Matrix::from_rows(&[[1.0, 0.2, 0.0], [0.0, 1.1, 0.0], [0.1, 0.0, 0.9]]).unwrap();
        let samples = integrate_motion(&field, &f0, 1.0, 0.01, 10).unwrap();
        assert_eq!(samples.len(), 11);
        assert!(samples.iter().all(|s| s.f == f0));
        assert!(verify_theorem1(&samples, HDotMethod::Analytic).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rigid_rotation_is_orthogonal() {
        let field = VelocityGradientField::rigid_rotation(3, 1.3);
        let samples = integrate_motion(&field, &Matrix::identity(3), 1.0, 1e-3, 100).unwrap();
        for s in &samples {
            let (c, sn) = ((1.3 * s.t).cos(), (1.3 * s.t).sin());
            let exact = Matrix::from_rows(&[[c, -sn, 0.0], [sn, c, 0.0], [0.0, 0.0, 1.0]]).unwrap();
            assert!((&s.f - &exact).frobenius_norm() <= 1e-12);
            assert!((&*s.b - &Matrix::identity(3)).frobenius_norm() <= 1e-12);
            assert!(s.h.frobenius_norm() <= 1e-12);
            assert!((&*s.omega_log - &*s.w).frobenius_norm() <= 1e-12);
        }
    }

    #[test]
    fn pure_stretch_closed_form() {
        let field = VelocityGradientField::pure_stretch(3, 0.4);
        let samples = integrate_motion(&field, &Matrix::identity(3), 1.0, 1e-3, 250).unwrap();
        for s in &samples {
            let a = 0.4 * s.t;
            let b = Matrix::from_diag(&[(2.0 * a).exp(), (-2.0 * a).exp(), 1.0]);
            assert!((&*s.b - &b).frobenius_norm() <= 1e-11);
            assert!((&*s.h - &Matrix::from_diag(&[a, -a, 0.0])).frobenius_norm() <= 1e-11);
        }
    }

    #[test]
    fn simple_shear_identity_holds() {
        let field = VelocityGradientField::simple_shear(1.0);
        let samples = integrate_motion(&field, &Matrix::identity(3), 1.0, 1e-3, 10).unwrap();
        let res = verify_theorem1(&samples, HDotMethod::Analytic).unwrap();
        assert!(max(&res) <= 1e-8);
        assert!(samples.iter().all(|s| s.det_f > 0.0));
    }

    #[test]
    fn finite_difference_needs_three_samples() {
        let field = VelocityGradientField::simple_shear(1.0);
        let samples = integrate_motion(&field, &Matrix::identity(3), 0.1, 0.1, 1).unwrap();
        assert_eq!(
            verify_theorem1(&samples, HDotMethod::FiniteDifference).unwrap_err(),
            Error::InsufficientSamples { needed: 3, got: 2 }
        );
    }

    #[test]
    fn aborts_on_collapse() {
        // λ(t) = −20000·t·(t − 0.05) vanishes at the first two stages of the
        // step, so F(0.1) = 1 + 0.1·λ(0.1)/6 < 0
        let e00 = Matrix::from_diag(&[1.0, 0.0, 0.0]);
        let coeffs = vec![Matrix::zeros(3), e00.scale(1000.0), e00.scale(-20000.0)];
        let field = VelocityGradientField::Polynomial { coeffs, seed: 0 };
        match integrate_motion(&field, &Matrix::identity(3), 1.0, 0.1, 1) {
            Err(Error::IntegratorAbort { step, det }) => assert!(step >= 1 && det <= 0.0),
            other => panic!("expected abort, got {other:?}"),
        }
        let bad = Matrix::from_diag(&[1.0, -1.0, 1.0]);
        assert!(matches!(
            integrate_motion(&VelocityGradientField::simple_shear(1.0), &bad, 1.0, 0.1, 1),
            Err(Error::IntegratorAbort { step: 0, .. })
        ));
    }

    #[test]
    fn motion_kind_round_trip() {
        for k in [MotionKind::SimpleShear, MotionKind::PureStretch, MotionKind::RigidRotation, MotionKind::Polynomial] {
            assert_eq!(k.to_string().parse::<MotionKind>().unwrap(), k);
        }
        assert!("shear".parse::<MotionKind>().is_err());
    }

    #[test]
    fn polynomial_field_is_seeded() {
        let a = VelocityGradientField::polynomial(3, 2, 0.5, 9);
        let b = VelocityGradientField::polynomial(3, 2, 0.5, 9);
        assert_eq!(a, b);
        assert_eq!(a.eval(0.0), match &a {
            VelocityGradientField::Polynomial { coeffs, .. } => coeffs[0].clone(),
            _ => unreachable!(),
        });
    }
}
