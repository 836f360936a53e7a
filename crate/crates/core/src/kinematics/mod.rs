//! Finite-strain kinematics: Hencky strain, the logarithmic spin in its
//! eigenprojection and commutator forms, and objective rates.

mod motion;

pub use motion::{
    integrate_motion, verify_theorem1, HDotMethod, MotionKind, MotionSample, VelocityGradientField, DEFAULT_CLUSTER_TOL,
};

use crate::calculus::{ad, d_log, SpectralAdOperator};
use crate::error::{Error, Result};
use crate::matcore::{skew_part, Matrix, SkewMatrix, SpdMatrix, SymMatrix};
use crate::sample::TrialRng;
use crate::scalarfun::sigma_kernel;

/// `H = ½ ln B`.
pub fn hencky(b: &SpdMatrix) -> SymMatrix {
    b.eigen().map_eigenvalues(|l| 0.5 * l.ln())
}

/// Outcome of the two genuine-strain-measure conditions for `½ ln B`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainMeasureReport {
    /// `‖H(I)‖_F`.
    pub value_at_identity: f64,
    /// Largest `‖DH(I)[X] − X/2‖_F` over the sampled directions.
    pub derivative_defect: f64,
    pub directions: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Central-difference check (step `1e-5`) of `H(I) = 0` and
/// `DH(I)[X] = X/2` for `X = I` and 20 random symmetric directions.
pub fn strain_measure_check(tolerance: f64, seed: u64, dim: usize) -> Result<StrainMeasureReport> {
    let h = 1e-5;
    let value_at_identity = hencky(&SpdMatrix::identity(dim)).frobenius_norm();
    let mut directions = vec![Matrix::identity(dim)];
    let mut rng = TrialRng::new(seed, 0);
    directions.extend((0..20).map(|_| rng.symmetric(dim, 1.0).into_matrix()));
    let mut worst: f64 = 0.0;
    for x in &directions {
        let id = Matrix::identity(dim);
        let plus = hencky(&SpdMatrix::from_matrix(id.try_add(&x.scale(h))?)?);
        let minus = hencky(&SpdMatrix::from_matrix(id.try_sub(&x.scale(h))?)?);
        let fd = plus.try_sub(&minus)?.scale(0.5 / h);
        worst = worst.max(fd.try_sub(&x.scale(0.5))?.frobenius_norm());
    }
    Ok(StrainMeasureReport {
        value_at_identity,
        derivative_defect: worst,
        directions: directions.len(),
        tolerance,
        pass: value_at_identity <= tolerance && worst <= tolerance,
    })
}

/// Groups of eigenvector indices whose eigenvalues (sorted descending)
/// chain together with relative gaps at most `cluster_tol`.
pub fn eigen_clusters(eigenvalues: &[f64], cluster_tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &l) in eigenvalues.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if {
                let prev = eigenvalues[*g.last().unwrap()];
                (prev - l).abs() <= cluster_tol * prev.abs().max(l.abs())
            } =>
            {
                g.push(k)
            }
            _ => groups.push(vec![k]),
        }
    }
    groups
}

/// `W + Σ_{σ≠τ} [(1 + r)/(1 − r) + 2/ln r] P_σ D P_τ` with `r = b_σ/b_τ`,
/// summed over distinct eigenvalue clusters of `B`.
pub fn log_spin_spectral(b: &SpdMatrix, d: &SymMatrix, w: &SkewMatrix, cluster_tol: f64) -> Result<SkewMatrix> {
    check_dims(b, d, w)?;
    let eig = b.eigen();
    let n = b.dim();
    let groups = eigen_clusters(&eig.eigenvalues, cluster_tol);
    let projections: Vec<Matrix> = groups
        .iter()
        .map(|g| Matrix::from_fn(n, |i, j| g.iter().map(|&k| eig.q.get(i, k) * eig.q.get(j, k)).sum()))
        .collect();
    let values: Vec<f64> =
        groups.iter().map(|g| g.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / g.len() as f64).collect();
    let mut omega = w.as_matrix().clone();
    for (s, ps) in projections.iter().enumerate() {
        let psd = ps.matmul(d)?;
        for (t, pt) in projections.iter().enumerate() {
            if s == t {
                continue;
            }
            let r = values[s] / values[t];
            let coeff = (1.0 + r) / (1.0 - r) + 2.0 / r.ln();
            omega = omega.try_add(&psd.matmul(pt)?.scale(coeff))?;
        }
    }
    SkewMatrix::new(omega)
}

/// `W − σ(ad_H)[D]` with `H = ½ ln B`, built on the decomposition of `B`.
pub fn log_spin_commutator(b: &SpdMatrix, d: &SymMatrix, w: &SkewMatrix) -> Result<SkewMatrix> {
    check_dims(b, d, w)?;
    let h_eig = b.eigen().with_eigenvalues(|l| 0.5 * l.ln());
    let op = SpectralAdOperator::from_decomposition(sigma_kernel(), &h_eig)?;
    let correction = op.apply(d)?;
    SkewMatrix::new(w.as_matrix().try_sub(&correction)?)
}

fn check_dims(b: &SpdMatrix, d: &SymMatrix, w: &SkewMatrix) -> Result<()> {
    for found in [d.dim(), w.dim()] {
        if found != b.dim() {
            return Err(Error::DimensionMismatch { expected: b.dim(), found });
        }
    }
    Ok(())
}

/// `Ȧ + AΩ − ΩA`.
pub fn corotational_rate(a: &Matrix, a_dot: &Matrix, omega: &SkewMatrix) -> Result<Matrix> {
    a_dot.try_sub(&ad(omega, a)?)
}

/// `Ȧ − LA − ALᵀ`.
pub fn upper_convected_rate(a: &Matrix, a_dot: &Matrix, l: &Matrix) -> Result<Matrix> {
    a_dot.try_sub(&l.matmul(a)?)?.try_sub(&a.matmul(&l.transpose())?)
}

/// `W = skew(L)`.
pub fn jaumann_spin(l: &Matrix) -> SkewMatrix {
    skew_part(l)
}

/// `dH/dt = ½ d_log(B, LB + BLᵀ)`.
pub fn hencky_rate(b: &SpdMatrix, l: &Matrix) -> Result<Matrix> {
    let b_dot = l.matmul(b)?.try_add(&b.matmul(&l.transpose())?)?;
    Ok(d_log(b, &b_dot)?.scale(0.5))
}

/// `‖(Ḣ + HΩ − ΩH) − D‖_F`.
pub fn theorem1_residual(h: &SymMatrix, h_dot: &Matrix, omega: &SkewMatrix, d: &SymMatrix) -> Result<f64> {
    Ok(corotational_rate(h, h_dot, omega)?.try_sub(d)?.frobenius_norm())
}
