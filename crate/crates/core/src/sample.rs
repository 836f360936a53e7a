//! Seeded random fixtures.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with `seed_from_u64(seed)` and then switched to stream `trial`. Draws
//! within a trial happen in call order, so results do not depend on how
//! trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::matfun_spectral;
use crate::matcore::{skew_part, sym_part, EigenDecomposition, Matrix, SkewMatrix, SpdMatrix, SymMatrix};

#[derive(Clone, Debug)]
pub struct TrialRng {
    inner: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(trial);
        Self { inner }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..hi)
    }

    /// Entries uniform in `[−scale, scale)`, row-major draw order.
    pub fn general(&mut self, d: usize, scale: f64) -> Matrix {
        Matrix::from_fn(d, |_, _| self.inner.gen_range(-scale..scale))
    }

    pub fn symmetric(&mut self, d: usize, scale: f64) -> SymMatrix {
        sym_part(&self.general(d, scale))
    }

    pub fn skew(&mut self, d: usize, scale: f64) -> SkewMatrix {
        skew_part(&self.general(d, scale))
    }

    /// Orthogonal factor of a random matrix by modified Gram–Schmidt on the
    /// columns.
    pub fn orthogonal(&mut self, d: usize) -> Matrix {
        loop {
            let m = self.general(d, 1.0);
            if let Some(q) = gram_schmidt(&m) {
                return q;
            }
        }
    }

    /// `Q diag(e^{u_i}) Qᵀ` with `u_i` uniform in `±½ ln(max_ratio)`, so the
    /// eigenvalue ratio never exceeds `max_ratio`.
    pub fn spd(&mut self, d: usize, max_ratio: f64) -> SpdMatrix {
        let q = self.orthogonal(d);
        let half = 0.5 * max_ratio.ln();
        let values: Vec<f64> = (0..d).map(|_| if half > 0.0 { self.uniform(-half, half).exp() } else { 1.0 }).collect();
        let eig = EigenDecomposition { q, eigenvalues: values };
        SpdMatrix::from_matrix(eig.reconstruct()).expect("positive spectrum by construction")
    }

    /// `(e^S, S)` with `S` symmetric and entries uniform in `±scale`.
    pub fn spd_exp(&mut self, d: usize, scale: f64) -> (SpdMatrix, SymMatrix) {
        let s = self.symmetric(d, scale);
        let a = matfun_spectral(f64::exp, &s).expect("exp is total");
        (SpdMatrix::new(a).expect("exp of symmetric is SPD"), s)
    }
}

fn gram_schmidt(m: &Matrix) -> Option<Matrix> {
    let d = m.dim();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| m.get(i, j)).collect()).collect();
    for j in 0..d {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for prev in done.iter() {
            let dot: f64 = col.iter().zip(prev).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        cols[j].iter_mut().for_each(|v| *v /= norm);
    }
    Some(Matrix::from_fn(d, |i, j| cols[j][i]))
}

/// `X / ‖X‖_F`.
pub fn unit_frobenius(x: &Matrix) -> Matrix {
    x.scale(1.0 / x.frobenius_norm())
}
