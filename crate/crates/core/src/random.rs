//! Seeded random states and operators.
//!
//! All Monte Carlo in this crate draws from [`ChaCha8Rng`]. A run-level
//! generator is derived from a master seed by selecting ChaCha stream `run`,
//! so run `n` sees the same numbers whether runs execute sequentially or in
//! parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{ComplexOperator, DensityOperator, Matrix, StateVector, UnitaryOperator, C64};

/// Generator for run `run` under master seed `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed unit vector (Haar measure on the sphere).
pub fn random_amplitudes<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    StateVector::normalized(random_amplitudes(dim, rng)).expect("nonzero by construction")
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal absorbed into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOperator {
    let g = Matrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    UnitaryOperator::new(ComplexOperator::new(q).expect("finite")).expect("QR factor is unitary")
}

/// Random density operator of the given rank with random weights.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    assert!(rank >= 1 && rank <= dim);
    let basis = random_unitary(dim, rng);
    let raw: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    let terms: Vec<(f64, StateVector)> =
        raw.iter().enumerate().map(|(i, w)| (w / total, basis.column(i))).collect();
    DensityOperator::mixture(&terms).expect("convex combination of orthonormal rays")
}
