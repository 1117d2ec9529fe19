//! Random instruments and states for property checks and the verify suites.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::instrument::{validate, Instrument, InstrumentClass, MultiInstrument};
use crate::matcore::{c64, hermitian_eig, inv_sqrt_pd, ComplexMatrix, C64};
use crate::walk::QuantumState;

/// Eigenphases of sampled unitaries stay this far from ±π.
pub const PHASE_MARGIN: f64 = 0.2;

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the R-diagonal phases removed).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g: DMatrix<C64> = gaussian_matrix(rng, dim).into_dmatrix();
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<C64> = (0..dim)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c64(1.0, 0.0)
            }
        })
        .collect();
    let q = ComplexMatrix::from_dmatrix(q).expect("square");
    &q * &ComplexMatrix::from_diag(&phases)
}

/// Random unitary whose eigenphases avoid the branch cut of the logarithm.
pub fn unitary_off_branch_cut<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let basis = haar_unitary(rng, dim);
    let phases: Vec<C64> = (0..dim)
        .map(|_| C64::from_polar(1.0, rng.random_range(-PI + PHASE_MARGIN..PI - PHASE_MARGIN)))
        .collect();
    &(&basis * &ComplexMatrix::from_diag(&phases)) * &basis.adjoint()
}

pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> QuantumState {
    let g = gaussian_matrix(rng, dim);
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    QuantumState::new(rho.scale_real(1.0 / tr).hermitian_part()).expect("Wishart sample is a valid state")
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> QuantumState {
    let psi: Vec<C64> = (0..dim)
        .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    QuantumState::from_pure(&psi).expect("nonzero Gaussian vector")
}

/// Commuting positive pair Q diag(a) Q†, Q diag(√(1 − a²)) Q† with aᵢ uniform in [0, 1].
pub fn positive_instrument<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Instrument> {
    let q = haar_unitary(rng, dim);
    let a: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = a.iter().map(|&a| (1.0 - a * a).sqrt()).collect();
    let rot = |v: &[f64]| (&(&q * &ComplexMatrix::from_real_diag(v)) * &q.adjoint()).hermitian_part();
    validate(&rot(&a), &rot(&b))
}

/// Random orthogonal projector pair of rank r and d − r, 1 ≤ r < d.
pub fn projective_instrument<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Instrument> {
    let q = haar_unitary(rng, dim);
    let rank = rng.random_range(1..dim.max(2));
    let p1: Vec<f64> = (0..dim).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
    let p2: Vec<f64> = p1.iter().map(|v| 1.0 - v).collect();
    let rot = |v: &[f64]| (&(&q * &ComplexMatrix::from_real_diag(v)) * &q.adjoint()).hermitian_part();
    validate(&rot(&p1), &rot(&p2))
}

/// Positive pair dressed with unitaries V₁, V₂ whose phases avoid −1.
pub fn general_instrument<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Instrument> {
    let positive = positive_instrument(rng, dim)?;
    let v1 = unitary_off_branch_cut(rng, dim);
    let v2 = unitary_off_branch_cut(rng, dim);
    validate(&(&v1 * positive.m1()), &(&v2 * positive.m2()))
}

pub fn instrument<R: Rng + ?Sized>(rng: &mut R, dim: usize, class: InstrumentClass) -> Result<Instrument> {
    match class {
        InstrumentClass::Projective => projective_instrument(rng, dim),
        InstrumentClass::Positive => positive_instrument(rng, dim),
        InstrumentClass::General => general_instrument(rng, dim),
    }
}

/// n-outcome measurement Mⱼ = Gⱼ S^{−1/2} with S = Σ Gⱼ†Gⱼ.
pub fn multi_instrument<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Result<MultiInstrument> {
    let gs: Vec<ComplexMatrix> = (0..outcomes).map(|_| gaussian_matrix(rng, dim)).collect();
    let mut s = ComplexMatrix::zeros(dim);
    for g in &gs {
        s = &s + &(&g.adjoint() * g);
    }
    let norm = inv_sqrt_pd(&s.hermitian_part())?;
    MultiInstrument::new(gs.iter().map(|g| g * &norm).collect())
}

/// Random Hermitian matrix with entries of unit scale.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    gaussian_matrix(rng, dim).hermitian_part()
}

/// Random positive definite matrix with spectrum in [lo, hi].
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> ComplexMatrix {
    let q = haar_unitary(rng, dim);
    let l: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
    (&(&q * &ComplexMatrix::from_real_diag(&l)) * &q.adjoint()).hermitian_part()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(h)?.eigenvalues[0])
}
