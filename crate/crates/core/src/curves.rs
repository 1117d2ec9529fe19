//! Operator curves of a two-outcome instrument.
//!
//! The positive pair (M₁, M₂) is diagonal in a shared basis with eigenvalues
//! aᵢ, bᵢ = √(1 − aᵢ²). Every curve operator is diagonal in that basis too, so
//! all evaluations reduce to scalar functions of (aᵢ, bᵢ):
//!
//! - Aᵢ(x) = aᵢ√s₋(x) / √(aᵢ²s₋(x) + bᵢ²s₊(x)), Bᵢ(x) likewise with bᵢ√s₊(x),
//!   where s∓(x) = (1 ∓ tanh x)/2. This is the usual
//!   √(1∓tanh x)·Mⱼ·(I + tanh x (M₂² − M₁²))^{−1/2} rewritten so that it stays
//!   finite when 1 − tanh x underflows.
//! - M(x, y) = √s₋(y) A(x)A(x+y) + √s₊(y) B(x)B(x+y).
//! - M(0, x) = √s₋(x) M₁A(x) + √s₊(x) M₂B(x).
//!
//! General instruments are dressed with a unitary path V(x) = exp(tanh|x| K),
//! where K is the principal logarithm of V₂ for x > 0 and of V₁ for x < 0.
//! Positive x always points toward outcome 2.

use crate::error::{Error, Result};
use crate::instrument::{Instrument, InstrumentClass};
use crate::matcore::{hermitian_eig, real, unitary_log, ComplexMatrix, HermitianEig, C64};

pub const DEFAULT_X_CLAMP: f64 = 20.0;
const CLAMP_SLACK: f64 = 1e-9;

/// (1 − tanh x)/2, evaluated without cancellation.
#[inline]
pub fn weight_minus(x: f64) -> f64 {
    weight_plus(-x)
}

/// (1 + tanh x)/2 = 1/(1 + e^{−2x}).
#[inline]
pub fn weight_plus(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-2.0 * x).exp())
    } else {
        let e = (2.0 * x).exp();
        e / (1.0 + e)
    }
}

fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Proportionality constant of P(x)P(y) = λ P(x + y):
/// λ = (cosh(x+y) / (2 cosh x cosh y))^{1/2}.
pub fn compose_constant(x: f64, y: f64) -> f64 {
    if x.abs() <= 20.0 && y.abs() <= 20.0 {
        ((x + y).cosh() / (2.0 * x.cosh() * y.cosh())).sqrt()
    } else {
        (0.5 * (ln_cosh(x + y) - std::f64::consts::LN_2 - ln_cosh(x) - ln_cosh(y))).exp()
    }
}

/// (Aᵢ(x), Bᵢ(x)) for one eigenvalue pair; always a unit vector.
#[inline]
pub(crate) fn ab_scalar(a: f64, b: f64, x: f64) -> (f64, f64) {
    let (sm, sp) = (weight_minus(x), weight_plus(x));
    let norm = (a * a * sm + b * b * sp).sqrt();
    (a * sm.sqrt() / norm, b * sp.sqrt() / norm)
}

/// Eigenvalue of M(x, y) for one eigenvalue pair.
#[inline]
pub(crate) fn weak_scalar(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let (a0, b0) = ab_scalar(a, b, x);
    let (a1, b1) = ab_scalar(a, b, x + y);
    weight_minus(y).sqrt() * a0 * a1 + weight_plus(y).sqrt() * b0 * b1
}

#[derive(Clone, Debug)]
struct UnitaryPath {
    k1: ComplexMatrix,
    k2: ComplexMatrix,
    // eigendecompositions of −iK₁, −iK₂
    gen1: HermitianEig,
    gen2: HermitianEig,
}

impl UnitaryPath {
    fn new(v1: &ComplexMatrix, v2: &ComplexMatrix) -> Result<Self> {
        let k1 = unitary_log(v1)?;
        let k2 = unitary_log(v2)?;
        let minus_i = C64::new(0.0, -1.0);
        let gen1 = hermitian_eig(&k1.scale(minus_i))?;
        let gen2 = hermitian_eig(&k2.scale(minus_i))?;
        Ok(Self { k1, k2, gen1, gen2 })
    }

    fn at(&self, x: f64) -> ComplexMatrix {
        let gen = if x > 0.0 {
            &self.gen2
        } else if x < 0.0 {
            &self.gen1
        } else {
            return ComplexMatrix::identity(self.gen1.dim());
        };
        let s = x.abs().tanh();
        let phases: Vec<C64> = gen.eigenvalues.iter().map(|&h| C64::from_polar(1.0, s * h)).collect();
        gen.reassemble(&phases)
    }
}

/// Precomputed spectral data for evaluating the curves of one instrument.
#[derive(Clone, Debug)]
pub struct OperatorCurve {
    instrument: Instrument,
    basis: HermitianEig,
    a_eigs: Vec<f64>,
    b_eigs: Vec<f64>,
    path: Option<UnitaryPath>,
    x_clamp: f64,
}

impl OperatorCurve {
    pub fn new(instrument: Instrument) -> Result<Self> {
        Self::with_clamp(instrument, DEFAULT_X_CLAMP)
    }

    pub fn with_clamp(instrument: Instrument, x_clamp: f64) -> Result<Self> {
        if !(x_clamp > 0.0 && x_clamp.is_finite()) {
            return Err(Error::InvalidConfig(format!("x clamp must be positive, got {x_clamp}")));
        }
        let (p1, p2) = instrument.positive_parts();
        let basis = hermitian_eig(p1)?;
        // P₂ = (I − P₁²)^{1/2} is diagonal in the same basis; reading it off
        // avoids √(1 − a²) amplifying rounding when a ≈ 1
        let p2_diag = p2.in_basis(&basis.eigenvectors);
        let (a_eigs, b_eigs): (Vec<f64>, Vec<f64>) = basis
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let (a, b) = (a.max(0.0), p2_diag.get(i, i).re.max(0.0));
                let n = a.hypot(b);
                (a / n, b / n)
            })
            .unzip();
        let path = match instrument.polar() {
            Some(p) => Some(UnitaryPath::new(&p.v1, &p.v2)?),
            None => None,
        };
        Ok(Self {
            instrument,
            basis,
            a_eigs,
            b_eigs,
            path,
            x_clamp,
        })
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn class(&self) -> InstrumentClass {
        self.instrument.class()
    }

    pub fn dim(&self) -> usize {
        self.instrument.dim()
    }

    pub fn x_clamp(&self) -> f64 {
        self.x_clamp
    }

    /// Shared eigenbasis of the positive pair (columns).
    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis.eigenvectors
    }

    pub fn a_eigs(&self) -> &[f64] {
        &self.a_eigs
    }

    pub fn b_eigs(&self) -> &[f64] {
        &self.b_eigs
    }

    /// Skew-Hermitian generators (K₁, K₂) of the unitary path, general class only.
    pub fn generators(&self) -> Option<(&ComplexMatrix, &ComplexMatrix)> {
        self.path.as_ref().map(|p| (&p.k1, &p.k2))
    }

    pub(crate) fn check_clamp(&self, x: f64) -> Result<()> {
        if x.is_finite() && x.abs() <= self.x_clamp + CLAMP_SLACK {
            Ok(())
        } else {
            Err(Error::ClampExceeded { x, clamp: self.x_clamp })
        }
    }

    fn require_not_general(&self) -> Result<()> {
        if self.class() == InstrumentClass::General {
            Err(Error::WrongClass {
                expected: "Positive",
                found: self.class().name(),
            })
        } else {
            Ok(())
        }
    }

    fn diagonal(&self, values: impl Iterator<Item = f64>) -> ComplexMatrix {
        let vals: Vec<C64> = values.map(real).collect();
        self.basis.reassemble(&vals)
    }

    /// P(x) = √s₋(x) P₁ + √s₊(x) P₂ for projective instruments.
    pub fn proj_curve(&self, x: f64) -> Result<ComplexMatrix> {
        if self.class() != InstrumentClass::Projective {
            return Err(Error::WrongClass {
                expected: "Projective",
                found: self.class().name(),
            });
        }
        self.check_clamp(x)?;
        let p1 = self.instrument.m1().scale_real(weight_minus(x).sqrt());
        let p2 = self.instrument.m2().scale_real(weight_plus(x).sqrt());
        Ok(&p1 + &p2)
    }

    /// Eigenvalues of (A(x), B(x)) in the shared basis.
    pub fn ab_eigenvalues(&self, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_clamp(x)?;
        Ok(self.a_eigs.iter().zip(&self.b_eigs).map(|(&a, &b)| ab_scalar(a, b, x)).unzip())
    }

    /// (A(x), B(x)) built from the positive parts of the instrument.
    pub fn ab_pair(&self, x: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let (av, bv) = self.ab_eigenvalues(x)?;
        Ok((self.diagonal(av.into_iter()), self.diagonal(bv.into_iter())))
    }

    /// U(x) = [[A(x), B(x)], [B(x), −A(x)]] on the doubled space (ancilla-major blocks).
    pub fn block_unitary(&self, x: f64) -> Result<ComplexMatrix> {
        self.require_not_general()?;
        let (a, b) = self.ab_pair(x)?;
        Ok(ComplexMatrix::from_blocks(&a, &b, &b, &-&a))
    }

    /// Eigenvalues of the positive-part weak operator M_p(x, y) in the shared basis.
    pub fn weak_eigenvalues(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        self.check_clamp(x)?;
        self.check_clamp(x + y)?;
        Ok(self.a_eigs.iter().zip(&self.b_eigs).map(|(&a, &b)| weak_scalar(a, b, x, y)).collect())
    }

    /// Weak measurement operator M(x, y); for general instruments
    /// V(x + y) M_p(x, y) V†(x).
    pub fn weak_op(&self, x: f64, y: f64) -> Result<ComplexMatrix> {
        let positive = self.diagonal(self.weak_eigenvalues(x, y)?.into_iter());
        Ok(match &self.path {
            Some(path) => &(&path.at(x + y) * &positive) * &path.at(x).adjoint(),
            None => positive,
        })
    }

    /// Effective operator M(0, x) = √s₋(x) M₁A(x) + √s₊(x) M₂B(x), dressed by V(x).
    pub fn effective_op(&self, x: f64) -> Result<ComplexMatrix> {
        let (av, bv) = self.ab_eigenvalues(x)?;
        let (cm, cp) = (weight_minus(x).sqrt(), weight_plus(x).sqrt());
        let vals = self
            .a_eigs
            .iter()
            .zip(&self.b_eigs)
            .zip(av.iter().zip(&bv))
            .map(|((&a, &b), (&ax, &bx))| cm * a * ax + cp * b * bx);
        let positive = self.diagonal(vals);
        Ok(match &self.path {
            Some(path) => &path.at(x) * &positive,
            None => positive,
        })
    }

    /// V(x) for general instruments.
    pub fn unitary_interp(&self, x: f64) -> Result<ComplexMatrix> {
        match &self.path {
            Some(path) => Ok(path.at(x)),
            None => Err(Error::WrongClass {
                expected: "General",
                found: self.class().name(),
            }),
        }
    }

    /// V(x), or the identity for instruments without a unitary part.
    pub fn frame(&self, x: f64) -> ComplexMatrix {
        match &self.path {
            Some(path) => path.at(x),
            None => ComplexMatrix::identity(self.dim()),
        }
    }
}
