//! Dense complex matrix algebra for small operators.
//!
//! Everything in the crate is expressed with [`ComplexMatrix`], a square
//! matrix of `Complex<f64>` backed by `nalgebra`. The matrix functions here
//! (`hermitian_eig`, `func_of_hermitian`, `polar_decompose`, `unitary_log`)
//! are spectral: they diagonalize once and apply a scalar function to the
//! eigenvalues, which keeps commuting-operator identities exact up to rounding.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Gate for declaring an operator Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default tolerance for operator identities (unitarity, completeness).
pub const IDENTITY_TOL: f64 = 1e-10;
/// Eigenvalues of a unitary closer than this to −1 make the logarithm ambiguous.
pub const BRANCH_CUT_TOL: f64 = 1e-8;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A square dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Builds a matrix from `dim * dim` entries in row-major order.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch { expected: 1, found: 0 });
        }
        if entries.len() != dim * dim {
            return Err(Error::ShapeMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let entries: Vec<C64> = rows.iter().flat_map(|r| r.iter().map(|&v| real(v))).collect();
        Self::from_row_major(dim, &entries)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let dim = diag.len();
        Self::from_fn(dim, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        Self::from_fn(dim, |i, j| if i == j { real(diag[i]) } else { C64::new(0.0, 0.0) })
    }

    /// Wraps an `nalgebra` matrix; it must be square and non-empty.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: m.nrows().max(1),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    /// Rank-one projector |v⟩⟨v| (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| self.0[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(&self.0 * real(s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let gram = (&self.adjoint() * self).hermitian_part();
        hermitian_eig(&gram).map_or(f64::NAN, |e| e.eigenvalues[self.dim() - 1].max(0.0).sqrt())
    }

    /// Max |a_ij − conj(a_ji)|.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Hermiticity test at [`HERMITIAN_TOL`] with a relative guard.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITIAN_TOL * self.frobenius_norm().max(1.0)
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * real(0.5))
    }

    /// ‖A†A − I‖_F.
    pub fn unitarity_residual(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.dim())).frobenius_norm()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// ‖A − B‖_F, or an error when the shapes differ.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok((self - other).frobenius_norm())
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// A · X · A† for a state-like X.
    pub fn sandwich(&self, x: &Self) -> Self {
        &(self * x) * &self.adjoint()
    }

    /// Block matrix [[ul, ur], [ll, lr]] of dimension 2d.
    pub fn from_blocks(ul: &Self, ur: &Self, ll: &Self, lr: &Self) -> Self {
        let d = ul.dim();
        Self::from_fn(2 * d, |i, j| {
            let block = match (i < d, j < d) {
                (true, true) => ul,
                (true, false) => ur,
                (false, true) => ll,
                (false, false) => lr,
            };
            block.0[(i % d, j % d)]
        })
    }

    /// The d×d block at block-row `bi`, block-column `bj` of a 2d×2d matrix.
    pub fn block(&self, bi: usize, bj: usize) -> Self {
        let d = self.dim() / 2;
        Self::from_fn(d, |i, j| self.0[(bi * d + i, bj * d + j)])
    }

    /// Inverse of the unitary change of basis `q`: returns q† · self · q.
    pub fn in_basis(&self, q: &Self) -> Self {
        &(&q.adjoint() * self) * q
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dim();
        writeln!(f, "ComplexMatrix({d}x{d}) [")?;
        for i in 0..d {
            write!(f, "  ")?;
            for j in 0..d {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Eigendecomposition H = Q Λ Q† of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors; each column's largest-magnitude component is real positive.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Q f(Λ) Q† for already-evaluated eigenvalue images.
    pub fn reassemble(&self, values: &[C64]) -> ComplexMatrix {
        let q = &self.eigenvectors.0;
        let d = self.dim();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for (k, &v) in values.iter().enumerate() {
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                let qi = q[(i, k)] * v;
                for j in 0..d {
                    out[(i, j)] += qi * q[(j, k)].conj();
                }
            }
        }
        ComplexMatrix(out)
    }

    pub fn reassemble_real(&self, values: &[f64]) -> ComplexMatrix {
        let vals: Vec<C64> = values.iter().map(|&v| real(v)).collect();
        self.reassemble(&vals)
    }
}

/// Spectral decomposition of a Hermitian matrix with a reproducible eigenvector gauge.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    let residual = h.hermiticity_residual();
    if residual > HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let d = h.dim();
    let eig = SymmetricEigen::new(h.hermitian_part().0);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = DMatrix::<C64>::zeros(d, d);
    let mut values = Vec::with_capacity(d);
    for (col, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let v = eig.eigenvectors.column(src);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // first component of (near-)maximal magnitude sets the phase
        let max_mag = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v.iter().find(|z| z.norm() >= max_mag * (1.0 - 1e-12)).copied().unwrap_or(real(1.0));
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { real(1.0) };
        for i in 0..d {
            vectors[(i, col)] = v[i] * phase / norm;
        }
    }
    Ok(HermitianEig {
        eigenvalues: values,
        eigenvectors: ComplexMatrix(vectors),
    })
}

/// Q f(Λ) Q†. `f` returns `None` outside its domain.
pub fn func_of_hermitian(h: &ComplexMatrix, f: impl Fn(f64) -> Option<f64>) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let mapped = eig
        .eigenvalues
        .iter()
        .map(|&l| f(l).ok_or(Error::DomainError { eigenvalue: l }))
        .collect::<Result<Vec<f64>>>()?;
    Ok(eig.reassemble_real(&mapped))
}

/// Principal square root of a positive semidefinite matrix; eigenvalues down to
/// −[`IDENTITY_TOL`] are treated as zero.
pub fn sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    func_of_hermitian(h, |l| {
        if l >= -IDENTITY_TOL {
            Some(l.max(0.0).sqrt())
        } else {
            None
        }
    })
}

/// H^{-1/2} for a positive definite matrix (all eigenvalues above 1e-12).
pub fn inv_sqrt_pd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    func_of_hermitian(h, |l| if l > 1e-12 { Some(l.sqrt().recip()) } else { None })
}

/// Polar factors of M = V P with P = (M†M)^{1/2}.
#[derive(Clone, Debug)]
pub struct PolarDecomposition {
    pub unitary: ComplexMatrix,
    pub positive: ComplexMatrix,
}

/// Polar decomposition M = V P.
///
/// Invertible M uses the scaled Newton iteration V ← (ζV + ζ⁻¹V^{−†})/2, then
/// P = (V†M + M†V)/2. Numerically singular M falls back to the eigenvectors of
/// M†M, completing V on the kernel with an orthonormal basis.
pub fn polar_decompose(m: &ComplexMatrix) -> PolarDecomposition {
    let d = m.dim();
    let gram = (&m.adjoint() * m).hermitian_part();
    let eig = hermitian_eig(&gram).expect("Gram matrix is Hermitian");
    let smax = eig.eigenvalues[d - 1].max(0.0).sqrt();
    let smin = eig.eigenvalues[0].max(0.0).sqrt();
    let unitary = if smax > 0.0 && smin > 1e-6 * smax {
        newton_polar(m)
    } else {
        kernel_completed_polar(m, &eig, smax)
    };
    let positive = (&unitary.adjoint() * m).hermitian_part();
    PolarDecomposition { unitary, positive }
}

fn newton_polar(m: &ComplexMatrix) -> ComplexMatrix {
    let mut v = m.0.clone();
    for _ in 0..100 {
        let inv_adj = v.clone().try_inverse().expect("well-conditioned").adjoint();
        let zeta = (inv_adj.norm() / v.norm()).sqrt();
        let next = (&v * real(0.5 * zeta)) + (&inv_adj * real(0.5 / zeta));
        let change = (&next - &v).norm();
        v = next;
        if change <= 1e-15 * (m.dim() as f64).sqrt() {
            break;
        }
    }
    ComplexMatrix(v)
}

fn kernel_completed_polar(m: &ComplexMatrix, eig: &HermitianEig, smax: f64) -> ComplexMatrix {
    let d = m.dim();
    let w = eig.eigenvectors.as_dmatrix();
    let mut u: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(d);
    // largest singular values first so the kernel is filled last
    for i in (0..d).rev() {
        let sigma = eig.eigenvalues[i].max(0.0).sqrt();
        if sigma > 1e-12 * smax.max(f64::MIN_POSITIVE) {
            let col = m.as_dmatrix() * w.column(i);
            u.push(orthonormalize(col, &u).unwrap_or_else(|| completion(&u, d)));
        } else {
            u.push(completion(&u, d));
        }
    }
    let mut v = DMatrix::zeros(d, d);
    for (k, i) in (0..d).rev().enumerate() {
        v += &u[k] * w.column(i).adjoint();
    }
    ComplexMatrix(v)
}

/// Gram–Schmidt (twice) against `basis`; `None` if nothing is left.
fn orthonormalize(mut v: nalgebra::DVector<C64>, basis: &[nalgebra::DVector<C64>]) -> Option<nalgebra::DVector<C64>> {
    let scale = v.norm();
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
    }
    let n = v.norm();
    (n > 1e-8 * scale.max(f64::MIN_POSITIVE)).then(|| v / real(n))
}

fn completion(basis: &[nalgebra::DVector<C64>], d: usize) -> nalgebra::DVector<C64> {
    (0..d)
        .filter_map(|k| orthonormalize(nalgebra::DVector::from_fn(d, |i, _| real(if i == k { 1.0 } else { 0.0 })), basis))
        .next()
        .expect("basis is incomplete")
}

/// Principal logarithm of a unitary matrix: skew-Hermitian K with exp(K) = W and
/// eigenphases in (−π, π].
pub fn unitary_log(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let residual = w.unitarity_residual();
    if residual > IDENTITY_TOL * (w.dim() as f64).sqrt().max(1.0) {
        return Err(Error::NotUnitary { residual });
    }
    // normal matrix, so the Schur form is diagonal up to rounding
    let (q, t) = Schur::new(w.0.clone()).unpack();
    let d = w.dim();
    let mut logs = Vec::with_capacity(d);
    for k in 0..d {
        let lambda = t[(k, k)];
        if (lambda + real(1.0)).norm() < BRANCH_CUT_TOL {
            return Err(Error::BranchAmbiguity { eigenvalue: lambda });
        }
        logs.push(C64::new(0.0, lambda.arg()));
    }
    let q = ComplexMatrix(q);
    let diag = ComplexMatrix::from_diag(&logs);
    let k = &(&q * &diag) * &q.adjoint();
    Ok(ComplexMatrix((&k.0 - k.0.adjoint()) * real(0.5)))
}

/// exp(K) for skew-Hermitian K, via the eigendecomposition of the Hermitian −iK.
/// The result is unitary by construction.
pub fn expm_skew_hermitian(k: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = k.scale(C64::new(0.0, -1.0));
    let eig = hermitian_eig(&h)?;
    let phases: Vec<C64> = eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)).collect();
    Ok(eig.reassemble(&phases))
}

/// (1/2) Σ |eigenvalues of ρ − σ|.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    rho.check_same_dim(sigma)?;
    let diff = (rho - sigma).hermitian_part();
    let eig = hermitian_eig(&diff)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// Pauli matrices used by the ancilla construction and the tests.
pub mod pauli {
    use super::{c64, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }
}
