//! Ancilla-assisted realization of a positive two-outcome measurement.
//!
//! This is the doubled-space construction the ancilla-free operators are
//! derived from, kept as an independent audit path. It never takes part in
//! production walks.
//!
//! Layout: operators on system ⊗ ancilla are stored as 2×2 blocks indexed by
//! the ancilla basis {|0⟩, |1⟩}; entry (a·d + i, b·d + j) is ⟨i, a| · |j, b⟩.
//! In this layout U(0) = M₁⊗Z + M₂⊗X reads [[M₁, M₂], [M₂, −M₁]].
//!
//! A(x) and B(x) are rebuilt here with matrix functions,
//! A(x) = √s₋(x) M₁ (s₋(x) M₁² + s₊(x) M₂²)^{−1/2}, rather than from the shared
//! eigenbasis used by [`crate::curves`].

use rand::Rng;

use crate::curves::{weight_minus, weight_plus, OperatorCurve};
use crate::error::{Error, Result};
use crate::instrument::InstrumentClass;
use crate::matcore::{inv_sqrt_pd, pauli, trace_distance, ComplexMatrix};
use crate::walk::{step, trajectory_rng, QuantumState, WalkConfig};

/// The four d×d blocks of a doubled-space operator.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub upper_left: ComplexMatrix,
    pub upper_right: ComplexMatrix,
    pub lower_left: ComplexMatrix,
    pub lower_right: ComplexMatrix,
}

impl BlockDecomposition {
    pub fn split(m: &ComplexMatrix) -> Self {
        Self {
            upper_left: m.block(0, 0),
            upper_right: m.block(0, 1),
            lower_left: m.block(1, 0),
            lower_right: m.block(1, 1),
        }
    }

    pub fn assemble(&self) -> ComplexMatrix {
        ComplexMatrix::from_blocks(&self.upper_left, &self.upper_right, &self.lower_left, &self.lower_right)
    }
}

/// System plus one qubit ancilla for a positive instrument.
#[derive(Clone, Debug)]
pub struct ExtendedModel {
    system_dim: usize,
    m1: ComplexMatrix,
    m2: ComplexMatrix,
    pub pauli_x: ComplexMatrix,
    pub pauli_z: ComplexMatrix,
    pub u0: ComplexMatrix,
}

impl ExtendedModel {
    pub fn new(curve: &OperatorCurve) -> Result<Self> {
        if curve.class() == InstrumentClass::General {
            return Err(Error::WrongClass {
                expected: "Positive",
                found: curve.class().name(),
            });
        }
        let inst = curve.instrument();
        let m1 = inst.m1().clone();
        let m2 = inst.m2().clone();
        let pauli_x = pauli::x();
        let pauli_z = pauli::z();
        let u0 = &kron_ancilla(&m1, &pauli_z) + &kron_ancilla(&m2, &pauli_x);
        Ok(Self {
            system_dim: inst.dim(),
            m1,
            m2,
            pauli_x,
            pauli_z,
            u0,
        })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// (A(x), B(x)) from matrix functions of M₁, M₂.
    pub fn ab_pair(&self, x: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let (sm, sp) = (weight_minus(x), weight_plus(x));
        let mix = &(&self.m1 * &self.m1).scale_real(sm) + &(&self.m2 * &self.m2).scale_real(sp);
        let norm = inv_sqrt_pd(&mix.hermitian_part())?;
        let a = (&self.m1 * &norm).scale_real(sm.sqrt());
        let b = (&self.m2 * &norm).scale_real(sp.sqrt());
        Ok((a, b))
    }

    /// U(x) = [[A, B], [B, −A]].
    pub fn unitary(&self, x: f64) -> Result<ComplexMatrix> {
        let (a, b) = self.ab_pair(x)?;
        Ok(ComplexMatrix::from_blocks(&a, &b, &b, &-&a))
    }

    /// I ⊗ P(y) with the ancilla projective curve P₁ = |0⟩⟨0|, P₂ = |1⟩⟨1|.
    pub fn ancilla_curve(&self, y: f64) -> ComplexMatrix {
        let d = self.system_dim;
        let id = ComplexMatrix::identity(d);
        let zero = ComplexMatrix::zeros(d);
        ComplexMatrix::from_blocks(
            &id.scale_real(weight_minus(y).sqrt()),
            &zero,
            &zero,
            &id.scale_real(weight_plus(y).sqrt()),
        )
    }

    /// ρ ⊗ |0⟩⟨0| in block layout.
    pub fn embed(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let zero = ComplexMatrix::zeros(self.system_dim);
        ComplexMatrix::from_blocks(rho, &zero, &zero, &zero)
    }
}

/// Ancilla operator on system ⊗ ancilla in block layout: block (a, b) = op_ab · sys.
fn kron_ancilla(sys: &ComplexMatrix, anc: &ComplexMatrix) -> ComplexMatrix {
    let blocks: Vec<ComplexMatrix> = (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .map(|(a, b)| sys.scale(anc.get(a, b)))
        .collect();
    ComplexMatrix::from_blocks(&blocks[0], &blocks[1], &blocks[2], &blocks[3])
}

/// M̃(x, y) = U(x + y) (I ⊗ P(y)) U(x), split into blocks.
pub fn extended_weak_op(curve: &OperatorCurve, x: f64, y: f64) -> Result<BlockDecomposition> {
    let model = ExtendedModel::new(curve)?;
    extended_weak_op_with(&model, x, y)
}

pub fn extended_weak_op_with(model: &ExtendedModel, x: f64, y: f64) -> Result<BlockDecomposition> {
    let m = &(&model.unitary(x + y)? * &model.ancilla_curve(y)) * &model.unitary(x)?;
    Ok(BlockDecomposition::split(&m))
}

/// U(0) (ρ ⊗ |0⟩⟨0|) U†(0).
pub fn extended_state_expand(curve: &OperatorCurve, rho: &QuantumState) -> Result<ComplexMatrix> {
    let model = ExtendedModel::new(curve)?;
    Ok(model.u0.sandwich(&model.embed(rho.rho())))
}

/// Outcome of running the ancilla protocol and the direct walk side by side.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub steps: usize,
    pub final_x: f64,
    pub directions_agree: bool,
    /// Largest per-step trace distance between the two system states.
    pub max_trace_distance: f64,
    /// Largest Frobenius norm found outside the |0⟩⟨0| ancilla block after re-rotation.
    pub max_ancilla_leak: f64,
}

/// Drives the ancilla protocol and the direct walk with the same draws.
///
/// Ancilla side, per step: rotate ρ(x) ⊗ |0⟩⟨0| with U(x), weakly measure the
/// ancilla with I ⊗ P(±ε), read p± from the extended state, rotate back with
/// U(x ± ε). Direct side: [`crate::walk::step`]. Runs until |x| ≥ X or
/// `step_limit` steps.
pub fn oracle_walk_equivalence(
    curve: &OperatorCurve,
    rho: &QuantumState,
    config: &WalkConfig,
    step_limit: usize,
) -> Result<EquivalenceReport> {
    let model = ExtendedModel::new(curve)?;
    let eps = config.epsilon;
    let (mut rng, _) = trajectory_rng(config.seed, 0);
    let mut ext = model.embed(rho.rho());
    let mut direct = rho.clone();
    let mut x = 0.0_f64;
    let mut report = EquivalenceReport {
        steps: 0,
        final_x: 0.0,
        directions_agree: true,
        max_trace_distance: 0.0,
        max_ancilla_leak: 0.0,
    };
    while report.steps < step_limit && x.abs() < config.threshold - 1e-9 {
        let draw: f64 = rng.random();

        let physical = model.unitary(x)?.sandwich(&ext);
        let plus = model.ancilla_curve(eps).sandwich(&physical);
        let minus = model.ancilla_curve(-eps).sandwich(&physical);
        let p_plus = plus.trace().re;
        let (dir, p, post) = if draw < p_plus {
            (1_i8, p_plus, plus)
        } else {
            (-1, minus.trace().re, minus)
        };
        let x_next = x + f64::from(dir) * eps;
        ext = model.unitary(x_next)?.sandwich(&post).scale_real(1.0 / p);
        let blocks = BlockDecomposition::split(&ext);
        let leak = blocks
            .upper_right
            .frobenius_norm()
            .max(blocks.lower_left.frobenius_norm())
            .max(blocks.lower_right.frobenius_norm());

        let out = step(curve, &direct, x, eps, draw)?;
        report.directions_agree &= out.direction == dir;
        let td = trace_distance(&blocks.upper_left.hermitian_part(), out.state.rho())?;
        report.max_trace_distance = report.max_trace_distance.max(td);
        report.max_ancilla_leak = report.max_ancilla_leak.max(leak);
        report.steps += 1;

        direct = out.state;
        x = x_next;
    }
    report.final_x = x;
    Ok(report)
}
