//! The random-walk measurement protocol.
//!
//! Starting at position x₀ (normally 0), each step performs the weak
//! measurement {M(x, +ε), M(x, −ε)}, moves x by ±ε and conditions the state on
//! the result. The walk stops at the first |x| ≥ X: exiting at +X is outcome 2,
//! at −X outcome 1.
//!
//! [`step`] applies the full weak operators to a density matrix. The trajectory
//! engine ([`Walker`]) runs the same dynamics in the eigenframe of the positive
//! pair: there every M_p(x, ±ε) is a real diagonal matrix, so a trajectory only
//! needs per-eigenvector amplitudes gᵢ, and the conditional state is
//! σ = diag(g) σ₀ diag(g). The unitary path of a general instrument cancels
//! between steps (M(x,y) = V(x+y) M_p V†(x)), leaving ρ = V(x) σ V†(x).
//! Step probabilities agree with [`step`] to rounding, which the tests check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curves::{weak_scalar, weight_minus, weight_plus, OperatorCurve, DEFAULT_X_CLAMP};
use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, real, ComplexMatrix, C64, HERMITIAN_TOL, IDENTITY_TOL};

/// Branch probabilities below this abort the trajectory.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;
const LATTICE_TOL: f64 = 1e-9;

/// A density matrix with trace one and no negative eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    rho: ComplexMatrix,
}

impl QuantumState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        let herm = rho.hermiticity_residual();
        if herm > HERMITIAN_TOL * rho.frobenius_norm().max(1.0) {
            return Err(Error::InvalidState(format!("density matrix is not Hermitian ({herm:.3e})")));
        }
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eig(&rho)?.eigenvalues[0];
        if min < -IDENTITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { rho: rho.hermitian_part() })
    }

    /// Rank-one state |ψ⟩⟨ψ|; ψ is normalized first.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm < 1e-12 {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            rho: ComplexMatrix::outer(&v),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            rho: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Hermitizes and renormalizes a numerically evolved density matrix.
    pub(crate) fn from_evolved(rho: ComplexMatrix) -> Self {
        let rho = rho.hermitian_part();
        let tr = rho.trace().re;
        Self {
            rho: rho.scale_real(1.0 / tr),
        }
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

/// Step size, threshold and budget of a walk.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    pub epsilon: f64,
    pub threshold: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub log_steps: bool,
}

impl WalkConfig {
    /// Config with the default step budget ⌈10 (X/ε)²⌉.
    pub fn new(epsilon: f64, threshold: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!("threshold must be positive, got {threshold}")));
        }
        if epsilon >= threshold {
            return Err(Error::InvalidConfig(format!(
                "epsilon {epsilon} must be smaller than threshold {threshold}"
            )));
        }
        if threshold > DEFAULT_X_CLAMP - epsilon + LATTICE_TOL {
            return Err(Error::InvalidConfig(format!(
                "threshold {threshold} exceeds x clamp {DEFAULT_X_CLAMP} minus epsilon {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            threshold,
            max_steps: Self::min_steps(epsilon, threshold),
            seed,
            log_steps: false,
        })
    }

    fn min_steps(epsilon: f64, threshold: f64) -> usize {
        (10.0 * (threshold / epsilon).powi(2)).ceil() as usize
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self> {
        let min = Self::min_steps(self.epsilon, self.threshold);
        if max_steps < min {
            return Err(Error::InvalidConfig(format!("max steps {max_steps} is below 10(X/eps)^2 = {min}")));
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    pub fn with_step_log(mut self, log: bool) -> Self {
        self.log_steps = log;
        self
    }
}

/// One completed walk.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub steps: usize,
    pub final_x: f64,
    /// 1 for the −X side, 2 for the +X side.
    pub outcome: u8,
    pub final_state: QuantumState,
    pub step_log: Option<Vec<i8>>,
    pub seed_used: u64,
}

/// Result of a single weak measurement.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: QuantumState,
    pub x: f64,
    /// +1 or −1.
    pub direction: i8,
    pub p_plus: f64,
    pub p_minus: f64,
}

/// One weak measurement {M(x, +ε), M(x, −ε)} with outcome chosen by `draw`:
/// "+" when draw < p₊.
pub fn step(curve: &OperatorCurve, state: &QuantumState, x: f64, epsilon: f64, draw: f64) -> Result<StepOutcome> {
    curve.check_clamp(x.abs() + epsilon)?;
    let plus = curve.weak_op(x, epsilon)?;
    let minus = curve.weak_op(x, -epsilon)?;
    let rho_plus = plus.sandwich(state.rho());
    let rho_minus = minus.sandwich(state.rho());
    let p_plus = rho_plus.trace().re;
    let p_minus = rho_minus.trace().re;
    let (direction, p, rho) = if draw < p_plus {
        (1, p_plus, rho_plus)
    } else {
        (-1, p_minus, rho_minus)
    };
    if p < MIN_BRANCH_PROBABILITY {
        return Err(Error::DegenerateProbability { p });
    }
    Ok(StepOutcome {
        state: QuantumState::from_evolved(rho.scale_real(1.0 / p)),
        x: x + f64::from(direction) * epsilon,
        direction,
        p_plus,
        p_minus,
    })
}

/// Product M(x_{n−1}, s_n ε) ⋯ M(x₀, s₁ ε) of the operators applied along a logged path.
pub fn path_operator(curve: &OperatorCurve, x0: f64, epsilon: f64, step_log: &[i8]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(curve.dim());
    let mut k = 0_i64;
    for &s in step_log {
        let x = x0 + k as f64 * epsilon;
        acc = &curve.weak_op(x, f64::from(s) * epsilon)? * &acc;
        k += i64::from(s);
    }
    Ok(acc)
}

/// Per-trajectory seed derived from the ensemble seed and the trajectory index.
pub fn trajectory_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The random stream of one trajectory: ChaCha8 seeded with [`trajectory_seed`].
pub fn trajectory_rng(seed: u64, index: u64) -> (ChaCha8Rng, u64) {
    let s = trajectory_seed(seed, index);
    (ChaCha8Rng::seed_from_u64(s), s)
}

/// Walk engine for one curve, configuration and start position, with the
/// weak-operator eigenvalues tabulated on the lattice x₀ + kε.
#[derive(Clone, Debug)]
pub struct Walker<'a> {
    curve: &'a OperatorCurve,
    config: WalkConfig,
    x0: f64,
    k_lo: i64,
    k_hi: i64,
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
}

impl<'a> Walker<'a> {
    pub fn new(curve: &'a OperatorCurve, config: &WalkConfig) -> Result<Self> {
        Self::starting_at(curve, config, 0.0)
    }

    pub fn starting_at(curve: &'a OperatorCurve, config: &WalkConfig, x0: f64) -> Result<Self> {
        let (eps, big_x) = (config.epsilon, config.threshold);
        if big_x + eps > curve.x_clamp() + LATTICE_TOL {
            return Err(Error::InvalidConfig(format!(
                "threshold {big_x} + epsilon {eps} exceeds the curve clamp {}",
                curve.x_clamp()
            )));
        }
        if !x0.is_finite() || x0.abs() > big_x {
            return Err(Error::InvalidConfig(format!("start {x0} lies outside [-{big_x}, {big_x}]")));
        }
        let tol = LATTICE_TOL * big_x.max(1.0) / eps;
        let k_hi = (((big_x - x0) / eps) - tol).ceil().max(0.0) as i64;
        let k_lo = -((((big_x + x0) / eps) - tol).ceil().max(0.0) as i64);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for k in k_lo..=k_hi {
            let x = x0 + k as f64 * eps;
            let interior = k > k_lo && k < k_hi;
            let eig = |y: f64| -> Vec<f64> {
                if !interior {
                    return Vec::new();
                }
                curve.a_eigs().iter().zip(curve.b_eigs()).map(|(&a, &b)| weak_scalar(a, b, x, y)).collect()
            };
            plus.push(eig(eps));
            minus.push(eig(-eps));
        }
        Ok(Self {
            curve,
            config: config.clone(),
            x0,
            k_lo,
            k_hi,
            plus,
            minus,
        })
    }

    pub fn config(&self) -> &WalkConfig {
        &self.config
    }

    fn position(&self, k: i64) -> f64 {
        let x = self.x0 + k as f64 * self.config.epsilon;
        let big_x = self.config.threshold;
        if (x.abs() - big_x).abs() <= LATTICE_TOL * big_x.max(1.0) {
            big_x.copysign(x)
        } else {
            x
        }
    }

    /// Runs trajectory `index` with its own seeded stream.
    pub fn run(&self, state: &QuantumState, index: u64) -> Result<TrajectoryRecord> {
        let (mut rng, seed_used) = trajectory_rng(self.config.seed, index);
        let mut record = self.run_with_rng(state, &mut rng)?;
        record.index = index;
        record.seed_used = seed_used;
        Ok(record)
    }

    /// Runs one trajectory drawing from `rng`; `index` and `seed_used` are left at 0.
    pub fn run_with_rng<R: Rng + ?Sized>(&self, state: &QuantumState, rng: &mut R) -> Result<TrajectoryRecord> {
        let d = self.curve.dim();
        if state.dim() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                found: state.dim(),
            });
        }
        let q = self.curve.basis();
        let v0 = self.curve.frame(self.x0);
        let sigma0 = state.rho().in_basis(&v0).in_basis(q);
        let populations: Vec<f64> = (0..d).map(|i| sigma0.get(i, i).re).collect();
        let mut amp = vec![1.0_f64; d];
        let mut log = self.config.log_steps.then(Vec::new);

        let mut k = 0_i64;
        let mut steps = 0_usize;
        let outcome = loop {
            if k >= self.k_hi {
                break 2;
            }
            if k <= self.k_lo {
                break 1;
            }
            if steps >= self.config.max_steps {
                return Err(Error::MaxStepsExceeded {
                    steps,
                    x: self.position(k),
                });
            }
            let slot = (k - self.k_lo) as usize;
            let (mp, mm) = (&self.plus[slot], &self.minus[slot]);
            let mut p_plus = 0.0;
            let mut p_minus = 0.0;
            for i in 0..d {
                let w = amp[i] * amp[i] * populations[i];
                p_plus += mp[i] * mp[i] * w;
                p_minus += mm[i] * mm[i] * w;
            }
            let draw: f64 = rng.random();
            let (dir, p, m) = if draw < p_plus { (1, p_plus, mp) } else { (-1, p_minus, mm) };
            if p < MIN_BRANCH_PROBABILITY {
                return Err(Error::DegenerateProbability { p });
            }
            let norm = p.sqrt().recip();
            for i in 0..d {
                amp[i] *= m[i] * norm;
            }
            if let Some(log) = log.as_mut() {
                log.push(dir);
            }
            k += i64::from(dir);
            steps += 1;
        };

        let final_x = self.position(k);
        let sigma = ComplexMatrix::from_fn(d, |i, j| sigma0.get(i, j) * real(amp[i] * amp[j]));
        let frame = &self.curve.frame(final_x) * q;
        let rho = frame.sandwich(&sigma);
        Ok(TrajectoryRecord {
            index: 0,
            steps,
            final_x,
            outcome,
            final_state: QuantumState::from_evolved(rho),
            step_log: log,
            seed_used: 0,
        })
    }
}

/// Runs trajectory 0 of `config` from x = 0.
pub fn run_trajectory(curve: &OperatorCurve, state: &QuantumState, config: &WalkConfig) -> Result<TrajectoryRecord> {
    Walker::new(curve, config)?.run(state, 0)
}

/// Probability of exiting at +X from x: (1 + tanh x / tanh X)/2.
pub fn hitting_prob_closed(x: f64, threshold: f64) -> f64 {
    0.5 * (1.0 + x.tanh() / threshold.tanh())
}

fn lattice_size(threshold: f64, epsilon: f64) -> Result<usize> {
    let n = 2.0 * threshold / epsilon;
    if !(threshold > 0.0 && epsilon > 0.0) || (n - n.round()).abs() > LATTICE_TOL * n.max(1.0) || n.round() < 1.0 {
        return Err(Error::OffLattice {
            x: threshold,
            threshold,
            epsilon,
        });
    }
    Ok(n.round() as usize)
}

/// Hitting probabilities at every lattice point −X + kε, k = 0..=2X/ε, from a
/// tridiagonal solve of
/// p(x) = (p(x+ε) + p(x−ε))/2 + tanh ε tanh x (p(x+ε) − p(x−ε))/2,
/// p(−X) = 0, p(X) = 1.
pub fn hitting_prob_lattice(threshold: f64, epsilon: f64) -> Result<Vec<(f64, f64)>> {
    let n = lattice_size(threshold, epsilon)?;
    let xs: Vec<f64> = (0..=n).map(|k| -threshold + k as f64 * epsilon).collect();
    let mut p = vec![0.0; n + 1];
    p[n] = 1.0;
    let interior = n - 1;
    if interior > 0 {
        let te = epsilon.tanh();
        // row k: -(1-g)/2 p[k-1] + p[k] - (1+g)/2 p[k+1] = 0
        let lower: Vec<f64> = (1..n).map(|k| -(1.0 - te * xs[k].tanh()) / 2.0).collect();
        let upper: Vec<f64> = (1..n).map(|k| -(1.0 + te * xs[k].tanh()) / 2.0).collect();
        let mut rhs = vec![0.0; interior];
        rhs[interior - 1] = -upper[interior - 1] * p[n];
        let solution = solve_tridiagonal(&lower, &vec![1.0; interior], &upper, &rhs);
        p[1..n].copy_from_slice(&solution);
    }
    Ok(xs.into_iter().zip(p).collect())
}

/// Thomas algorithm; `lower[0]` and `upper[last]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Hitting probability at lattice point x₀ from the tridiagonal solve.
pub fn hitting_prob_oracle(x0: f64, threshold: f64, epsilon: f64) -> Result<f64> {
    let n = lattice_size(threshold, epsilon)?;
    let k = (x0 + threshold) / epsilon;
    let kr = k.round();
    if (k - kr).abs() > LATTICE_TOL * k.abs().max(1.0) || kr < 0.0 || kr as usize > n {
        return Err(Error::OffLattice { x: x0, threshold, epsilon });
    }
    Ok(hitting_prob_lattice(threshold, epsilon)?[kr as usize].1)
}

/// A pure state √w₁|ψ₁⟩ + √w₂|ψ₂⟩ lying on the walk curve at x₀, with
/// w₁ = (1 − tanh x₀)/2 and w₂ = (1 + tanh x₀)/2.
#[derive(Clone, Debug)]
pub struct OnCurveState {
    pub x0: f64,
    pub psi1: Vec<C64>,
    pub psi2: Vec<C64>,
}

impl OnCurveState {
    pub fn new(x0: f64, psi1: Vec<C64>, psi2: Vec<C64>) -> Result<Self> {
        if psi1.len() != psi2.len() {
            return Err(Error::ShapeMismatch {
                expected: psi1.len(),
                found: psi2.len(),
            });
        }
        let inner: C64 = psi1.iter().zip(&psi2).map(|(a, b)| a.conj() * b).sum();
        let n1: f64 = psi1.iter().map(|z| z.norm_sqr()).sum();
        let n2: f64 = psi2.iter().map(|z| z.norm_sqr()).sum();
        if inner.norm() > IDENTITY_TOL || (n1 - 1.0).abs() > IDENTITY_TOL || (n2 - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::InvalidState("on-curve basis vectors must be orthonormal".into()));
        }
        Ok(Self { x0, psi1, psi2 })
    }

    pub fn weights(&self) -> (f64, f64) {
        (weight_minus(self.x0), weight_plus(self.x0))
    }
}

pub fn on_curve_state(params: &OnCurveState) -> QuantumState {
    let (w1, w2) = params.weights();
    let psi: Vec<C64> = params
        .psi1
        .iter()
        .zip(&params.psi2)
        .map(|(a, b)| a * w1.sqrt() + b * w2.sqrt())
        .collect();
    QuantumState {
        rho: ComplexMatrix::outer(&psi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::validate;
    use crate::matcore::{c64, trace_distance};

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(v)
    }

    fn projective_qubit() -> OperatorCurve {
        OperatorCurve::new(validate(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap()).unwrap()
    }

    fn trivial_qubit() -> OperatorCurve {
        let h = ComplexMatrix::identity(2).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        OperatorCurve::new(validate(&h, &h).unwrap()).unwrap()
    }

    fn basis(i: usize) -> Vec<C64> {
        (0..2).map(|k| c64(if k == i { 1.0 } else { 0.0 }, 0.0)).collect()
    }

    #[test]
    fn state_validation() {
        assert!(QuantumState::new(diag(&[0.5, 0.5])).is_ok());
        assert!(QuantumState::new(diag(&[0.6, 0.5])).is_err());
        assert!(QuantumState::new(diag(&[1.2, -0.2])).is_err());
        let s = QuantumState::from_pure(&[c64(3.0, 0.0), c64(0.0, 4.0)]).unwrap();
        assert!((s.rho().get(0, 0).re - 0.36).abs() < 1e-15);
        assert!(QuantumState::from_pure(&[c64(0.0, 0.0)]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(WalkConfig::new(0.1, 8.0, 1).is_ok());
        assert_eq!(WalkConfig::new(0.1, 8.0, 1).unwrap().max_steps, 64_000);
        assert!(WalkConfig::new(0.5, 0.5, 1).is_err());
        assert!(WalkConfig::new(0.5, 19.6, 1).is_err());
        assert!(WalkConfig::new(-0.1, 1.0, 1).is_err());
        assert!(WalkConfig::new(0.1, 1.0, 1).unwrap().with_max_steps(10).is_err());
    }

    #[test]
    fn trivial_step_keeps_state() {
        let curve = trivial_qubit();
        let state = QuantumState::from_pure(&[c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let out = step(&curve, &state, 0.0, 0.1, 0.3).unwrap();
        assert!((out.p_plus - 0.5).abs() < 1e-15);
        assert!(trace_distance(out.state.rho(), state.rho()).unwrap() < 1e-14);
        assert_eq!(out.direction, 1);
    }

    #[test]
    fn projective_step_probability_matches_walk_formula() {
        let curve = projective_qubit();
        let eps = 0.1;
        for x0 in [-1.3, 0.0, 0.5, 2.0] {
            let params = OnCurveState::new(x0, basis(0), basis(1)).unwrap();
            let (w1, w2) = params.weights();
            let out = step(&curve, &on_curve_state(&params), x0, eps, 0.99).unwrap();
            let expected = (1.0 + eps.tanh() * (w2 - w1)) / 2.0;
            assert!((out.p_plus - expected).abs() < 1e-14);
            assert!((out.p_plus + out.p_minus - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_draw_moves_up() {
        let curve = projective_qubit();
        let out = step(&curve, &QuantumState::maximally_mixed(2), 3.0, 0.1, 0.0).unwrap();
        assert_eq!(out.direction, 1);
        assert!((out.x - 3.1).abs() < 1e-15);
    }

    #[test]
    fn degenerate_branch_is_reported() {
        // |0⟩ against P(+17): p₊ = (1 - tanh 17)/2 ≈ 1.7e-15
        let curve = projective_qubit();
        let zero = QuantumState::from_pure(&basis(0)).unwrap();
        match step(&curve, &zero, 0.0, 17.0, 0.0) {
            Err(Error::DegenerateProbability { p }) => assert!(p < MIN_BRANCH_PROBABILITY),
            other => panic!("unexpected {other:?}"),
        }
        assert!(step(&curve, &zero, 0.0, 17.0, 0.5).is_ok());
    }

    #[test]
    fn single_step_walk() {
        // ε = X: the walk ends after one step with the one-step probabilities
        let curve = projective_qubit();
        let state = QuantumState::from_pure(&[c64(0.3f64.sqrt(), 0.0), c64(0.7f64.sqrt(), 0.0)]).unwrap();
        let config = WalkConfig {
            epsilon: 1.0,
            threshold: 1.0,
            max_steps: 10,
            seed: 9,
            log_steps: true,
        };
        let one = step(&curve, &state, 0.0, 1.0, 0.5).unwrap();
        let walker = Walker::new(&curve, &config).unwrap();
        let mut ups = 0;
        let n = 4000;
        for i in 0..n {
            let rec = walker.run(&state, i).unwrap();
            assert_eq!(rec.steps, 1);
            assert_eq!(rec.final_x.abs(), 1.0);
            if rec.outcome == 2 {
                ups += 1;
            }
        }
        let freq = ups as f64 / n as f64;
        let sigma = (one.p_plus * (1.0 - one.p_plus) / n as f64).sqrt();
        assert!((freq - one.p_plus).abs() < 4.0 * sigma, "{freq} vs {}", one.p_plus);
    }

    #[test]
    fn record_invariants() {
        let curve = projective_qubit();
        let config = WalkConfig::new(0.1, 2.0, 5).unwrap();
        let walker = Walker::new(&curve, &config).unwrap();
        let state = QuantumState::maximally_mixed(2);
        for i in 0..200 {
            let rec = walker.run(&state, i).unwrap();
            assert!(rec.final_x.abs() >= 2.0 && rec.final_x.abs() < 2.1);
            assert_eq!(rec.outcome == 2, rec.final_x >= 2.0);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let curve = projective_qubit();
        let config = WalkConfig::new(0.1, 3.0, 77).unwrap().with_step_log(true);
        let walker = Walker::new(&curve, &config).unwrap();
        let state = QuantumState::maximally_mixed(2);
        let a = walker.run(&state, 12).unwrap();
        let b = walker.run(&state, 12).unwrap();
        assert_eq!(a.step_log, b.step_log);
        assert_eq!(a.seed_used, b.seed_used);
        assert_ne!(trajectory_seed(77, 12), trajectory_seed(77, 13));
        assert_ne!(trajectory_seed(77, 12), trajectory_seed(78, 12));
    }

    #[test]
    fn max_steps_abort() {
        let curve = projective_qubit();
        let mut config = WalkConfig::new(0.1, 8.0, 1).unwrap();
        config.max_steps = 3;
        let err = Walker::new(&curve, &config).unwrap().run(&QuantumState::maximally_mixed(2), 0);
        assert!(matches!(err, Err(Error::MaxStepsExceeded { steps: 3, .. })));
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(hitting_prob_closed(0.0, 3.0), 0.5);
        // tanh(0.5) = 0.46211716, tanh(8) = 0.99999977
        assert!((hitting_prob_closed(0.5, 8.0) - 0.731_058_6).abs() < 1e-7);
        assert!((hitting_prob_closed(8.0, 8.0) - 1.0).abs() < 1e-15);
        assert!(hitting_prob_closed(-8.0, 8.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_examples() {
        for eps in [0.5, 0.1] {
            for (x, p) in hitting_prob_lattice(4.0, eps).unwrap() {
                assert!((p - hitting_prob_closed(x, 4.0)).abs() < 1e-10, "x={x}");
            }
            assert!((hitting_prob_oracle(0.0, 4.0, eps).unwrap() - 0.5).abs() < 1e-12);
        }
        // two-site lattice: p(0) = (1 + tanh 1 · tanh 0)/2 · 1 = 1/2
        assert!((hitting_prob_oracle(0.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(hitting_prob_oracle(0.05, 4.0, 0.1), Err(Error::OffLattice { .. })));
        assert!(matches!(hitting_prob_oracle(0.0, 4.0, 0.3), Err(Error::OffLattice { .. })));
    }

    #[test]
    fn on_curve_examples() {
        let s = on_curve_state(&OnCurveState::new(0.0, basis(0), basis(1)).unwrap());
        assert!((s.rho().get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((s.rho().get(0, 1).re - 0.5).abs() < 1e-15);

        let far = on_curve_state(&OnCurveState::new(20.0, basis(0), basis(1)).unwrap());
        let target = QuantumState::from_pure(&basis(1)).unwrap();
        let td = trace_distance(far.rho(), target.rho()).unwrap();
        assert!(td <= 3e-9, "{td}");
        assert!((td - weight_minus(20.0).sqrt()).abs() < 1e-12);

        let p = OnCurveState::new(0.5, basis(0), basis(1)).unwrap();
        assert!((p.weights().1 - 0.731_058_6).abs() < 1e-7);
        assert!(OnCurveState::new(0.0, basis(0), basis(0)).is_err());
    }
}
