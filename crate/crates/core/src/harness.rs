//! Seeded Monte Carlo ensembles comparing walk statistics with direct
//! application of the measurement.
//!
//! Trajectory i draws from its own stream (see [`crate::walk::trajectory_seed`]),
//! trajectories run on the rayon pool, and every reduction happens afterwards
//! in index order: integer counters, and pairwise sums for real accumulators.
//! Reports are therefore bit-identical for any thread count, apart from
//! `wall_clock`.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::OperatorCurve;
use crate::error::{Error, Result};
use crate::instrument::{binary_reduce, MultiInstrument, ReductionChain};
use crate::matcore::{trace_distance, ComplexMatrix};
use crate::walk::{trajectory_rng, QuantumState, WalkConfig, Walker};

pub const MIN_TRAJECTORIES: usize = 100;
/// Single-comparison gate in standard errors.
pub const Z_GATE: f64 = 3.0;
/// No comparison may exceed this.
pub const Z_HARD_LIMIT: f64 = 4.0;
/// Tolerated fraction of comparisons in (3σ, 4σ].
pub const WARNING_BAND_RATE: f64 = 1.0 / 20.0;
/// Tolerated fraction of aborted trajectories.
pub const MAX_ABORT_RATE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnsembleReport {
    pub n_trajectories: usize,
    pub outcome_counts: Vec<usize>,
    pub empirical_freqs: Vec<f64>,
    pub target_probs: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// (freq − target)/√(target(1 − target)/n); `None` when the target is 0 or 1
    /// and the frequency disagrees with it.
    pub z_scores: Vec<Option<f64>>,
    pub mean_final_state_trace_distance: Vec<Option<f64>>,
    pub max_final_state_trace_distance: Vec<Option<f64>>,
    pub aborted: usize,
    pub wall_clock: f64,
}

impl EnsembleReport {
    pub fn completed(&self) -> usize {
        self.n_trajectories - self.aborted
    }

    pub fn abort_rate(&self) -> f64 {
        self.aborted as f64 / self.n_trajectories as f64
    }

    /// z-scores of the first n − 1 outcomes; the last one is implied by the others.
    pub fn independent_z_scores(&self) -> Vec<f64> {
        let k = self.z_scores.len().saturating_sub(1).max(1);
        self.z_scores.iter().take(k).map(|z| z.unwrap_or(f64::INFINITY)).collect()
    }

    pub fn gate(&self) -> GateVerdict {
        statistical_gate(&self.independent_z_scores())
    }

    pub fn abort_gate_passed(&self) -> bool {
        self.abort_rate() <= MAX_ABORT_RATE
    }
}

/// Multiple-comparison verdict: every |z| ≤ 4 and at most ⌈k/20⌉ of k
/// comparisons in (3, 4].
#[derive(Clone, Debug, PartialEq)]
pub struct GateVerdict {
    pub passed: bool,
    pub comparisons: usize,
    pub max_abs_z: f64,
    pub in_warning_band: usize,
    pub allowed_in_band: usize,
    pub beyond_limit: usize,
}

pub fn statistical_gate(z_scores: &[f64]) -> GateVerdict {
    let abs: Vec<f64> = z_scores.iter().map(|z| z.abs()).collect();
    let in_band = abs.iter().filter(|&&z| z > Z_GATE && z <= Z_HARD_LIMIT).count();
    let beyond = abs.iter().filter(|&&z| z.is_nan() || z > Z_HARD_LIMIT).count();
    let allowed = (z_scores.len() as f64 * WARNING_BAND_RATE).ceil() as usize;
    GateVerdict {
        passed: beyond == 0 && in_band <= allowed,
        comparisons: z_scores.len(),
        max_abs_z: abs.iter().copied().fold(0.0, f64::max),
        in_warning_band: in_band,
        allowed_in_band: allowed,
        beyond_limit: beyond,
    }
}

/// Per-trajectory row for JSONL/CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrajectoryRow {
    pub index: u64,
    pub steps: usize,
    #[serde(rename = "finalX")]
    pub final_x: Option<f64>,
    /// 1-based outcome label; `None` for aborted trajectories.
    pub outcome: Option<usize>,
    pub seed_used: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step_log: Option<Vec<i8>>,
    #[serde(skip)]
    pub trace_distance: Option<f64>,
}

/// Report plus per-trajectory rows.
#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub report: EnsembleReport,
    pub trajectories: Vec<TrajectoryRow>,
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn ideal_states(operators: &[ComplexMatrix], rho: &ComplexMatrix) -> (Vec<f64>, Vec<Option<ComplexMatrix>>) {
    operators
        .iter()
        .map(|m| {
            let out = m.sandwich(rho);
            let p = out.trace().re;
            let state = (p > 1e-14).then(|| out.scale_real(1.0 / p).hermitian_part());
            (p, state)
        })
        .unzip()
}

fn aggregate(rows: &[TrajectoryRow], targets: Vec<f64>, n: usize, started: Instant) -> EnsembleReport {
    let outcomes = targets.len();
    let aborted = rows.iter().filter(|r| r.outcome.is_none()).count();
    let completed = n - aborted;
    let mut counts = vec![0usize; outcomes];
    let mut distances: Vec<Vec<f64>> = vec![Vec::new(); outcomes];
    for row in rows {
        if let Some(o) = row.outcome {
            counts[o - 1] += 1;
            if let Some(td) = row.trace_distance {
                distances[o - 1].push(td);
            }
        }
    }
    let nf = completed.max(1) as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let errors: Vec<f64> = targets.iter().map(|&p| (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / nf).sqrt()).collect();
    let z_scores = freqs
        .iter()
        .zip(&targets)
        .zip(&errors)
        .map(|((&f, &p), &se)| {
            if se > 0.0 {
                Some((f - p) / se)
            } else if (f - p).abs() < 1e-12 {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    let mean = distances
        .iter()
        .map(|d| (!d.is_empty()).then(|| pairwise_sum(d) / d.len() as f64))
        .collect();
    let max = distances
        .iter()
        .map(|d| (!d.is_empty()).then(|| d.iter().copied().fold(0.0, f64::max)))
        .collect();
    EnsembleReport {
        n_trajectories: n,
        outcome_counts: counts,
        empirical_freqs: freqs,
        target_probs: targets,
        standard_errors: errors,
        z_scores,
        mean_final_state_trace_distance: mean,
        max_final_state_trace_distance: max,
        aborted,
        wall_clock: started.elapsed().as_secs_f64(),
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_TRAJECTORIES {
        return Err(Error::InvalidConfig(format!(
            "an ensemble needs at least {MIN_TRAJECTORIES} trajectories, got {n}"
        )));
    }
    Ok(())
}

/// Runs `n` trajectories of a two-outcome walk from x = 0 and compares them
/// with Tr(Mⱼ ρ Mⱼ†) and the ideal conditional states.
pub fn run_ensemble(curve: &OperatorCurve, rho: &QuantumState, config: &WalkConfig, n: usize) -> Result<EnsembleReport> {
    Ok(run_ensemble_from(curve, rho, config, n, 0.0, None)?.report)
}

/// Like [`run_ensemble`] but starting at `x0` and optionally with explicit
/// target probabilities (e.g. hitting probabilities for on-curve starts).
pub fn run_ensemble_from(
    curve: &OperatorCurve,
    rho: &QuantumState,
    config: &WalkConfig,
    n: usize,
    x0: f64,
    targets: Option<Vec<f64>>,
) -> Result<EnsembleRun> {
    check_size(n)?;
    let started = Instant::now();
    let walker = Walker::starting_at(curve, config, x0)?;
    let inst = curve.instrument();
    let (born, ideal) = ideal_states(&[inst.m1().clone(), inst.m2().clone()], rho.rho());
    let targets = targets.unwrap_or(born);
    if targets.len() != 2 {
        return Err(Error::ShapeMismatch {
            expected: 2,
            found: targets.len(),
        });
    }

    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| match walker.run(rho, i) {
            Ok(rec) => {
                let label = rec.outcome as usize;
                let td = match &ideal[label - 1] {
                    Some(target) => Some(trace_distance(rec.final_state.rho(), target)?),
                    None => None,
                };
                Ok(TrajectoryRow {
                    index: i,
                    steps: rec.steps,
                    final_x: Some(rec.final_x),
                    outcome: Some(label),
                    seed_used: rec.seed_used,
                    step_log: rec.step_log,
                    trace_distance: td,
                })
            }
            Err(Error::MaxStepsExceeded { steps, .. }) => Ok(TrajectoryRow {
                index: i,
                steps,
                final_x: None,
                outcome: None,
                seed_used: crate::walk::trajectory_seed(config.seed, i),
                step_log: None,
                trace_distance: None,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let report = aggregate(&rows, targets, n, started);
    Ok(EnsembleRun { report, trajectories: rows })
}

struct ChainStage<'a> {
    walker: Walker<'a>,
    stop_unitary: &'a ComplexMatrix,
    final_unitary: Option<&'a ComplexMatrix>,
    label: usize,
}

fn apply_unitary(u: &ComplexMatrix, state: &QuantumState) -> QuantumState {
    QuantumState::from_evolved(u.sandwich(state.rho()))
}

fn run_chain<R: Rng + ?Sized>(
    stages: &[ChainStage<'_>],
    rho: &QuantumState,
    rng: &mut R,
) -> Result<std::result::Result<(usize, usize, f64, QuantumState), usize>> {
    let mut state = rho.clone();
    let mut steps = 0;
    let mut last_x = 0.0;
    for stage in stages {
        let rec = match stage.walker.run_with_rng(&state, rng) {
            Ok(rec) => rec,
            Err(Error::MaxStepsExceeded { steps: s, .. }) => return Ok(Err(steps + s)),
            Err(e) => return Err(e),
        };
        steps += rec.steps;
        last_x = rec.final_x;
        if rec.outcome == 1 {
            return Ok(Ok((stage.label, steps, last_x, apply_unitary(stage.stop_unitary, &rec.final_state))));
        }
        if let Some(u) = stage.final_unitary {
            return Ok(Ok((stage.label + 1, steps, last_x, apply_unitary(u, &rec.final_state))));
        }
        state = rec.final_state;
    }
    Err(Error::InvalidState(format!(
        "reduction chain ended without a terminal node (last x = {last_x})"
    )))
}

/// Runs an n-outcome measurement as its reduction chain, every node being a
/// full weak-measurement walk, and compares leaf frequencies with Tr(Mⱼ ρ Mⱼ†).
pub fn compare_multi(m: &MultiInstrument, rho: &QuantumState, config: &WalkConfig, n: usize) -> Result<EnsembleReport> {
    Ok(compare_multi_detailed(m, rho, config, n)?.report)
}

pub fn compare_multi_detailed(
    m: &MultiInstrument,
    rho: &QuantumState,
    config: &WalkConfig,
    n: usize,
) -> Result<EnsembleRun> {
    check_size(n)?;
    let chain: ReductionChain = binary_reduce(m)?;
    if chain.nodes.len() == 1 {
        let curve = OperatorCurve::new(chain.nodes[0].instrument.clone())?;
        return run_ensemble_from(&curve, rho, config, n, 0.0, None);
    }
    let started = Instant::now();
    let curves: Vec<OperatorCurve> = chain
        .nodes
        .iter()
        .map(|node| OperatorCurve::new(node.instrument.clone()))
        .collect::<Result<_>>()?;
    let stages: Vec<ChainStage<'_>> = chain
        .nodes
        .iter()
        .zip(&curves)
        .map(|(node, curve)| {
            Ok(ChainStage {
                walker: Walker::new(curve, config)?,
                stop_unitary: &node.stop_unitary,
                final_unitary: node.final_unitary.as_ref(),
                label: node.label,
            })
        })
        .collect::<Result<_>>()?;
    let (targets, ideal) = ideal_states(m.operators(), rho.rho());

    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut rng, seed_used) = trajectory_rng(config.seed, i);
            Ok(match run_chain(&stages, rho, &mut rng)? {
                Ok((label, steps, x, state)) => {
                    let td = match &ideal[label - 1] {
                        Some(target) => Some(trace_distance(state.rho(), target)?),
                        None => None,
                    };
                    TrajectoryRow {
                        index: i,
                        steps,
                        final_x: Some(x),
                        outcome: Some(label),
                        seed_used,
                        step_log: None,
                        trace_distance: td,
                    }
                }
                Err(steps) => TrajectoryRow {
                    index: i,
                    steps,
                    final_x: None,
                    outcome: None,
                    seed_used,
                    step_log: None,
                    trace_distance: None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&rows, targets, n, started);
    Ok(EnsembleRun { report, trajectories: rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::validate;
    use crate::matcore::c64;

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(v)
    }

    #[test]
    fn gate_allowance() {
        assert!(statistical_gate(&[0.1, -2.9, 1.0]).passed);
        assert!(statistical_gate(&[3.5]).passed);
        assert!(!statistical_gate(&[3.5, 3.2]).passed);
        assert!(!statistical_gate(&[4.1]).passed);
        assert!(!statistical_gate(&[f64::INFINITY]).passed);
        let mut z = vec![0.0; 20];
        z[3] = -3.7;
        assert!(statistical_gate(&z).passed);
        z[4] = 3.1;
        assert!(!statistical_gate(&z).passed);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.25).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
    }

    #[test]
    fn positive_qubit_targets() {
        let (a, b) = (0.7f64.sqrt(), 0.3f64.sqrt());
        let curve = OperatorCurve::new(validate(&diag(&[a, b]), &diag(&[b, a])).unwrap()).unwrap();
        let rho = QuantumState::from_pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let config = WalkConfig::new(0.2, 6.0, 11).unwrap();
        let report = run_ensemble(&curve, &rho, &config, 2000).unwrap();
        assert!((report.target_probs[0] - 0.7).abs() < 1e-14);
        assert!((report.target_probs[1] - 0.3).abs() < 1e-14);
        assert_eq!(report.outcome_counts.iter().sum::<usize>(), report.completed());
        assert!(report.gate().passed, "{report:?}");
    }

    #[test]
    fn trivial_instrument_terminates_with_even_odds() {
        let h = ComplexMatrix::identity(2).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        let curve = OperatorCurve::new(validate(&h, &h).unwrap()).unwrap();
        let config = WalkConfig::new(0.2, 4.0, 2).unwrap();
        let rho = QuantumState::maximally_mixed(2);
        let report = run_ensemble(&curve, &rho, &config, 1000).unwrap();
        assert_eq!(report.aborted, 0);
        assert!(report.target_probs.iter().all(|p| (p - 0.5).abs() < 1e-14));
        assert!(report.gate().passed);
        // the state is never disturbed
        assert!(report.max_final_state_trace_distance.iter().all(|d| d.unwrap() < 1e-12));
    }

    #[test]
    fn ensemble_is_reproducible() {
        let curve = OperatorCurve::new(validate(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap()).unwrap();
        let config = WalkConfig::new(0.25, 3.0, 99).unwrap();
        let rho = QuantumState::maximally_mixed(2);
        let mut a = run_ensemble(&curve, &rho, &config, 300).unwrap();
        let mut b = run_ensemble(&curve, &rho, &config, 300).unwrap();
        a.wall_clock = 0.0;
        b.wall_clock = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_ensembles() {
        let curve = OperatorCurve::new(validate(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap()).unwrap();
        let config = WalkConfig::new(0.25, 3.0, 99).unwrap();
        assert!(run_ensemble(&curve, &QuantumState::maximally_mixed(2), &config, 10).is_err());
    }
}
