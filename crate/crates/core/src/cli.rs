//! Command-line front end. [`run`] takes the argument list and output
//! streams and returns the process exit code, so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 verification or statistical failure, 2 usage,
//! configuration or parse error, 3 abort-rate breach or runtime walk failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::curves::OperatorCurve;
use crate::error::Error;
use crate::harness::{compare_multi_detailed, run_ensemble_from, EnsembleRun, MIN_TRAJECTORIES};
use crate::instrument::{weakness, Instrument};
use crate::io::{read_instrument, read_state, write_json, write_report_csv, write_trajectories, LoadedInstrument};
use crate::matcore::{hermitian_eig, polar_decompose, ComplexMatrix};
use crate::verify::{self, Suite};
use crate::walk::{QuantumState, WalkConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ABORTS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "weakwalk", version, about = "Decompose measurements into random walks of weak measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check completeness and classify an instrument file.
    Validate { instrument: PathBuf },
    /// Run a Monte Carlo ensemble and compare it with the direct measurement.
    Simulate(RunSpec),
    /// Run an invariant suite over random instruments.
    Verify {
        /// identities, composition, ancilla, hitting, weakness or all
        suite: String,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
    },
    /// Print the weak measurement operator M(x, y).
    Curve {
        #[arg(long)]
        instrument: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
    },
}

#[derive(Debug, clap::Args)]
pub struct RunSpec {
    #[arg(long)]
    pub instrument: PathBuf,
    /// Initial state; maximally mixed when omitted.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long)]
    pub trajectories: usize,
    #[arg(long)]
    pub seed: u64,
    /// Ensemble report (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-trajectory rows (JSONL).
    #[arg(long)]
    pub trajectories_out: Option<PathBuf>,
    /// Per-outcome summary (CSV).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Record the ±1 step sequence of every trajectory.
    #[arg(long)]
    pub log_steps: bool,
    /// Start position on the curve (two-outcome instruments only).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub start: f64,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..12).contains(&mag) {
        format!("{:.*}", (11 - mag) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::CompletenessViolation { .. } => EXIT_FAILURE,
        Error::MaxStepsExceeded { .. } | Error::DegenerateProbability { .. } => EXIT_ABORTS,
        _ => EXIT_USAGE,
    }
}

fn fail(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    exit_code_for(e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { instrument } => cmd_validate(&instrument, out),
        Command::Simulate(spec) => cmd_simulate(&spec, out),
        Command::Verify { suite, seeds } => cmd_verify(&suite, seeds, out),
        Command::Curve { instrument, x, y } => cmd_curve(&instrument, x, y, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => fail(err, &e),
    }
}

fn print_matrix(out: &mut dyn Write, m: &ComplexMatrix) -> std::io::Result<()> {
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim())
            .map(|j| {
                let z = m.get(i, j);
                format!("{} {}i", sig12(z.re), sig12(z.im))
            })
            .collect();
        writeln!(out, "  [{}]", row.join(", "))?;
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(e.to_string())
}

fn print_spectra(out: &mut dyn Write, ops: &[ComplexMatrix]) -> crate::Result<()> {
    for (j, m) in ops.iter().enumerate() {
        let eff = (&m.adjoint() * m).hermitian_part();
        let spec: Vec<String> = hermitian_eig(&eff)?.eigenvalues.iter().map(|&v| sig12(v)).collect();
        writeln!(out, "spectrum of M{}^dag M{}: [{}]", j + 1, j + 1, spec.join(", ")).map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_validate(path: &std::path::Path, out: &mut dyn Write) -> crate::Result<i32> {
    match read_instrument(path) {
        Ok(LoadedInstrument::Binary(inst)) => {
            writeln!(out, "class: {}", inst.class()).map_err(io_err)?;
            writeln!(out, "dimension: {}", inst.dim()).map_err(io_err)?;
            writeln!(out, "completeness residual: {}", sig12(inst.completeness_residual())).map_err(io_err)?;
            print_spectra(out, &[inst.m1().clone(), inst.m2().clone()])?;
            Ok(EXIT_OK)
        }
        Ok(LoadedInstrument::Multi(multi)) => {
            writeln!(out, "class: MultiOutcome ({} outcomes)", multi.outcomes()).map_err(io_err)?;
            writeln!(out, "dimension: {}", multi.dim()).map_err(io_err)?;
            writeln!(out, "completeness residual: {}", sig12(multi.completeness_residual())).map_err(io_err)?;
            print_spectra(out, multi.operators())?;
            Ok(EXIT_OK)
        }
        Err(Error::CompletenessViolation { residual }) => {
            writeln!(out, "invalid: completeness residual {}", sig12(residual)).map_err(io_err)?;
            Ok(EXIT_FAILURE)
        }
        Err(e) => Err(e),
    }
}

fn binary(path: &std::path::Path) -> crate::Result<Instrument> {
    match read_instrument(path)? {
        LoadedInstrument::Binary(inst) => Ok(inst),
        LoadedInstrument::Multi(m) => Err(Error::InvalidConfig(format!(
            "expected a two-outcome instrument, found {} outcomes",
            m.outcomes()
        ))),
    }
}

pub fn cmd_simulate(spec: &RunSpec, out: &mut dyn Write) -> crate::Result<i32> {
    if spec.trajectories < MIN_TRAJECTORIES {
        return Err(Error::InvalidConfig(format!(
            "--trajectories must be at least {MIN_TRAJECTORIES}, got {}",
            spec.trajectories
        )));
    }
    let mut config = WalkConfig::new(spec.epsilon, spec.threshold, spec.seed)?.with_step_log(spec.log_steps);
    if let Some(max) = spec.max_steps {
        config = config.with_max_steps(max)?;
    }
    let instrument = read_instrument(&spec.instrument)?;
    let dim = match &instrument {
        LoadedInstrument::Binary(i) => i.dim(),
        LoadedInstrument::Multi(m) => m.dim(),
    };
    let state = match &spec.state {
        Some(p) => read_state(p)?,
        None => QuantumState::maximally_mixed(dim),
    };
    if state.dim() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            found: state.dim(),
        });
    }
    let run: EnsembleRun = match instrument {
        LoadedInstrument::Binary(inst) => {
            let curve = OperatorCurve::new(inst)?;
            if curve.x_clamp() < spec.threshold + spec.epsilon {
                return Err(Error::InvalidConfig(format!(
                    "threshold + epsilon must not exceed the clamp {}",
                    curve.x_clamp()
                )));
            }
            run_ensemble_from(&curve, &state, &config, spec.trajectories, spec.start, None)?
        }
        LoadedInstrument::Multi(multi) => {
            if spec.start != 0.0 {
                return Err(Error::InvalidConfig("--start applies to two-outcome instruments only".into()));
            }
            compare_multi_detailed(&multi, &state, &config, spec.trajectories)?
        }
    };
    let report = &run.report;

    if let Some(path) = &spec.out {
        write_json(path, report)?;
    }
    if let Some(path) = &spec.trajectories_out {
        write_trajectories(std::fs::File::create(path).map_err(io_err)?, &run.trajectories)?;
    }
    if let Some(path) = &spec.csv {
        write_report_csv(std::fs::File::create(path).map_err(io_err)?, report)?;
    }

    writeln!(out, "{:<8} {:>8} {:>20} {:>20} {:>20}", "outcome", "count", "target", "empirical", "z").map_err(io_err)?;
    for j in 0..report.target_probs.len() {
        let z = report.z_scores[j].map_or("undefined".to_string(), sig12);
        writeln!(
            out,
            "{:<8} {:>8} {:>20} {:>20} {:>20}",
            j + 1,
            report.outcome_counts[j],
            sig12(report.target_probs[j]),
            sig12(report.empirical_freqs[j]),
            z
        )
        .map_err(io_err)?;
    }
    for (j, td) in report.max_final_state_trace_distance.iter().enumerate() {
        if let Some(td) = td {
            writeln!(out, "max final-state trace distance, outcome {}: {}", j + 1, sig12(*td)).map_err(io_err)?;
        }
    }
    writeln!(out, "aborted: {} of {}", report.aborted, report.n_trajectories).map_err(io_err)?;

    if !report.abort_gate_passed() {
        writeln!(out, "abort rate {} exceeds the limit", sig12(report.abort_rate())).map_err(io_err)?;
        return Ok(EXIT_ABORTS);
    }
    let gate = report.gate();
    writeln!(
        out,
        "statistical gate: {} (max |z| {}, {} of {} allowed in the warning band)",
        if gate.passed { "pass" } else { "FAIL" },
        sig12(gate.max_abs_z),
        gate.in_warning_band,
        gate.allowed_in_band
    )
    .map_err(io_err)?;
    Ok(if gate.passed { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_verify(suite: &str, seeds: usize, out: &mut dyn Write) -> crate::Result<i32> {
    let suite = Suite::parse(suite)?;
    if seeds == 0 {
        return Err(Error::InvalidConfig("--seeds must be positive".into()));
    }
    let report = verify::run(suite, seeds)?;
    write!(out, "{report}").map_err(io_err)?;
    match report.first_failure() {
        None => {
            writeln!(out, "all checks passed").map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Some(c) => {
            writeln!(out, "failed: {} (residual {})", c.name, sig12(c.max_residual)).map_err(io_err)?;
            Ok(EXIT_FAILURE)
        }
    }
}

pub fn cmd_curve(path: &std::path::Path, x: f64, y: f64, out: &mut dyn Write) -> crate::Result<i32> {
    let curve = OperatorCurve::new(binary(path)?)?;
    let m = curve.weak_op(x, y)?;
    writeln!(out, "M({}, {}) [{}]:", sig12(x), sig12(y), curve.class()).map_err(io_err)?;
    print_matrix(out, &m).map_err(io_err)?;
    let w = weakness(&m);
    writeln!(out, "scalar: {} {}i", sig12(w.scalar.re), sig12(w.scalar.im)).map_err(io_err)?;
    writeln!(out, "deviation from scalar: {}", sig12(w.deviation)).map_err(io_err)?;
    if curve.generators().is_some() {
        let polar = polar_decompose(&m);
        writeln!(out, "polar unitary residual: {}", sig12(polar.unitary.unitarity_residual())).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.3), "0.300000000000");
        assert_eq!(sig12(-12.5), "-12.5000000000");
        assert_eq!(sig12(1.5e-7), "1.50000000000e-7");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn exit_codes_by_error() {
        assert_eq!(exit_code_for(&Error::CompletenessViolation { residual: 0.1 }), EXIT_FAILURE);
        assert_eq!(exit_code_for(&Error::MaxStepsExceeded { steps: 9, x: 0.0 }), EXIT_ABORTS);
        assert_eq!(exit_code_for(&Error::Parse("x".into())), EXIT_USAGE);
        assert_eq!(exit_code_for(&Error::ClampExceeded { x: 21.0, clamp: 20.0 }), EXIT_USAGE);
    }

    #[test]
    fn max_steps_below_the_floor_is_rejected() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let args = ["weakwalk", "simulate", "--instrument", "/nonexistent", "--epsilon", "0.1", "--threshold", "5",
            "--trajectories", "100", "--seed", "1", "--max-steps", "3"];
        assert_eq!(run(args, &mut o, &mut e), EXIT_USAGE);
        assert!(String::from_utf8(e).unwrap().contains("max steps"));
    }

    #[test]
    fn unknown_suite_is_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["weakwalk", "verify", "bogus"], &mut o, &mut e), EXIT_USAGE);
    }

    #[test]
    fn missing_arguments_are_usage_errors() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["weakwalk", "simulate"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(["weakwalk"], &mut o, &mut e), EXIT_USAGE);
    }
}
