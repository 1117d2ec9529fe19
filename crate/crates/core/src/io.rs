//! JSON/JSONL/CSV formats.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major lists of
//! rows. Instruments: `{"dimension": d, "operators": [M1, M2, ...]}`.
//! States: `{"dimension": d, "rho": M}` or `{"dimension": d, "psi": [z, ...]}`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{EnsembleReport, TrajectoryRow};
use crate::instrument::{validate, Instrument, MultiInstrument};
use crate::matcore::{c64, ComplexMatrix, C64};
use crate::walk::QuantumState;

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstrumentFile {
    pub dimension: usize,
    pub operators: Vec<JsonMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<[f64; 2]>>,
}

/// An instrument file holds either a binary instrument or a larger one.
// loaded once per command, so the size difference does not matter
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum LoadedInstrument {
    Binary(Instrument),
    Multi(MultiInstrument),
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, dim: usize) -> Result<ComplexMatrix> {
    if rows.len() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            found: rows.len(),
        });
    }
    let mut data = Vec::with_capacity(dim * dim);
    for row in rows {
        if row.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        data.extend(row.iter().map(|&[re, im]| c64(re, im)));
    }
    if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Parse("matrix entries must be finite".into()));
    }
    ComplexMatrix::from_row_major(dim, &data)
}

impl InstrumentFile {
    pub fn from_operators(ops: &[ComplexMatrix]) -> Self {
        Self {
            dimension: ops.first().map_or(0, ComplexMatrix::dim),
            operators: ops.iter().map(matrix_to_json).collect(),
        }
    }

    pub fn operators(&self) -> Result<Vec<ComplexMatrix>> {
        if self.dimension == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        self.operators.iter().map(|m| matrix_from_json(m, self.dimension)).collect()
    }

    pub fn load(&self) -> Result<LoadedInstrument> {
        let ops = self.operators()?;
        match ops.len() {
            0 | 1 => Err(Error::Parse(format!("need at least 2 operators, found {}", ops.len()))),
            2 => Ok(LoadedInstrument::Binary(validate(&ops[0], &ops[1])?)),
            _ => Ok(LoadedInstrument::Multi(MultiInstrument::new(ops)?)),
        }
    }
}

impl StateFile {
    pub fn from_state(state: &QuantumState) -> Self {
        Self {
            dimension: state.dim(),
            rho: Some(matrix_to_json(state.rho())),
            psi: None,
        }
    }

    pub fn load(&self) -> Result<QuantumState> {
        match (&self.rho, &self.psi) {
            (Some(rho), None) => QuantumState::new(matrix_from_json(rho, self.dimension)?),
            (None, Some(psi)) => {
                if psi.len() != self.dimension {
                    return Err(Error::ShapeMismatch {
                        expected: self.dimension,
                        found: psi.len(),
                    });
                }
                let v: Vec<C64> = psi.iter().map(|&[re, im]| c64(re, im)).collect();
                QuantumState::from_pure(&v)
            }
            _ => Err(Error::Parse("state needs exactly one of \"rho\" or \"psi\"".into())),
        }
    }
}

pub fn read_instrument(path: &Path) -> Result<LoadedInstrument> {
    let text = std::fs::read_to_string(path).map_err(parse_err)?;
    parse_instrument(&text)
}

pub fn parse_instrument(text: &str) -> Result<LoadedInstrument> {
    serde_json::from_str::<InstrumentFile>(text).map_err(parse_err)?.load()
}

pub fn read_state(path: &Path) -> Result<QuantumState> {
    let text = std::fs::read_to_string(path).map_err(parse_err)?;
    parse_state(&text)
}

pub fn parse_state(text: &str) -> Result<QuantumState> {
    serde_json::from_str::<StateFile>(text).map_err(parse_err)?.load()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(parse_err)?;
    std::fs::write(path, text + "\n").map_err(parse_err)
}

/// One JSON object per line.
pub fn write_trajectories<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(parse_err)?;
        out.write_all(b"\n").map_err(parse_err)?;
    }
    out.flush().map_err(parse_err)
}

pub fn read_trajectories<R: BufRead>(input: R) -> Result<Vec<TrajectoryRow>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|line| serde_json::from_str(&line.map_err(parse_err)?).map_err(parse_err))
        .collect()
}

#[derive(Serialize)]
struct ReportCsvRow {
    outcome: usize,
    count: usize,
    empirical_freq: f64,
    target_prob: f64,
    standard_error: f64,
    z_score: Option<f64>,
    mean_trace_distance: Option<f64>,
    max_trace_distance: Option<f64>,
}

/// One row per outcome.
pub fn write_report_csv<W: Write>(out: W, report: &EnsembleReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for j in 0..report.target_probs.len() {
        w.serialize(ReportCsvRow {
            outcome: j + 1,
            count: report.outcome_counts[j],
            empirical_freq: report.empirical_freqs[j],
            target_prob: report.target_probs[j],
            standard_error: report.standard_errors[j],
            z_score: report.z_scores[j],
            mean_trace_distance: report.mean_final_state_trace_distance[j],
            max_trace_distance: report.max_final_state_trace_distance[j],
        })
        .map_err(parse_err)?;
    }
    w.flush().map_err(parse_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::InstrumentClass;

    const PROJ: &str = r#"{"dimension": 2, "operators": [
        [[[1,0],[0,0]],[[0,0],[0,0]]],
        [[[0,0],[0,0]],[[0,0],[1,0]]]]}"#;

    #[test]
    fn parses_binary_instrument() {
        match parse_instrument(PROJ).unwrap() {
            LoadedInstrument::Binary(inst) => assert_eq!(inst.class(), InstrumentClass::Projective),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_operators() {
        let ops = vec![
            ComplexMatrix::from_row_major(2, &[c64(0.1, 0.2), c64(-0.3, 0.0), c64(0.0, 1e-17), c64(0.7, -0.4)]).unwrap(),
            ComplexMatrix::identity(2),
        ];
        let json = serde_json::to_string(&InstrumentFile::from_operators(&ops)).unwrap();
        let back: InstrumentFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.operators().unwrap(), ops);
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = r#"{"dimension": 2, "operators": [[[[1,0]]], [[[1,0]]]]}"#;
        assert!(matches!(parse_instrument(bad), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(parse_instrument("{"), Err(Error::Parse(_))));
        let one = r#"{"dimension": 1, "operators": [[[[1,0]]]]}"#;
        assert!(matches!(parse_instrument(one), Err(Error::Parse(_))));
    }

    #[test]
    fn parses_states() {
        let s = parse_state(r#"{"dimension": 2, "psi": [[1,0],[1,0]]}"#).unwrap();
        assert!((s.rho().get(0, 1).re - 0.5).abs() < 1e-15);
        let s = parse_state(r#"{"dimension": 2, "rho": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#).unwrap();
        assert!((s.rho().get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(parse_state(r#"{"dimension": 2}"#).is_err());
        assert!(parse_state(r#"{"dimension": 2, "rho": [[[1,0],[0,0]],[[0,0],[1,0]]]}"#).is_err());
    }

    #[test]
    fn trajectory_rows_round_trip() {
        let rows = vec![
            TrajectoryRow {
                index: 0,
                steps: 3,
                final_x: Some(1.5),
                outcome: Some(2),
                seed_used: 77,
                step_log: Some(vec![1, 1, 1]),
                trace_distance: None,
            },
            TrajectoryRow {
                index: 1,
                steps: 9,
                final_x: None,
                outcome: None,
                seed_used: 78,
                step_log: None,
                trace_distance: None,
            },
        ];
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"finalX\":1.5"));
        assert!(text.lines().next().unwrap().contains("\"stepLog\""));
        assert_eq!(read_trajectories(&buf[..]).unwrap(), rows);
    }
}
