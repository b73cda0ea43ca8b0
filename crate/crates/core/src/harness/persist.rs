//! Trace files: a CSV of scalar columns, a JSON sidecar with the run
//! configuration and fitted quantities, and an optional binary sidecar with
//! the iterate vectors.
//!
//! For `run.csv` the sidecars are `run.json` and `run.bin`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_atomic, HarnessError};
use crate::analysis::Regime;
use crate::linalg::DenseVector;
use crate::trace::{IterateRecord, RunConfig, Termination, Trace};

pub const CSV_HEADER: [&str; 8] = [
    "k",
    "F",
    "step_norm",
    "L_k",
    "j_k",
    "cert_norm",
    "prox_residual",
    "inner_iters",
];
pub const BIN_MAGIC: &[u8; 5] = b"KLPX1";

/// Contents of the JSON sidecar. Non-finite fitted constants are stored as
/// `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config: RunConfig,
    pub termination: Termination,
    pub problem: Option<String>,
    pub seed: Option<u64>,
    pub fitted_a: Option<f64>,
    pub fitted_b: Option<f64>,
    pub q_order_tail: Option<f64>,
    pub regime: Option<Regime>,
}

impl TraceMeta {
    pub fn bare(trace: &Trace) -> Self {
        Self {
            config: trace.config.clone(),
            termination: trace.termination,
            problem: None,
            seed: None,
            fitted_a: None,
            fitted_b: None,
            q_order_tail: None,
            regime: None,
        }
    }
}

pub fn json_sidecar(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn bin_sidecar(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("bin")
}

fn float(v: f64) -> String {
    // 17 significant digits: exact round trip for every f64
    format!("{v:.16e}")
}

/// CSV bytes of the scalar columns.
pub fn trace_csv(trace: &Trace) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(HarnessError::csv)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            float(r.f_value),
            float(r.step_norm),
            float(r.l_k),
            r.j_k.to_string(),
            float(r.certificate_norm),
            float(r.prox_residual),
            r.inner_iterations.to_string(),
        ])
        .map_err(HarnessError::csv)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Schema(e.to_string()))
}

/// Binary sidecar: magic, then per record a `u32` length and that many `f64`,
/// all little-endian.
pub fn iterates_bin(trace: &Trace) -> Vec<u8> {
    let mut out = BIN_MAGIC.to_vec();
    for r in &trace.records {
        out.extend_from_slice(&(r.x.dim() as u32).to_le_bytes());
        for v in r.x.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes CSV and JSON sidecar, plus the binary sidecar when
/// `with_iterates` is set. Every file is written atomically.
pub fn write_trace_with(
    trace: &Trace,
    path: &Path,
    meta: &TraceMeta,
    with_iterates: bool,
) -> Result<(), HarnessError> {
    write_atomic(path, &trace_csv(trace)?)?;
    let json = serde_json::to_vec_pretty(meta).map_err(|e| HarnessError::Schema(e.to_string()))?;
    write_atomic(&json_sidecar(path), &json)?;
    if with_iterates {
        write_atomic(&bin_sidecar(path), &iterates_bin(trace))?;
    }
    Ok(())
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), HarnessError> {
    write_trace_with(trace, path, &TraceMeta::bare(trace), trace.has_iterates())
}

fn parse_bin(bytes: &[u8], expected: usize) -> Result<Vec<DenseVector>, HarnessError> {
    let bad = |m: &str| HarnessError::Schema(format!("iterate sidecar: {m}"));
    let mut rest = bytes
        .strip_prefix(BIN_MAGIC.as_slice())
        .ok_or_else(|| bad("missing magic"))?;
    let mut out = Vec::with_capacity(expected);
    while !rest.is_empty() {
        let (len, tail) = rest
            .split_first_chunk::<4>()
            .ok_or_else(|| bad("truncated length"))?;
        let len = u32::from_le_bytes(*len) as usize;
        if tail.len() < 8 * len {
            return Err(bad("truncated record"));
        }
        let entries: Vec<f64> = tail[..8 * len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(DenseVector::new(entries).map_err(|e| bad(&e.to_string()))?);
        rest = &tail[8 * len..];
    }
    if out.len() != expected {
        return Err(bad(&format!("{} records, csv has {expected}", out.len())));
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(
    value: &str,
    row: usize,
    column: &str,
) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Schema(format!("row {row}: bad {column} value {value:?}")))
}

/// Reads a trace and its sidecars. The binary sidecar is loaded when present.
pub fn read_trace_with_meta(path: &Path) -> Result<(Trace, TraceMeta), HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(HarnessError::csv)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Schema(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut records = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(HarnessError::csv)?;
        if rec.len() != CSV_HEADER.len() {
            return Err(HarnessError::Schema(format!(
                "row {row}: {} fields",
                rec.len()
            )));
        }
        records.push(IterateRecord {
            l_k: parse_field(&rec[3], row, "L_k")?,
            j_k: parse_field(&rec[4], row, "j_k")?,
            prox_residual: parse_field(&rec[6], row, "prox_residual")?,
            inner_iterations: parse_field(&rec[7], row, "inner_iters")?,
            ..IterateRecord::scalar(
                parse_field(&rec[0], row, "k")?,
                parse_field(&rec[1], row, "F")?,
                parse_field(&rec[2], row, "step_norm")?,
                parse_field(&rec[5], row, "cert_norm")?,
            )
        });
    }
    if records.is_empty() {
        return Err(HarnessError::Schema("trace has no records".into()));
    }
    let meta_path = json_sidecar(path);
    let meta_bytes = std::fs::read(&meta_path).map_err(|e| HarnessError::io(&meta_path, e))?;
    let meta: TraceMeta = serde_json::from_slice(&meta_bytes)
        .map_err(|e| HarnessError::Schema(format!("{}: {e}", meta_path.display())))?;

    let bin_path = bin_sidecar(path);
    if bin_path.exists() {
        let bytes = std::fs::read(&bin_path).map_err(|e| HarnessError::io(&bin_path, e))?;
        let iterates = parse_bin(&bytes, records.len())?;
        for (r, x) in records.iter_mut().zip(iterates) {
            r.x = x;
        }
    }
    let trace = Trace {
        records,
        config: meta.config.clone(),
        termination: meta.termination,
    };
    Ok((trace, meta))
}

pub fn read_trace(path: &Path) -> Result<Trace, HarnessError> {
    read_trace_with_meta(path).map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverConfig;

    fn sample() -> Trace {
        let mut t = Trace::from_scalars(
            &[1.0, 0.1, 1.0 / 3.0],
            &[0.1, 1e-300],
            &[f64::MIN_POSITIVE, 2.5],
            RunConfig::ProxNewton(SolverConfig::default()),
        );
        for (i, r) in t.records.iter_mut().enumerate() {
            r.x = DenseVector::new(vec![i as f64, 0.1 * i as f64]).unwrap();
            r.l_k = 1e-3 * (i + 1) as f64;
            r.j_k = i;
            r.inner_iterations = 10 * i;
            r.prox_residual = 0.7 / (i + 1) as f64;
        }
        t
    }

    #[test]
    fn header_is_exact() {
        let bytes = trace_csv(&sample()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("k,F,step_norm,L_k,j_k,cert_norm,prox_residual,inner_iters\n"));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let t = sample();
        write_trace(&t, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back.records.len(), t.records.len());
        for (a, b) in t.records.iter().zip(&back.records) {
            assert_eq!(a.f_value.to_bits(), b.f_value.to_bits());
            assert_eq!(a.step_norm.to_bits(), b.step_norm.to_bits());
            assert_eq!(a.certificate_norm.to_bits(), b.certificate_norm.to_bits());
            assert_eq!(a.x, b.x);
            assert_eq!(
                (a.k, a.j_k, a.inner_iterations),
                (b.k, b.j_k, b.inner_iterations)
            );
        }
        assert_eq!(back.config, t.config);
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "k,F\n0,1\n").unwrap();
        assert!(matches!(read_trace(&path), Err(HarnessError::Schema(_))));
    }
}
