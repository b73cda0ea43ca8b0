//! Seeded data generation and libsvm ingestion.
//!
//! All randomness comes from `Xoshiro256PlusPlus` seeded through
//! `seed_from_u64`, so a seed fixes the data on every platform.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{write_atomic, HarnessError};
use crate::linalg::{DenseVector, Matrix};

/// Name of the generator behind every seeded routine.
pub const PRNG_ALGORITHM: &str = "xoshiro256++ (seed_from_u64, SplitMix64 expansion)";

/// Dense design matrix with one label or response per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub features: Matrix,
    pub targets: DenseVector,
    /// generating coefficients, when known
    pub truth: Option<DenseVector>,
}

impl DataSet {
    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.targets.as_slice().to_vec()
    }
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn normal(rng: &mut Xoshiro256PlusPlus) -> f64 {
    rng.sample(StandardNormal)
}

fn check_sizes(n: usize, dim: usize, support: usize) -> Result<(), HarnessError> {
    if n == 0 || dim == 0 {
        return Err(HarnessError::InvalidSpec(format!(
            "need n >= 1 and dim >= 1, got n={n}, dim={dim}"
        )));
    }
    if support > dim {
        return Err(HarnessError::InvalidSpec(format!(
            "support {support} exceeds dim {dim}"
        )));
    }
    Ok(())
}

/// Standard normal design and a sparse truth with `support` normal entries
/// on a uniformly drawn index set.
fn design_and_truth(
    rng: &mut Xoshiro256PlusPlus,
    n: usize,
    dim: usize,
    support: usize,
) -> (Matrix, DenseVector) {
    let data: Vec<f64> = (0..n * dim).map(|_| normal(rng)).collect();
    let features = Matrix::from_row_major(n, dim, data).expect("normal samples are finite");
    let mut indices: Vec<usize> = (0..dim).collect();
    indices.shuffle(rng);
    let mut truth = DenseVector::zeros(dim);
    for &i in &indices[..support] {
        truth[i] = normal(rng);
    }
    (features, truth)
}

/// Logistic data: labels `sign(⟨a_i, x*⟩ + 0.1·noise)` with zero mapped to `+1`.
pub fn gen_logistic_data(
    n: usize,
    dim: usize,
    seed: u64,
    support: usize,
) -> Result<DataSet, HarnessError> {
    check_sizes(n, dim, support)?;
    let mut rng = rng(seed);
    let (features, truth) = design_and_truth(&mut rng, n, dim, support);
    let margins = features.mul_vec(&truth);
    let labels: Vec<f64> = margins
        .iter()
        .map(|m| {
            if m + 0.1 * normal(&mut rng) >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Ok(DataSet {
        features,
        targets: DenseVector::new(labels).expect("labels are finite"),
        truth: Some(truth),
    })
}

/// Regression data `y = A x* + σ·noise`.
pub fn gen_least_squares_data(
    n: usize,
    dim: usize,
    seed: u64,
    noise_sigma: f64,
    support: usize,
) -> Result<DataSet, HarnessError> {
    check_sizes(n, dim, support)?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(HarnessError::InvalidSpec(format!(
            "noise must be >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = rng(seed);
    let (features, truth) = design_and_truth(&mut rng, n, dim, support);
    let clean = features.mul_vec(&truth);
    let y: Vec<f64> = clean
        .iter()
        .map(|v| v + noise_sigma * normal(&mut rng))
        .collect();
    let targets = DenseVector::new(y).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    Ok(DataSet {
        features,
        targets,
        truth: Some(truth),
    })
}

/// Seeded standard normal vector.
pub fn gen_normal_vector(dim: usize, seed: u64) -> DenseVector {
    let mut rng = rng(seed);
    DenseVector::new((0..dim).map(|_| normal(&mut rng)).collect())
        .expect("normal samples are finite")
}

/// How the leading field of a libsvm line is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// `0` and negatives become `−1`, positives `+1`
    Binary,
    /// kept as a real response
    Real,
}

/// Reads a libsvm file with binary labels; the dimension is the largest index.
pub fn read_libsvm(path: &Path) -> Result<DataSet, HarnessError> {
    read_libsvm_with(path, LabelMode::Binary, None)
}

/// Reads a libsvm file (`label idx:val ...`, 1-based indices). `min_dim` pads
/// the column count when trailing columns are all zero.
pub fn read_libsvm_with(
    path: &Path,
    mode: LabelMode,
    min_dim: Option<usize>,
) -> Result<DataSet, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_libsvm(&text, mode, min_dim)
}

pub fn parse_libsvm(
    text: &str,
    mode: LabelMode,
    min_dim: Option<usize>,
) -> Result<DataSet, HarnessError> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = min_dim.unwrap_or(0);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| HarnessError::Parse {
            line: lineno + 1,
            message,
        };
        let mut fields = line.split_whitespace();
        let head = fields.next().expect("non-empty line has a field");
        let raw: f64 = head
            .parse()
            .map_err(|_| err(format!("bad label {head:?}")))?;
        if !raw.is_finite() {
            return Err(err(format!("non-finite label {head:?}")));
        }
        labels.push(match mode {
            LabelMode::Binary if raw > 0.0 => 1.0,
            LabelMode::Binary => -1.0,
            LabelMode::Real => raw,
        });
        let mut row = Vec::new();
        for field in fields {
            let (idx, val) = field
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got {field:?}")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(err("indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite value {val}")));
            }
            dim = dim.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::EmptyFile);
    }
    if dim == 0 {
        return Err(HarnessError::Parse {
            line: 1,
            message: "no feature columns".into(),
        });
    }
    let mut features = Matrix::zeros(rows.len(), dim);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features.set(i, j, v);
        }
    }
    Ok(DataSet {
        features,
        targets: DenseVector::new(labels).expect("labels checked finite"),
        truth: None,
    })
}

/// libsvm text for a data set; zeros are omitted and values use the shortest
/// round-trip decimal form.
pub fn format_libsvm(data: &DataSet, mode: LabelMode) -> String {
    let mut out = String::new();
    for i in 0..data.n() {
        let label = data.targets[i];
        match mode {
            LabelMode::Binary => out.push_str(if label > 0.0 { "+1" } else { "-1" }),
            LabelMode::Real => write!(out, "{label:?}").unwrap(),
        }
        for (j, v) in data.features.row(i).iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{v:?}", j + 1).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_libsvm(data: &DataSet, mode: LabelMode, path: &Path) -> Result<(), HarnessError> {
    write_atomic(path, format_libsvm(data, mode).as_bytes())
}
