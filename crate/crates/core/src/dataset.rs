//! Training data: a `d × n` feature matrix (one sample per column) and binary
//! labels in `{0, 1}`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::logistic::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array1<f64>,
}

impl Dataset {
    /// Builds a dataset from a `d × n` matrix whose columns are samples.
    pub fn new(features: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        let (d, n) = features.dim();
        if d == 0 || n == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one feature and one sample, got d={d}, n={n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value at feature {}, sample {}",
                pos / n,
                pos % n
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidDataset(format!(
                "label {} of sample {i} is not 0 or 1",
                labels[i]
            )));
        }
        Ok(Dataset { features, labels })
    }

    /// Builds a dataset from row-major samples (one inner vector per sample).
    pub fn from_samples(samples: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        let d = samples.first().map_or(0, Vec::len);
        let mut features = Array2::zeros((d, n));
        for (i, s) in samples.iter().enumerate() {
            if s.len() != d {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: d,
                    found: s.len(),
                });
            }
            for (j, &v) in s.iter().enumerate() {
                features[[j, i]] = v;
            }
        }
        Dataset::new(features, Array1::from(labels))
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    /// Returns a copy with a constant-1 feature appended as the last row.
    ///
    /// The extra coordinate is penalized like any other.
    pub fn with_bias(&self) -> Dataset {
        let (d, n) = self.features.dim();
        let mut features = Array2::ones((d + 1, n));
        features
            .slice_mut(ndarray::s![..d, ..])
            .assign(&self.features);
        Dataset {
            features,
            labels: self.labels.clone(),
        }
    }

    /// Restricts the dataset to the given sample indices, in order.
    pub fn select(&self, samples: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.features.select(Axis(1), samples),
            self.labels.select(Axis(0), samples),
        )
    }

    /// Whether both classes appear among the labels.
    pub fn has_both_classes(&self) -> bool {
        let ones = self.labels.iter().filter(|&&y| y == 1.0).count();
        ones > 0 && ones < self.n_samples()
    }
}

/// Which column of a CSV file holds the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

impl From<usize> for LabelColumn {
    fn from(i: usize) -> Self {
        LabelColumn::Index(i)
    }
}

fn parse_label(raw: &str, row: usize) -> Result<f64> {
    let invalid = || Error::InvalidLabel {
        row,
        value: raw.to_string(),
    };
    let v: f64 = raw.trim().parse().map_err(|_| invalid())?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == 0.0 || v == -1.0 {
        Ok(0.0)
    } else {
        Err(invalid())
    }
}

/// Loads a comma-separated file whose rows are samples.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: impl Into<LabelColumn>,
    has_header: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, label_column.into(), has_header).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses CSV text. Row numbers in errors are 1-based file lines.
pub fn parse_csv<R: Read>(reader: R, label_column: LabelColumn, has_header: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut samples: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::io("<csv>", source),
            other => Error::InvalidDataset(format!("row {row}: {other:?}")),
        })?;
        if has_header && idx == 0 {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        if expected < 2 {
            return Err(Error::InvalidDataset(format!(
                "row {row}: need at least one feature column and a label column"
            )));
        }
        let label_idx = match label_column {
            LabelColumn::Index(i) if i < expected => i,
            LabelColumn::Index(i) => {
                return Err(Error::InvalidParameter(format!(
                    "label column {i} out of range for {expected} columns"
                )))
            }
            LabelColumn::Last => expected - 1,
        };
        let mut sample = Vec::with_capacity(expected - 1);
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                labels.push(parse_label(cell, row)?);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row,
                    column: col,
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        row,
                        column: col,
                        value: cell.to_string(),
                    });
                }
                sample.push(v);
            }
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    Dataset::from_samples(&samples, labels)
}

/// Loads a LIBSVM-format file (`label idx:val ...`, 1-based indices).
///
/// The feature count is the larger of the highest index seen and
/// `n_features`.
pub fn load_libsvm(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(file), n_features).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<Dataset> {
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<libsvm>", e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        labels.push(parse_label(label, line_no)?);

        let mut sample = Vec::new();
        let mut previous = 0usize;
        for token in tokens {
            let malformed = || Error::MalformedPair {
                line: line_no,
                token: token.to_string(),
            };
            let (i, v) = token.split_once(':').ok_or_else(malformed)?;
            let i: usize = i.parse().map_err(|_| malformed())?;
            let v: f64 = v.parse().map_err(|_| malformed())?;
            if i == 0 || !v.is_finite() {
                return Err(malformed());
            }
            if i <= previous {
                return Err(Error::NonIncreasingIndex {
                    line: line_no,
                    index: i,
                    previous,
                });
            }
            previous = i;
            sample.push((i - 1, v));
        }
        max_index = max_index.max(previous);
        entries.push(sample);
    }

    let d = max_index.max(n_features.unwrap_or(0));
    let n = entries.len();
    if n == 0 {
        return Err(Error::InvalidDataset("no data lines".into()));
    }
    let mut features = Array2::zeros((d, n));
    for (col, sample) in entries.iter().enumerate() {
        for &(row, v) in sample {
            features[[row, col]] = v;
        }
    }
    Dataset::new(features, Array1::from(labels))
}

/// Writes the dataset in LIBSVM format, emitting only nonzero entries.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so reloading with `n_features = d` reproduces the dataset exactly.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for (col, y) in data.features.columns().into_iter().zip(data.labels.iter()) {
        write!(out, "{}", *y as u8)?;
        for (j, v) in col.iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_nonzero: usize,
    /// Standard deviation of Gaussian noise added to each margin before the
    /// Bernoulli draw.
    pub noise_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n_samples: usize, n_features: usize, n_nonzero: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_samples,
            n_features,
            n_nonzero,
            noise_scale: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_features == 0 {
            return Err(Error::InvalidParameter(
                "synthetic data needs n_samples >= 1 and n_features >= 1".into(),
            ));
        }
        if self.n_nonzero > self.n_features {
            return Err(Error::InvalidParameter(format!(
                "n_nonzero ({}) exceeds n_features ({})",
                self.n_nonzero, self.n_features
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidParameter("noise_scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// Draws a random sparse logistic model and samples from it.
///
/// Features are i.i.d. standard normal; the first `n_nonzero` true
/// coefficients are `±U[0.5, 1.5]` and the rest zero. Labels are
/// `Bernoulli(sigmoid(βᵀx + noise))`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Array1<f64>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (d, n) = (spec.n_features, spec.n_samples);

    let mut features = Array2::zeros((d, n));
    for i in 0..n {
        for j in 0..d {
            features[[j, i]] = rng.sample::<f64, _>(StandardNormal);
        }
    }

    let mut beta = Array1::zeros(d);
    for b in beta.iter_mut().take(spec.n_nonzero) {
        let magnitude = rng.random_range(0.5..=1.5);
        *b = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }

    let margins = features.t().dot(&beta);
    let labels = margins.mapv(|z: f64| {
        let noise = if spec.noise_scale > 0.0 {
            spec.noise_scale * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let p = sigmoid(z + noise);
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    });

    Ok((Dataset::new(features, labels)?, beta))
}
