//! Artifact writers.
//!
//! | file                 | columns / fields                                        |
//! |----------------------|---------------------------------------------------------|
//! | `trace.csv`          | `k,f,L_k,backtracks,nnz,time_s`                         |
//! | `coefficients.json`  | `d`, `lambda`, `penalty`, `variant`, `nonzeros` (index → value) |
//! | `summary.json`       | run summary                                             |
//! | `path.csv`           | `fraction,lambda,final_objective,iterations,nnz,time_s` |
//! | `path_coef_NN.json`  | coefficients at the NN-th fraction (ascending)          |
//! | `cv.csv`             | `fraction,fold,accuracy,nnz,iterations,reason`          |
//! | `cv_means.csv`       | `fraction,mean_accuracy,folds_used`                     |
//! | `bench.csv`          | `variant,n,d,median_time_s,median_iters`                |
//!
//! Reals in CSV files carry 17 significant digits; JSON numbers use the
//! shortest representation that parses back to the same `f64`. Coefficient
//! indices are 0-based.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::CvReport;
use crate::penalty::Penalty;
use crate::solver::{Trace, Variant};

pub const TRACE_HEADER: [&str; 6] = ["k", "f", "L_k", "backtracks", "nnz", "time_s"];
pub const PATH_HEADER: [&str; 6] = ["fraction", "lambda", "final_objective", "iterations", "nnz", "time_s"];
pub const CV_HEADER: [&str; 6] = ["fraction", "fold", "accuracy", "nnz", "iterations", "reason"];
pub const CV_MEANS_HEADER: [&str; 3] = ["fraction", "mean_accuracy", "folds_used"];
pub const BENCH_HEADER: [&str; 5] = ["variant", "n", "d", "median_time_s", "median_iters"];

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRecord {
    pub kind: String,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl From<&Penalty> for PenaltyRecord {
    fn from(p: &Penalty) -> Self {
        use crate::penalty::PenaltyKind::*;
        PenaltyRecord {
            kind: p.kind.name().to_string(),
            lambda: p.lambda,
            theta: matches!(p.kind, Scad | Mcp).then_some(p.theta),
            epsilon: (p.kind == CappedL1).then_some(p.epsilon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub d: usize,
    pub lambda: f64,
    pub lambda_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    pub penalty: PenaltyRecord,
    pub variant: String,
    pub nonzeros: BTreeMap<usize, f64>,
}

impl CoefficientFile {
    pub fn new(beta: &Array1<f64>, pen: &Penalty, variant: Variant, lambda_max: f64) -> Self {
        CoefficientFile {
            d: beta.len(),
            lambda: pen.lambda,
            lambda_max,
            fraction: None,
            penalty: pen.into(),
            variant: variant.name().to_string(),
            nonzeros: beta
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > crate::NONZERO_THRESHOLD)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = Some(fraction);
        self
    }

    /// Dense coefficient vector.
    pub fn to_dense(&self) -> Array1<f64> {
        let mut beta = Array1::zeros(self.d);
        for (&i, &v) in &self.nonzeros {
            beta[i] = v;
        }
        beta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub variant: String,
    pub penalty: String,
    pub lambda: f64,
    pub lambda_max: f64,
    pub lipschitz: f64,
    pub n_samples: usize,
    pub n_features: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub nnz: usize,
    /// Threads used by the solver's linear algebra.
    pub threads: usize,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub fraction: f64,
    pub lambda: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub nnz: usize,
    pub converged: bool,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub variant: String,
    pub n: usize,
    pub d: usize,
    pub median_time_s: f64,
    pub median_iters: usize,
}

#[derive(Debug, Serialize)]
struct TraceJson {
    k: usize,
    f: f64,
    #[serde(rename = "L_k")]
    l_k: f64,
    backtracks: usize,
    nnz: usize,
    time_s: f64,
}

#[derive(Debug, Serialize)]
struct CvJson<'a> {
    cells: Vec<CvCellJson<'a>>,
    means: Vec<CvMeanJson>,
}

#[derive(Debug, Serialize)]
struct CvCellJson<'a> {
    fraction: f64,
    fold: usize,
    accuracy: Option<f64>,
    nnz: usize,
    iterations: usize,
    reason: Option<&'a str>,
}

#[derive(Debug, Serialize)]
struct CvMeanJson {
    fraction: f64,
    mean_accuracy: Option<f64>,
    folds_used: usize,
}

/// Output directory, created on demand.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    fn csv_writer(&self, name: &str) -> Result<(csv::Writer<fs::File>, PathBuf)> {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok((csv::Writer::from_writer(file), path))
    }

    fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes `<stem>.csv` (and `<stem>.json`), keeping every `every`-th
    /// record plus the last.
    pub fn write_trace(&self, stem: &str, trace: &Trace, every: usize, json: bool) -> Result<()> {
        let every = every.max(1);
        let last = trace.records.len().saturating_sub(1);
        let kept: Vec<_> = trace
            .records
            .iter()
            .enumerate()
            .filter(|(i, r)| r.k % every == 0 || *i == last)
            .map(|(_, r)| r)
            .collect();

        let (mut w, path) = self.csv_writer(&format!("{stem}.csv"))?;
        let csv_err = |e: csv::Error| Error::Config(format!("writing {}: {e}", path.display()));
        w.write_record(TRACE_HEADER).map_err(csv_err)?;
        for r in &kept {
            w.write_record([
                r.k.to_string(),
                real(r.objective),
                real(r.l),
                r.backtracks.to_string(),
                r.nnz.to_string(),
                real(r.time_s),
            ])
            .map_err(csv_err)?;
        }
        Self::finish(w, &path)?;

        if json {
            let rows: Vec<TraceJson> = kept
                .iter()
                .map(|r| TraceJson {
                    k: r.k,
                    f: r.objective,
                    l_k: r.l,
                    backtracks: r.backtracks,
                    nnz: r.nnz,
                    time_s: r.time_s,
                })
                .collect();
            self.write_json(&format!("{stem}.json"), &rows)?;
        }
        Ok(())
    }

    pub fn write_path_rows(&self, stem: &str, rows: &[PathRow], json: bool) -> Result<()> {
        let (mut w, path) = self.csv_writer(&format!("{stem}.csv"))?;
        let csv_err = |e: csv::Error| Error::Config(format!("writing {}: {e}", path.display()));
        w.write_record(PATH_HEADER).map_err(csv_err)?;
        for r in rows {
            w.write_record([
                real(r.fraction),
                real(r.lambda),
                real(r.final_objective),
                r.iterations.to_string(),
                r.nnz.to_string(),
                real(r.time_s),
            ])
            .map_err(csv_err)?;
        }
        Self::finish(w, &path)?;
        if json {
            self.write_json(&format!("{stem}.json"), &rows)?;
        }
        Ok(())
    }

    pub fn write_cv(&self, report: &CvReport, json: bool) -> Result<()> {
        let (mut w, path) = self.csv_writer("cv.csv")?;
        let csv_err = |e: csv::Error| Error::Config(format!("writing {}: {e}", path.display()));
        w.write_record(CV_HEADER).map_err(csv_err)?;
        for c in &report.cells {
            w.write_record([
                real(c.fraction),
                c.fold.to_string(),
                c.accuracy.map(real).unwrap_or_default(),
                c.nnz.to_string(),
                c.iterations.to_string(),
                c.skipped_reason.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        Self::finish(w, &path)?;

        let means: Vec<CvMeanJson> = report
            .mean_accuracy()
            .into_iter()
            .map(|(fraction, mean)| CvMeanJson {
                fraction,
                mean_accuracy: mean,
                folds_used: report.cells_for(fraction).filter(|c| c.accuracy.is_some()).count(),
            })
            .collect();

        let (mut w, path) = self.csv_writer("cv_means.csv")?;
        let csv_err = |e: csv::Error| Error::Config(format!("writing {}: {e}", path.display()));
        w.write_record(CV_MEANS_HEADER).map_err(csv_err)?;
        for m in &means {
            w.write_record([
                real(m.fraction),
                m.mean_accuracy.map(real).unwrap_or_default(),
                m.folds_used.to_string(),
            ])
            .map_err(csv_err)?;
        }
        Self::finish(w, &path)?;

        if json {
            let cells = report
                .cells
                .iter()
                .map(|c| CvCellJson {
                    fraction: c.fraction,
                    fold: c.fold,
                    accuracy: c.accuracy,
                    nnz: c.nnz,
                    iterations: c.iterations,
                    reason: c.skipped_reason.as_deref(),
                })
                .collect();
            self.write_json("cv.json", &CvJson { cells, means })?;
        }
        Ok(())
    }

    pub fn write_bench(&self, rows: &[BenchRow], json: bool) -> Result<()> {
        let (mut w, path) = self.csv_writer("bench.csv")?;
        let csv_err = |e: csv::Error| Error::Config(format!("writing {}: {e}", path.display()));
        w.write_record(BENCH_HEADER).map_err(csv_err)?;
        for r in rows {
            w.write_record([
                r.variant.clone(),
                r.n.to_string(),
                r.d.to_string(),
                real(r.median_time_s),
                r.median_iters.to_string(),
            ])
            .map_err(csv_err)?;
        }
        Self::finish(w, &path)?;
        if json {
            self.write_json("bench.json", &rows)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e17] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn coefficient_file_round_trips() {
        let beta = array![0.0, 1.0 / 3.0, 0.0, -2.0];
        let file = CoefficientFile::new(&beta, &Penalty::scad(0.25, 3.7), Variant::IstaBB, 1.0);
        assert_eq!(file.nonzeros.len(), 2);
        let text = serde_json::to_string(&file).unwrap();
        let back: CoefficientFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_dense(), beta);
    }
}
