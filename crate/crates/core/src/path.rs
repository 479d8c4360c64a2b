//! Regularization paths over fractions of `λ_max`, k-fold cross-validation,
//! and prediction.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::logistic::margins;
use crate::penalty::{Penalty, PenaltyKind};
use crate::solver::{fit, FitResult, SolverOptions, StartPoint};

/// The ten-point path used for the benchmark tables.
pub const DEFAULT_FRACTIONS: [f64; 10] = [0.01, 0.02, 0.05, 0.07, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8];

pub const DEFAULT_FOLDS: usize = 5;

/// `‖∇l(0)‖∞ = ‖X(½·1 − y)‖∞`, the smallest ℓ1 weight for which `β = 0` is
/// optimal.
pub fn lambda_max(data: &Dataset) -> Result<f64> {
    let residual = data.labels().mapv(|y| 0.5 - y);
    let grad = data.features().dot(&residual);
    let value = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::ZeroGradientAtOrigin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    /// Strictly increasing fractions of `λ_max` in `(0, 1]`.
    pub fractions: Vec<f64>,
    pub warm_start: bool,
    /// Shape of the penalty; its λ is replaced at every point.
    pub penalty: Penalty,
    /// When set, a capped-ℓ1 cap is recomputed as `ratio·λ` at every point
    /// instead of staying at `penalty.epsilon`.
    pub cap_ratio: Option<f64>,
    pub options: SolverOptions,
}

impl PathSpec {
    pub fn new(penalty: Penalty, options: SolverOptions) -> Self {
        PathSpec {
            fractions: DEFAULT_FRACTIONS.to_vec(),
            warm_start: true,
            penalty,
            cap_ratio: None,
            options,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidParameter("path needs at least one fraction".into()));
        }
        if let Some(f) = self.fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::InvalidParameter(format!("path fraction {f} outside (0, 1]")));
        }
        if self.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("path fractions must be strictly increasing".into()));
        }
        if let Some(r) = self.cap_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("cap ratio must be positive, got {r}")));
            }
        }
        self.options.validate()
    }

    /// Penalty used at `λ`.
    pub fn penalty_at(&self, lambda: f64) -> Penalty {
        let pen = self.penalty.with_lambda(lambda);
        match self.cap_ratio {
            Some(r) if pen.kind == PenaltyKind::CappedL1 => Penalty { epsilon: r * lambda, ..pen },
            _ => pen,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub fraction: f64,
    pub lambda: f64,
    pub result: FitResult,
}

impl PathPoint {
    pub fn nnz(&self) -> usize {
        self.result.nnz()
    }
}

/// Solves at `λ = fraction·λ_max` for every fraction, largest λ first.
///
/// The returned points are in the order they were solved (decreasing λ).
pub fn run_path(data: &Dataset, spec: &PathSpec) -> Result<Vec<PathPoint>> {
    spec.validate()?;
    let lmax = lambda_max(data)?;
    run_path_with_lambda_max(data, spec, lmax)
}

pub fn run_path_with_lambda_max(data: &Dataset, spec: &PathSpec, lmax: f64) -> Result<Vec<PathPoint>> {
    spec.validate()?;
    let mut points: Vec<PathPoint> = Vec::with_capacity(spec.fractions.len());
    for &fraction in spec.fractions.iter().rev() {
        let lambda = fraction * lmax;
        let pen = spec.penalty_at(lambda);
        let mut opts = spec.options.clone();
        if spec.warm_start {
            if let Some(prev) = points.last() {
                opts.start = StartPoint::Given(prev.result.beta.clone());
            }
        }
        let result = fit(data, &pen, &opts).map_err(|e| Error::PathPoint {
            fraction,
            source: Box::new(e),
        })?;
        points.push(PathPoint {
            fraction,
            lambda,
            result,
        });
    }
    Ok(points)
}

/// Seeded shuffle of `0..n` split into `k` contiguous folds whose sizes
/// differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k-fold needs 2 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Class predictions; `xᵀβ ≥ 0` (probability at least ½) maps to 1.
pub fn predict(beta: ArrayView1<f64>, data: &Dataset) -> Result<Array1<f64>> {
    if beta.len() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            found: beta.len(),
        });
    }
    Ok(margins(beta, data).mapv(|z| if z >= 0.0 { 1.0 } else { 0.0 }))
}

/// Fraction of predictions equal to the labels.
pub fn accuracy(predicted: &Array1<f64>, labels: &Array1<f64>) -> f64 {
    let hits = predicted.iter().zip(labels.iter()).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// One (fraction, fold) entry of a cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub fraction: f64,
    pub fold: usize,
    /// `None` when the fold was skipped.
    pub accuracy: Option<f64>,
    pub nnz: usize,
    pub iterations: usize,
    /// False when the fit stopped at `max_iters`; true for skipped folds.
    pub converged: bool,
    pub skipped_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub fractions: Vec<f64>,
    pub folds: usize,
    /// Cells ordered by fraction (ascending), then fold.
    pub cells: Vec<CvCell>,
}

impl CvReport {
    /// Mean accuracy over the non-skipped folds of each fraction.
    pub fn mean_accuracy(&self) -> Vec<(f64, Option<f64>)> {
        self.fractions
            .iter()
            .map(|&fraction| {
                let accs: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.fraction == fraction)
                    .filter_map(|c| c.accuracy)
                    .collect();
                let mean = (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64);
                (fraction, mean)
            })
            .collect()
    }

    pub fn cells_for(&self, fraction: f64) -> impl Iterator<Item = &CvCell> {
        self.cells.iter().filter(move |c| c.fraction == fraction)
    }
}

/// k-fold cross-validation of a regularization path.
///
/// `λ_max` is computed on each training split. A fold whose training labels
/// are all one class is reported as skipped rather than failing the run.
pub fn cross_validate(data: &Dataset, spec: &PathSpec, k: usize, seed: u64) -> Result<CvReport> {
    spec.validate()?;
    let folds = kfold_split(data.n_samples(), k, seed)?;
    let mut by_fold: Vec<Vec<CvCell>> = Vec::with_capacity(k);

    for (fold, test_idx) in folds.iter().enumerate() {
        let mut in_test = vec![false; data.n_samples()];
        for &i in test_idx {
            in_test[i] = true;
        }
        let train_idx: Vec<usize> = (0..data.n_samples()).filter(|&i| !in_test[i]).collect();
        let train = data.select(&train_idx)?;
        let test = data.select(test_idx)?;

        let skipped = |reason: String| -> Vec<CvCell> {
            spec.fractions
                .iter()
                .map(|&fraction| CvCell {
                    fraction,
                    fold,
                    accuracy: None,
                    nnz: 0,
                    iterations: 0,
                    converged: true,
                    skipped_reason: Some(reason.clone()),
                })
                .collect()
        };

        if !train.has_both_classes() {
            by_fold.push(skipped("training labels contain a single class".into()));
            continue;
        }
        let lmax = match lambda_max(&train) {
            Ok(v) => v,
            Err(e) => {
                by_fold.push(skipped(e.to_string()));
                continue;
            }
        };
        let points = run_path_with_lambda_max(&train, spec, lmax)?;
        let mut cells: Vec<CvCell> = points
            .iter()
            .map(|p| {
                let pred = predict(p.result.beta.view(), &test)?;
                Ok(CvCell {
                    fraction: p.fraction,
                    fold,
                    accuracy: Some(accuracy(&pred, test.labels())),
                    nnz: p.nnz(),
                    iterations: p.result.iterations(),
                    converged: p.result.converged,
                    skipped_reason: None,
                })
            })
            .collect::<Result<_>>()?;
        cells.reverse();
        by_fold.push(cells);
    }

    let mut cells = Vec::with_capacity(k * spec.fractions.len());
    for fi in 0..spec.fractions.len() {
        for fold_cells in &by_fold {
            cells.push(fold_cells[fi].clone());
        }
    }
    Ok(CvReport {
        fractions: spec.fractions.clone(),
        folds: k,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn lambda_max_identity() {
        let data = Dataset::new(Array2::eye(2), array![1.0, 0.0]).unwrap();
        assert_eq!(lambda_max(&data).unwrap(), 0.5);
    }

    #[test]
    fn lambda_max_scales_linearly() {
        let x = array![[1.0, -2.0, 0.5], [0.3, 0.0, 4.0]];
        let y = array![1.0, 0.0, 0.0];
        let a = lambda_max(&Dataset::new(x.clone(), y.clone()).unwrap()).unwrap();
        let b = lambda_max(&Dataset::new(&x * 3.0, y).unwrap()).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-14);
    }

    #[test]
    fn lambda_max_degenerate() {
        let data = Dataset::new(array![[1.0, 1.0]], array![1.0, 0.0]).unwrap();
        assert!(matches!(lambda_max(&data), Err(Error::ZeroGradientAtOrigin)));
    }

    #[test]
    fn kfold_sizes() {
        let folds = kfold_split(10, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        let folds = kfold_split(7, 5, 1).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 1, 1, 1]);
        assert!(kfold_split(3, 5, 0).is_err());
        assert!(kfold_split(3, 1, 0).is_err());
    }

    #[test]
    fn predict_ties_to_one() {
        let data = Dataset::new(array![[1.0, -1.0, 0.0]], array![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(predict(array![0.0].view(), &data).unwrap(), array![1.0, 1.0, 1.0]);
        assert_eq!(predict(array![50.0].view(), &data).unwrap(), array![1.0, 0.0, 1.0]);
        assert!(predict(array![1.0, 2.0].view(), &data).is_err());
    }

    #[test]
    fn accuracy_of_perfect_predictor() {
        let y = array![1.0, 0.0, 1.0];
        assert_eq!(accuracy(&y, &y), 1.0);
        assert_eq!(accuracy(&array![0.0, 0.0, 0.0], &y), 1.0 / 3.0);
    }

    #[test]
    fn cap_follows_lambda_when_ratio_is_set() {
        let mut spec = PathSpec::new(Penalty::capped_l1(1.0, 0.3), SolverOptions::default());
        assert_eq!(spec.penalty_at(4.0).epsilon, 0.3);
        spec.cap_ratio = Some(0.5);
        assert_eq!(spec.penalty_at(4.0).epsilon, 2.0);
        let l1 = PathSpec { cap_ratio: Some(0.5), ..PathSpec::new(Penalty::l1(1.0), SolverOptions::default()) };
        assert_eq!(l1.penalty_at(4.0), Penalty::l1(4.0));
    }

    #[test]
    fn path_spec_validation() {
        let mut spec = PathSpec::new(Penalty::l1(1.0), SolverOptions::default());
        spec.validate().unwrap();
        spec.fractions = vec![0.5, 0.2];
        assert!(spec.validate().is_err());
        spec.fractions = vec![0.0, 0.2];
        assert!(spec.validate().is_err());
        spec.fractions = vec![0.2, 1.5];
        assert!(spec.validate().is_err());
        spec.fractions = vec![];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_class_fold_is_skipped() {
        // With k = n every training split drops one sample; the lone
        // positive sample leaves one split with only negatives.
        let x = array![[1.0, 3.0, -1.0, 0.7]];
        let y = array![1.0, 0.0, 0.0, 0.0];
        let data = Dataset::new(x, y).unwrap();
        let mut spec = PathSpec::new(Penalty::l1(1.0), SolverOptions::default());
        spec.fractions = vec![0.5];
        let report = cross_validate(&data, &spec, 4, 0).unwrap();
        assert_eq!(report.cells.len(), 4);
        let skipped: Vec<_> = report.cells.iter().filter(|c| c.accuracy.is_none()).collect();
        assert_eq!(skipped.len(), 1);
        assert!(skipped[0].skipped_reason.is_some());
    }
}
