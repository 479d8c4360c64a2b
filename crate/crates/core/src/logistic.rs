//! Logistic loss `l(β) = Σᵢ ln(1 + exp(xᵢᵀβ)) − yᵢ xᵢᵀβ`, its gradient
//! `X(p − y)`, and the gradient's Lipschitz constant `¼ λmax(XXᵀ)`.

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_POWER_TOL: f64 = 1e-8;
pub const DEFAULT_POWER_MAX_ITERS: usize = 1000;

/// Bounds applied to probabilities exposed for diagnostics.
const PROB_CLAMP: f64 = 1e-15;

/// `ln(1 + eᶻ)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_dim(beta: ArrayView1<f64>, data: &Dataset) -> Result<()> {
    if beta.len() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            found: beta.len(),
        });
    }
    Ok(())
}

/// Margins `zᵢ = xᵢᵀβ` for every sample.
pub(crate) fn margins(beta: ArrayView1<f64>, data: &Dataset) -> Array1<f64> {
    data.features().t().dot(&beta)
}

pub(crate) fn loss_from_margins(z: &Array1<f64>, labels: &Array1<f64>) -> f64 {
    z.iter()
        .zip(labels.iter())
        .map(|(&z, &y)| softplus(z) - y * z)
        .sum()
}

pub(crate) fn gradient_from_margins(z: &Array1<f64>, data: &Dataset) -> Array1<f64> {
    let residual: Array1<f64> = z
        .iter()
        .zip(data.labels().iter())
        .map(|(&z, &y)| sigmoid(z) - y)
        .collect();
    data.features().dot(&residual)
}

/// Loss value and gradient from one pass over the margins.
pub(crate) fn loss_and_gradient_unchecked(
    beta: ArrayView1<f64>,
    data: &Dataset,
) -> (f64, Array1<f64>) {
    let z = margins(beta, data);
    (
        loss_from_margins(&z, data.labels()),
        gradient_from_margins(&z, data),
    )
}

pub(crate) fn loss_unchecked(beta: ArrayView1<f64>, data: &Dataset) -> f64 {
    loss_from_margins(&margins(beta, data), data.labels())
}

pub fn loss_value(beta: ArrayView1<f64>, data: &Dataset) -> Result<f64> {
    check_dim(beta, data)?;
    Ok(loss_unchecked(beta, data))
}

pub fn loss_gradient(beta: ArrayView1<f64>, data: &Dataset) -> Result<Array1<f64>> {
    check_dim(beta, data)?;
    Ok(gradient_from_margins(&margins(beta, data), data))
}

/// Cached margins and probabilities at one coefficient vector.
#[derive(Debug, Clone)]
pub struct LossWorkspace {
    margins: Array1<f64>,
    probabilities: Array1<f64>,
}

impl LossWorkspace {
    pub fn evaluate(beta: ArrayView1<f64>, data: &Dataset) -> Result<Self> {
        check_dim(beta, data)?;
        let margins = margins(beta, data);
        let probabilities = margins.mapv(|z| sigmoid(z).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP));
        Ok(LossWorkspace {
            margins,
            probabilities,
        })
    }

    pub fn margins(&self) -> &Array1<f64> {
        &self.margins
    }

    /// Probabilities clamped to `[1e-15, 1 - 1e-15]`.
    pub fn probabilities(&self) -> &Array1<f64> {
        &self.probabilities
    }

    pub fn loss(&self, data: &Dataset) -> f64 {
        loss_from_margins(&self.margins, data.labels())
    }

    pub fn gradient(&self, data: &Dataset) -> Array1<f64> {
        gradient_from_margins(&self.margins, data)
    }

    /// Mean negative log-likelihood computed from the clamped probabilities.
    pub fn mean_log_loss(&self, data: &Dataset) -> f64 {
        let total: f64 = self
            .probabilities
            .iter()
            .zip(data.labels().iter())
            .map(|(&p, &y)| -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
            .sum();
        total / data.n_samples() as f64
    }
}

/// Result of estimating `¼ λmax(XXᵀ)` by power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    /// Final Rayleigh quotient divided by four.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when `XXᵀ` annihilates every start vector tried (zero matrix);
    /// `value` is then 0 and no step size can be derived from it.
    pub degenerate: bool,
    /// Rayleigh quotient after each iteration.
    pub rayleigh_history: Vec<f64>,
}

fn normalize(v: &mut Array1<f64>) -> f64 {
    let norm = v.dot(v).sqrt();
    if norm > 0.0 {
        *v /= norm;
    }
    norm
}

/// Estimates the Lipschitz constant of the loss gradient.
///
/// Power iteration runs on `XXᵀ`, applied as `X(Xᵀv)`, from the normalized
/// all-ones vector. If the iterate collapses to zero the search restarts once
/// from a seeded random direction.
pub fn lipschitz_constant(data: &Dataset, tol: f64, max_iters: usize) -> Result<LipschitzEstimate> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("power iteration tol must be > 0, got {tol}")));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("power iteration needs max_iters >= 1".into()));
    }
    let x = data.features();
    let d = data.n_features();
    let mut v = Array1::from_elem(d, 1.0);
    normalize(&mut v);

    let mut history = Vec::new();
    let mut restarted = false;
    let mut converged = false;
    let mut rq = 0.0;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let mut w = x.dot(&x.t().dot(&v));
        rq = v.dot(&w);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            if restarted {
                break;
            }
            restarted = true;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            v = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            normalize(&mut v);
            continue;
        }
        let prev = history.last().copied();
        history.push(rq);
        v = w;
        if let Some(prev) = prev {
            if (rq - prev).abs() < tol * rq {
                converged = true;
                break;
            }
        }
    }

    let degenerate = history.is_empty() || rq <= 0.0;
    Ok(LipschitzEstimate {
        value: if degenerate { 0.0 } else { rq / 4.0 },
        iterations,
        converged,
        degenerate,
        rayleigh_history: history,
    })
}

/// [`lipschitz_constant`] with the default tolerance and iteration cap.
pub fn lipschitz(data: &Dataset) -> Result<LipschitzEstimate> {
    lipschitz_constant(data, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITERS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn ds(x: Array2<f64>, y: Array1<f64>) -> Dataset {
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        let tiny = softplus(-1000.0);
        assert!((0.0..1e-300).contains(&tiny));
        assert!((softplus(3.0) - (1.0 + 3f64.exp()).ln()).abs() < 1e-14);
    }

    #[test]
    fn sigmoid_is_symmetric_and_bounded() {
        for z in [-800.0, -3.0, 0.0, 2.5, 800.0] {
            let s = sigmoid(z);
            assert!((0.0..=1.0).contains(&s));
            assert!((s + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_at_zero() {
        let data = ds(array![[1.0, -2.0, 0.5]], array![1.0, 0.0, 1.0]);
        let l = loss_value(array![0.0].view(), &data).unwrap();
        assert!((l - 3.0 * std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn loss_scalar_case() {
        let data = ds(array![[1.0]], array![1.0]);
        let l = loss_value(array![10.0].view(), &data).unwrap();
        // softplus(10) - 10 = ln(1 + e^-10)
        assert!((l - (-10f64).exp().ln_1p()).abs() < 1e-10 * l);
        assert!((l - 4.5398e-5).abs() < 1e-9);
    }

    #[test]
    fn gradient_scalar_case() {
        let data = ds(array![[2.0]], array![0.0]);
        let g = loss_gradient(array![0.0].view(), &data).unwrap();
        assert_eq!(g, array![1.0]);
    }

    #[test]
    fn gradient_at_zero_is_x_times_half_minus_y() {
        let x = array![[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]];
        let y = array![1.0, 0.0, 0.0];
        let data = ds(x.clone(), y.clone());
        let g = loss_gradient(array![0.0, 0.0].view(), &data).unwrap();
        let expected = x.dot(&(0.5 - &y));
        assert!((&g - &expected).iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch() {
        let data = ds(array![[1.0]], array![1.0]);
        assert!(matches!(
            loss_value(array![1.0, 2.0].view(), &data),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
        assert!(loss_gradient(array![].view(), &data).is_err());
    }

    #[test]
    fn workspace_probabilities_are_clamped() {
        let data = ds(array![[1.0, -1.0]], array![1.0, 0.0]);
        let ws = LossWorkspace::evaluate(array![1000.0].view(), &data).unwrap();
        assert!(ws.probabilities().iter().all(|&p| p > 0.0 && p < 1.0));
        assert!(ws.mean_log_loss(&data).is_finite());
        assert_eq!(ws.loss(&data), loss_value(array![1000.0].view(), &data).unwrap());
    }

    #[test]
    fn lipschitz_identity_and_diagonal() {
        let data = ds(Array2::eye(2), array![1.0, 0.0]);
        let est = lipschitz(&data).unwrap();
        assert!((est.value - 0.25).abs() < 1e-12);

        let data = ds(array![[2.0, 0.0], [0.0, 1.0]], array![1.0, 0.0]);
        let est = lipschitz(&data).unwrap();
        assert!((est.value - 1.0).abs() < 1e-8);
        assert!(est.converged);
    }

    #[test]
    fn lipschitz_zero_matrix_is_flagged() {
        let data = ds(Array2::zeros((3, 4)), array![1.0, 0.0, 1.0, 0.0]);
        let est = lipschitz(&data).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn lipschitz_rejects_bad_parameters() {
        let data = ds(Array2::eye(2), array![1.0, 0.0]);
        assert!(lipschitz_constant(&data, 0.0, 10).is_err());
        assert!(lipschitz_constant(&data, 1e-8, 0).is_err());
    }
}
