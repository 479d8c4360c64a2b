//! Composite objective, proximal step, and the step-size searches built on
//! them.

use ndarray::{Array1, ArrayView1, Zip};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::logistic::{loss_and_gradient_unchecked, loss_unchecked};
use crate::penalty::{prox_vector, Penalty};

/// Cap on the number of step enlargements in [`reverse_search`].
pub const DEFAULT_MAX_EXPANSIONS: usize = 60;

/// Acceptance test used by the step-size searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `f(p) ≤ q_L(p, β)`: the quadratic upper model dominates the objective.
    Convex,
    /// `f(p) ≤ f(β) − (L/2)‖p − β‖²`.
    SufficientDecrease,
}

/// Relative slack absorbing rounding when both sides of a criterion agree to
/// machine precision.
fn slack(f: f64) -> f64 {
    16.0 * f64::EPSILON * f.abs().max(1.0)
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

fn check_step(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("L must be positive and finite, got {l}")));
    }
    Ok(())
}

/// `f(β) = l(β) + g(β)`.
pub fn objective(beta: ArrayView1<f64>, data: &Dataset, pen: &Penalty) -> Result<f64> {
    check_dim(beta, data)?;
    pen.validate()?;
    Ok(loss_unchecked(beta, data) + pen.value_unchecked(beta))
}

pub(crate) fn objective_unchecked(beta: ArrayView1<f64>, data: &Dataset, pen: &Penalty) -> f64 {
    loss_unchecked(beta, data) + pen.value_unchecked(beta)
}

/// An iterate together with the loss quantities every search needs.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub beta: Array1<f64>,
    pub loss: f64,
    pub grad: Array1<f64>,
    pub f: f64,
}

impl Point {
    pub fn new(beta: Array1<f64>, data: &Dataset, pen: &Penalty) -> Self {
        let (loss, grad) = loss_and_gradient_unchecked(beta.view(), data);
        let f = loss + pen.value_unchecked(beta.view());
        Point { beta, loss, grad, f }
    }

    fn prox(&self, pen: &Penalty, l: f64) -> Array1<f64> {
        let mut u = self.beta.clone();
        Zip::from(&mut u).and(&self.grad).for_each(|u, &g| *u -= g / l);
        prox_vector(u.view(), pen, l)
    }

    fn q_upper(&self, candidate: &Array1<f64>, pen: &Penalty, l: f64) -> f64 {
        let diff = candidate - &self.beta;
        self.loss + diff.dot(&self.grad) + 0.5 * l * diff.dot(&diff) + pen.value_unchecked(candidate.view())
    }
}

/// `p_L(β) = prox_{g/L}(β − ∇l(β)/L)`.
pub fn prox_step(beta: ArrayView1<f64>, data: &Dataset, pen: &Penalty, l: f64) -> Result<Array1<f64>> {
    check_dim(beta, data)?;
    check_step(l)?;
    pen.validate()?;
    Ok(Point::new(beta.to_owned(), data, pen).prox(pen, l))
}

/// Quadratic upper model
/// `l(β) + ⟨p − β, ∇l(β)⟩ + (L/2)‖p − β‖² + g(p)` at `candidate = p`
/// around `anchor = β`.
pub fn q_upper(
    candidate: ArrayView1<f64>,
    anchor: ArrayView1<f64>,
    data: &Dataset,
    pen: &Penalty,
    l: f64,
) -> Result<f64> {
    check_dim(anchor, data)?;
    check_dim(candidate, data)?;
    check_step(l)?;
    pen.validate()?;
    let point = Point::new(anchor.to_owned(), data, pen);
    Ok(point.q_upper(&candidate.to_owned(), pen, l))
}

/// Barzilai-Borwein curvature estimate `⟨δ, v⟩ / ⟨δ, δ⟩`.
///
/// Falls back to `fallback` when the quotient is not a positive finite
/// number (zero displacement or nonpositive curvature).
pub fn bb_stepsize(delta: ArrayView1<f64>, v: ArrayView1<f64>, fallback: f64) -> f64 {
    assert_eq!(delta.len(), v.len(), "bb_stepsize: dimension mismatch");
    let quotient = delta.dot(&v) / delta.dot(&delta);
    if quotient.is_finite() && quotient > 0.0 {
        quotient
    } else {
        fallback
    }
}

/// Accepted step of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Accepted `L` (step size `1/L`).
    pub l: f64,
    pub candidate: Array1<f64>,
    pub candidate_objective: f64,
    /// Backtracks (forward searches) or enlargements (reverse search).
    pub steps: usize,
}

struct Trial {
    candidate: Array1<f64>,
    f: f64,
    accepted: bool,
}

fn trial(point: &Point, data: &Dataset, pen: &Penalty, l: f64, criterion: Criterion) -> Trial {
    let candidate = point.prox(pen, l);
    let f = objective_unchecked(candidate.view(), data, pen);
    let bound = match criterion {
        Criterion::Convex => point.q_upper(&candidate, pen, l),
        Criterion::SufficientDecrease => {
            let diff = &candidate - &point.beta;
            point.f - 0.5 * l * diff.dot(&diff)
        }
    };
    let accepted = f <= bound + slack(point.f);
    Trial {
        candidate,
        f,
        accepted,
    }
}

/// Smallest `i ≥ 0` such that `L = ηⁱ·l_start` passes `criterion`.
pub(crate) fn forward_search(
    point: &Point,
    data: &Dataset,
    pen: &Penalty,
    l_start: f64,
    eta: f64,
    max_backtracks: usize,
    criterion: Criterion,
) -> Result<StepOutcome> {
    let mut l = l_start;
    for i in 0..=max_backtracks {
        let t = trial(point, data, pen, l, criterion);
        if t.accepted {
            return Ok(StepOutcome {
                l,
                candidate: t.candidate,
                candidate_objective: t.f,
                steps: i,
            });
        }
        if i < max_backtracks {
            l *= eta;
        }
    }
    Err(Error::LineSearchFailed {
        last_l: l,
        backtracks: max_backtracks,
    })
}

/// Largest step `1/L` among `L0/ηⁱ`, `i = 0, 1, …`, before the criterion first
/// fails.
///
/// If `L0` itself fails, the search falls back to forward backtracking from
/// `L0`. If no failure occurs within `max_expansions` trials the last trial,
/// `L0/η^(max_expansions−1)`, is taken.
#[allow(clippy::too_many_arguments)]
pub(crate) fn reverse_search_point(
    point: &Point,
    data: &Dataset,
    pen: &Penalty,
    l0: f64,
    eta: f64,
    criterion: Criterion,
    max_expansions: usize,
    max_backtracks: usize,
) -> Result<StepOutcome> {
    let max_expansions = max_expansions.max(1);
    let first = trial(point, data, pen, l0, criterion);
    if !first.accepted {
        return forward_search(point, data, pen, l0, eta, max_backtracks, criterion);
    }
    let mut best = StepOutcome {
        l: l0,
        candidate: first.candidate,
        candidate_objective: first.f,
        steps: 0,
    };
    for i in 1..max_expansions {
        let l = l0 / eta.powi(i as i32);
        let t = trial(point, data, pen, l, criterion);
        if !t.accepted {
            break;
        }
        best = StepOutcome {
            l,
            candidate: t.candidate,
            candidate_objective: t.f,
            steps: i,
        };
    }
    Ok(best)
}

fn validate_search(anchor: ArrayView1<f64>, data: &Dataset, pen: &Penalty, l: f64, eta: f64) -> Result<()> {
    check_dim(anchor, data)?;
    check_step(l)?;
    pen.validate()?;
    if !(eta > 1.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must exceed 1, got {eta}")));
    }
    Ok(())
}

/// Backtracking with the quadratic-upper-model test.
pub fn linesearch_convex(
    anchor: ArrayView1<f64>,
    data: &Dataset,
    pen: &Penalty,
    l_start: f64,
    eta: f64,
    max_backtracks: usize,
) -> Result<StepOutcome> {
    validate_search(anchor, data, pen, l_start, eta)?;
    let point = Point::new(anchor.to_owned(), data, pen);
    forward_search(&point, data, pen, l_start, eta, max_backtracks, Criterion::Convex)
}

/// Backtracking with the sufficient-decrease test used for nonconvex
/// penalties.
pub fn linesearch_sufficient_decrease(
    anchor: ArrayView1<f64>,
    data: &Dataset,
    pen: &Penalty,
    l_start: f64,
    eta: f64,
    max_backtracks: usize,
) -> Result<StepOutcome> {
    validate_search(anchor, data, pen, l_start, eta)?;
    let point = Point::new(anchor.to_owned(), data, pen);
    forward_search(&point, data, pen, l_start, eta, max_backtracks, Criterion::SufficientDecrease)
}

/// Enlarges the step from `1/L0` until `criterion` breaks and keeps the last
/// step that passed.
pub fn reverse_search(
    anchor: ArrayView1<f64>,
    data: &Dataset,
    pen: &Penalty,
    l0: f64,
    eta: f64,
    criterion: Criterion,
    max_expansions: usize,
) -> Result<StepOutcome> {
    validate_search(anchor, data, pen, l0, eta)?;
    let point = Point::new(anchor.to_owned(), data, pen);
    reverse_search_point(
        &point,
        data,
        pen,
        l0,
        eta,
        criterion,
        max_expansions,
        super::DEFAULT_MAX_BACKTRACKS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logistic::{lipschitz, loss_gradient, softplus};
    use crate::penalty::Penalty;
    use ndarray::array;

    fn toy() -> Dataset {
        Dataset::new(
            array![[1.0, -0.5, 2.0, 0.3], [0.2, 1.5, -1.0, 0.7]],
            array![1.0, 0.0, 1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn objective_at_zero_is_n_ln2() {
        let data = toy();
        let f = objective(array![0.0, 0.0].view(), &data, &Penalty::l1(3.0)).unwrap();
        assert!((f - 4.0 * std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn q_upper_at_anchor_is_objective() {
        let data = toy();
        let pen = Penalty::scad(0.4, 3.7);
        let b = array![0.3, -0.8];
        let q = q_upper(b.view(), b.view(), &data, &pen, 5.0).unwrap();
        let f = objective(b.view(), &data, &pen).unwrap();
        assert!((q - f).abs() < 1e-14);
    }

    #[test]
    fn q_upper_scalar_hand_instance() {
        // l(β) = softplus(β) with x = 1, y = 0; anchor 0, candidate 1, L = 1, λ = 1
        let data = Dataset::new(array![[1.0]], array![0.0]).unwrap();
        let q = q_upper(array![1.0].view(), array![0.0].view(), &data, &Penalty::l1(1.0), 1.0).unwrap();
        let expected = softplus(0.0) + 1.0 * 0.5 + 0.5 * 1.0 + 1.0;
        assert!((q - expected).abs() < 1e-12, "{q} vs {expected}");
    }

    #[test]
    fn prox_step_full_shrinkage() {
        let data = toy();
        let out = prox_step(array![0.0, 0.0].view(), &data, &Penalty::l1(1e6), 1.0).unwrap();
        assert_eq!(out, array![0.0, 0.0]);
    }

    #[test]
    fn prox_step_matches_two_stage_composition() {
        let data = toy();
        let pen = Penalty::mcp(0.3, 3.0);
        let b = array![0.4, -0.2];
        let g = loss_gradient(b.view(), &data).unwrap();
        let u = &b - &(&g / 2.5);
        let expected = prox_vector(u.view(), &pen, 2.5);
        assert_eq!(prox_step(b.view(), &data, &pen, 2.5).unwrap(), expected);
    }

    #[test]
    fn bb_examples() {
        let d = array![1.0, -2.0, 0.5];
        assert_eq!(bb_stepsize(d.view(), d.view(), 9.0), 1.0);
        assert_eq!(bb_stepsize(d.view(), (&d * 2.0).view(), 9.0), 2.0);
        let v = array![-1.0, 0.0, 0.0];
        let delta = array![1.0, 0.0, 0.0];
        assert_eq!(bb_stepsize(delta.view(), v.view(), 9.0), 9.0);
        assert_eq!(bb_stepsize(array![0.0].view(), array![0.0].view(), 9.0), 9.0);
    }

    #[test]
    fn convex_search_accepts_lipschitz_immediately() {
        let data = toy();
        let lip = lipschitz(&data).unwrap().value;
        let out = linesearch_convex(array![0.5, 0.5].view(), &data, &Penalty::l1(0.1), lip, 2.0, 50).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.l, lip);
    }

    #[test]
    fn search_failure_reports_last_l() {
        let data = toy();
        // Three backtracks from a tiny L cannot reach an acceptable step.
        let err = linesearch_convex(array![3.0, -3.0].view(), &data, &Penalty::l1(0.01), 1e-9, 2.0, 3)
            .unwrap_err();
        match err {
            Error::LineSearchFailed { last_l, backtracks } => {
                assert_eq!(backtracks, 3);
                assert_eq!(last_l, 8e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reverse_search_with_single_trial() {
        let data = toy();
        let lip = lipschitz(&data).unwrap().value;
        let b = array![0.2, 0.1];
        let pen = Penalty::l1(0.05);
        let out = reverse_search(b.view(), &data, &pen, lip, 2.0, Criterion::Convex, 1).unwrap();
        assert_eq!(out.l, lip);
        assert_eq!(out.candidate, prox_step(b.view(), &data, &pen, lip).unwrap());
    }

    #[test]
    fn rejects_bad_eta() {
        let data = toy();
        assert!(linesearch_convex(array![0.0, 0.0].view(), &data, &Penalty::l1(1.0), 1.0, 1.0, 5).is_err());
    }
}
