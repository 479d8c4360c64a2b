//! The proximal-gradient solver family.
//!
//! | variant          | step seed each iteration                | search            |
//! |------------------|-----------------------------------------|-------------------|
//! | `IstaBB`         | Barzilai-Borwein estimate (first: `L0`) | forward backtrack |
//! | `IstaReverse`    | `L0`                                    | reverse (enlarge) |
//! | `FistaLipschitz` | previous `L` (first: `L0`)              | forward backtrack |
//! | `IstaVanilla`    | previous `L` (first: `L0`)              | forward backtrack |
//! | `FistaVanilla`   | previous `L` (first: `L0`)              | forward backtrack |
//!
//! `L0` comes from [`InitialStep`]: the power-iteration Lipschitz estimate by
//! default, or a fixed value. The ISTA variants use the quadratic-model test
//! for ℓ1 and the sufficient-decrease test for nonconvex penalties; FISTA
//! accepts only ℓ1.

mod linesearch;

use std::time::Instant;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::logistic::lipschitz;
use crate::penalty::Penalty;

pub use linesearch::{
    bb_stepsize, linesearch_convex, linesearch_sufficient_decrease, objective, prox_step, q_upper,
    reverse_search, Criterion, StepOutcome, DEFAULT_MAX_EXPANSIONS,
};
use linesearch::{forward_search, reverse_search_point, Point};

pub const DEFAULT_ETA: f64 = 2.0;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_BACKTRACKS: usize = 100;

/// Bounds on a Barzilai-Borwein seed relative to the Lipschitz estimate.
const BB_CLAMP: (f64, f64) = (1e-12, 1e12);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    IstaBB,
    IstaReverse,
    FistaLipschitz,
    IstaVanilla,
    FistaVanilla,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::IstaBB,
        Variant::IstaReverse,
        Variant::FistaLipschitz,
        Variant::IstaVanilla,
        Variant::FistaVanilla,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::IstaBB => "ista_bb",
            Variant::IstaReverse => "ista_reverse",
            Variant::FistaLipschitz => "fista_lip",
            Variant::IstaVanilla => "ista_vanilla",
            Variant::FistaVanilla => "fista_vanilla",
        }
    }

    pub fn is_fista(self) -> bool {
        matches!(self, Variant::FistaLipschitz | Variant::FistaVanilla)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown solver variant {s:?}")))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the first `L` (inverse step size) is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStep {
    FromLipschitz,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    Zeros,
    /// Each coordinate drawn from `Normal(0, 1/d)` using the options' seed.
    Random,
    Given(Array1<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub variant: Variant,
    /// Backtracking factor, `> 1`.
    pub eta: f64,
    pub initial_step: InitialStep,
    pub max_iters: usize,
    /// Stop when `|f(βₖ₋₁) − f(βₖ)| ≤ tol·max(1, |f(βₖ)|)`.
    pub tol: f64,
    pub max_backtracks: usize,
    /// Cap on step enlargements per iteration of `IstaReverse`.
    pub max_expansions: usize,
    pub seed: u64,
    pub start: StartPoint,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            variant: Variant::IstaBB,
            eta: DEFAULT_ETA,
            initial_step: InitialStep::FromLipschitz,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            max_backtracks: DEFAULT_MAX_BACKTRACKS,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            seed: 0,
            start: StartPoint::Zeros,
        }
    }
}

impl SolverOptions {
    pub fn with_variant(variant: Variant) -> Self {
        SolverOptions {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must exceed 1, got {}", self.eta)));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        if self.max_backtracks == 0 {
            return Err(Error::InvalidParameter("max_backtracks must be >= 1".into()));
        }
        if self.max_expansions == 0 {
            return Err(Error::InvalidParameter("max_expansions must be >= 1".into()));
        }
        if let InitialStep::Fixed(l0) = self.initial_step {
            if !(l0 > 0.0 && l0.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed L0 must be positive, got {l0}")));
            }
        }
        Ok(())
    }
}

/// One iteration of a run. Record `k = 0` describes the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub objective: f64,
    /// Accepted `L` (the step was `1/L`).
    pub l: f64,
    pub backtracks: usize,
    pub nnz: usize,
    pub time_s: f64,
    /// `‖βₖ − βₖ₋₁‖²`; zero for the starting record.
    pub step_norm_sq: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Iterations performed (records after the starting one).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    pub fn steps(&self) -> &[TraceRecord] {
        self.records.get(1..).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Array1<f64>,
    pub converged: bool,
    pub trace: Trace,
    pub final_objective: f64,
    /// Lipschitz estimate used to seed or safeguard the steps.
    pub lipschitz: f64,
}

impl FitResult {
    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }

    pub fn nnz(&self) -> usize {
        crate::count_nonzero(&self.beta)
    }
}

/// FISTA momentum update `t ↦ (1 + √(1 + 4t²)) / 2`.
pub fn fista_momentum(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

fn start_point(opts: &SolverOptions, d: usize) -> Result<Array1<f64>> {
    match &opts.start {
        StartPoint::Zeros => Ok(Array1::zeros(d)),
        StartPoint::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let scale = 1.0 / (d as f64).sqrt();
            Ok((0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        }
        StartPoint::Given(b) if b.len() == d => Ok(b.clone()),
        StartPoint::Given(b) => Err(Error::DimensionMismatch {
            expected: d,
            found: b.len(),
        }),
    }
}

struct Recorder {
    started: Instant,
    trace: Trace,
}

impl Recorder {
    fn push(&mut self, k: usize, beta: &Array1<f64>, objective: f64, l: f64, backtracks: usize, step_norm_sq: f64) {
        self.trace.records.push(TraceRecord {
            k,
            objective,
            l,
            backtracks,
            nnz: crate::count_nonzero(beta),
            time_s: self.started.elapsed().as_secs_f64(),
            step_norm_sq,
        });
    }
}

fn stalled(f_prev: f64, f_new: f64, tol: f64) -> bool {
    (f_prev - f_new).abs() <= tol * f_new.abs().max(1.0)
}

/// Minimizes `l(β) + g(β)` with the variant selected in `opts`.
pub fn fit(data: &Dataset, pen: &Penalty, opts: &SolverOptions) -> Result<FitResult> {
    opts.validate()?;
    pen.validate()?;
    if opts.variant.is_fista() && !pen.kind.is_convex() {
        return Err(Error::IncompatibleVariant {
            variant: opts.variant.name(),
            penalty: pen.kind.name(),
        });
    }

    let started = Instant::now();
    let beta0 = start_point(opts, data.n_features())?;

    let estimate = lipschitz(data)?;
    // With X = 0 the loss is constant and any step is admissible.
    let lip = if estimate.degenerate { 1.0 } else { estimate.value };
    let l0 = match opts.initial_step {
        InitialStep::FromLipschitz => lip,
        InitialStep::Fixed(v) => v,
    };
    let criterion = if pen.kind.is_convex() {
        Criterion::Convex
    } else {
        Criterion::SufficientDecrease
    };

    let mut rec = Recorder {
        started,
        trace: Trace::default(),
    };
    let mut current = Point::new(beta0, data, pen);
    rec.push(0, &current.beta, current.f, l0, 0, 0.0);

    let mut converged = false;
    if opts.variant.is_fista() {
        let mut beta_prev = current.beta.clone();
        let mut f_prev = current.f;
        let mut anchor = current;
        let mut t = 1.0;
        let mut l = l0;
        for k in 1..=opts.max_iters {
            let step = forward_search(&anchor, data, pen, l, opts.eta, opts.max_backtracks, Criterion::Convex)?;
            l = step.l;
            let beta = step.candidate;
            let diff = &beta - &beta_prev;
            let t_next = fista_momentum(t);
            let w = &beta + &(&diff * ((t - 1.0) / t_next));
            rec.push(k, &beta, step.candidate_objective, l, step.steps, diff.dot(&diff));

            let done = stalled(f_prev, step.candidate_objective, opts.tol);
            f_prev = step.candidate_objective;
            beta_prev = beta;
            t = t_next;
            if done {
                converged = true;
                break;
            }
            anchor = Point::new(w, data, pen);
        }
        let final_objective = linesearch::objective_unchecked(beta_prev.view(), data, pen);
        return Ok(FitResult {
            beta: beta_prev,
            converged,
            trace: rec.trace,
            final_objective,
            lipschitz: estimate.value,
        });
    }

    let (bb_lo, bb_hi) = (BB_CLAMP.0 * lip, BB_CLAMP.1 * lip);
    let mut previous: Option<Point> = None;
    let mut l_prev = l0;
    for k in 1..=opts.max_iters {
        let step = match opts.variant {
            Variant::IstaBB => {
                let seed = match &previous {
                    Some(prev) => {
                        let delta = &current.beta - &prev.beta;
                        let v = &current.grad - &prev.grad;
                        bb_stepsize(delta.view(), v.view(), lip).clamp(bb_lo, bb_hi)
                    }
                    None => l0,
                };
                forward_search(&current, data, pen, seed, opts.eta, opts.max_backtracks, criterion)?
            }
            Variant::IstaReverse => reverse_search_point(
                &current,
                data,
                pen,
                l0,
                opts.eta,
                criterion,
                opts.max_expansions,
                opts.max_backtracks,
            )?,
            Variant::IstaVanilla => {
                forward_search(&current, data, pen, l_prev, opts.eta, opts.max_backtracks, criterion)?
            }
            Variant::FistaLipschitz | Variant::FistaVanilla => unreachable!(),
        };
        l_prev = step.l;

        // No representable decrease left: keep the current iterate.
        if step.candidate_objective > current.f {
            converged = true;
            break;
        }

        let diff = &step.candidate - &current.beta;
        let next = Point::new(step.candidate, data, pen);
        rec.push(k, &next.beta, next.f, step.l, step.steps, diff.dot(&diff));
        let done = stalled(current.f, next.f, opts.tol);
        previous = Some(std::mem::replace(&mut current, next));
        if done {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        final_objective: current.f,
        beta: current.beta,
        converged,
        trace: rec.trace,
        lipschitz: estimate.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use ndarray::array;

    fn small() -> Dataset {
        generate_synthetic(&SyntheticSpec::new(60, 8, 3, 3)).unwrap().0
    }

    #[test]
    fn zero_iterations_returns_start() {
        let data = small();
        let opts = SolverOptions {
            max_iters: 0,
            start: StartPoint::Random,
            seed: 9,
            ..Default::default()
        };
        let res = fit(&data, &Penalty::l1(0.1), &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.beta, start_point(&opts, 8).unwrap());
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.iterations(), 0);
    }

    #[test]
    fn fista_rejects_nonconvex_penalty() {
        let data = small();
        for v in [Variant::FistaLipschitz, Variant::FistaVanilla] {
            let err = fit(&data, &Penalty::scad(0.1, 3.7), &SolverOptions::with_variant(v)).unwrap_err();
            assert!(matches!(err, Error::IncompatibleVariant { .. }));
        }
    }

    #[test]
    fn option_validation() {
        let data = small();
        let pen = Penalty::l1(0.1);
        for opts in [
            SolverOptions { eta: 1.0, ..Default::default() },
            SolverOptions { max_backtracks: 0, ..Default::default() },
            SolverOptions { tol: -1.0, ..Default::default() },
            SolverOptions { initial_step: InitialStep::Fixed(0.0), ..Default::default() },
            SolverOptions { start: StartPoint::Given(array![1.0]), ..Default::default() },
        ] {
            assert!(fit(&data, &pen, &opts).is_err(), "{opts:?}");
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("ista".parse::<Variant>().is_err());
    }

    #[test]
    fn momentum_lower_bound() {
        let mut t = 1.0;
        for k in 1..10_000 {
            assert!(t >= (k as f64 + 1.0) / 2.0 - 1e-12);
            t = fista_momentum(t);
        }
    }

    #[test]
    fn final_objective_matches_recomputation() {
        let data = small();
        let pen = Penalty::mcp(0.5, 3.0);
        for v in [Variant::IstaBB, Variant::IstaReverse, Variant::IstaVanilla] {
            let res = fit(&data, &pen, &SolverOptions::with_variant(v)).unwrap();
            let f = objective(res.beta.view(), &data, &pen).unwrap();
            assert!((f - res.final_objective).abs() <= 1e-10 * f.abs());
            assert!(res.converged);
        }
    }

    #[test]
    fn random_start_is_seeded() {
        let a = start_point(&SolverOptions { start: StartPoint::Random, seed: 4, ..Default::default() }, 5).unwrap();
        let b = start_point(&SolverOptions { start: StartPoint::Random, seed: 4, ..Default::default() }, 5).unwrap();
        let c = start_point(&SolverOptions { start: StartPoint::Random, seed: 5, ..Default::default() }, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
