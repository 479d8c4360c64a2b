//! Separable regularizers `g(β) = Σᵢ g(βᵢ)` and their scaled proximal maps
//! `argmin_w (L/2)(w − t)² + g(w)`.
//!
//! SCAD, MCP and capped-ℓ1 are nonconvex but piecewise quadratic on each
//! side of zero, with bounded curvature, so each can be written as a
//! difference of convex functions. The solvers only need `g` and its prox, so
//! the decomposition itself is never built.
//!
//! The nonconvex proximal maps are evaluated by enumerating candidates: the
//! stationary point of every quadratic piece that falls inside its own
//! interval, every breakpoint, `0`, and `t`. The minimizer of a piecewise
//! quadratic is always one of these, which makes the map exact for any
//! `L > 0`, not only the unit step for which closed forms are usually quoted.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

pub const DEFAULT_SCAD_THETA: f64 = 3.7;
pub const DEFAULT_MCP_THETA: f64 = 3.0;
/// Capped-ℓ1 cap as a multiple of λ when none is given.
pub const DEFAULT_CAP_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    L1,
    Scad,
    Mcp,
    CappedL1,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
            PenaltyKind::CappedL1 => "capped_l1",
        }
    }

    pub fn is_convex(self) -> bool {
        matches!(self, PenaltyKind::L1)
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(PenaltyKind::L1),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            "capped_l1" | "cappedl1" | "capped-l1" => Ok(PenaltyKind::CappedL1),
            other => Err(Error::InvalidParameter(format!("unknown penalty {other:?}"))),
        }
    }
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A regularizer with its weight and shape parameters.
///
/// `theta` is used by SCAD (must exceed 2) and MCP (must exceed 1);
/// `epsilon` is the capped-ℓ1 cap. Unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub theta: f64,
    pub epsilon: f64,
}

impl Penalty {
    pub fn l1(lambda: f64) -> Self {
        Penalty {
            kind: PenaltyKind::L1,
            lambda,
            theta: 0.0,
            epsilon: 0.0,
        }
    }

    pub fn scad(lambda: f64, theta: f64) -> Self {
        Penalty {
            kind: PenaltyKind::Scad,
            lambda,
            theta,
            epsilon: 0.0,
        }
    }

    pub fn mcp(lambda: f64, theta: f64) -> Self {
        Penalty {
            kind: PenaltyKind::Mcp,
            lambda,
            theta,
            epsilon: 0.0,
        }
    }

    pub fn capped_l1(lambda: f64, epsilon: f64) -> Self {
        Penalty {
            kind: PenaltyKind::CappedL1,
            lambda,
            theta: 0.0,
            epsilon,
        }
    }

    /// A penalty of the given kind with default shape parameters.
    pub fn with_defaults(kind: PenaltyKind, lambda: f64) -> Self {
        match kind {
            PenaltyKind::L1 => Penalty::l1(lambda),
            PenaltyKind::Scad => Penalty::scad(lambda, DEFAULT_SCAD_THETA),
            PenaltyKind::Mcp => Penalty::mcp(lambda, DEFAULT_MCP_THETA),
            PenaltyKind::CappedL1 => Penalty::capped_l1(lambda, DEFAULT_CAP_RATIO * lambda),
        }
    }

    /// Same shape, different weight. A capped-ℓ1 cap that was derived from
    /// λ is not rescaled.
    pub fn with_lambda(self, lambda: f64) -> Self {
        Penalty { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        match self.kind {
            PenaltyKind::Scad if !(self.theta > 2.0 && self.theta.is_finite()) => Err(
                Error::InvalidParameter(format!("SCAD needs theta > 2, got {}", self.theta)),
            ),
            PenaltyKind::Mcp if !(self.theta > 1.0 && self.theta.is_finite()) => Err(
                Error::InvalidParameter(format!("MCP needs theta > 1, got {}", self.theta)),
            ),
            PenaltyKind::CappedL1 if !(self.epsilon > 0.0 && self.epsilon.is_finite()) => {
                Err(Error::InvalidParameter(format!(
                    "capped-l1 needs epsilon > 0, got {}",
                    self.epsilon
                )))
            }
            _ => Ok(()),
        }
    }

    /// Per-coordinate penalty `g(b)`.
    pub fn scalar_value(&self, b: f64) -> f64 {
        let a = b.abs();
        let lam = self.lambda;
        match self.kind {
            PenaltyKind::L1 => lam * a,
            PenaltyKind::CappedL1 => lam * a.min(self.epsilon),
            PenaltyKind::Scad => {
                let th = self.theta;
                if a <= lam {
                    lam * a
                } else if a <= th * lam {
                    (-a * a + 2.0 * th * lam * a - lam * lam) / (2.0 * (th - 1.0))
                } else {
                    (th + 1.0) * lam * lam / 2.0
                }
            }
            PenaltyKind::Mcp => {
                let th = self.theta;
                if a <= th * lam {
                    lam * a - a * a / (2.0 * th)
                } else {
                    th * lam * lam / 2.0
                }
            }
        }
    }

    pub(crate) fn value_unchecked(&self, beta: ArrayView1<f64>) -> f64 {
        beta.iter().map(|&b| self.scalar_value(b)).sum()
    }

    /// Breakpoints of `g` on the positive half-line.
    fn breakpoints(&self) -> ([f64; 2], usize) {
        let lam = self.lambda;
        match self.kind {
            PenaltyKind::L1 => ([0.0; 2], 0),
            PenaltyKind::Scad => ([lam, self.theta * lam], 2),
            PenaltyKind::Mcp => ([self.theta * lam, 0.0], 1),
            PenaltyKind::CappedL1 => ([self.epsilon, 0.0], 1),
        }
    }

    /// Stationary points of each quadratic piece of `(L/2)(w − a)² + g(w)`
    /// for `w ≥ 0`, kept only when they fall inside their piece.
    fn interior_stationary_points(&self, a: f64, step_l: f64, out: &mut Vec<f64>) {
        let lam = self.lambda;
        let mut push_if = |w: f64, lo: f64, hi: f64| {
            if w.is_finite() && w >= lo && w <= hi {
                out.push(w);
            }
        };
        match self.kind {
            PenaltyKind::L1 => push_if(a - lam / step_l, 0.0, f64::INFINITY),
            PenaltyKind::CappedL1 => {
                push_if(a - lam / step_l, 0.0, self.epsilon);
                push_if(a, self.epsilon, f64::INFINITY);
            }
            PenaltyKind::Scad => {
                let th = self.theta;
                push_if(a - lam / step_l, 0.0, lam);
                // L(w − a) + (θλ − w)/(θ − 1) = 0
                let denom = step_l * (th - 1.0) - 1.0;
                if denom != 0.0 {
                    push_if((step_l * a * (th - 1.0) - th * lam) / denom, lam, th * lam);
                }
                push_if(a, th * lam, f64::INFINITY);
            }
            PenaltyKind::Mcp => {
                let th = self.theta;
                // L(w − a) + λ − w/θ = 0
                let denom = step_l - 1.0 / th;
                if denom != 0.0 {
                    push_if((step_l * a - lam) / denom, 0.0, th * lam);
                }
                push_if(a, th * lam, f64::INFINITY);
            }
        }
    }
}

/// `Σᵢ g(βᵢ)`.
pub fn penalty_value(beta: ArrayView1<f64>, pen: &Penalty) -> Result<f64> {
    pen.validate()?;
    Ok(pen.value_unchecked(beta))
}

fn prox_objective(w: f64, t: f64, pen: &Penalty, step_l: f64) -> f64 {
    0.5 * step_l * (w - t) * (w - t) + pen.scalar_value(w)
}

/// Scalar proximal map `argmin_w (L/2)(w − t)² + g(w)`.
///
/// Ties between candidates resolve to the one with the smaller magnitude.
pub fn prox_scalar(t: f64, pen: &Penalty, step_l: f64) -> f64 {
    if pen.kind == PenaltyKind::L1 {
        return soft_threshold(t, pen.lambda / step_l);
    }
    let a = t.abs();
    let mut candidates = Vec::with_capacity(8);
    candidates.push(0.0);
    let (bps, nbp) = pen.breakpoints();
    candidates.extend(bps[..nbp].iter().copied().filter(|&b| b <= a));
    pen.interior_stationary_points(a, step_l, &mut candidates);
    candidates.push(a);

    let mut best_w = 0.0;
    let mut best_h = prox_objective(0.0, a, pen, step_l);
    for &w in &candidates {
        // the minimizer lies in [0, |t|]
        if w > a {
            continue;
        }
        let h = prox_objective(w, a, pen, step_l);
        if h < best_h || (h == best_h && w < best_w) {
            best_h = h;
            best_w = w;
        }
    }
    if best_w == 0.0 {
        0.0
    } else {
        best_w.copysign(t)
    }
}

pub fn soft_threshold(t: f64, threshold: f64) -> f64 {
    if t > threshold {
        t - threshold
    } else if t < -threshold {
        t + threshold
    } else {
        0.0
    }
}

/// Coordinatewise [`prox_scalar`].
pub fn prox_vector(u: ArrayView1<f64>, pen: &Penalty, step_l: f64) -> Array1<f64> {
    u.mapv(|t| prox_scalar(t, pen, step_l))
}

/// Brute-force proximal map by grid search over `[−|t|−1, |t|+1]`.
///
/// The grid is `{k·grid_step}` so that 0 is always a grid point. Used to
/// cross-check [`prox_scalar`].
pub fn prox_oracle(t: f64, pen: &Penalty, step_l: f64, grid_step: f64) -> f64 {
    assert!(grid_step > 0.0, "grid_step must be positive");
    let m = ((t.abs() + 1.0) / grid_step).ceil() as i64;
    let mut best_w = 0.0f64;
    let mut best_h = f64::INFINITY;
    for k in -m..=m {
        let w = k as f64 * grid_step;
        let h = prox_objective(w, t, pen, step_l);
        if h < best_h || (h == best_h && w.abs() < best_w.abs()) {
            best_h = h;
            best_w = w;
        }
    }
    best_w
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn all_penalties(lambda: f64) -> Vec<Penalty> {
        vec![
            Penalty::l1(lambda),
            Penalty::scad(lambda, 3.7),
            Penalty::mcp(lambda, 3.0),
            Penalty::capped_l1(lambda, 0.5),
        ]
    }

    #[test]
    fn value_examples() {
        let v = penalty_value(array![1.0, -3.0].view(), &Penalty::l1(2.0)).unwrap();
        assert_eq!(v, 8.0);
        let v = penalty_value(array![10.0].view(), &Penalty::scad(1.0, 3.7)).unwrap();
        assert!((v - 2.35).abs() < 1e-12);
        let v = penalty_value(array![5.0].view(), &Penalty::mcp(1.0, 3.0)).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        let v = penalty_value(array![2.0, 0.1].view(), &Penalty::capped_l1(1.0, 0.5)).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
    }

    #[test]
    fn value_is_zero_at_origin() {
        for p in all_penalties(1.3) {
            assert_eq!(p.scalar_value(0.0), 0.0);
        }
    }

    #[test]
    fn value_is_continuous_at_breakpoints() {
        let scad = Penalty::scad(0.7, 3.7);
        let mcp = Penalty::mcp(0.7, 3.0);
        let h = 1e-13;
        for (p, b) in [(scad, 0.7), (scad, 3.7 * 0.7), (mcp, 3.0 * 0.7)] {
            let left = p.scalar_value(b - h);
            let right = p.scalar_value(b + h);
            assert!((left - right).abs() < 1e-12, "{p:?} at {b}: {left} vs {right}");
        }
    }

    #[test]
    fn validation() {
        assert!(Penalty::l1(0.0).validate().is_err());
        assert!(Penalty::scad(1.0, 2.0).validate().is_err());
        assert!(Penalty::mcp(1.0, 1.0).validate().is_err());
        assert!(Penalty::capped_l1(1.0, 0.0).validate().is_err());
        for p in all_penalties(1.0) {
            p.validate().unwrap();
        }
        assert!(penalty_value(array![1.0].view(), &Penalty::l1(-1.0)).is_err());
    }

    #[test]
    fn prox_examples() {
        assert_eq!(prox_scalar(3.0, &Penalty::l1(1.0), 1.0), 2.0);
        assert_eq!(prox_scalar(0.5, &Penalty::l1(1.0), 1.0), 0.0);
        let scad = prox_scalar(3.0, &Penalty::scad(1.0, 3.7), 1.0);
        assert!((scad - 4.4 / 1.7).abs() < 1e-12, "{scad}");
        assert_eq!(prox_scalar(5.0, &Penalty::scad(1.0, 3.7), 1.0), 5.0);
        assert!((prox_scalar(2.0, &Penalty::mcp(1.0, 3.0), 1.0) - 1.5).abs() < 1e-12);
        assert_eq!(prox_scalar(4.0, &Penalty::mcp(1.0, 3.0), 1.0), 4.0);
        assert_eq!(prox_scalar(3.0, &Penalty::capped_l1(1.0, 0.5), 1.0), 3.0);
    }

    #[test]
    fn prox_vector_examples() {
        for p in all_penalties(1.0) {
            assert_eq!(prox_vector(array![0.0, 0.0].view(), &p, 1.7), array![0.0, 0.0]);
        }
        let r = prox_vector(array![1.0, -1.0].view(), &Penalty::l1(1.0), 2.0);
        assert_eq!(r, array![0.5, -0.5]);
    }

    #[test]
    fn prox_negative_inputs_mirror() {
        for p in all_penalties(0.8) {
            for t in [0.3, 1.1, 2.0, 2.9, 4.2] {
                assert_eq!(prox_scalar(-t, &p, 1.3), -prox_scalar(t, &p, 1.3));
            }
        }
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(prox_oracle(0.0, &Penalty::l1(2.5), 1.0, 1e-3), 0.0);
        let w = prox_oracle(4.0, &Penalty::mcp(1.0, 3.0), 1.0, 1e-4);
        assert!((w - 4.0).abs() < 1e-3);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("SCAD".parse::<PenaltyKind>().unwrap(), PenaltyKind::Scad);
        assert_eq!("capped_l1".parse::<PenaltyKind>().unwrap(), PenaltyKind::CappedL1);
        assert!("lp".parse::<PenaltyKind>().is_err());
    }
}
