mod common;

use common::{norm_sq, random_instance, rel_diff, synthetic, synthetic_with};
use ndarray::Array1;
use proxlogit::path::lambda_max;
use proxlogit::solver::{fit, FitResult, InitialStep, SolverOptions, StartPoint, Variant};
use proxlogit::{Dataset, Penalty};

const ISTA: [Variant; 3] = [Variant::IstaBB, Variant::IstaReverse, Variant::IstaVanilla];

fn penalties(lam: f64) -> Vec<Penalty> {
    vec![
        Penalty::l1(lam),
        Penalty::scad(lam, 3.7),
        Penalty::mcp(lam, 3.0),
        Penalty::capped_l1(lam, 0.5 * lam),
    ]
}

fn datasets() -> Vec<Dataset> {
    vec![synthetic(), random_instance(100, 20, 4), synthetic_with(150, 30, 4, 3)]
}

fn opts(variant: Variant) -> SolverOptions {
    SolverOptions::with_variant(variant)
}

/// Best objective and minimizer from long runs of every applicable solver.
fn reference(data: &Dataset, pen: &Penalty, budget: usize) -> (f64, Array1<f64>) {
    let mut best: Option<FitResult> = None;
    let variants: &[Variant] = if pen.kind.is_convex() {
        &[Variant::IstaBB, Variant::FistaLipschitz, Variant::IstaReverse]
    } else {
        &ISTA
    };
    for &v in variants {
        let o = SolverOptions {
            max_iters: budget,
            tol: 0.0,
            ..opts(v)
        };
        let r = fit(data, pen, &o).unwrap();
        if best.as_ref().is_none_or(|b| r.final_objective < b.final_objective) {
            best = Some(r);
        }
    }
    let b = best.unwrap();
    (b.final_objective, b.beta)
}

#[test]
fn ista_traces_are_monotone() {
    let mut configs = 0;
    for data in datasets() {
        let lmax = lambda_max(&data).unwrap();
        for pen in penalties(0.05 * lmax) {
            for v in ISTA {
                for start in [StartPoint::Zeros, StartPoint::Random] {
                    let o = SolverOptions { start, seed: 3, ..opts(v) };
                    let r = fit(&data, &pen, &o).unwrap();
                    let f: Vec<f64> = r.trace.objectives().collect();
                    for (k, w) in f.windows(2).enumerate() {
                        assert!(w[1] <= w[0], "{v} {pen:?} step {k}: {} -> {}", w[0], w[1]);
                    }
                    assert!(r.beta.iter().all(|b| b.is_finite()));
                    configs += 1;
                }
            }
        }
    }
    assert!(configs >= 12);
}

#[test]
fn vanilla_with_large_fixed_step_is_monotone() {
    let data = synthetic();
    let lmax = lambda_max(&data).unwrap();
    for pen in penalties(0.1 * lmax) {
        let o = SolverOptions {
            initial_step: InitialStep::Fixed(1e-3),
            max_iters: 2000,
            ..opts(Variant::IstaVanilla)
        };
        let r = fit(&data, &pen, &o).unwrap();
        let f: Vec<f64> = r.trace.objectives().collect();
        assert!(f.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn fista_rate_bound_holds() {
    for data in datasets() {
        let pen = Penalty::l1(0.1 * lambda_max(&data).unwrap());
        let run = fit(&data, &pen, &SolverOptions { tol: 1e-12, ..opts(Variant::FistaLipschitz) }).unwrap();
        let (fstar, bstar) = reference(&data, &pen, 10 * run.iterations().max(1000));
        let l_final = run.trace.records.last().unwrap().l;
        let r0 = norm_sq(&bstar);
        for rec in run.trace.steps() {
            let k = rec.k as f64;
            let bound = 2.0 * l_final * r0 / ((k + 1.0) * (k + 1.0));
            assert!(rec.objective - fstar <= bound, "k={}: gap {} > {bound}", rec.k, rec.objective - fstar);
        }
    }
}

#[test]
fn fista_step_sizes_never_grow() {
    for data in datasets() {
        let pen = Penalty::l1(0.05 * lambda_max(&data).unwrap());
        for init in [InitialStep::FromLipschitz, InitialStep::Fixed(1e-2)] {
            for v in [Variant::FistaLipschitz, Variant::FistaVanilla] {
                let r = fit(&data, &pen, &SolverOptions { initial_step: init, ..opts(v) }).unwrap();
                for w in r.trace.records.windows(2) {
                    assert!(w[1].l >= w[0].l);
                }
            }
        }
    }
}

#[test]
fn ista_gap_has_one_over_k_envelope() {
    for data in datasets() {
        let pen = Penalty::l1(0.05 * lambda_max(&data).unwrap());
        for v in ISTA {
            let run = fit(&data, &pen, &SolverOptions { tol: 1e-12, ..opts(v) }).unwrap();
            let (fstar, bstar) = reference(&data, &pen, 10 * run.iterations().max(1000));
            let l_max = run.trace.steps().iter().map(|r| r.l).fold(0.0, f64::max);
            let c = 2.0 * l_max * norm_sq(&bstar);
            for rec in run.trace.steps() {
                let gap = rec.objective - fstar;
                assert!(rec.k as f64 * gap <= c, "{v} k={}: {} > {c}", rec.k, rec.k as f64 * gap);
            }
        }
    }
}

#[test]
fn nonconvex_min_step_bound() {
    for data in datasets() {
        let lmax = lambda_max(&data).unwrap();
        for frac in [0.02, 0.1, 0.3] {
            for pen in penalties(frac * lmax).into_iter().skip(1) {
                for v in ISTA {
                    for start in [StartPoint::Zeros, StartPoint::Random] {
                        let r = fit(&data, &pen, &SolverOptions { start, seed: 1, ..opts(v) }).unwrap();
                        let steps = r.trace.steps();
                        if steps.is_empty() {
                            continue;
                        }
                        let n = steps.len() as f64;
                        let f0 = r.trace.records[0].objective;
                        let fbest = r.trace.objectives().fold(f64::INFINITY, f64::min);
                        let lmin = steps.iter().map(|s| s.l).fold(f64::INFINITY, f64::min);
                        let min_step = steps.iter().map(|s| s.step_norm_sq).fold(f64::INFINITY, f64::min);
                        let bound = 2.0 * (f0 - fbest) / (n * lmin);
                        let slack = 64.0 * f64::EPSILON * f0.abs().max(1.0) / lmin;
                        assert!(min_step <= bound + slack, "{v} {pen:?}: {min_step} > {bound}");
                    }
                }
            }
        }
    }
}

#[test]
fn accepted_l_is_bounded_by_lipschitz() {
    let eta = 2.0;
    for data in datasets() {
        let lmax = lambda_max(&data).unwrap();
        for pen in penalties(0.05 * lmax) {
            let factor = if pen.kind.is_convex() { eta } else { 2.0 * eta };
            let variants: Vec<Variant> = if pen.kind.is_convex() {
                vec![Variant::IstaBB, Variant::IstaReverse, Variant::IstaVanilla, Variant::FistaLipschitz]
            } else {
                ISTA.to_vec()
            };
            for v in variants {
                let r = fit(&data, &pen, &opts(v)).unwrap();
                for rec in r.trace.steps() {
                    assert!(rec.l <= factor * r.lipschitz * (1.0 + 1e-8), "{v} {pen:?}: {} vs {}", rec.l, r.lipschitz);
                }
            }
        }
    }
}

#[test]
fn lambda_above_max_returns_zero_for_every_variant() {
    for data in datasets() {
        let lmax = lambda_max(&data).unwrap();
        for v in Variant::ALL {
            let r = fit(&data, &Penalty::l1(1.01 * lmax), &opts(v)).unwrap();
            assert!(r.beta.iter().all(|&b| b == 0.0), "{v}");
            assert!(r.converged);
            let r = fit(&data, &Penalty::l1(0.5 * lmax), &opts(v)).unwrap();
            assert!(r.nnz() > 0, "{v}");
        }
    }
}

#[test]
fn convex_solvers_agree_on_optimal_value() {
    for seed in 0..3 {
        let data = random_instance(100, 20, 40 + seed);
        let pen = Penalty::l1(0.1 * lambda_max(&data).unwrap());
        let f: Vec<f64> = [Variant::IstaBB, Variant::IstaReverse, Variant::FistaLipschitz]
            .iter()
            .map(|&v| fit(&data, &pen, &SolverOptions { tol: 1e-10, ..opts(v) }).unwrap().final_objective)
            .collect();
        for w in f.windows(2) {
            assert!(rel_diff(w[0], w[1]) <= 1e-6, "{f:?}");
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let data = synthetic();
    let pen = Penalty::scad(0.05 * lambda_max(&data).unwrap(), 3.7);
    for v in ISTA {
        let o = SolverOptions { start: StartPoint::Random, seed: 12, ..opts(v) };
        let a = fit(&data, &pen, &o).unwrap();
        let b = fit(&data, &pen, &o).unwrap();
        assert_eq!(a.beta, b.beta);
        let fa: Vec<f64> = a.trace.objectives().collect();
        let fb: Vec<f64> = b.trace.objectives().collect();
        assert_eq!(fa, fb);
    }
}
