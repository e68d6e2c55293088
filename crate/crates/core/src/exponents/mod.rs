//! Large-deviation exponents of Gutman's test with confidence: the binary
//! set-size exponent `F`, its multi-class generalisation, grid oracles for
//! binary alphabets, and the second-order threshold.

mod al;
mod convex;
mod grid;
mod problem;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{derive_seed, gjs, normal_quantile, rng_from_seed, CategoricalDist};

pub use grid::{f_exponent_grid, problem_grid, GRID_BUDGET};
pub use problem::{Direction, ExponentProblem, ExponentSolution, GjsConstraint};

/// Violation tolerated in a returned argmin.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const MULTI_STARTS: usize = 10;
const CHECK_GRID_POINTS: usize = 201;

fn to_dists(q: &[Vec<f64>]) -> Vec<CategoricalDist> {
    q.iter()
        .map(|v| CategoricalDist::from_weights(v).expect("solver iterates stay on the simplex"))
        .collect()
}

fn normalized(q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    to_dists(q).into_iter().map(|d| d.probs().to_vec()).collect()
}

fn infeasible(problem: &ExponentProblem, iterations: usize, heuristic: bool) -> ExponentSolution {
    ExponentSolution {
        value: f64::INFINITY,
        argmin: problem.targets.clone(),
        iterations,
        certified_gap: f64::NAN,
        feasible: false,
        heuristic,
    }
}

fn finish_convex(problem: &ExponentProblem, start: Option<Vec<Vec<f64>>>) -> ExponentSolution {
    let out = convex::solve_convex(problem, start);
    let mut q = normalized(&out.q);
    convex::repair_le(problem, &mut q);
    let q = normalized(&q);
    if !out.feasible || problem.violation(&q) > FEASIBILITY_TOL {
        return infeasible(problem, out.iterations, false);
    }
    let gap: f64 = problem
        .constraints
        .iter()
        .zip(&out.mu)
        .map(|(c, mu)| mu * (problem.lambda - problem.constraint_gjs(&q, c)).max(0.0))
        .sum();
    ExponentSolution {
        value: problem.objective(&q),
        argmin: to_dists(&q),
        iterations: out.iterations,
        certified_gap: gap,
        feasible: true,
        heuristic: false,
    }
}

fn random_start(problem: &ExponentProblem, index: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(derive_seed(0x6a5f_e0c1, &[index as u64]));
    problem
        .targets
        .iter()
        .map(|t| {
            let w: Vec<f64> = t
                .probs()
                .iter()
                .map(|&p| if p > 0.0 { -(1.0 - rng.random::<f64>()).ln() + 1e-12 } else { 0.0 })
                .collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Grid points have zero mass exactly at the ends; pull them inside the
/// targets' supports so they can seed mirror descent.
fn interior(problem: &ExponentProblem, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    q.iter()
        .zip(&problem.targets)
        .map(|(qj, t)| {
            let w: Vec<f64> = qj
                .iter()
                .zip(t.probs())
                .map(|(x, p)| if *p > 0.0 { x.max(1e-9) } else { 0.0 })
                .collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

fn run_al(problem: &ExponentProblem, start: Vec<Vec<f64>>) -> (Option<(f64, Vec<Vec<f64>>)>, usize) {
    let (q, it) = al::solve_al(problem, start);
    let mut q = normalized(&q);
    convex::repair_le(problem, &mut q);
    al::repair_ge(problem, &mut q);
    let q = normalized(&q);
    if problem.violation(&q) > FEASIBILITY_TOL {
        return (None, it);
    }
    let v = problem.objective(&q);
    (v.is_finite().then_some((v, q)), it)
}

fn finish_nonconvex(problem: &ExponentProblem) -> ExponentSolution {
    let heuristic = problem.alphabet_size() != 2;
    let grid = if heuristic {
        None
    } else {
        problem_grid(problem, CHECK_GRID_POINTS).ok()
    };
    let mut starts = vec![problem.target_vectors()];
    if let Some((v, q)) = &grid {
        if v.is_finite() {
            starts.push(interior(problem, q));
        }
    }
    for i in 0..MULTI_STARTS - 1 {
        starts.push(random_start(problem, i));
    }
    let results: Vec<(Option<(f64, Vec<Vec<f64>>)>, usize)> =
        starts.into_par_iter().map(|s| run_al(problem, s)).collect();
    let iterations = results.iter().map(|r| r.1).sum();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for (r, _) in results {
        if let Some((v, q)) = r {
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, q));
            }
        }
    }
    // A feasible grid point is itself an admissible answer.
    if let Some((gv, gq)) = &grid {
        if gv.is_finite() && best.as_ref().is_none_or(|b| *gv < b.0) {
            best = Some((*gv, gq.clone()));
        }
    }
    let Some((value, q)) = best else {
        return infeasible(problem, iterations, heuristic);
    };
    let certified_gap = match &grid {
        Some((gv, _)) if gv.is_finite() => (value - gv).max(0.0),
        _ => f64::NAN,
    };
    ExponentSolution {
        value,
        argmin: to_dists(&q),
        iterations,
        certified_gap,
        feasible: true,
        heuristic,
    }
}

/// Minimizes an [`ExponentProblem`]. All-`<=` problems are convex and solved
/// to near machine precision with a duality-gap certificate; problems with a
/// `>=` constraint are solved by multi-start augmented-Lagrangian mirror
/// descent, cross-checked against a coarse grid on binary alphabets.
pub fn multiclass_f(problem: &ExponentProblem) -> Result<ExponentSolution> {
    problem.validate()?;
    if problem.is_convex() {
        Ok(finish_convex(problem, None))
    } else {
        Ok(finish_nonconvex(problem))
    }
}

/// Solves from a given starting point only (no multi-start). For convex
/// problems the result does not depend on the start.
pub fn multiclass_f_from(problem: &ExponentProblem, start: &[CategoricalDist]) -> Result<ExponentSolution> {
    problem.validate()?;
    if start.len() != problem.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: problem.num_vars(),
            actual: start.len(),
        });
    }
    for (s, t) in start.iter().zip(&problem.targets) {
        s.ensure_same_alphabet(t)?;
    }
    let q: Vec<Vec<f64>> = start.iter().map(|d| d.probs().to_vec()).collect();
    if problem.is_convex() {
        return Ok(finish_convex(problem, Some(q)));
    }
    let (r, it) = run_al(problem, interior(problem, &q));
    Ok(match r {
        Some((value, q)) => ExponentSolution {
            value,
            argmin: to_dists(&q),
            iterations: it,
            certified_gap: f64::NAN,
            feasible: true,
            heuristic: true,
        },
        None => infeasible(problem, it, true),
    })
}

/// `F(P1, P2, alpha, lambda) = min D(Q2||P2) + alpha D(Q1||P1)` over
/// `GJS(Q1, Q2, alpha) <= lambda`. Zero exactly when `GJS(P1, P2, alpha) <= lambda`;
/// `+inf` (flagged infeasible) when the supports admit no feasible pair.
pub fn f_exponent(p1: &CategoricalDist, p2: &CategoricalDist, alpha_ratio: f64, lambda: f64) -> Result<ExponentSolution> {
    multiclass_f(&ExponentProblem::binary_f(p1, p2, alpha_ratio, lambda)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinarySetSizeExponents {
    pub f12: f64,
    pub f21: f64,
    /// `min(F(P1,P2), F(P2,P1))`, the decay rate of `P(|Gamma| = 2)`.
    pub full_set: f64,
    /// `lambda`, the decay rate bound of `P(|Gamma| = 0)`.
    pub empty_set: f64,
}

pub fn set_size_exponent_binary(
    p1: &CategoricalDist,
    p2: &CategoricalDist,
    alpha_ratio: f64,
    lambda: f64,
) -> Result<BinarySetSizeExponents> {
    let f12 = f_exponent(p1, p2, alpha_ratio, lambda)?.value;
    let f21 = f_exponent(p2, p1, alpha_ratio, lambda)?.value;
    Ok(BinarySetSizeExponents {
        f12,
        f21,
        full_set: f12.min(f21),
        empty_set: lambda,
    })
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Decay-rate bound for `P(|Gamma| = k)` with `M` classes: the infimum over
/// test classes `l` and sets `|S| = k` of the multi-class `F`. For `k = 0`
/// the bound is `lambda`.
pub fn set_size_exponent(dists: &[CategoricalDist], k: usize, alpha_ratio: f64, lambda: f64) -> Result<f64> {
    let m = dists.len();
    if k == 0 {
        return Ok(lambda);
    }
    if k < 2 || k > m {
        return Err(Error::Precondition(format!("set size {k} must be in 2..={m}")));
    }
    let mut best = f64::INFINITY;
    for l in 0..m {
        for s in subsets(m, k) {
            let problem = ExponentProblem::set_size_problem(dists, &s, l, alpha_ratio, lambda)?;
            best = best.min(multiclass_f(&problem)?.value);
        }
    }
    Ok(best)
}

/// `V = alpha Var_{P1}[log((1+alpha) P1 / (alpha P1 + P2))] + Var_{P2}[log((1+alpha) P2 / (alpha P1 + P2))]`.
pub fn dispersion_v(p1: &CategoricalDist, p2: &CategoricalDist, alpha_ratio: f64) -> Result<f64> {
    p1.ensure_same_alphabet(p2)?;
    if !(alpha_ratio > 0.0 && alpha_ratio.is_finite()) {
        return Err(Error::Domain {
            value: alpha_ratio,
            domain: "(0, inf)",
        });
    }
    let a = alpha_ratio;
    // Written through the ratio `other/own` so that equal inputs give
    // exactly zero: `(1 + a)/(a + 1) == 1`.
    let var = |own: &[f64], other: &[f64], own_is_train: bool| -> f64 {
        let terms: Vec<(f64, f64)> = own
            .iter()
            .zip(other)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, o)| {
                let r = o / p;
                let denom = if own_is_train { a + r } else { a * r + 1.0 };
                (*p, ((1.0 + a) / denom).ln())
            })
            .collect();
        let mean: f64 = terms.iter().map(|(p, v)| p * v).sum();
        terms.iter().map(|(p, v)| p * (v - mean).powi(2)).sum::<f64>()
    };
    let v1 = var(p1.probs(), p2.probs(), true);
    let v2 = var(p2.probs(), p1.probs(), false);
    Ok((a * v1 + v2).max(0.0))
}

/// Second-order threshold `GJS(P1, P2, alpha) + sqrt(V/n) Phi^{-1}(epsilon)`,
/// dropping the `O(log n / n)` remainder.
pub fn second_order_lambda(
    p1: &CategoricalDist,
    p2: &CategoricalDist,
    alpha_ratio: f64,
    n: usize,
    epsilon: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            value: epsilon,
            domain: "(0, 1)",
        });
    }
    let g = gjs(p1, p2, alpha_ratio)?;
    let v = dispersion_v(p1, p2, alpha_ratio)?;
    Ok(g + (v / n as f64).sqrt() * normal_quantile(epsilon)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::gaussian_q_inv;

    fn d(v: &[f64]) -> CategoricalDist {
        CategoricalDist::new(v.to_vec()).unwrap()
    }

    fn worked() -> (CategoricalDist, CategoricalDist) {
        (d(&[0.8, 0.2]), d(&[0.2, 0.8]))
    }

    #[test]
    fn zero_when_targets_feasible() {
        let (p1, p2) = worked();
        let g = gjs(&p1, &p2, 1.0).unwrap();
        let s = f_exponent(&p1, &p2, 1.0, g + 1e-12).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.argmin, vec![p1.clone(), p2.clone()]);
        assert_eq!(f_exponent(&p1, &p1, 1.0, 1e-6).unwrap().value, 0.0);
    }

    #[test]
    fn worked_instance_matches_grid() {
        let (p1, p2) = worked();
        let s = f_exponent(&p1, &p2, 1.0, 0.05).unwrap();
        let g = f_exponent_grid(&p1, &p2, 1.0, 0.05, 2001).unwrap();
        assert!(s.value <= g + 1e-12, "{} vs {}", s.value, g);
        assert!(g - s.value < 1e-3, "{} vs {}", s.value, g);
        assert!(s.certified_gap < 1e-9);
        let gj = gjs(&s.argmin[0], &s.argmin[1], 1.0).unwrap();
        assert!(gj <= 0.05 + FEASIBILITY_TOL);
    }

    #[test]
    fn nested_grid_decreases() {
        let (p1, p2) = worked();
        let mut prev = f64::INFINITY;
        for g in [101, 201, 401, 801] {
            let v = f_exponent_grid(&p1, &p2, 1.0, 0.05, g).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn disjoint_supports_are_infeasible() {
        let s = f_exponent(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]), 1.0, 0.1).unwrap();
        assert!(!s.feasible);
        assert_eq!(s.value, f64::INFINITY);
    }

    #[test]
    fn two_class_reduction() {
        let (p1, p2) = worked();
        let dists = [p1.clone(), p2.clone()];
        let a = multiclass_f(&ExponentProblem::set_size_problem(&dists, &[0, 1], 0, 1.0, 0.05).unwrap()).unwrap();
        let b = f_exponent(&p2, &p1, 1.0, 0.05).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        let full = set_size_exponent(&dists, 2, 1.0, 0.05).unwrap();
        let bin = set_size_exponent_binary(&p1, &p2, 1.0, 0.05).unwrap();
        assert!((full - bin.full_set).abs() < 1e-12);
        assert_eq!(bin.empty_set, 0.05);
    }

    #[test]
    fn dispersion_and_second_order() {
        let (p1, p2) = worked();
        assert_eq!(dispersion_v(&p1, &p1, 2.0).unwrap(), 0.0);
        // Two-point variances: under P1 the log term is ln(1.6) w.p. 0.8 and ln(0.4) w.p. 0.2.
        let (a, b) = (1.6f64.ln(), 0.4f64.ln());
        let var = 0.8 * 0.2 * (a - b).powi(2);
        assert!((dispersion_v(&p1, &p2, 1.0).unwrap() - 2.0 * var).abs() < 1e-12);
        let g = gjs(&p1, &p2, 1.0).unwrap();
        assert_eq!(second_order_lambda(&p1, &p2, 1.0, 400, 0.5).unwrap(), g);
        let l = second_order_lambda(&p1, &p2, 1.0, 400, 0.1).unwrap();
        let expected = g - gaussian_q_inv(0.1).unwrap() * (2.0 * var / 400.0).sqrt();
        assert!((l - expected).abs() < 1e-12);
    }
}
