//! Exhaustive grid oracles for binary alphabets, where each distribution is
//! one number `q = Q(0)` on the grid `{0, 1/(G-1), ..., 1}`.

use rayon::prelude::*;

use super::problem::{Direction, ExponentProblem};
use crate::error::{Error, Result};
use crate::prob::{gjs_of, kl_of, CategoricalDist};

/// Limit on the number of grid evaluations of the generic enumerator.
pub const GRID_BUDGET: u128 = 400_000_000;

fn grid(points: usize) -> Vec<[f64; 2]> {
    (0..points)
        .map(|i| {
            let q = i as f64 / (points - 1) as f64;
            [q, 1.0 - q]
        })
        .collect()
}

fn check_binary(problem: &ExponentProblem, points: usize) -> Result<()> {
    if problem.alphabet_size() != 2 {
        return Err(Error::Unsupported("grid oracle needs a binary alphabet".into()));
    }
    if points < 2 {
        return Err(Error::Precondition("grid needs at least two points".into()));
    }
    Ok(())
}

/// Minimum of `D(Q2||P2) + alpha D(Q1||P1)` over grid pairs with
/// `GJS(Q1, Q2, alpha) <= lambda`; `+inf` if no grid pair is feasible.
/// Always an upper bound on the true minimum, and non-increasing under
/// nested refinement (`G -> 2G - 1`).
pub fn f_exponent_grid(
    p1: &CategoricalDist,
    p2: &CategoricalDist,
    alpha_ratio: f64,
    lambda: f64,
    grid_points: usize,
) -> Result<f64> {
    let problem = ExponentProblem::binary_f(p1, p2, alpha_ratio, lambda)?;
    Ok(problem_grid(&problem, grid_points)?.0)
}

/// Exhaustive grid minimum of an [`ExponentProblem`] on a binary alphabet,
/// with the minimizing grid point. Problems where every constraint shares one
/// test variable and each other variable has at most one constraint are
/// separable given the test variable and cost `O(G^2)`; others are
/// enumerated directly.
pub fn problem_grid(problem: &ExponentProblem, grid_points: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    check_binary(problem, grid_points)?;
    let pts = grid(grid_points);
    let nv = problem.num_vars();
    let cost: Vec<Vec<f64>> = (0..nv)
        .map(|j| {
            pts.iter()
                .map(|q| problem.weights[j] * kl_of(q, problem.targets[j].probs()))
                .collect()
        })
        .collect();
    let star = star_center(problem);
    match star {
        Some(t) => Ok(star_grid(problem, &pts, &cost, t)),
        None => brute_grid(problem, &pts, &cost),
    }
}

fn star_center(problem: &ExponentProblem) -> Option<usize> {
    let first = problem.constraints.first()?;
    let t = first.test;
    let mut seen = vec![false; problem.num_vars()];
    for c in &problem.constraints {
        if c.test != t || c.train == t || seen[c.train] {
            return None;
        }
        seen[c.train] = true;
    }
    Some(t)
}

fn feasible(direction: Direction, g: f64, lambda: f64) -> bool {
    match direction {
        Direction::Le => g <= lambda,
        Direction::Ge => g >= lambda,
    }
}

fn star_grid(problem: &ExponentProblem, pts: &[[f64; 2]], cost: &[Vec<f64>], t: usize) -> (f64, Vec<Vec<f64>>) {
    let nv = problem.num_vars();
    let alpha = problem.alpha_ratio;
    let lambda = problem.lambda;
    let constraint_of: Vec<Option<Direction>> = (0..nv)
        .map(|j| problem.constraints.iter().find(|c| c.train == j).map(|c| c.direction))
        .collect();
    // Unconstrained variables: their own grid minimum.
    let free_best: Vec<(f64, usize)> = (0..nv)
        .map(|j| {
            cost[j]
                .iter()
                .enumerate()
                .fold((f64::INFINITY, 0), |acc, (i, &c)| if c < acc.0 { (c, i) } else { acc })
        })
        .collect();
    let per_t: Vec<(f64, Vec<usize>)> = (0..pts.len())
        .into_par_iter()
        .map(|ti| {
            let mut total = cost[t][ti];
            let mut choice = vec![0usize; nv];
            choice[t] = ti;
            if total == f64::INFINITY {
                return (total, choice);
            }
            for j in 0..nv {
                if j == t {
                    continue;
                }
                let (best, arg) = match constraint_of[j] {
                    None => free_best[j],
                    Some(dir) => {
                        let mut best = (f64::INFINITY, 0);
                        for (i, q) in pts.iter().enumerate() {
                            let c = cost[j][i];
                            if c < best.0 && feasible(dir, gjs_of(q, &pts[ti], alpha), lambda) {
                                best = (c, i);
                            }
                        }
                        best
                    }
                };
                total += best;
                choice[j] = arg;
            }
            (total, choice)
        })
        .collect();
    let (value, choice) = per_t
        .into_iter()
        .fold((f64::INFINITY, vec![0; nv]), |acc, (v, c)| if v < acc.0 { (v, c) } else { acc });
    (value, choice.iter().map(|&i| pts[i].to_vec()).collect())
}

fn brute_grid(problem: &ExponentProblem, pts: &[[f64; 2]], cost: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let nv = problem.num_vars();
    let g = pts.len();
    let total = (g as u128).checked_pow(nv as u32).unwrap_or(u128::MAX);
    if total > GRID_BUDGET {
        return Err(Error::TooLarge {
            size: total,
            limit: GRID_BUDGET,
        });
    }
    let alpha = problem.alpha_ratio;
    let best = (0..total as u64)
        .into_par_iter()
        .map(|code| {
            let mut idx = vec![0usize; nv];
            let mut r = code as usize;
            for slot in idx.iter_mut().rev() {
                *slot = r % g;
                r /= g;
            }
            let v: f64 = (0..nv).map(|j| cost[j][idx[j]]).sum();
            if v == f64::INFINITY {
                return (v, code);
            }
            let ok = problem.constraints.iter().all(|c| {
                feasible(
                    c.direction,
                    gjs_of(&pts[idx[c.train]], &pts[idx[c.test]], alpha),
                    problem.lambda,
                )
            });
            (if ok { v } else { f64::INFINITY }, code)
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let mut idx = vec![0usize; nv];
    let mut r = if best.1 == u64::MAX { 0 } else { best.1 as usize };
    for slot in idx.iter_mut().rev() {
        *slot = r % g;
        r /= g;
    }
    Ok((best.0, idx.iter().map(|&i| pts[i].to_vec()).collect()))
}
