//! Solver for problems whose constraints are all `GJS <= lambda`.
//!
//! The objective and each `GJS(Q_a, Q_t) = min_R alpha D(Q_a||R) + D(Q_t||R)`
//! are jointly convex, so for fixed multipliers `mu` the Lagrangian is
//! minimized by alternating between the mixtures `R_c` (closed form) and the
//! variables `Q_j`, each a normalized geometric mean of its target and the
//! mixtures it appears in. Multipliers are found by bisection, one
//! constraint at a time, until complementary slackness holds.

use super::problem::{Direction, ExponentProblem};

pub(crate) const MU_CAP: f64 = 1e12;
const INNER_TOL: f64 = 1e-14;
const INNER_MAX_ITER: usize = 200_000;

pub(crate) struct ConvexOutcome {
    pub q: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub iterations: usize,
    /// False when some multiplier hit the cap without reaching feasibility.
    pub feasible: bool,
}

fn ln_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.ln()).collect()
}

fn exp_normalize(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn mix(a: &[f64], t: &[f64], alpha: f64) -> Vec<f64> {
    a.iter().zip(t).map(|(x, y)| (alpha * x + y) / (1.0 + alpha)).collect()
}

/// Alternating minimization of the Lagrangian at fixed `mu`, warm-started
/// from `q`. Returns the number of sweeps.
fn minimize_lagrangian(problem: &ExponentProblem, log_p: &[Vec<f64>], mu: &[f64], q: &mut [Vec<f64>]) -> usize {
    let alpha = problem.alpha_ratio;
    let k = problem.alphabet_size();
    if mu.iter().all(|&m| m == 0.0) {
        for (qj, t) in q.iter_mut().zip(&problem.targets) {
            qj.copy_from_slice(t.probs());
        }
        return 1;
    }
    for it in 1..=INNER_MAX_ITER {
        let log_r: Vec<Vec<f64>> = problem
            .constraints
            .iter()
            .map(|c| ln_vec(&mix(&q[c.train], &q[c.test], alpha)))
            .collect();
        let mut delta: f64 = 0.0;
        for j in 0..q.len() {
            let w = problem.weights[j];
            let mut denom = w;
            let mut num: Vec<f64> = log_p[j].iter().map(|l| w * l).collect();
            for (ci, c) in problem.constraints.iter().enumerate() {
                if mu[ci] == 0.0 {
                    continue;
                }
                let coef = if c.train == j {
                    mu[ci] * alpha
                } else if c.test == j {
                    mu[ci]
                } else {
                    continue;
                };
                denom += coef;
                for x in 0..k {
                    num[x] += coef * log_r[ci][x];
                }
            }
            let logw: Vec<f64> = num.iter().map(|v| v / denom).collect();
            let new = exp_normalize(&logw);
            for x in 0..k {
                delta = delta.max((new[x] - q[j][x]).abs());
            }
            q[j] = new;
        }
        if delta < INNER_TOL {
            return it;
        }
    }
    INNER_MAX_ITER
}

/// Bisection on `mu[c]` (others fixed) for the smallest multiplier whose
/// minimizer satisfies constraint `c`. Leaves `q` at that minimizer.
fn settle_multiplier(
    problem: &ExponentProblem,
    log_p: &[Vec<f64>],
    mu: &mut [f64],
    q: &mut Vec<Vec<f64>>,
    c: usize,
    iterations: &mut usize,
) -> bool {
    let lambda = problem.lambda;
    let con = problem.constraints[c];
    let g = |q: &[Vec<f64>]| problem.constraint_gjs(q, &con);

    mu[c] = 0.0;
    let mut trial = q.clone();
    *iterations += minimize_lagrangian(problem, log_p, mu, &mut trial);
    if g(&trial) <= lambda {
        *q = trial;
        return true;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        mu[c] = hi;
        let mut t = q.clone();
        *iterations += minimize_lagrangian(problem, log_p, mu, &mut t);
        if g(&t) <= lambda {
            *q = t;
            break;
        }
        lo = hi;
        hi *= 4.0;
        if hi > MU_CAP {
            mu[c] = MU_CAP;
            *q = t;
            return false;
        }
    }
    let mut best_hi = q.clone();
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = if lo > 0.0 && hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        mu[c] = mid;
        let mut t = best_hi.clone();
        *iterations += minimize_lagrangian(problem, log_p, mu, &mut t);
        if g(&t) <= lambda {
            hi = mid;
            best_hi = t;
        } else {
            lo = mid;
        }
    }
    mu[c] = hi;
    *q = best_hi;
    true
}

pub(crate) fn solve_convex(problem: &ExponentProblem, start: Option<Vec<Vec<f64>>>) -> ConvexOutcome {
    debug_assert!(problem.constraints.iter().all(|c| c.direction == Direction::Le));
    let log_p: Vec<Vec<f64>> = problem.targets.iter().map(|t| ln_vec(t.probs())).collect();
    let nc = problem.constraints.len();
    let mut mu = vec![0.0; nc];
    let mut q = start.unwrap_or_else(|| problem.target_vectors());
    let mut iterations = minimize_lagrangian(problem, &log_p, &mu, &mut q);
    let mut feasible = true;
    if nc == 0 {
        return ConvexOutcome {
            q,
            mu,
            iterations,
            feasible,
        };
    }
    for _sweep in 0..100 {
        let before = mu.clone();
        feasible = true;
        for c in 0..nc {
            feasible &= settle_multiplier(problem, &log_p, &mut mu, &mut q, c, &mut iterations);
        }
        if nc == 1 {
            break;
        }
        let stable = mu
            .iter()
            .zip(&before)
            .all(|(a, b)| (a - b).abs() <= 1e-10 * a.abs().max(1e-12));
        if stable && problem.violation(&q) <= 0.0 {
            break;
        }
    }
    ConvexOutcome {
        q,
        mu,
        iterations,
        feasible,
    }
}

/// Moves each violating training variable toward its test variable until
/// the constraint holds. Only used to absorb rounding-level violations.
pub(crate) fn repair_le(problem: &ExponentProblem, q: &mut [Vec<f64>]) {
    for c in &problem.constraints {
        if c.direction != Direction::Le || problem.constraint_gjs(q, c) <= problem.lambda {
            continue;
        }
        // The segment must stay inside the training target's support.
        let p = problem.targets[c.train].probs();
        if q[c.test].iter().zip(p).any(|(t, p)| *t > 0.0 && *p == 0.0) {
            continue;
        }
        let base = q[c.train].clone();
        let toward = q[c.test].clone();
        let at = |s: f64| -> Vec<f64> { base.iter().zip(&toward).map(|(a, b)| (1.0 - s) * a + s * b).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let mut trial = q.to_vec();
            trial[c.train] = at(mid);
            if problem.constraint_gjs(&trial, c) <= problem.lambda {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        q[c.train] = at(hi);
    }
}
