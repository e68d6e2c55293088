//! Augmented-Lagrangian entropic mirror descent for problems with `>=`
//! constraints, where the feasible set is not convex.

use super::problem::{Direction, ExponentProblem};

const FLOOR: f64 = 1e-300;
const STALL_WINDOW: usize = 50;
const STALL_TOL: f64 = 1e-10;
const INNER_MAX_ITER: usize = 100_000;
const OUTER_MAX_ITER: usize = 40;

struct State<'a> {
    problem: &'a ExponentProblem,
    log_p: Vec<Vec<f64>>,
    mu: Vec<f64>,
    rho: f64,
}

impl State<'_> {
    /// `g_c <= 0` form of constraint `c`.
    fn g(&self, q: &[Vec<f64>], c: usize) -> f64 {
        let con = &self.problem.constraints[c];
        let v = self.problem.constraint_gjs(q, con) - self.problem.lambda;
        match con.direction {
            Direction::Le => v,
            Direction::Ge => -v,
        }
    }

    fn value(&self, q: &[Vec<f64>]) -> f64 {
        let mut v = self.problem.objective(q);
        for c in 0..self.mu.len() {
            let s = (self.mu[c] + self.rho * self.g(q, c)).max(0.0);
            v += (s * s - self.mu[c] * self.mu[c]) / (2.0 * self.rho);
        }
        v
    }

    fn gradient(&self, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let p = self.problem;
        let alpha = p.alpha_ratio;
        let mut grad: Vec<Vec<f64>> = q
            .iter()
            .enumerate()
            .map(|(j, qj)| {
                qj.iter()
                    .zip(&self.log_p[j])
                    .map(|(x, lp)| if *x > 0.0 { p.weights[j] * (x.ln() - lp) } else { 0.0 })
                    .collect()
            })
            .collect();
        for (ci, con) in p.constraints.iter().enumerate() {
            let s = (self.mu[ci] + self.rho * self.g(q, ci)).max(0.0);
            if s == 0.0 {
                continue;
            }
            let sign = match con.direction {
                Direction::Le => 1.0,
                Direction::Ge => -1.0,
            };
            let (a, t) = (&q[con.train], &q[con.test]);
            for x in 0..a.len() {
                let m = (alpha * a[x] + t[x]) / (1.0 + alpha);
                if a[x] > 0.0 {
                    grad[con.train][x] += s * sign * alpha * (a[x] / m).ln();
                }
                if t[x] > 0.0 {
                    grad[con.test][x] += s * sign * (t[x] / m).ln();
                }
            }
        }
        grad
    }
}

fn step(q: &[Vec<f64>], grad: &[Vec<f64>], eta: f64) -> Vec<Vec<f64>> {
    q.iter()
        .zip(grad)
        .map(|(qj, gj)| {
            let support: Vec<bool> = qj.iter().map(|x| *x > 0.0).collect();
            let logs: Vec<f64> = qj
                .iter()
                .zip(gj)
                .map(|(x, g)| if *x > 0.0 { x.ln() - eta * g } else { f64::NEG_INFINITY })
                .collect();
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
            let s: f64 = w.iter().sum();
            w.iter()
                .zip(&support)
                .map(|(x, &on)| if on { (x / s).max(FLOOR) } else { 0.0 })
                .collect()
        })
        .collect()
}

fn inner(state: &State, q: &mut Vec<Vec<f64>>) -> usize {
    let mut eta = 1.0;
    let mut f = state.value(q);
    let mut stall = 0;
    for it in 1..=INNER_MAX_ITER {
        let grad = state.gradient(q);
        let mut accepted = None;
        let mut e = eta * 2.0;
        while e > 1e-20 {
            let cand = step(q, &grad, e);
            let fc = state.value(&cand);
            let decrease: f64 = q
                .iter()
                .zip(&cand)
                .zip(&grad)
                .map(|((a, b), g)| a.iter().zip(b).zip(g).map(|((x, y), gg)| gg * (x - y)).sum::<f64>())
                .sum();
            if fc <= f - 1e-4 * decrease.max(0.0) {
                accepted = Some((cand, fc, e));
                break;
            }
            e *= 0.5;
        }
        let Some((cand, fc, e)) = accepted else {
            return it;
        };
        eta = e;
        if f - fc < STALL_TOL {
            stall += 1;
        } else {
            stall = 0;
        }
        *q = cand;
        f = fc;
        if stall >= STALL_WINDOW {
            return it;
        }
    }
    INNER_MAX_ITER
}

/// Runs the method of multipliers from `start`; returns the final point and
/// the number of mirror-descent iterations.
pub(crate) fn solve_al(problem: &ExponentProblem, start: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, usize) {
    let mut state = State {
        problem,
        log_p: problem.targets.iter().map(|t| t.probs().iter().map(|p| p.ln()).collect()).collect(),
        mu: vec![0.0; problem.constraints.len()],
        rho: 10.0,
    };
    let mut q = start;
    let mut iterations = 0;
    let mut last_violation = f64::INFINITY;
    for _ in 0..OUTER_MAX_ITER {
        iterations += inner(&state, &mut q);
        let mut violation: f64 = 0.0;
        for c in 0..state.mu.len() {
            let g = state.g(&q, c);
            violation = violation.max(g.max(-state.mu[c] / state.rho).abs());
            state.mu[c] = (state.mu[c] + state.rho * g).max(0.0);
        }
        if violation < 1e-11 {
            break;
        }
        if violation > 0.25 * last_violation {
            state.rho = (state.rho * 10.0).min(1e10);
        }
        last_violation = violation;
    }
    (q, iterations)
}

/// Pushes a `>=`-violating training variable away from its test variable
/// along `Q_a + s (Q_a - Q_t)` until `GJS >= lambda`, when the ray stays on
/// the simplex long enough.
pub(crate) fn repair_ge(problem: &ExponentProblem, q: &mut [Vec<f64>]) {
    for c in &problem.constraints {
        if c.direction != Direction::Ge || problem.constraint_gjs(q, c) >= problem.lambda {
            continue;
        }
        let base = q[c.train].clone();
        let from = q[c.test].clone();
        let s_max = base
            .iter()
            .zip(&from)
            .filter(|(a, t)| *t > *a)
            .map(|(a, t)| a / (t - a))
            .fold(f64::INFINITY, f64::min)
            .min(1e6);
        let at = |s: f64| -> Vec<f64> {
            base.iter()
                .zip(&from)
                .map(|(a, t)| (a + s * (a - t)).max(0.0))
                .collect()
        };
        let mut trial = q.to_vec();
        trial[c.train] = at(s_max);
        if problem.constraint_gjs(&trial, c) < problem.lambda {
            continue;
        }
        let (mut lo, mut hi) = (0.0, s_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            trial[c.train] = at(mid);
            if problem.constraint_gjs(&trial, c) >= problem.lambda {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let fixed = at(hi);
        let s: f64 = fixed.iter().sum();
        q[c.train] = fixed.iter().map(|x| x / s).collect();
    }
}
