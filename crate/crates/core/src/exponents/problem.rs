use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{gjs_of, kl_of, CategoricalDist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `GJS <= lambda` (closure of the strict constraint).
    Le,
    /// `GJS >= lambda`.
    Ge,
}

/// `GJS(Q_train, Q_test, alpha) (<= | >=) lambda`, indices into the variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GjsConstraint {
    pub train: usize,
    pub test: usize,
    pub direction: Direction,
}

/// `min sum_j w_j D(Q_j || P_j)` over distributions `Q_j`, one per target,
/// subject to GJS constraints between pairs of variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentProblem {
    pub targets: Vec<CategoricalDist>,
    pub weights: Vec<f64>,
    pub alpha_ratio: f64,
    pub lambda: f64,
    pub constraints: Vec<GjsConstraint>,
}

impl ExponentProblem {
    pub fn new(
        targets: Vec<CategoricalDist>,
        weights: Vec<f64>,
        alpha_ratio: f64,
        lambda: f64,
        constraints: Vec<GjsConstraint>,
    ) -> Result<Self> {
        let p = Self {
            targets,
            weights,
            alpha_ratio,
            lambda,
            constraints,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Precondition("no variables".into()));
        }
        if self.weights.len() != self.targets.len() {
            return Err(Error::DimensionMismatch {
                expected: self.targets.len(),
                actual: self.weights.len(),
            });
        }
        for t in &self.targets {
            t.ensure_same_alphabet(&self.targets[0])?;
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Precondition("objective weights must be positive".into()));
        }
        if !(self.alpha_ratio > 0.0 && self.alpha_ratio.is_finite()) {
            return Err(Error::Domain {
                value: self.alpha_ratio,
                domain: "(0, inf)",
            });
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain {
                value: self.lambda,
                domain: "(0, inf)",
            });
        }
        for c in &self.constraints {
            if c.train >= self.targets.len() || c.test >= self.targets.len() || c.train == c.test {
                return Err(Error::Precondition(format!("bad constraint {c:?}")));
            }
        }
        Ok(())
    }

    /// `F(P1, P2, alpha, lambda) = min D(Q2||P2) + alpha D(Q1||P1)` subject to
    /// `GJS(Q1, Q2, alpha) <= lambda`. Variable 0 is `Q1`, variable 1 is `Q2`.
    pub fn binary_f(p1: &CategoricalDist, p2: &CategoricalDist, alpha_ratio: f64, lambda: f64) -> Result<Self> {
        Self::new(
            vec![p1.clone(), p2.clone()],
            vec![alpha_ratio, 1.0],
            alpha_ratio,
            lambda,
            vec![GjsConstraint {
                train: 0,
                test: 1,
                direction: Direction::Le,
            }],
        )
    }

    /// The multi-class exponent for the set `S` (0-based class indices) and
    /// test class `l`. Training variables come first, in increasing class
    /// order, and the test variable `Q_t` (target `P_l`) is last.
    ///
    /// For `l` in `S` the training variables are `S \ {l}` with
    /// `GJS(Q_i, Q_t) <= lambda`; for `l` not in `S` they are `S u {l}` with
    /// the extra constraint `GJS(Q_l, Q_t) >= lambda`. Classes outside these
    /// sets are unconstrained and contribute zero, so they are dropped.
    pub fn set_size_problem(dists: &[CategoricalDist], set: &[usize], l: usize, alpha_ratio: f64, lambda: f64) -> Result<Self> {
        let m = dists.len();
        if set.is_empty() || set.iter().any(|&i| i >= m) || l >= m {
            return Err(Error::Precondition("class indices out of range or empty set".into()));
        }
        let mut s = set.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.len() != set.len() {
            return Err(Error::Precondition("repeated class in set".into()));
        }
        let l_in = s.contains(&l);
        let mut train: Vec<usize> = s.iter().copied().filter(|&i| i != l).collect();
        if !l_in {
            train.push(l);
            train.sort_unstable();
        }
        let t = train.len();
        let mut targets: Vec<CategoricalDist> = train.iter().map(|&i| dists[i].clone()).collect();
        targets.push(dists[l].clone());
        let mut weights = vec![alpha_ratio; t];
        weights.push(1.0);
        let constraints = train
            .iter()
            .enumerate()
            .map(|(v, &i)| GjsConstraint {
                train: v,
                test: t,
                direction: if i == l { Direction::Ge } else { Direction::Le },
            })
            .collect();
        Self::new(targets, weights, alpha_ratio, lambda, constraints)
    }

    pub fn num_vars(&self) -> usize {
        self.targets.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.targets[0].alphabet_size()
    }

    pub fn is_convex(&self) -> bool {
        self.constraints.iter().all(|c| c.direction == Direction::Le)
    }

    pub(crate) fn objective(&self, q: &[Vec<f64>]) -> f64 {
        q.iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((qj, p), w)| w * kl_of(qj, p.probs()))
            .sum()
    }

    pub(crate) fn constraint_gjs(&self, q: &[Vec<f64>], c: &GjsConstraint) -> f64 {
        gjs_of(&q[c.train], &q[c.test], self.alpha_ratio)
    }

    /// Largest constraint violation (0 when feasible).
    pub(crate) fn violation(&self, q: &[Vec<f64>]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let g = self.constraint_gjs(q, c);
                match c.direction {
                    Direction::Le => g - self.lambda,
                    Direction::Ge => self.lambda - g,
                }
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn target_vectors(&self) -> Vec<Vec<f64>> {
        self.targets.iter().map(|t| t.probs().to_vec()).collect()
    }
}

/// Result of an exponent minimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentSolution {
    /// Minimum value in nats; `+inf` when infeasible.
    pub value: f64,
    pub argmin: Vec<CategoricalDist>,
    pub iterations: usize,
    /// For convex problems, the duality gap `sum mu_c (lambda - GJS_c)`; for
    /// non-convex problems on binary alphabets, `max(0, value - grid value)`
    /// from a coarse grid check; NaN otherwise.
    pub certified_gap: f64,
    pub feasible: bool,
    /// Set when global optimality is not certified (non-convex, alphabet > 2).
    pub heuristic: bool,
}
