//! Brute-force check of the one-shot inequality
//! `P(P(Y^n|X^n) <= beta) <= alpha + beta E|Gamma(X^n)|`
//! on joints small enough to enumerate.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{CategoricalDist, ChannelModel};

/// Upper limit on `|X|^n * M^n` for enumeration.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// The joint law of `(X^n, Y^n)` for i.i.d. samples from a channel, listed
/// explicitly. Sequences are indexed in base `|X|` (resp. `M`), first
/// coordinate most significant.
#[derive(Debug, Clone)]
pub struct SmallJoint {
    n: usize,
    input_size: usize,
    label_count: usize,
    px: Vec<f64>,
    /// `py_given_x[xi][yi] = P(y^n | x^n)`.
    py_given_x: Vec<Vec<f64>>,
}

fn digits(mut index: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

impl SmallJoint {
    pub fn from_channel(channel: &ChannelModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        let xs = channel.input_size() as u128;
        let ms = channel.label_count() as u128;
        let size = xs
            .checked_pow(n as u32)
            .and_then(|a| ms.checked_pow(n as u32).and_then(|b| a.checked_mul(b)))
            .unwrap_or(u128::MAX);
        if size > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                size,
                limit: ENUMERATION_LIMIT,
            });
        }
        let (xs, ms) = (xs as usize, ms as usize);
        let nx = xs.pow(n as u32);
        let ny = ms.pow(n as u32);
        let ys: Vec<Vec<usize>> = (0..ny).map(|i| digits(i, ms, n)).collect();
        let mut px = Vec::with_capacity(nx);
        let mut py_given_x = Vec::with_capacity(nx);
        for xi in 0..nx {
            let x = digits(xi, xs, n);
            px.push(x.iter().map(|&a| channel.prior_x().prob(a)).product());
            let row: Vec<f64> = ys
                .iter()
                .map(|y| x.iter().zip(y).map(|(&a, &b)| channel.row(a).prob(b)).product())
                .collect();
            py_given_x.push(row);
        }
        Ok(Self {
            n,
            input_size: xs,
            label_count: ms,
            px,
            py_given_x,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn num_x(&self) -> usize {
        self.px.len()
    }

    pub fn num_y(&self) -> usize {
        self.py_given_x.first().map_or(0, Vec::len)
    }

    pub fn px(&self, xi: usize) -> f64 {
        self.px[xi]
    }

    pub fn py_given_x(&self, xi: usize, yi: usize) -> f64 {
        self.py_given_x[xi][yi]
    }
}

/// An explicit set-valued predictor: `members[xi][yi]` is true when label
/// sequence `yi` belongs to the set predicted for input sequence `xi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPredictor {
    pub members: Vec<Vec<bool>>,
}

impl SetPredictor {
    /// Always predicts every label sequence.
    pub fn full(joint: &SmallJoint) -> Self {
        Self {
            members: vec![vec![true; joint.num_y()]; joint.num_x()],
        }
    }

    /// The idealized set `{y : P(y|x) >= beta}`.
    pub fn threshold(joint: &SmallJoint, beta: f64) -> Self {
        let members = (0..joint.num_x())
            .map(|xi| (0..joint.num_y()).map(|yi| joint.py_given_x(xi, yi) >= beta).collect())
            .collect();
        Self { members }
    }

    /// Smallest global threshold on `score[xi][yi]` whose super-level set has
    /// joint probability at least `1 - alpha`. Pairs tied with the last
    /// included score are all included.
    pub fn from_scores(joint: &SmallJoint, score: &[Vec<f64>], alpha: f64) -> Self {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(joint.num_x() * joint.num_y());
        for xi in 0..joint.num_x() {
            for yi in 0..joint.num_y() {
                pairs.push((score[xi][yi], xi, yi));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut members = vec![vec![false; joint.num_y()]; joint.num_x()];
        let mut covered = 0.0;
        let mut cut: Option<f64> = None;
        for &(s, xi, yi) in &pairs {
            if let Some(c) = cut {
                if s < c {
                    break;
                }
            }
            members[xi][yi] = true;
            covered += joint.px(xi) * joint.py_given_x(xi, yi);
            if cut.is_none() && covered >= 1.0 - alpha {
                cut = Some(s);
            }
        }
        Self { members }
    }

    pub fn size(&self, xi: usize) -> usize {
        self.members[xi].iter().filter(|&&b| b).count()
    }
}

/// All terms of the inequality, computed by enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerduHanAudit {
    pub alpha: f64,
    pub beta: f64,
    /// `P(Y^n not in Gamma(X^n))`.
    pub error: f64,
    pub expected_size: f64,
    /// `P(P(Y^n|X^n) <= beta)`.
    pub tail: f64,
    /// `alpha + beta E|Gamma| - tail`.
    pub slack: f64,
}

/// Evaluates `alpha + beta E|Gamma| - P(P(Y^n|X^n) <= beta)` exactly.
/// The predictor must have error at most `alpha` (up to 1e-12 rounding).
pub fn verdu_han_slack(joint: &SmallJoint, predictor: &SetPredictor, alpha: f64, beta: f64) -> Result<VerduHanAudit> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain {
            value: alpha,
            domain: "[0, 1]",
        });
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain {
            value: beta,
            domain: "(0, 1]",
        });
    }
    if predictor.members.len() != joint.num_x() || predictor.members.iter().any(|r| r.len() != joint.num_y()) {
        return Err(Error::DimensionMismatch {
            expected: joint.num_x() * joint.num_y(),
            actual: predictor.members.iter().map(Vec::len).sum(),
        });
    }
    let mut error = 0.0;
    let mut expected_size = 0.0;
    let mut tail = 0.0;
    for xi in 0..joint.num_x() {
        let px = joint.px(xi);
        if px == 0.0 {
            continue;
        }
        expected_size += px * predictor.size(xi) as f64;
        for yi in 0..joint.num_y() {
            let p = joint.py_given_x(xi, yi);
            if !predictor.members[xi][yi] {
                error += px * p;
            }
            if p <= beta {
                tail += px * p;
            }
        }
    }
    if error > alpha + 1e-12 {
        return Err(Error::PredictorMiscoverage { error, alpha });
    }
    Ok(VerduHanAudit {
        alpha,
        beta,
        error,
        expected_size,
        tail,
        slack: alpha + beta * expected_size - tail,
    })
}

/// A randomly drawn audit case.
#[derive(Debug, Clone)]
pub struct AuditInstance {
    pub channel: ChannelModel,
    pub joint: SmallJoint,
    pub predictor: SetPredictor,
    pub alpha: f64,
    pub beta: f64,
}

fn random_dist<R: Rng + ?Sized>(rng: &mut R, size: usize) -> CategoricalDist {
    // Exponential weights give a uniform draw on the simplex; occasionally
    // zero out entries to exercise sparse rows.
    let mut w: Vec<f64> = (0..size)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    if size > 1 && rng.random::<f64>() < 0.2 {
        let k = rng.random_range(0..size);
        w[k] = 0.0;
    }
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    CategoricalDist::from_weights(&w).expect("positive total weight")
}

/// Draws `n <= 3`, `|X| <= 3`, `M` in `{2, 3}`, a random channel, `alpha`
/// uniform in `(0.01, 0.5)`, `beta` log-uniform in `[1e-4, 1]`, and a
/// predictor thresholding a random score (a noisy version of `P(y|x)` or
/// pure noise) at the smallest level with coverage `>= 1 - alpha`.
pub fn random_audit_instance<R: Rng + ?Sized>(rng: &mut R) -> AuditInstance {
    let n = rng.random_range(1..=3);
    let xs = rng.random_range(1..=3);
    let m = rng.random_range(2..=3);
    let prior = random_dist(rng, xs);
    let rows = (0..xs).map(|_| random_dist(rng, m)).collect();
    let channel = ChannelModel::new(prior, rows).expect("matching dimensions");
    let joint = SmallJoint::from_channel(&channel, n).expect("within the enumeration limit");
    let alpha = 0.01 + 0.49 * rng.random::<f64>();
    let beta = (1e-4f64.ln() * rng.random::<f64>()).exp();
    let informed = rng.random::<bool>();
    let score: Vec<Vec<f64>> = (0..joint.num_x())
        .map(|xi| {
            (0..joint.num_y())
                .map(|yi| {
                    let u: f64 = rng.random();
                    if informed {
                        joint.py_given_x(xi, yi) * (0.5 + u)
                    } else {
                        u
                    }
                })
                .collect()
        })
        .collect();
    let predictor = SetPredictor::from_scores(&joint, &score, alpha);
    AuditInstance {
        channel,
        joint,
        predictor,
        alpha,
        beta,
    }
}
