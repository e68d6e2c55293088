//! Entropy, divergences and log-conditional moment statistics (nats).

use serde::{Deserialize, Serialize};

use super::dist::{CategoricalDist, ChannelModel};
use super::types::{training_len, EmpiricalType};
use crate::error::{Error, Result};

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// `D(q || p)` on raw slices; `+inf` when `q` charges a zero of `p`.
pub(crate) fn kl_of(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&qa, &pa) in q.iter().zip(p) {
        if qa > 0.0 {
            if pa <= 0.0 {
                return f64::INFINITY;
            }
            acc += qa * (qa / pa).ln();
        }
    }
    // Rounding can leave a tiny negative residue for q == p.
    acc.max(0.0)
}

/// `alpha D(p1 || mix) + D(p2 || mix)` with `mix = (alpha p1 + p2) / (1 + alpha)`.
pub(crate) fn gjs_of(p1: &[f64], p2: &[f64], alpha: f64) -> f64 {
    let denom = 1.0 + alpha;
    let mut acc = 0.0;
    for (&a, &b) in p1.iter().zip(p2) {
        let m = (alpha * a + b) / denom;
        if a > 0.0 {
            acc += alpha * a * (a / m).ln();
        }
        if b > 0.0 {
            acc += b * (b / m).ln();
        }
    }
    acc.max(0.0)
}

/// Shannon entropy `H(P)`, with `0 ln 0 = 0`.
pub fn entropy(p: &CategoricalDist) -> f64 {
    entropy_of(p.probs())
}

/// `D(q || p) = sum q ln(q / p)`; `+inf` when `q` is not absolutely
/// continuous with respect to `p`.
pub fn kl_divergence(q: &CategoricalDist, p: &CategoricalDist) -> Result<f64> {
    q.ensure_same_alphabet(p)?;
    Ok(kl_of(q.probs(), p.probs()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain {
            value: alpha,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

/// Generalized Jensen-Shannon divergence
/// `GJS(p1, p2, alpha) = alpha D(p1 || m) + D(p2 || m)`, `m = (alpha p1 + p2)/(1 + alpha)`.
/// Always finite since the mixture dominates both arguments.
pub fn gjs(p1: &CategoricalDist, p2: &CategoricalDist, alpha: f64) -> Result<f64> {
    p1.ensure_same_alphabet(p2)?;
    check_alpha(alpha)?;
    Ok(gjs_of(p1.probs(), p2.probs(), alpha))
}

/// GJS between a training type and a test type, written through the type of
/// the concatenated sequence:
/// `D(T_test || T_merged) + (N/n) D(T_1 || T_merged)`.
///
/// `t1` must have length `N = round(alpha * n)` (ties to even). The realized
/// ratio `N/n` is the weight, so the identity with the mixture form is exact.
pub fn gjs_types(t1: &EmpiricalType, t_test: &EmpiricalType, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if t1.alphabet_size() != t_test.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: t_test.alphabet_size(),
            actual: t1.alphabet_size(),
        });
    }
    let expected = training_len(alpha, t_test.len());
    if t1.len() != expected {
        return Err(Error::RatioMismatch {
            alpha,
            n: t_test.len(),
            expected,
            actual: t1.len(),
        });
    }
    Ok(gjs_counts(t1.counts(), t_test.counts()))
}

/// `D(T || M) + (N/n) D(T_1 || M)` from raw counts, where `M` is the type of
/// the concatenation. Shared by every caller that compares types so that
/// threshold decisions agree bit for bit.
pub(crate) fn gjs_counts(train: &[usize], test: &[usize]) -> f64 {
    let n1: usize = train.iter().sum();
    let n: usize = test.iter().sum();
    let (n1f, nf) = (n1 as f64, n as f64);
    let total = n1f + nf;
    let ratio = n1f / nf;
    let mut test_part = 0.0;
    let mut train_part = 0.0;
    for (&c1, &c) in train.iter().zip(test) {
        let m = (c1 + c) as f64 / total;
        if c > 0 {
            let q = c as f64 / nf;
            test_part += q * (q / m).ln();
        }
        if c1 > 0 {
            let q = c1 as f64 / n1f;
            train_part += q * (q / m).ln();
        }
    }
    (test_part.max(0.0) + ratio * train_part.max(0.0)).max(0.0)
}

/// Moments of `log P(Y|X)` under the joint law: `h = H(Y|X)`, `sigma` its
/// standard deviation and `rho = E|log P(Y|X) + h|^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCondStats {
    pub h: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl LogCondStats {
    /// Moments of a finitely supported weighted sample of log-probabilities.
    /// Weights need not be normalised. Any `-inf` entry with positive weight
    /// makes the entropy infinite.
    pub fn from_weighted_log_probs(samples: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = samples.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) {
            return Err(Error::Precondition("no positive-weight samples".into()));
        }
        let live: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, lp)| (w / total, *lp))
            .collect();
        if live.iter().any(|(_, lp)| !lp.is_finite()) {
            return Err(Error::InfiniteEntropy);
        }
        let first = live[0].1;
        if live.iter().all(|(_, lp)| *lp == first) {
            return Ok(Self {
                h: (-first).max(0.0),
                sigma: 0.0,
                rho: 0.0,
            });
        }
        let h = -live.iter().map(|(w, lp)| w * lp).sum::<f64>();
        let var: f64 = live.iter().map(|(w, lp)| w * (lp + h).powi(2)).sum();
        let rho: f64 = live.iter().map(|(w, lp)| w * (lp + h).abs().powi(3)).sum();
        Ok(Self {
            h: h.max(0.0),
            sigma: var.sqrt(),
            rho,
        })
    }

    /// Plug-in estimate from equally weighted observed label probabilities.
    pub fn from_label_probs(probs: &[f64]) -> Result<Self> {
        let samples: Vec<(f64, f64)> = probs.iter().map(|p| (1.0, p.ln())).collect();
        Self::from_weighted_log_probs(&samples)
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0
    }

    /// Berry-Esseen ratio `rho / sigma^3`.
    pub fn berry_esseen_ratio(&self) -> f64 {
        self.rho / self.sigma.powi(3)
    }
}

/// Moments of `log P(Y|X)` over `prior_x x P(Y|X)`.
pub fn cond_stats(channel: &ChannelModel) -> LogCondStats {
    let samples: Vec<(f64, f64)> = channel
        .reachable_pairs()
        .map(|(_, _, w, p)| (w, p.ln()))
        .collect();
    LogCondStats::from_weighted_log_probs(&samples)
        .expect("reachable pairs carry positive mass and finite log-probabilities")
}
