//! Finite-n bounds on `n * gamma`, the log of the expected prediction-set size
//! of any transductive predictor with confidence `1 - alpha`.
//!
//! Converse (lower) bounds come from the one-shot inequality
//! `P(P(Y|X) <= beta) <= alpha + beta E|Gamma|` combined with a Berry-Esseen
//! estimate of the left-hand side; achievability (upper) bounds come from the
//! idealized threshold set `{y : P(y|x) >= beta}` and `E|Gamma| <= 1/beta`.

mod audit;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{gaussian_q_inv, ChannelModel, LogCondStats};

pub use audit::{random_audit_instance, verdu_han_slack, AuditInstance, SetPredictor, SmallJoint, VerduHanAudit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    ConverseExact,
    ConverseApprox,
    Achievability,
    GeneralQ,
    /// `sigma = 0`: the Berry-Esseen machinery is undefined and the trivial
    /// bound is reported instead.
    TrivialDegenerate,
}

/// Intermediate terms of a bound evaluation, all in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTerms {
    /// `n H(Y|X)` (or `-n mu` for a general reference measure).
    pub rate_term: f64,
    /// `sqrt(n) sigma Q^{-1}(q_inv_argument)`.
    pub dispersion_term: f64,
    pub q_inv_argument: f64,
    /// `log Delta` for the exact converse.
    pub log_delta: Option<f64>,
    /// `-(1/2) log n` for the approximate converse.
    pub log_n_correction: Option<f64>,
    /// The approximate converse drops an O(1) constant; it is reported as 0.
    pub constant_dropped: bool,
    /// `log beta` of the achievability threshold.
    pub log_beta: Option<f64>,
}

impl BoundTerms {
    fn empty() -> Self {
        Self {
            rate_term: 0.0,
            dispersion_term: 0.0,
            q_inv_argument: f64::NAN,
            log_delta: None,
            log_n_correction: None,
            constant_dropped: false,
            log_beta: None,
        }
    }
}

/// A bound on `n gamma_{n,m}` in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value_nats: f64,
    pub per_sample_nats: f64,
    pub n: usize,
    pub alpha: f64,
    pub vacuous: bool,
    pub terms: BoundTerms,
}

impl BoundReport {
    fn new(kind: BoundKind, value: f64, n: usize, alpha: f64, vacuous: bool, terms: BoundTerms) -> Self {
        Self {
            kind,
            value_nats: value,
            per_sample_nats: value / n as f64,
            n,
            alpha,
            vacuous,
            terms,
        }
    }

    /// Flags the report as vacuous when the per-sample value reaches the
    /// full-set rate `log M`.
    pub fn flag_full_set(mut self, label_count: usize) -> Self {
        if self.per_sample_nats >= (label_count as f64).ln() {
            self.vacuous = true;
        }
        self
    }
}

fn check_common(n: usize, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain {
            value: alpha,
            domain: "[0, 1)",
        });
    }
    Ok(())
}

/// Default `Delta = 1/sqrt(n)`.
pub fn default_delta(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// Shared evaluation of `log Delta + rate + sqrt(n) sigma Q^{-1}(alpha + rho/(sqrt(n) sigma^3) + Delta)`.
fn berry_esseen_converse(
    kind: BoundKind,
    rate_term: f64,
    sigma: f64,
    rho: f64,
    n: usize,
    alpha: f64,
    delta: f64,
) -> Result<BoundReport> {
    check_common(n, alpha)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain {
            value: delta,
            domain: "(0, inf)",
        });
    }
    if sigma == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let sqrt_n = (n as f64).sqrt();
    let arg = alpha + rho / (sqrt_n * sigma.powi(3)) + delta;
    let log_delta = delta.ln();
    let mut terms = BoundTerms {
        rate_term,
        q_inv_argument: arg,
        log_delta: Some(log_delta),
        ..BoundTerms::empty()
    };
    if arg >= 1.0 {
        terms.dispersion_term = f64::NEG_INFINITY;
        return Ok(BoundReport::new(kind, f64::NEG_INFINITY, n, alpha, true, terms));
    }
    let dispersion_term = sqrt_n * sigma * gaussian_q_inv(arg)?;
    terms.dispersion_term = dispersion_term;
    let value = log_delta + rate_term + dispersion_term;
    Ok(BoundReport::new(kind, value, n, alpha, false, terms))
}

/// Exact finite-n converse
/// `log Delta + n H + sqrt(n) sigma Q^{-1}(alpha + rho/(sqrt(n) sigma^3) + Delta) <= n gamma`.
///
/// When the argument of `Q^{-1}` leaves `(0, 1)` the report is vacuous with
/// value `-inf`. A zero-dispersion channel is rejected; see
/// [`converse_or_trivial`].
pub fn converse_exact(stats: &LogCondStats, n: usize, alpha: f64, delta: f64) -> Result<BoundReport> {
    let rate_term = n as f64 * stats.h;
    berry_esseen_converse(BoundKind::ConverseExact, rate_term, stats.sigma, stats.rho, n, alpha, delta)
}

/// [`converse_exact`], falling back to the trivial bound `n gamma >= 0`
/// (kind [`BoundKind::TrivialDegenerate`]) when `sigma = 0`.
pub fn converse_or_trivial(stats: &LogCondStats, n: usize, alpha: f64, delta: f64) -> Result<BoundReport> {
    match converse_exact(stats, n, alpha, delta) {
        Err(Error::DegenerateChannel) => Ok(trivial(n, alpha)),
        other => other,
    }
}

fn trivial(n: usize, alpha: f64) -> BoundReport {
    let terms = BoundTerms {
        q_inv_argument: f64::NAN,
        ..BoundTerms::empty()
    };
    BoundReport::new(BoundKind::TrivialDegenerate, 0.0, n, alpha, false, terms)
}

/// Approximate converse `n H + sqrt(n) sigma Q^{-1}(alpha) - (1/2) log n`.
/// The O(1) remainder is dropped (reported as 0, `constant_dropped = true`).
pub fn converse_approx(stats: &LogCondStats, n: usize, alpha: f64) -> Result<BoundReport> {
    check_common(n, alpha)?;
    if alpha == 0.0 {
        return Err(Error::Domain {
            value: alpha,
            domain: "(0, 1)",
        });
    }
    if stats.sigma == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let nf = n as f64;
    let rate_term = nf * stats.h;
    let dispersion_term = nf.sqrt() * stats.sigma * gaussian_q_inv(alpha)?;
    let correction = -0.5 * nf.ln();
    let terms = BoundTerms {
        rate_term,
        dispersion_term,
        q_inv_argument: alpha,
        log_n_correction: Some(correction),
        constant_dropped: true,
        ..BoundTerms::empty()
    };
    let value = rate_term + dispersion_term + correction;
    Ok(BoundReport::new(BoundKind::ConverseApprox, value, n, alpha, false, terms))
}

/// [`converse_approx`] with the trivial fallback for `sigma = 0`.
pub fn converse_approx_or_trivial(stats: &LogCondStats, n: usize, alpha: f64) -> Result<BoundReport> {
    match converse_approx(stats, n, alpha) {
        Err(Error::DegenerateChannel) => Ok(trivial(n, alpha)),
        other => other,
    }
}

/// Smallest `n` with `alpha - rho/(sqrt(n) sigma^3) > 0`, i.e. `n > (rho/(alpha sigma^3))^2`.
pub fn achievability_min_n(stats: &LogCondStats, alpha: f64) -> usize {
    let r = stats.berry_esseen_ratio() / alpha;
    (r * r).floor() as usize + 1
}

/// Achievability: with `beta = exp(-n H - Q^{-1}(alpha - rho/(sqrt(n) sigma^3)) sigma sqrt(n))`
/// the idealized threshold set has confidence `1 - alpha` and
/// `log E|Gamma| <= -log beta`, which is the reported value.
pub fn achievability(stats: &LogCondStats, n: usize, alpha: f64) -> Result<BoundReport> {
    check_common(n, alpha)?;
    if stats.sigma == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let sqrt_n = (n as f64).sqrt();
    let arg = alpha - stats.rho / (sqrt_n * stats.sigma.powi(3));
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::SampleSizeTooSmall {
            n,
            minimal_n: achievability_min_n(stats, alpha),
        });
    }
    let rate_term = n as f64 * stats.h;
    let dispersion_term = gaussian_q_inv(arg)? * stats.sigma * sqrt_n;
    let log_beta = -rate_term - dispersion_term;
    let terms = BoundTerms {
        rate_term,
        dispersion_term,
        q_inv_argument: arg,
        log_beta: Some(log_beta),
        ..BoundTerms::empty()
    };
    Ok(BoundReport::new(BoundKind::Achievability, -log_beta, n, alpha, false, terms))
}

/// [`achievability`], with the degenerate channel handled exactly: when every
/// reachable label vector has probability `exp(-n H)`, the threshold
/// `beta = exp(-n H)` covers everything and `log E|Gamma| <= n H`.
pub fn achievability_or_degenerate(stats: &LogCondStats, n: usize, alpha: f64) -> Result<BoundReport> {
    match achievability(stats, n, alpha) {
        Err(Error::DegenerateChannel) => {
            let rate_term = n as f64 * stats.h;
            let terms = BoundTerms {
                rate_term,
                log_beta: Some(-rate_term),
                ..BoundTerms::empty()
            };
            Ok(BoundReport::new(BoundKind::TrivialDegenerate, rate_term, n, alpha, false, terms))
        }
        other => other,
    }
}

/// Phase-transition rate: below `H(Y|X)` per sample the confidence of any
/// predictor vanishes as `n` grows.
pub fn asymptotic_rate(stats: &LogCondStats) -> f64 {
    stats.h
}

/// Moments of the log-likelihood ratio `log P(Y|X)/Q(Y|X)` for a reference
/// measure `Q` (not necessarily a probability measure).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRefStats {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub description: String,
}

/// A per-input reference measure on labels, `weights[x][y] = Q(y|x) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeasure {
    weights: Vec<Vec<f64>>,
    description: String,
}

impl ReferenceMeasure {
    pub fn new(weights: Vec<Vec<f64>>, description: impl Into<String>) -> Result<Self> {
        if weights.iter().flatten().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Precondition("reference weights must be positive and finite".into()));
        }
        Ok(Self {
            weights,
            description: description.into(),
        })
    }

    /// `Q(y|x) = 1`: recovers the set-size efficiency measure.
    pub fn counting(channel: &ChannelModel) -> Self {
        Self {
            weights: vec![vec![1.0; channel.label_count()]; channel.input_size()],
            description: "counting".into(),
        }
    }

    /// `Q(y|x) = 1/M`.
    pub fn uniform(channel: &ChannelModel) -> Self {
        let m = channel.label_count();
        Self {
            weights: vec![vec![1.0 / m as f64; m]; channel.input_size()],
            description: "uniform".into(),
        }
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[x][y]
    }
}

impl QRefStats {
    pub fn from_channel(channel: &ChannelModel, reference: &ReferenceMeasure) -> Result<Self> {
        if reference.weights.len() != channel.input_size()
            || reference.weights.iter().any(|r| r.len() != channel.label_count())
        {
            return Err(Error::DimensionMismatch {
                expected: channel.input_size() * channel.label_count(),
                actual: reference.weights.iter().map(Vec::len).sum(),
            });
        }
        let samples: Vec<(f64, f64)> = channel
            .reachable_pairs()
            .map(|(x, y, w, p)| (w, p.ln() - reference.weight(x, y).ln()))
            .collect();
        let mu: f64 = samples.iter().map(|(w, v)| w * v).sum();
        let first = samples[0].1;
        let (sigma, rho) = if samples.iter().all(|(_, v)| *v == first) {
            (0.0, 0.0)
        } else {
            let var: f64 = samples.iter().map(|(w, v)| w * (v - mu).powi(2)).sum();
            let rho: f64 = samples.iter().map(|(w, v)| w * (v - mu).abs().powi(3)).sum();
            (var.sqrt(), rho)
        };
        Ok(Self {
            mu,
            sigma,
            rho,
            description: reference.description.clone(),
        })
    }

    /// Exactly the moments of [`LogCondStats`] viewed against the counting measure.
    pub fn counting_from(stats: &LogCondStats) -> Self {
        Self {
            mu: -stats.h,
            sigma: stats.sigma,
            rho: stats.rho,
            description: "counting".into(),
        }
    }
}

/// Converse for a general efficiency measure `Q`:
/// `log Delta - n mu + sqrt(n) sigma Q^{-1}(alpha + rho/(sqrt(n) sigma^3) + Delta)`
/// bounds `n gamma^(Q) = log E[Q(Gamma | X)]` from below. For the counting
/// measure `mu = -H` and the value equals [`converse_exact`] bit for bit.
pub fn general_q_bound(qstats: &QRefStats, n: usize, alpha: f64, delta: f64) -> Result<BoundReport> {
    let rate_term = -(n as f64 * qstats.mu);
    berry_esseen_converse(BoundKind::GeneralQ, rate_term, qstats.sigma, qstats.rho, n, alpha, delta)
}
