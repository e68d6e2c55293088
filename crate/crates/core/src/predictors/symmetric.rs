//! Exact evaluation of the idealized threshold predictor
//! `Gamma(x^n) = {y^n : prod P(y_i|x_i) >= beta}` on the symmetric
//! noisy-label channel, by counting label vectors with `k` correct entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::special::{log_sum_exp, LogFactorials};
use crate::prob::{cond_stats, ChannelModel, LogCondStats};

/// Keeps each label with probability `1 - epsilon` and otherwise replaces it
/// by one of the other `M - 1` labels uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricChannelSpec {
    pub epsilon: f64,
    pub m_classes: usize,
}

impl SymmetricChannelSpec {
    pub fn new(epsilon: f64, m_classes: usize) -> Result<Self> {
        let spec = Self { epsilon, m_classes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Domain {
                value: self.epsilon,
                domain: "[0, 1)",
            });
        }
        if self.m_classes < 2 {
            return Err(Error::Precondition("at least two classes are required".into()));
        }
        Ok(())
    }

    /// `P(y|x)` for a correct (`true`) or a specific wrong label.
    pub fn label_prob(&self, correct: bool) -> f64 {
        if correct {
            1.0 - self.epsilon
        } else {
            self.epsilon / (self.m_classes - 1) as f64
        }
    }

    /// The channel with a uniform input over the `M` classes.
    pub fn channel(&self) -> ChannelModel {
        ChannelModel::symmetric(self.epsilon, self.m_classes).expect("validated spec")
    }

    pub fn stats(&self) -> LogCondStats {
        cond_stats(&self.channel())
    }

    /// `log P(y^n|x^n)` for a label vector with `k` correct entries.
    pub fn log_prob_with_correct(&self, n: usize, k: usize) -> f64 {
        let wrong = n - k;
        let correct_part = k as f64 * (1.0 - self.epsilon).ln();
        let wrong_part = if wrong == 0 {
            0.0
        } else {
            wrong as f64 * self.label_prob(false).ln()
        };
        correct_part + wrong_part
    }
}

/// Exact size and coverage of the idealized predictor at a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdealizedEval {
    /// `log E|Gamma(X^n)|`; `-inf` for the empty set.
    pub log_set_size: f64,
    pub coverage: f64,
    /// `exp(log_beta)`, which may underflow to 0 for large `n`.
    pub beta: f64,
    pub log_beta: f64,
    pub n: usize,
}

struct Counter {
    lf: LogFactorials,
    ln_wrong_labels: f64,
    ln_keep: f64,
    ln_flip: f64,
}

impl Counter {
    fn new(spec: &SymmetricChannelSpec, n: usize) -> Self {
        Self {
            lf: LogFactorials::new(n),
            ln_wrong_labels: ((spec.m_classes - 1) as f64).ln(),
            ln_keep: (1.0 - spec.epsilon).ln(),
            ln_flip: spec.epsilon.ln(),
        }
    }

    /// `log [C(n,k) (M-1)^(n-k)]`: label vectors with exactly `k` correct.
    fn log_count(&self, n: usize, k: usize) -> f64 {
        self.lf.ln_binomial(n, k) + (n - k) as f64 * self.ln_wrong_labels
    }

    /// `log P(Binomial(n, 1-eps) = k)`.
    fn log_pmf(&self, n: usize, k: usize) -> f64 {
        let wrong = n - k;
        let flip = if wrong == 0 { 0.0 } else { wrong as f64 * self.ln_flip };
        self.lf.ln_binomial(n, k) + k as f64 * self.ln_keep + flip
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    Ok(())
}

/// [`idealized_eval_symmetric`] with the threshold given as `log beta <= 0`.
pub fn idealized_eval_symmetric_log(spec: &SymmetricChannelSpec, n: usize, log_beta: f64) -> Result<IdealizedEval> {
    spec.validate()?;
    check_n(n)?;
    if log_beta.is_nan() || log_beta > 0.0 {
        return Err(Error::Domain {
            value: log_beta,
            domain: "log beta in [-inf, 0]",
        });
    }
    let counter = Counter::new(spec, n);
    let mut sizes = Vec::new();
    let mut masses = Vec::new();
    for k in 0..=n {
        if spec.log_prob_with_correct(n, k) >= log_beta {
            sizes.push(counter.log_count(n, k));
            masses.push(counter.log_pmf(n, k));
        }
    }
    Ok(IdealizedEval {
        log_set_size: log_sum_exp(&sizes),
        coverage: log_sum_exp(&masses).exp().min(1.0),
        beta: log_beta.exp(),
        log_beta,
        n,
    })
}

/// Exact `log |Gamma|` and coverage of `{y^n : P(y^n|x^n) >= beta}`. The set
/// size does not depend on `x^n`; coverage is a binomial tail.
pub fn idealized_eval_symmetric(spec: &SymmetricChannelSpec, n: usize, beta: f64) -> Result<IdealizedEval> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain {
            value: beta,
            domain: "(0, 1]",
        });
    }
    idealized_eval_symmetric_log(spec, n, beta.ln())
}

/// Largest `log beta` whose idealized set has coverage at least `1 - alpha`.
/// It is always one of the attainable levels `log P(y^n|x^n)`.
pub fn min_feasible_threshold(spec: &SymmetricChannelSpec, n: usize, alpha: f64) -> Result<f64> {
    spec.validate()?;
    check_n(n)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain {
            value: alpha,
            domain: "[0, 1)",
        });
    }
    let counter = Counter::new(spec, n);
    let mut levels: Vec<(f64, f64)> = (0..=n)
        .map(|k| (spec.log_prob_with_correct(n, k), counter.log_pmf(n, k)))
        .filter(|(lp, _)| *lp > f64::NEG_INFINITY)
        .collect();
    levels.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut acc = f64::NEG_INFINITY;
    let mut i = 0;
    while i < levels.len() {
        // Levels can coincide when (1 - eps) = eps / (M - 1).
        let level = levels[i].0;
        while i < levels.len() && levels[i].0 == level {
            acc = crate::prob::special::log_add_exp(acc, levels[i].1);
            i += 1;
        }
        if acc.exp() >= 1.0 - alpha {
            return Ok(level);
        }
    }
    Ok(levels.last().map_or(0.0, |l| l.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SymmetricChannelSpec {
        SymmetricChannelSpec::new(0.1, 10).unwrap()
    }

    #[test]
    fn single_vector_just_below_top() {
        let n = 20;
        let top = spec().log_prob_with_correct(n, n);
        let e = idealized_eval_symmetric_log(&spec(), n, top - 1e-9).unwrap();
        assert_eq!(e.log_set_size, 0.0);
        assert!((e.coverage - 0.9f64.powi(20)).abs() < 1e-14);
    }

    #[test]
    fn tiny_beta_is_full_set() {
        let n = 30;
        let e = idealized_eval_symmetric_log(&spec(), n, -1e6).unwrap();
        assert!((e.log_set_size - n as f64 * 10f64.ln()).abs() < 1e-9);
        assert!((e.coverage - 1.0).abs() < 1e-12);
    }

    #[test]
    fn above_max_is_empty() {
        let e = idealized_eval_symmetric(&spec(), 5, 1.0).unwrap();
        assert_eq!(e.log_set_size, f64::NEG_INFINITY);
        assert_eq!(e.coverage, 0.0);
    }

    #[test]
    fn noiseless_channel() {
        let s = SymmetricChannelSpec::new(0.0, 4).unwrap();
        let e = idealized_eval_symmetric(&s, 10, 0.5).unwrap();
        assert_eq!(e.log_set_size, 0.0);
        assert_eq!(e.coverage, 1.0);
        assert_eq!(min_feasible_threshold(&s, 10, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn min_threshold_is_tight() {
        let s = spec();
        for n in [10, 50, 200] {
            let lb = min_feasible_threshold(&s, n, 0.1).unwrap();
            let at = idealized_eval_symmetric_log(&s, n, lb).unwrap();
            assert!(at.coverage >= 0.9);
            let above = idealized_eval_symmetric_log(&s, n, lb + 1e-9).unwrap();
            assert!(above.coverage < 0.9);
        }
    }
}
