//! Gutman's type-based test with empirically observed statistics, its
//! confidence-set variant, and estimation of error and set-size exponents.

mod exact;
mod fit;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{gjs_counts, training_len, EmpiricalType};

pub use exact::{set_size_law_exact, SetSizeLaw, DEFAULT_WORK_BUDGET};
pub use fit::{fit_exponent, ExponentEstimate, RatePoint};
pub use simulate::{simulate_gutman, GutmanRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GutmanConfig {
    /// Training-to-test length ratio; training length is `round(alpha_ratio * n)`.
    pub alpha_ratio: f64,
    pub lambda: f64,
    pub m_classes: usize,
}

impl GutmanConfig {
    pub fn new(alpha_ratio: f64, lambda: f64, m_classes: usize) -> Result<Self> {
        let cfg = Self {
            alpha_ratio,
            lambda,
            m_classes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_ratio > 0.0 && self.alpha_ratio.is_finite()) {
            return Err(Error::Domain {
                value: self.alpha_ratio,
                domain: "(0, inf)",
            });
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Domain {
                value: self.lambda,
                domain: "(0, inf]",
            });
        }
        if self.m_classes < 2 {
            return Err(Error::Precondition("at least two classes are required".into()));
        }
        Ok(())
    }

    pub fn training_len(&self, n: usize) -> usize {
        training_len(self.alpha_ratio, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
}

fn check_pair(t_train: &EmpiricalType, t_test: &EmpiricalType, alpha_ratio: f64) -> Result<()> {
    if t_train.alphabet_size() != t_test.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: t_test.alphabet_size(),
            actual: t_train.alphabet_size(),
        });
    }
    let expected = training_len(alpha_ratio, t_test.len());
    if t_train.len() != expected {
        return Err(Error::RatioMismatch {
            alpha: alpha_ratio,
            n: t_test.len(),
            expected,
            actual: t_train.len(),
        });
    }
    Ok(())
}

/// Classical binary test: `H1` iff `GJS(T_1, T_test) <= lambda`.
pub fn gutman_binary(t1: &EmpiricalType, t_test: &EmpiricalType, alpha_ratio: f64, lambda: f64) -> Result<Hypothesis> {
    check_pair(t1, t_test, alpha_ratio)?;
    if gjs_counts(t1.counts(), t_test.counts()) <= lambda {
        Ok(Hypothesis::H1)
    } else {
        Ok(Hypothesis::H2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GutmanOutcome {
    pub included: Vec<usize>,
    pub gjs_values: Vec<f64>,
    pub true_class: usize,
    pub covered: bool,
    pub set_size: usize,
}

/// Confidence set `{i : GJS(T_i, T_test) < lambda}` (strict).
pub fn gutman_confidence(
    types: &[EmpiricalType],
    t_test: &EmpiricalType,
    cfg: &GutmanConfig,
    true_class: usize,
) -> Result<GutmanOutcome> {
    cfg.validate()?;
    if types.len() != cfg.m_classes {
        return Err(Error::DimensionMismatch {
            expected: cfg.m_classes,
            actual: types.len(),
        });
    }
    if true_class >= cfg.m_classes {
        return Err(Error::SymbolOutOfRange {
            symbol: true_class,
            alphabet_size: cfg.m_classes,
        });
    }
    for t in types {
        check_pair(t, t_test, cfg.alpha_ratio)?;
    }
    let gjs_values: Vec<f64> = types.iter().map(|t| gjs_counts(t.counts(), t_test.counts())).collect();
    let included: Vec<usize> = (0..types.len()).filter(|&i| gjs_values[i] < cfg.lambda).collect();
    Ok(GutmanOutcome {
        covered: included.contains(&true_class),
        set_size: included.len(),
        included,
        gjs_values,
        true_class,
    })
}

/// Finite-n miscoverage bound `exp(-n lambda) (n+1)^K (N+1)^K`.
pub fn miscoverage_bound(n: usize, training_len: usize, alphabet_size: usize, lambda: f64) -> f64 {
    let k = alphabet_size as f64;
    (-(n as f64) * lambda + k * ((n as f64 + 1.0).ln() + (training_len as f64 + 1.0).ln())).exp()
}

/// The polynomial types correction `K log((n+1)(N+1)) / n` to the exponent.
pub fn types_correction(n: usize, training_len: usize, alphabet_size: usize) -> f64 {
    alphabet_size as f64 * ((n as f64 + 1.0) * (training_len as f64 + 1.0)).ln() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::gjs_types;

    fn t(c: &[usize]) -> EmpiricalType {
        EmpiricalType::from_counts(c.to_vec()).unwrap()
    }

    #[test]
    fn binary_decisions() {
        assert_eq!(gutman_binary(&t(&[3, 1]), &t(&[3, 1]), 1.0, 0.01).unwrap(), Hypothesis::H1);
        assert_eq!(gutman_binary(&t(&[4, 0]), &t(&[0, 4]), 1.0, 0.1).unwrap(), Hypothesis::H2);
        assert!(gutman_binary(&t(&[4, 0]), &t(&[0, 5]), 1.0, 0.1).is_err());
    }

    #[test]
    fn boundary_ties() {
        let (a, b) = (t(&[3, 1]), t(&[1, 3]));
        let g = gjs_types(&a, &b, 1.0).unwrap();
        assert_eq!(gutman_binary(&a, &b, 1.0, g).unwrap(), Hypothesis::H1);
        let cfg = GutmanConfig::new(1.0, g, 2).unwrap();
        let out = gutman_confidence(&[a.clone(), b.clone()], &b, &cfg, 0).unwrap();
        assert_eq!(out.included, vec![1]);
        assert!(!out.covered);
    }

    #[test]
    fn all_equal_types_give_full_set() {
        let cfg = GutmanConfig::new(2.0, 1e-6, 3).unwrap();
        let tt = t(&[2, 3]);
        let train = t(&[4, 6]);
        let out = gutman_confidence(&[train.clone(), train.clone(), train], &tt, &cfg, 1).unwrap();
        assert_eq!(out.set_size, 3);
        assert!(out.covered);
    }

    #[test]
    fn tiny_lambda_gives_empty_set() {
        let cfg = GutmanConfig::new(1.0, 1e-12, 2).unwrap();
        let out = gutman_confidence(&[t(&[3, 2]), t(&[1, 4])], &t(&[2, 3]), &cfg, 0).unwrap();
        assert_eq!(out.set_size, 0);
        assert!(out.included.iter().all(|&i| out.gjs_values[i] < cfg.lambda));
    }
}
