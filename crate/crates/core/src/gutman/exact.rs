//! Exact law of the confidence-set size by enumerating types.
//!
//! Given the test type, the training types of different classes are
//! independent, so each class enters the set independently with a
//! probability that is a sum over training types. A Poisson-binomial
//! recursion then gives the size distribution. Inclusion and exclusion
//! probabilities are accumulated separately, so rare events (probabilities
//! far below machine epsilon relative to 1) keep full relative precision.

use rayon::prelude::*;
use serde::Serialize;

use super::GutmanConfig;
use crate::error::{Error, Result};
use crate::prob::special::{xlogy, LogFactorials};
use crate::prob::{count_types, enumerate_type_counts, gjs_counts, CategoricalDist};

/// Limit on `#test types * #training types * M`.
pub const DEFAULT_WORK_BUDGET: u128 = 500_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSizeLaw {
    pub n: usize,
    pub training_len: usize,
    /// `size_probs[k] = P(|Gamma| = k)`, `k = 0..=M`.
    pub size_probs: Vec<f64>,
    pub miscoverage: f64,
}

fn type_probs(types: &[Vec<usize>], dist: &CategoricalDist, lf: &LogFactorials) -> Vec<f64> {
    types
        .iter()
        .map(|c| {
            let lp: f64 = c.iter().zip(dist.probs()).map(|(&k, &p)| xlogy(k as f64, p)).sum();
            (lf.ln_multinomial(c) + lp).exp()
        })
        .collect()
}

/// Exact `P(|Gamma| = k)` and miscoverage of Gutman's test with confidence at
/// test length `n`.
pub fn set_size_law_exact(
    dists: &[CategoricalDist],
    priors: &CategoricalDist,
    cfg: &GutmanConfig,
    n: usize,
    work_budget: u128,
) -> Result<SetSizeLaw> {
    cfg.validate()?;
    let m = cfg.m_classes;
    if dists.len() != m || priors.alphabet_size() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: dists.len(),
        });
    }
    for d in dists {
        d.ensure_same_alphabet(&dists[0])?;
    }
    let k = dists[0].alphabet_size();
    let big_n = cfg.training_len(n);
    if n == 0 || big_n == 0 {
        return Err(Error::Precondition(format!(
            "test length {n} gives training length {big_n}; both must be positive"
        )));
    }
    let work = count_types(n, k)
        .saturating_mul(count_types(big_n, k))
        .saturating_mul(m as u128);
    if work > work_budget {
        return Err(Error::TooLarge {
            size: work,
            limit: work_budget,
        });
    }
    let lf = LogFactorials::new(n.max(big_n));
    let train_types = enumerate_type_counts(big_n, k);
    let test_types = enumerate_type_counts(n, k);
    let train_probs: Vec<Vec<f64>> = dists.iter().map(|d| type_probs(&train_types, d, &lf)).collect();
    let test_probs: Vec<Vec<f64>> = dists.iter().map(|d| type_probs(&test_types, d, &lf)).collect();

    let parts: Vec<(Vec<f64>, f64)> = test_types
        .par_iter()
        .enumerate()
        .map(|(ti, t)| {
            let weights: Vec<f64> = (0..m).map(|c| priors.prob(c) * test_probs[c][ti]).collect();
            let total: f64 = weights.iter().sum();
            if total == 0.0 {
                return (vec![0.0; m + 1], 0.0);
            }
            let inside: Vec<bool> = train_types
                .iter()
                .map(|t1| gjs_counts(t1, t) < cfg.lambda)
                .collect();
            let mut incl = vec![0.0; m];
            let mut excl = vec![0.0; m];
            for i in 0..m {
                for (j, &ins) in inside.iter().enumerate() {
                    if ins {
                        incl[i] += train_probs[i][j];
                    } else {
                        excl[i] += train_probs[i][j];
                    }
                }
            }
            let mut dp = vec![0.0; m + 1];
            dp[0] = 1.0;
            for i in 0..m {
                for s in (0..=i + 1).rev() {
                    let stay = dp[s] * excl[i];
                    let grow = if s > 0 { dp[s - 1] * incl[i] } else { 0.0 };
                    dp[s] = stay + grow;
                }
            }
            let sizes = dp.iter().map(|p| p * total).collect();
            let miss: f64 = (0..m).map(|c| weights[c] * excl[c]).sum();
            (sizes, miss)
        })
        .collect();

    let mut size_probs = vec![0.0; m + 1];
    let mut miscoverage = 0.0;
    for (sizes, miss) in parts {
        for (acc, s) in size_probs.iter_mut().zip(sizes) {
            *acc += s;
        }
        miscoverage += miss;
    }
    Ok(SetSizeLaw {
        n,
        training_len: big_n,
        size_probs,
        miscoverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gutman::simulate_gutman;

    fn d(v: &[f64]) -> CategoricalDist {
        CategoricalDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn law_sums_to_one_and_matches_simulation() {
        let cfg = GutmanConfig::new(1.0, 0.05, 2).unwrap();
        let dists = [d(&[0.8, 0.2]), d(&[0.2, 0.8])];
        let priors = d(&[0.5, 0.5]);
        let law = set_size_law_exact(&dists, &priors, &cfg, 20, DEFAULT_WORK_BUDGET).unwrap();
        assert!((law.size_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let trials = 40_000;
        let sim = simulate_gutman(&dists, &priors, &cfg, &[20], trials, 5).unwrap();
        for s in 0..=2 {
            let p = law.size_probs[s];
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((sim[0].set_size_freq(s) - p).abs() <= 5.0 * se + 1e-4, "size {s}");
        }
        let p = law.miscoverage;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((sim[0].miscoverage_freq() - p).abs() <= 5.0 * se + 1e-4);
    }

    #[test]
    fn three_classes_ternary_alphabet() {
        let cfg = GutmanConfig::new(0.5, 0.1, 3).unwrap();
        let dists = [d(&[0.6, 0.3, 0.1]), d(&[0.2, 0.5, 0.3]), d(&[0.1, 0.1, 0.8])];
        let law = set_size_law_exact(&dists, &d(&[0.2, 0.3, 0.5]), &cfg, 12, DEFAULT_WORK_BUDGET).unwrap();
        assert_eq!(law.training_len, 6);
        assert!((law.size_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(law.miscoverage >= 0.0 && law.miscoverage <= 1.0);
    }

    #[test]
    fn budget() {
        let cfg = GutmanConfig::new(1.0, 0.05, 2).unwrap();
        let dists = [d(&[0.8, 0.2]), d(&[0.2, 0.8])];
        assert!(matches!(
            set_size_law_exact(&dists, &d(&[0.5, 0.5]), &cfg, 100, 10),
            Err(Error::TooLarge { .. })
        ));
    }
}
