use rayon::prelude::*;
use serde::Serialize;

use super::fit::RatePoint;
use super::{gutman_confidence, GutmanConfig};
use crate::error::{Error, Result};
use crate::prob::{derive_seed, rng_from_seed, sample_symbol, sample_type, CategoricalDist};

/// Aggregated outcomes at one test length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GutmanRecord {
    pub n: usize,
    pub training_len: usize,
    pub trials: u64,
    pub miscoverage_count: u64,
    /// `set_size_counts[k]` = number of trials with `|Gamma| = k`, `k = 0..=M`.
    pub set_size_counts: Vec<u64>,
}

impl GutmanRecord {
    pub fn miscoverage_freq(&self) -> f64 {
        self.miscoverage_count as f64 / self.trials as f64
    }

    /// Binomial standard error of the miscoverage frequency.
    pub fn miscoverage_se(&self) -> f64 {
        let p = self.miscoverage_freq();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn set_size_freq(&self, k: usize) -> f64 {
        self.set_size_counts[k] as f64 / self.trials as f64
    }

    pub fn miscoverage_point(&self) -> RatePoint {
        RatePoint::from_count(self.n, self.miscoverage_count, self.trials)
    }

    pub fn set_size_point(&self, k: usize) -> RatePoint {
        RatePoint::from_count(self.n, self.set_size_counts[k], self.trials)
    }
}

/// Monte Carlo of Gutman's test with confidence. Each trial draws the true
/// class from `priors`, one training type of length `round(alpha n)` per
/// class and a test type of length `n`; types are sampled directly as
/// multinomials. Trial `t` at length `n` uses `derive_seed(seed, [n, t])`.
pub fn simulate_gutman(
    dists: &[CategoricalDist],
    priors: &CategoricalDist,
    cfg: &GutmanConfig,
    n_grid: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<GutmanRecord>> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    if dists.len() != cfg.m_classes || priors.alphabet_size() != cfg.m_classes {
        return Err(Error::DimensionMismatch {
            expected: cfg.m_classes,
            actual: dists.len(),
        });
    }
    for d in dists {
        d.ensure_same_alphabet(&dists[0])?;
    }
    let m = cfg.m_classes;
    let mut out = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let big_n = cfg.training_len(n);
        if n == 0 || big_n == 0 {
            return Err(Error::Precondition(format!(
                "test length {n} gives training length {big_n}; both must be positive"
            )));
        }
        let results: Vec<Result<(bool, usize)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, &[n as u64, t]));
                let true_class = sample_symbol(priors, &mut rng);
                let train = dists
                    .iter()
                    .map(|d| sample_type(d, big_n, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let test = sample_type(&dists[true_class], n, &mut rng)?;
                let o = gutman_confidence(&train, &test, cfg, true_class)?;
                Ok((o.covered, o.set_size))
            })
            .collect();
        let mut miscoverage_count = 0;
        let mut set_size_counts = vec![0u64; m + 1];
        for r in results {
            let (covered, size) = r?;
            if !covered {
                miscoverage_count += 1;
            }
            set_size_counts[size] += 1;
        }
        out.push(GutmanRecord {
            n,
            training_len: big_n,
            trials,
            miscoverage_count,
            set_size_counts,
        });
    }
    Ok(out)
}
