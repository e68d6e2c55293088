//! Split-conformal p-values and the Bonferroni transductive predictor.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::symmetric::SymmetricChannelSpec;
use crate::error::{Error, Result};
use crate::prob::{derive_seed, rng_from_seed, sample_symbol, CategoricalDist, SimRng};

/// Sorted nonconformity scores of the calibration examples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationScores {
    scores: Vec<f64>,
}

impl CalibrationScores {
    pub fn new(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Precondition("calibration set is empty".into()));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Precondition("calibration score is NaN".into()));
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn count(&self) -> usize {
        self.scores.len()
    }

    fn count_at_least(&self, s: f64) -> usize {
        self.scores.len() - self.scores.partition_point(|&x| x < s)
    }
}

/// `(#{S_i >= s} + 1) / (m + 1)`.
pub fn scp_pvalue(cal: &CalibrationScores, test_score: f64) -> f64 {
    (cal.count_at_least(test_score) + 1) as f64 / (cal.count() + 1) as f64
}

/// Threshold `t` with `s <= t` exactly when `scp_pvalue(cal, s) >= level`.
///
/// This is the `(m + 2 - k)`-th smallest element of `S u {+inf}`, where `k` is
/// the smallest count with `k / (m + 1) >= level`; in exact arithmetic it is
/// the `ceil((1 - level)(m + 1))`-th smallest. Returns `-inf` when no score
/// can reach the level (`level > 1`).
pub fn quantile_threshold(cal: &CalibrationScores, level: f64) -> f64 {
    let m = cal.count();
    let denom = (m + 1) as f64;
    let Some(kmin) = (1..=m + 1).find(|&k| k as f64 / denom >= level) else {
        return f64::NEG_INFINITY;
    };
    let rank = m + 2 - kmin;
    if rank == m + 1 {
        f64::INFINITY
    } else {
        cal.scores[rank - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BonferroniPrediction {
    /// Per-sample level `alpha / n`.
    pub level: f64,
    pub sets: Vec<Vec<usize>>,
    /// `sum log |set_i|`; `-inf` if some set is empty.
    pub log_size: f64,
    pub has_empty_set: bool,
    pub covered: Option<bool>,
}

/// Product of per-sample split-conformal sets `{y : p(y) >= alpha/n}`.
/// `test_label_scores[i][y]` is the nonconformity score of label `y` for
/// test point `i`.
pub fn bonferroni_predict(
    cal: &CalibrationScores,
    test_label_scores: &[Vec<f64>],
    alpha: f64,
    true_labels: Option<&[usize]>,
) -> Result<BonferroniPrediction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            value: alpha,
            domain: "(0, 1)",
        });
    }
    let n = test_label_scores.len();
    if n == 0 {
        return Err(Error::Precondition("no test points".into()));
    }
    if let Some(labels) = true_labels {
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: labels.len(),
            });
        }
    }
    let level = alpha / n as f64;
    let t = quantile_threshold(cal, level);
    let sets: Vec<Vec<usize>> = test_label_scores
        .iter()
        .map(|row| (0..row.len()).filter(|&y| row[y] <= t).collect())
        .collect();
    let has_empty_set = sets.iter().any(Vec::is_empty);
    let log_size = if has_empty_set {
        f64::NEG_INFINITY
    } else {
        // Grouped by size so that n identical sets give exactly n ln|set|.
        let mut by_size = std::collections::BTreeMap::new();
        for s in &sets {
            *by_size.entry(s.len()).or_insert(0usize) += 1;
        }
        by_size.iter().map(|(&s, &c)| c as f64 * (s as f64).ln()).sum()
    };
    let covered = true_labels.map(|labels| labels.iter().zip(&sets).all(|(y, s)| s.contains(y)));
    Ok(BonferroniPrediction {
        level,
        sets,
        log_size,
        has_empty_set,
        covered,
    })
}

/// Something that produces labelled examples as per-label nonconformity
/// scores and the true label.
pub trait LabeledScoreSource: Sync {
    fn label_count(&self) -> usize;
    fn draw(&self, rng: &mut SimRng) -> (Vec<f64>, usize);
}

/// Scores `1 - P(y|x)` under the true channel, uniform input.
impl LabeledScoreSource for SymmetricChannelSpec {
    fn label_count(&self) -> usize {
        self.m_classes
    }

    fn draw(&self, rng: &mut SimRng) -> (Vec<f64>, usize) {
        let m = self.m_classes;
        let x = rng.random_range(0..m);
        let mut row = vec![self.label_prob(false); m];
        row[x] = self.label_prob(true);
        let y = sample_symbol(&CategoricalDist::from_weights(&row).expect("valid row"), rng);
        (row.iter().map(|p| 1.0 - p).collect(), y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BonferroniRow {
    pub n: usize,
    pub level: f64,
    /// `(1/n) log mean |Gamma|` over trials.
    pub gamma_nats: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub empty_fraction: f64,
}

/// `ln mean exp(l)`, exact when all entries are equal.
fn log_mean_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mean = logs.iter().map(|l| (l - max).exp()).sum::<f64>() / logs.len() as f64;
    max + mean.ln()
}

/// Monte Carlo estimate of the Bonferroni efficiency rate and coverage.
/// Trial `t` at grid size `n` uses its own stream `derive_seed(seed, [n, t])`,
/// so results do not depend on the thread count.
pub fn bonferroni_rate_experiment<S: LabeledScoreSource>(
    source: &S,
    m_cal: usize,
    n_grid: &[usize],
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<BonferroniRow>> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    if m_cal == 0 {
        return Err(Error::Precondition("calibration set is empty".into()));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let outcomes: Vec<Result<(f64, bool, bool)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, &[n as u64, t as u64]));
                let cal: Vec<f64> = (0..m_cal)
                    .map(|_| {
                        let (scores, y) = source.draw(&mut rng);
                        scores[y]
                    })
                    .collect();
                let cal = CalibrationScores::new(cal)?;
                let (tests, labels): (Vec<Vec<f64>>, Vec<usize>) = (0..n).map(|_| source.draw(&mut rng)).unzip();
                let p = bonferroni_predict(&cal, &tests, alpha, Some(&labels))?;
                Ok((p.log_size, p.covered.unwrap_or(false), p.has_empty_set))
            })
            .collect();
        let outcomes: Vec<(f64, bool, bool)> = outcomes.into_iter().collect::<Result<_>>()?;
        let logs: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
        let tf = trials as f64;
        let coverage = outcomes.iter().filter(|o| o.1).count() as f64 / tf;
        let empty = outcomes.iter().filter(|o| o.2).count() as f64 / tf;
        rows.push(BonferroniRow {
            n,
            level: alpha / n as f64,
            gamma_nats: log_mean_exp(&logs) / n as f64,
            coverage,
            coverage_se: (coverage * (1.0 - coverage) / tf).sqrt(),
            empty_fraction: empty,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pvalue_examples() {
        let cal = CalibrationScores::new(vec![4.0, 2.0, 3.0, 1.0]).unwrap();
        assert_eq!(scp_pvalue(&cal, 2.5), 0.6);
        assert_eq!(scp_pvalue(&cal, 0.0), 1.0);
        assert_eq!(scp_pvalue(&cal, 9.0), 0.2);
        assert_eq!(scp_pvalue(&cal, 2.0), 0.8);
    }

    #[test]
    fn quantile_matches_pvalue() {
        let cal = CalibrationScores::new(vec![0.5, 0.1, 0.1, 0.9, 0.3]).unwrap();
        for level in [0.0, 1.0 / 6.0, 0.2, 1.0 / 3.0, 0.5, 0.99, 1.0, 1.5] {
            let t = quantile_threshold(&cal, level);
            for s in [-1.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 2.0, f64::INFINITY] {
                assert_eq!(s <= t, scp_pvalue(&cal, s) >= level, "level {level}, s {s}");
            }
        }
    }

    #[test]
    fn single_test_point_is_split_conformal() {
        let cal = CalibrationScores::new((0..19).map(|i| i as f64).collect()).unwrap();
        let p = bonferroni_predict(&cal, &[vec![1.0, 17.5, 18.5]], 0.1, Some(&[1])).unwrap();
        assert_eq!(p.level, 0.1);
        // p(17.5) = 2/20, p(18.5) = 1/20.
        assert_eq!(p.sets, vec![vec![0, 1]]);
        assert_eq!(p.covered, Some(true));
    }

    #[test]
    fn floor_makes_full_sets() {
        let cal = CalibrationScores::new(vec![0.1; 180]).unwrap();
        let scores = vec![vec![0.1, 0.95, 0.99]; 20];
        let p = bonferroni_predict(&cal, &scores, 0.1, None).unwrap();
        assert!(p.level < 1.0 / 181.0);
        assert!((p.log_size - 20.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_experiment() {
        let spec = SymmetricChannelSpec::new(0.0, 4).unwrap();
        let rows = bonferroni_rate_experiment(&spec, 50, &[1, 2], 0.1, 50, 3).unwrap();
        for r in rows {
            assert_eq!(r.gamma_nats, 0.0);
            assert_eq!(r.coverage, 1.0);
        }
    }
}
