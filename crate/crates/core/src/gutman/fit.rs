use serde::Serialize;

use crate::error::{Error, Result};

/// Probability of an event at test length `n`, either exact (`trials = None`)
/// or a Monte Carlo frequency over `trials` trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub probability: f64,
    pub trials: Option<u64>,
}

impl RatePoint {
    pub fn exact(n: usize, probability: f64) -> Self {
        Self {
            n,
            probability,
            trials: None,
        }
    }

    pub fn from_count(n: usize, count: u64, trials: u64) -> Self {
        Self {
            n,
            probability: count as f64 / trials as f64,
            trials: Some(trials),
        }
    }

    pub fn count(&self) -> Option<u64> {
        self.trials.map(|t| (self.probability * t as f64).round() as u64)
    }
}

/// Least-squares decay rate `-(1/n) log p` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    /// Negative OLS slope of `log p` against `n`; NaN when fewer than three
    /// grid points have a positive probability.
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub n_grid: Vec<usize>,
    pub counts: Vec<Option<u64>>,
    /// True when only one-sided evidence (zero-count points) is available.
    pub one_sided: bool,
    /// `min ln(trials)/n` over zero-count points: the data suggest the
    /// exponent is at least this. `+inf` for exact zeros.
    pub lower_bound: Option<f64>,
}

/// OLS fit of `log p = intercept - slope * n` on the positive points.
/// Zero-probability points are not dropped silently: they yield the
/// one-sided statement `exponent >= ln(trials)/n`.
pub fn fit_exponent(points: &[RatePoint]) -> Result<ExponentEstimate> {
    if points.is_empty() {
        return Err(Error::Precondition("no grid points".into()));
    }
    let positive: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.probability > 0.0)
        .map(|p| (p.n as f64, p.probability.ln()))
        .collect();
    let lower_bound = points
        .iter()
        .filter(|p| p.probability == 0.0)
        .map(|p| match p.trials {
            Some(t) => (t as f64).ln() / p.n as f64,
            None => f64::INFINITY,
        })
        .reduce(f64::min);
    let n_grid = points.iter().map(|p| p.n).collect();
    let counts = points.iter().map(RatePoint::count).collect();
    if positive.len() < 3 {
        return Ok(ExponentEstimate {
            slope: f64::NAN,
            stderr: f64::NAN,
            intercept: f64::NAN,
            n_grid,
            counts,
            one_sided: true,
            lower_bound,
        });
    }
    let k = positive.len() as f64;
    let mx = positive.iter().map(|p| p.0).sum::<f64>() / k;
    let my = positive.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = positive.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = positive.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("grid needs at least two distinct n".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = positive.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    Ok(ExponentEstimate {
        slope: -b,
        stderr,
        intercept: a,
        n_grid,
        counts,
        one_sided: false,
        lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rng_from_seed;
    use rand::Rng;

    #[test]
    fn exact_exponential() {
        let pts: Vec<RatePoint> = (1..=6).map(|i| RatePoint::exact(20 * i, (-0.1 * 20.0 * i as f64).exp())).collect();
        let e = fit_exponent(&pts).unwrap();
        assert!((e.slope - 0.1).abs() < 1e-12);
        assert!(e.stderr < 1e-12);
        assert!(!e.one_sided);
    }

    #[test]
    fn noisy_exponential_within_three_se() {
        let mut rng = rng_from_seed(4);
        let pts: Vec<RatePoint> = (1..=20)
            .map(|i| {
                let n = 10 * i;
                let noise = 0.3 * (rng.random::<f64>() - 0.5);
                RatePoint::exact(n, (-0.05 * n as f64 + noise).exp())
            })
            .collect();
        let e = fit_exponent(&pts).unwrap();
        assert!((e.slope - 0.05).abs() <= 3.0 * e.stderr);
    }

    #[test]
    fn all_zero_counts() {
        let e = fit_exponent(&[RatePoint::from_count(100, 0, 10_000)]).unwrap();
        assert!(e.one_sided);
        assert!((e.lower_bound.unwrap() - 10_000f64.ln() / 100.0).abs() < 1e-15);
        assert!((e.lower_bound.unwrap() - 0.0921).abs() < 1e-4);
    }
}
