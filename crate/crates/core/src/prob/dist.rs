use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs whose total mass is within this distance of 1 are renormalised;
/// anything further off is rejected.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A probability vector on the alphabet `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CategoricalDist {
    probs: Vec<f64>,
}

impl CategoricalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {bad} is not a non-negative finite number"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Self {
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: size,
            });
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Self { probs })
    }

    /// Normalises arbitrary non-negative weights. Used for draws from
    /// Dirichlet-like generators where the mass is not 1 by construction.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be non-negative with positive finite sum".into(),
            ));
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(a, _)| a)
    }

    pub(crate) fn ensure_same_alphabet(&self, other: &Self) -> Result<()> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                actual: other.alphabet_size(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for CategoricalDist {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CategoricalDist> for Vec<f64> {
    fn from(value: CategoricalDist) -> Self {
        value.probs
    }
}

/// Conditional label law `P(Y|X)` together with the marginal of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    prior_x: CategoricalDist,
    rows: Vec<CategoricalDist>,
}

impl ChannelModel {
    pub fn new(prior_x: CategoricalDist, rows: Vec<CategoricalDist>) -> Result<Self> {
        if rows.len() != prior_x.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: prior_x.alphabet_size(),
                actual: rows.len(),
            });
        }
        let labels = rows[0].alphabet_size();
        if let Some(row) = rows.iter().find(|r| r.alphabet_size() != labels) {
            return Err(Error::DimensionMismatch {
                expected: labels,
                actual: row.alphabet_size(),
            });
        }
        Ok(Self { prior_x, rows })
    }

    /// Uniform input over `m` clean labels; each label is kept with
    /// probability `1 - epsilon` and moved to each other label with
    /// probability `epsilon / (m - 1)`.
    pub fn symmetric(epsilon: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition("symmetric channel needs m >= 2".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain {
                value: epsilon,
                domain: "[0, 1]",
            });
        }
        let off = epsilon / (m - 1) as f64;
        let rows = (0..m)
            .map(|x| {
                let probs = (0..m).map(|y| if y == x { 1.0 - epsilon } else { off }).collect();
                CategoricalDist::new(probs)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(CategoricalDist::uniform(m)?, rows)
    }

    pub fn prior_x(&self) -> &CategoricalDist {
        &self.prior_x
    }

    pub fn rows(&self) -> &[CategoricalDist] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &CategoricalDist {
        &self.rows[x]
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn label_count(&self) -> usize {
        self.rows[0].alphabet_size()
    }

    /// Iterates `(x, y, P(x) P(y|x), P(y|x))` over pairs with positive joint mass.
    pub fn reachable_pairs(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(x, row)| {
            let px = self.prior_x.prob(x);
            row.probs()
                .iter()
                .enumerate()
                .filter(move |(_, p)| px > 0.0 && **p > 0.0)
                .map(move |(y, p)| (x, y, px * p, *p))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_small_float_noise() {
        let d = CategoricalDist::new(vec![0.5 + 4e-10, 0.5]).unwrap();
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CategoricalDist::new(vec![]).is_err());
        assert!(CategoricalDist::new(vec![0.5, 0.4]).is_err());
        assert!(CategoricalDist::new(vec![1.5, -0.5]).is_err());
        assert!(CategoricalDist::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn channel_shape_is_checked() {
        let prior = CategoricalDist::uniform(2).unwrap();
        let row2 = CategoricalDist::uniform(2).unwrap();
        let row3 = CategoricalDist::uniform(3).unwrap();
        assert!(ChannelModel::new(prior.clone(), vec![row2.clone()]).is_err());
        assert!(ChannelModel::new(prior, vec![row2, row3]).is_err());
    }

    #[test]
    fn symmetric_rows() {
        let ch = ChannelModel::symmetric(0.1, 10).unwrap();
        assert_eq!(ch.input_size(), 10);
        assert!((ch.row(3).prob(3) - 0.9).abs() < 1e-15);
        assert!((ch.row(3).prob(4) - 0.1 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_validates() {
        let d: CategoricalDist = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<CategoricalDist>("[0.2, 0.2]").is_err());
    }
}
