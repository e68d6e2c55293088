//! Empirical types of finite-alphabet sequences and the classical
//! method-of-types bounds.

use serde::Serialize;

use super::dist::CategoricalDist;
use super::info::{entropy_of, kl_of};
use super::special::{xlogy, LogFactorials};
use crate::error::{Error, Result};

/// Empirical PMF of a non-empty sequence, kept as exact counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EmpiricalType {
    counts: Vec<usize>,
    n: usize,
}

impl EmpiricalType {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn pmf(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn to_dist(&self) -> CategoricalDist {
        CategoricalDist::from_weights(&self.pmf()).expect("a type is a valid distribution")
    }

    /// Type of the concatenation of the two underlying sequences.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                actual: other.alphabet_size(),
            });
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            counts,
            n: self.n + other.n,
        })
    }
}

/// Type of `seq` over `{0, .., alphabet_size-1}`.
pub fn empirical_type(seq: &[usize], alphabet_size: usize) -> Result<EmpiricalType> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0usize; alphabet_size];
    for &s in seq {
        if s >= alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                alphabet_size,
            });
        }
        counts[s] += 1;
    }
    EmpiricalType::from_counts(counts)
}

/// Training length `N = round(alpha * n)`, rounding half to even.
pub fn training_len(alpha: f64, n: usize) -> usize {
    (alpha * n as f64).round_ties_even() as usize
}

/// Number of types of length-`n` sequences over `k` symbols, `C(n+k-1, k-1)`.
pub fn count_types(n: usize, k: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 1..k as u128 {
        acc = acc * (n as u128 + i) / i;
    }
    acc
}

/// All count vectors of length `k` summing to `n`, in lexicographic order.
pub fn enumerate_type_counts(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; k];
    fn rec(pos: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = current.len();
        if pos + 1 == k {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for c in (0..=remaining).rev() {
            current[pos] = c;
            rec(pos + 1, remaining - c, current, out);
        }
    }
    if k > 0 {
        rec(0, n, &mut current, &mut out);
    }
    out
}

/// Exact values and the standard method-of-types bounds, all as natural logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeBounds {
    /// `|X| ln(n+1)`, the bound on the log number of types.
    pub log_num_types_upper: f64,
    pub log_num_types_exact: f64,
    /// `n H(P) - |X| ln(n+1)`.
    pub log_class_size_lower: f64,
    /// `n H(P)`.
    pub log_class_size_upper: f64,
    pub log_class_size_exact: f64,
    /// `-n D(P||Q) - |X| ln(n+1)`.
    pub log_class_prob_lower: f64,
    /// `-n D(P||Q)`.
    pub log_class_prob_upper: f64,
    pub log_class_prob_exact: f64,
}

pub fn type_bounds(n: usize, alphabet_size: usize, p: &EmpiricalType, q: &CategoricalDist) -> Result<TypeBounds> {
    if p.len() != n {
        return Err(Error::Precondition(format!(
            "type has length {}, expected {n}",
            p.len()
        )));
    }
    if p.alphabet_size() != alphabet_size {
        return Err(Error::DimensionMismatch {
            expected: alphabet_size,
            actual: p.alphabet_size(),
        });
    }
    if q.alphabet_size() != alphabet_size {
        return Err(Error::DimensionMismatch {
            expected: alphabet_size,
            actual: q.alphabet_size(),
        });
    }
    let nf = n as f64;
    let poly = alphabet_size as f64 * (nf + 1.0).ln();
    let pmf = p.pmf();
    let h = entropy_of(&pmf);
    let d = kl_of(&pmf, q.probs());
    let lf = LogFactorials::new(n);
    let class_size = lf.ln_multinomial(p.counts());
    let log_prob_per_seq: f64 = p
        .counts()
        .iter()
        .zip(q.probs())
        .map(|(&c, &qa)| xlogy(c as f64, qa))
        .sum();
    Ok(TypeBounds {
        log_num_types_upper: poly,
        log_num_types_exact: (count_types(n, alphabet_size) as f64).ln(),
        log_class_size_lower: nf * h - poly,
        log_class_size_upper: nf * h,
        log_class_size_exact: class_size,
        log_class_prob_lower: -nf * d - poly,
        log_class_prob_upper: -nf * d,
        log_class_prob_exact: class_size + log_prob_per_seq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting() {
        let t = empirical_type(&[0, 0, 1], 2).unwrap();
        assert_eq!(t.counts(), &[2, 1]);
        assert_eq!(t.pmf(), vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(empirical_type(&[], 2), Err(Error::EmptySequence));
        assert!(matches!(
            empirical_type(&[0, 2], 2),
            Err(Error::SymbolOutOfRange { symbol: 2, .. })
        ));
    }

    #[test]
    fn merge_is_additive() {
        let a = empirical_type(&[0, 1, 1], 3).unwrap();
        let b = empirical_type(&[2, 1], 3).unwrap();
        let joined = empirical_type(&[0, 1, 1, 2, 1], 3).unwrap();
        assert_eq!(a.merge(&b).unwrap(), joined);
    }

    #[test]
    fn number_of_types() {
        // {(0,2),(1,1),(2,0)}
        assert_eq!(count_types(2, 2), 3);
        assert_eq!(enumerate_type_counts(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(count_types(12, 3), 91);
        assert_eq!(enumerate_type_counts(12, 3).len(), 91);
        let b = type_bounds(2, 2, &EmpiricalType::from_counts(vec![1, 1]).unwrap(), &CategoricalDist::uniform(2).unwrap()).unwrap();
        assert!((b.log_num_types_exact - 3f64.ln()).abs() < 1e-15);
        assert!(b.log_num_types_exact <= b.log_num_types_upper);
    }

    #[test]
    fn class_size_sandwich_for_half_half() {
        let p = EmpiricalType::from_counts(vec![1, 1]).unwrap();
        let q = p.to_dist();
        let b = type_bounds(2, 2, &p, &q).unwrap();
        assert!((b.log_class_size_exact - 2f64.ln()).abs() < 1e-15);
        assert!((b.log_class_size_upper.exp() - 4.0).abs() < 1e-12);
        assert!((b.log_class_size_lower.exp() - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(b.log_class_prob_upper, 0.0);
    }

    #[test]
    fn banker_rounding() {
        assert_eq!(training_len(0.5, 5), 2);
        assert_eq!(training_len(0.5, 7), 4);
        assert_eq!(training_len(1.0, 800), 800);
        assert_eq!(training_len(0.3, 10), 3);
    }
}
