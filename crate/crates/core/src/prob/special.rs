//! Log-domain combinatorics.

/// `ln(exp(a) + exp(b))` without overflow; `-inf` is the neutral element.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum(exp(x)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Table of `ln k!` for `k = 0..=n`, built by cumulative summation.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }

    /// `ln C(n, k)`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.table[n] - self.table[k] - self.table[n - k]
    }

    /// `ln (n! / prod counts!)` with `n = sum(counts)`.
    pub fn ln_multinomial(&self, counts: &[usize]) -> f64 {
        let n: usize = counts.iter().sum();
        counts.iter().fold(self.table[n], |acc, &c| acc - self.table[c])
    }
}

/// `k * ln(p)` with the convention `0 * ln 0 = 0`.
pub fn xlogy(k: f64, p: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * p.ln()
    }
}
