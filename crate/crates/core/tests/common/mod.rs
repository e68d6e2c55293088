//! Reference computations written directly from the defining formulas, kept
//! independent of the library code they check.
#![allow(dead_code)]

use rayon::prelude::*;

pub fn ln_choose(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

pub fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `(h, sigma, rho)` of `log P(Y|X)` for the symmetric channel: a two-point
/// law taking `ln(1-eps)` w.p. `1-eps` and `ln(eps/(M-1))` w.p. `eps`.
pub fn symmetric_moments(eps: f64, m: usize) -> (f64, f64, f64) {
    let a = (1.0 - eps).ln();
    let b = (eps / (m as f64 - 1.0)).ln();
    let h = -((1.0 - eps) * a + eps * b);
    let var = (1.0 - eps) * eps * (a - b).powi(2);
    let rho = (1.0 - eps) * (a + h).abs().powi(3) + eps * (b + h).abs().powi(3);
    (h, var.sqrt(), rho)
}

/// Exact `(log |Gamma|, coverage)` of `{y^n : P(y^n|x^n) >= beta}` on the
/// symmetric channel, by the number `k` of correct labels.
pub fn symmetric_threshold_oracle(eps: f64, m: usize, n: usize, log_beta: f64) -> (f64, f64) {
    let a = (1.0 - eps).ln();
    let b = (eps / (m as f64 - 1.0)).ln();
    let mut sizes = Vec::new();
    let mut masses = Vec::new();
    for k in 0..=n {
        let lp = k as f64 * a + (n - k) as f64 * b;
        if lp >= log_beta {
            sizes.push(ln_choose(n, k) + (n - k) as f64 * (m as f64 - 1.0).ln());
            masses.push(ln_choose(n, k) + k as f64 * a + (n - k) as f64 * eps.ln());
        }
    }
    (lse(&sizes), lse(&masses).exp())
}

pub fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum()
}

/// `alpha D(P1||R) + D(P2||R)` with `R = (alpha P1 + P2)/(1 + alpha)`.
pub fn gjs(p1: &[f64], p2: &[f64], alpha: f64) -> f64 {
    let r: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| (alpha * a + b) / (1.0 + alpha)).collect();
    alpha * kl(p1, &r) + kl(p2, &r)
}

/// Brute-force `min D(Q2||P2) + alpha D(Q1||P1)` over the `g x g` grid of
/// binary pairs with `GJS(Q1, Q2, alpha) <= lambda`.
pub fn binary_f_grid(p1: [f64; 2], p2: [f64; 2], alpha: f64, lambda: f64, g: usize) -> f64 {
    (0..g)
        .into_par_iter()
        .map(|i| {
            let q2 = [i as f64 / (g - 1) as f64, 1.0 - i as f64 / (g - 1) as f64];
            let c2 = kl(&q2, &p2);
            let mut best = f64::INFINITY;
            for j in 0..g {
                let q1 = [j as f64 / (g - 1) as f64, 1.0 - j as f64 / (g - 1) as f64];
                let v = c2 + alpha * kl(&q1, &p1);
                if v < best && gjs(&q1, &q2, alpha) <= lambda {
                    best = v;
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Exact multinomial log-probability of the type class with `counts`.
pub fn type_class_log_prob(counts: &[usize], q: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut lp = libm::lgamma(n as f64 + 1.0);
    for (&c, &p) in counts.iter().zip(q) {
        lp -= libm::lgamma(c as f64 + 1.0);
        if c > 0 {
            lp += c as f64 * p.ln();
        }
    }
    lp
}

/// All count vectors of length `k` summing to `n`.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Split-conformal p-value straight from the definition.
pub fn pvalue(cal: &[f64], s: f64) -> f64 {
    (cal.iter().filter(|&&c| c >= s).count() + 1) as f64 / (cal.len() + 1) as f64
}
