//! Standard normal tail `Q(t) = P(Z > t)` and its inverse.

use crate::error::{Error, Result};

/// `Q(t) = erfc(t / sqrt 2) / 2`.
pub fn gaussian_q(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Inverse of [`gaussian_q`] on `(0, 1)`, by bracketed bisection.
///
/// The bracket starts at `[-10, 10]` and is widened when `p` lies beyond
/// `Q(10)` or `Q(-10)`. Bisection runs to machine resolution, well inside the
/// 1e-9 absolute tolerance the bounds rely on.
pub fn gaussian_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            value: p,
            domain: "(0, 1)",
        });
    }
    let mut lo = -10.0_f64;
    let mut hi = 10.0_f64;
    // Q is decreasing: want Q(lo) >= p >= Q(hi).
    while gaussian_q(lo) < p {
        lo *= 2.0;
    }
    while gaussian_q(hi) > p {
        hi *= 2.0;
        if hi > 60.0 {
            // Q(38.5) already underflows to zero.
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let q = gaussian_q(mid);
        if q == p {
            return Ok(mid);
        }
        if q > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Standard normal quantile `Phi^{-1}(p) = -Q^{-1}(p)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    gaussian_q_inv(p).map(|t| -t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(gaussian_q(0.0), 0.5);
        assert_eq!(gaussian_q_inv(0.5).unwrap(), 0.0);
        // Q^{-1}(0.1) = 1.2815515655446004 (tabulated normal quantile)
        assert!((gaussian_q_inv(0.1).unwrap() - 1.2815515655446004).abs() < 1e-9);
        assert!((gaussian_q(1.959963984540054) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(gaussian_q_inv(p).is_err());
        }
    }

    #[test]
    fn extreme_tails() {
        let t = gaussian_q_inv(1e-30).unwrap();
        assert!(t > 10.0);
        assert!((gaussian_q(t) / 1e-30 - 1.0).abs() < 1e-9);
        let t = gaussian_q_inv(1.0 - 1e-12).unwrap();
        assert!(t < -6.0);
    }
}
