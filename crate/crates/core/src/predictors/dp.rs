//! Approximate evaluation of the idealized predictor on an arbitrary finite
//! channel by a dynamic program over quantized partial sums of
//! `log P(y_i|x_i)`.
//!
//! Each cell keeps the exact minimum and maximum of the true sums it holds,
//! so the quantization error is bracketed rather than estimated.

use std::collections::BTreeMap;

use serde::Serialize;

use super::symmetric::IdealizedEval;
use crate::error::{Error, Result};
use crate::prob::special::{log_add_exp, log_sum_exp};
use crate::prob::ChannelModel;

pub const DEFAULT_GRID_STEP: f64 = 1e-3;
pub const DEFAULT_CELL_BUDGET: usize = 20_000_000;

/// Point estimate plus guaranteed brackets on `log E|Gamma|` and coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpEval {
    pub estimate: IdealizedEval,
    pub log_set_size_bounds: (f64, f64),
    pub coverage_bounds: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct Atom {
    log_p: f64,
    /// `log sum pi(x)` over the `(x, y)` pairs with this `log P(y|x)`.
    log_count: f64,
    /// `log sum pi(x) P(y|x)` over the same pairs.
    log_mass: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    log_count: f64,
    log_mass: f64,
    min: f64,
    max: f64,
}

fn atoms(channel: &ChannelModel) -> Vec<Atom> {
    let mut pairs: Vec<(f64, f64, f64)> = channel
        .reachable_pairs()
        .map(|(x, _, w, p)| (p.ln(), channel.prior_x().prob(x).ln(), w.ln()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Atom> = Vec::new();
    for (log_p, lc, lm) in pairs {
        match out.last_mut() {
            Some(a) if a.log_p == log_p => {
                a.log_count = log_add_exp(a.log_count, lc);
                a.log_mass = log_add_exp(a.log_mass, lm);
            }
            _ => out.push(Atom {
                log_p,
                log_count: lc,
                log_mass: lm,
            }),
        }
    }
    out
}

fn cell_index(v: f64, step: f64) -> i64 {
    let mut idx = (v / step).floor() as i64;
    if idx as f64 * step > v {
        idx -= 1;
    }
    idx
}

/// Evaluates `{y^n : sum log P(y_i|x_i) >= log beta}` with the default cell
/// budget.
pub fn idealized_eval_dp(channel: &ChannelModel, n: usize, beta: f64, grid_step: f64) -> Result<DpEval> {
    idealized_eval_dp_with_budget(channel, n, beta.ln(), grid_step, DEFAULT_CELL_BUDGET)
}

/// Reported `log E|Gamma(X^n)|` lies within the returned bracket; the true
/// sums merged into one cell differ by at most `n * grid_step`. For `n = 1`
/// the result is exact.
pub fn idealized_eval_dp_with_budget(
    channel: &ChannelModel,
    n: usize,
    log_beta: f64,
    grid_step: f64,
    cell_budget: usize,
) -> Result<DpEval> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::Domain {
            value: grid_step,
            domain: "(0, inf)",
        });
    }
    if log_beta.is_nan() || log_beta > 0.0 {
        return Err(Error::Domain {
            value: log_beta,
            domain: "log beta in [-inf, 0]",
        });
    }
    let atoms = atoms(channel);
    if n == 1 {
        let admitted: Vec<&Atom> = atoms.iter().filter(|a| a.log_p >= log_beta).collect();
        let ls = log_sum_exp(&admitted.iter().map(|a| a.log_count).collect::<Vec<_>>());
        let cov = log_sum_exp(&admitted.iter().map(|a| a.log_mass).collect::<Vec<_>>()).exp().min(1.0);
        return Ok(DpEval {
            estimate: IdealizedEval {
                log_set_size: ls,
                coverage: cov,
                beta: log_beta.exp(),
                log_beta,
                n,
            },
            log_set_size_bounds: (ls, ls),
            coverage_bounds: (cov, cov),
        });
    }
    let span = atoms.last().unwrap().log_p - atoms[0].log_p;
    let projected = (n as f64 * span / grid_step).ceil() + 1.0;
    if projected > cell_budget as f64 {
        return Err(Error::CellBudgetExceeded {
            cells: projected.min(usize::MAX as f64) as usize,
            budget: cell_budget,
        });
    }

    let mut layer: BTreeMap<i64, Cell> = BTreeMap::new();
    layer.insert(
        0,
        Cell {
            log_count: 0.0,
            log_mass: 0.0,
            min: 0.0,
            max: 0.0,
        },
    );
    for _ in 0..n {
        let mut next: BTreeMap<i64, Cell> = BTreeMap::new();
        for cell in layer.values() {
            for a in &atoms {
                let lo = cell.min + a.log_p;
                let hi = cell.max + a.log_p;
                let add = Cell {
                    log_count: cell.log_count + a.log_count,
                    log_mass: cell.log_mass + a.log_mass,
                    min: lo,
                    max: hi,
                };
                next.entry(cell_index(lo, grid_step))
                    .and_modify(|c| {
                        c.log_count = log_add_exp(c.log_count, add.log_count);
                        c.log_mass = log_add_exp(c.log_mass, add.log_mass);
                        c.min = c.min.min(add.min);
                        c.max = c.max.max(add.max);
                    })
                    .or_insert(add);
            }
        }
        if next.len() > cell_budget {
            return Err(Error::CellBudgetExceeded {
                cells: next.len(),
                budget: cell_budget,
            });
        }
        layer = next;
    }

    let (mut c_lo, mut c_mid, mut c_hi) = (Vec::new(), Vec::new(), Vec::new());
    let (mut m_lo, mut m_mid, mut m_hi) = (Vec::new(), Vec::new(), Vec::new());
    for cell in layer.values() {
        if cell.min >= log_beta {
            c_lo.push(cell.log_count);
            m_lo.push(cell.log_mass);
        }
        if 0.5 * (cell.min + cell.max) >= log_beta {
            c_mid.push(cell.log_count);
            m_mid.push(cell.log_mass);
        }
        if cell.max >= log_beta {
            c_hi.push(cell.log_count);
            m_hi.push(cell.log_mass);
        }
    }
    let cov = |v: &[f64]| log_sum_exp(v).exp().min(1.0);
    Ok(DpEval {
        estimate: IdealizedEval {
            log_set_size: log_sum_exp(&c_mid),
            coverage: cov(&m_mid),
            beta: log_beta.exp(),
            log_beta,
            n,
        },
        log_set_size_bounds: (log_sum_exp(&c_lo), log_sum_exp(&c_hi)),
        coverage_bounds: (cov(&m_lo), cov(&m_hi)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::symmetric::{idealized_eval_symmetric_log, SymmetricChannelSpec};
    use crate::prob::CategoricalDist;

    #[test]
    fn brackets_contain_symmetric_exact() {
        let spec = SymmetricChannelSpec::new(0.1, 10).unwrap();
        let ch = spec.channel();
        for (n, log_beta) in [(10, -12.0), (25, -30.0), (40, -20.0)] {
            let exact = idealized_eval_symmetric_log(&spec, n, log_beta).unwrap();
            let dp = idealized_eval_dp_with_budget(&ch, n, log_beta, 1e-3, DEFAULT_CELL_BUDGET).unwrap();
            let (lo, hi) = dp.log_set_size_bounds;
            assert!(lo <= exact.log_set_size + 1e-9 && exact.log_set_size <= hi + 1e-9);
            let (clo, chi) = dp.coverage_bounds;
            assert!(clo <= exact.coverage + 1e-12 && exact.coverage <= chi + 1e-12);
        }
    }

    #[test]
    fn single_sample_is_exact() {
        let ch = ChannelModel::new(
            CategoricalDist::new(vec![0.3, 0.7]).unwrap(),
            vec![
                CategoricalDist::new(vec![0.6, 0.4]).unwrap(),
                CategoricalDist::new(vec![0.1, 0.9]).unwrap(),
            ],
        )
        .unwrap();
        let dp = idealized_eval_dp(&ch, 1, 0.35, 10.0).unwrap();
        // x=0: both labels; x=1: only label 1.
        let size = 0.3 * 2.0 + 0.7;
        let cov = 0.3 + 0.7 * 0.9;
        assert!((dp.estimate.log_set_size - f64::ln(size)).abs() < 1e-12);
        assert!((dp.estimate.coverage - cov).abs() < 1e-12);
        assert_eq!(dp.log_set_size_bounds.0, dp.log_set_size_bounds.1);
    }

    #[test]
    fn budget_guard() {
        let ch = SymmetricChannelSpec::new(0.1, 10).unwrap().channel();
        assert!(matches!(
            idealized_eval_dp_with_budget(&ch, 100, -50.0, 1e-6, 1000),
            Err(Error::CellBudgetExceeded { .. })
        ));
    }
}
