mod common;

use tlab::gutman::{
    fit_exponent, miscoverage_bound, set_size_law_exact, simulate_gutman, GutmanConfig, RatePoint, DEFAULT_WORK_BUDGET,
};
use tlab::prob::CategoricalDist;

fn dists() -> Vec<CategoricalDist> {
    vec![
        CategoricalDist::new(vec![0.7, 0.2, 0.1]).unwrap(),
        CategoricalDist::new(vec![0.2, 0.3, 0.5]).unwrap(),
    ]
}

/// `P(|Gamma| = k)` and miscoverage for two classes by enumerating the true
/// class, the test type and both training types.
fn brute_force_law(d: &[CategoricalDist], lambda: f64, n: usize, big_n: usize) -> (Vec<f64>, f64) {
    let k = d[0].alphabet_size();
    let tests = common::compositions(n, k);
    let trains = common::compositions(big_n, k);
    let ratio = big_n as f64 / n as f64;
    let frac = |c: &[usize], len: usize| c.iter().map(|&v| v as f64 / len as f64).collect::<Vec<f64>>();
    let mut sizes = vec![0.0; 3];
    let mut miss = 0.0;
    for truth in 0..2 {
        for t in &tests {
            let pt = 0.5 * common::type_class_log_prob(t, d[truth].probs()).exp();
            let q = frac(t, n);
            for a in &trains {
                let pa = common::type_class_log_prob(a, d[0].probs()).exp();
                let in0 = common::gjs(&frac(a, big_n), &q, ratio) < lambda;
                for b in &trains {
                    let pb = common::type_class_log_prob(b, d[1].probs()).exp();
                    let in1 = common::gjs(&frac(b, big_n), &q, ratio) < lambda;
                    let w = pt * pa * pb;
                    sizes[in0 as usize + in1 as usize] += w;
                    if !(if truth == 0 { in0 } else { in1 }) {
                        miss += w;
                    }
                }
            }
        }
    }
    (sizes, miss)
}

#[test]
fn exact_law_matches_brute_force() {
    let d = dists();
    let priors = CategoricalDist::uniform(2).unwrap();
    for (ratio, lambda, n) in [(1.0, 0.05, 5), (2.0, 0.12, 4), (0.5, 0.3, 6)] {
        let cfg = GutmanConfig::new(ratio, lambda, 2).unwrap();
        let law = set_size_law_exact(&d, &priors, &cfg, n, DEFAULT_WORK_BUDGET).unwrap();
        let (sizes, miss) = brute_force_law(&d, lambda, n, cfg.training_len(n));
        for (a, b) in law.size_probs.iter().zip(&sizes) {
            assert!((a - b).abs() < 1e-12, "ratio={ratio} n={n}: {:?} vs {sizes:?}", law.size_probs);
        }
        assert!((law.miscoverage - miss).abs() < 1e-12);
        assert!((law.size_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn simulation_agrees_with_exact_law() {
    let d = dists();
    let priors = CategoricalDist::uniform(2).unwrap();
    let cfg = GutmanConfig::new(1.0, 0.08, 2).unwrap();
    let trials = 20_000;
    let recs = simulate_gutman(&d, &priors, &cfg, &[10, 30], trials, 17).unwrap();
    for r in &recs {
        let law = set_size_law_exact(&d, &priors, &cfg, r.n, DEFAULT_WORK_BUDGET).unwrap();
        for k in 0..=2 {
            let p = law.size_probs[k];
            let se = (p * (1.0 - p) / trials as f64).sqrt().max(1.0 / trials as f64);
            assert!((r.set_size_freq(k) - p).abs() < 5.0 * se, "n={} k={k}: {} vs {p}", r.n, r.set_size_freq(k));
        }
        assert!((r.miscoverage_freq() - law.miscoverage).abs() < 5.0 * r.miscoverage_se().max(1.0 / trials as f64));
        assert!(law.miscoverage <= miscoverage_bound(r.n, r.training_len, 3, cfg.lambda));
    }
}

#[test]
fn simulation_is_seeded() {
    let d = dists();
    let priors = CategoricalDist::uniform(2).unwrap();
    let cfg = GutmanConfig::new(1.0, 0.08, 2).unwrap();
    let a = simulate_gutman(&d, &priors, &cfg, &[20], 500, 5).unwrap();
    let b = simulate_gutman(&d, &priors, &cfg, &[20], 500, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn work_budget_is_enforced() {
    let d = dists();
    let priors = CategoricalDist::uniform(2).unwrap();
    let cfg = GutmanConfig::new(1.0, 0.08, 2).unwrap();
    assert!(set_size_law_exact(&d, &priors, &cfg, 200, 1000).is_err());
}

#[test]
fn fit_recovers_known_slope() {
    let pts: Vec<RatePoint> = [10, 20, 40, 80].iter().map(|&n| RatePoint::exact(n, (2.0 - 0.3 * n as f64).exp())).collect();
    let fit = fit_exponent(&pts).unwrap();
    assert!((fit.slope - 0.3).abs() < 1e-12);
    assert!((fit.intercept - 2.0).abs() < 1e-10);
    assert!(!fit.one_sided);
}

#[test]
fn zero_counts_give_one_sided_bound() {
    let pts = vec![
        RatePoint::from_count(100, 5, 1000),
        RatePoint::from_count(200, 0, 1000),
        RatePoint::from_count(400, 0, 1000),
    ];
    let fit = fit_exponent(&pts).unwrap();
    assert!(fit.slope.is_nan());
    assert!(fit.one_sided);
    assert!((fit.lower_bound.unwrap() - (1000f64).ln() / 400.0).abs() < 1e-15);
}
