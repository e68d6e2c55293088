mod common;

use proptest::prelude::*;
use rayon::prelude::*;
use tlab::exponents::{
    dispersion_v, f_exponent, multiclass_f, multiclass_f_from, second_order_lambda, set_size_exponent,
    set_size_exponent_binary, Direction, ExponentProblem,
};
use tlab::prob::{gjs, kl_divergence, CategoricalDist};

fn d(p: f64) -> CategoricalDist {
    CategoricalDist::new(vec![p, 1.0 - p]).unwrap()
}

/// Grid minimum of `D(Q_t||P_l) + alpha sum_i D(Q_i||P_i)` over binary
/// distributions, where each training variable carries one GJS constraint
/// against the test variable. Given `Q_t` the training variables separate.
fn separable_grid(test: [f64; 2], train: &[([f64; 2], Direction)], alpha: f64, lambda: f64, g: usize) -> f64 {
    let pt = |i: usize| [i as f64 / (g - 1) as f64, 1.0 - i as f64 / (g - 1) as f64];
    (0..g)
        .into_par_iter()
        .map(|t| {
            let qt = pt(t);
            let mut total = common::kl(&qt, &test);
            for (p, dir) in train {
                let mut best = f64::INFINITY;
                for j in 0..g {
                    let q = pt(j);
                    let c = common::gjs(&q, &qt, alpha);
                    let ok = match dir {
                        Direction::Le => c <= lambda,
                        Direction::Ge => c >= lambda,
                    };
                    if ok {
                        best = best.min(alpha * common::kl(&q, p));
                    }
                }
                total += best;
            }
            total
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[test]
fn three_class_problems_match_grid() {
    let ps = [[0.8, 0.2], [0.2, 0.8], [0.5, 0.5]];
    let dists: Vec<CategoricalDist> = ps.iter().map(|p| d(p[0])).collect();
    let (alpha, lambda) = (1.0, 0.05);
    // (set, test class): all-inclusive convex case and a case with an
    // exclusion (>=) constraint.
    for (set, l) in [(vec![0, 1, 2], 2), (vec![0, 1], 2), (vec![1, 2], 0)] {
        let problem = ExponentProblem::set_size_problem(&dists, &set, l, alpha, lambda).unwrap();
        let sol = multiclass_f(&problem).unwrap();
        let mut train: Vec<([f64; 2], Direction)> = set.iter().filter(|&&i| i != l).map(|&i| (ps[i], Direction::Le)).collect();
        if !set.contains(&l) {
            train.push((ps[l], Direction::Ge));
        }
        let grid = separable_grid(ps[l], &train, alpha, lambda, 2001);
        assert!(
            (sol.value - grid).abs() < 2e-3,
            "set {set:?} l={l}: solver {} grid {grid}",
            sol.value
        );
        assert!(sol.value <= grid + 1e-9);
    }
}

#[test]
fn binary_set_size_is_min_of_directions() {
    let (p1, p2) = (d(0.8), d(0.3));
    let e = set_size_exponent_binary(&p1, &p2, 2.0, 0.04).unwrap();
    assert_eq!(e.full_set, e.f12.min(e.f21));
    assert_eq!(e.empty_set, 0.04);
    let via_sets = set_size_exponent(&[p1, p2], 2, 2.0, 0.04).unwrap();
    assert!((via_sets - e.full_set).abs() < 1e-6, "{via_sets} vs {}", e.full_set);
}

#[test]
fn zero_when_targets_are_feasible() {
    // GJS(P1, P2) below lambda: Q = P is feasible with zero cost.
    let (p1, p2) = (d(0.5), d(0.55));
    assert!(gjs(&p1, &p2, 1.0).unwrap() < 0.05);
    assert!(f_exponent(&p1, &p2, 1.0, 0.05).unwrap().value.abs() < 1e-9);
}

#[test]
fn dispersion_matches_direct_variance() {
    let (p1, p2, a) = (d(0.7), d(0.25), 1.5);
    let r: Vec<f64> = (0..2).map(|i| (a * p1.prob(i) + p2.prob(i)) / (1.0 + a)).collect();
    let var = |p: &CategoricalDist| {
        let l: Vec<f64> = (0..2).map(|i| (p.prob(i) / r[i]).ln()).collect();
        let mean: f64 = (0..2).map(|i| p.prob(i) * l[i]).sum();
        (0..2).map(|i| p.prob(i) * (l[i] - mean).powi(2)).sum::<f64>()
    };
    let want = a * var(&p1) + var(&p2);
    assert!((dispersion_v(&p1, &p2, a).unwrap() - want).abs() < 1e-12);
    assert_eq!(dispersion_v(&p1, &p1, a).unwrap(), 0.0);
    let lam = second_order_lambda(&p1, &p2, a, 400, 0.5).unwrap();
    assert!((lam - gjs(&p1, &p2, a).unwrap()).abs() < 1e-12);
}

fn pair() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.02f64..0.98, 0.02f64..0.98, 0.25f64..4.0, 0.005f64..0.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn monotone_in_lambda((a, b, alpha, lambda) in pair()) {
        let (p1, p2) = (d(a), d(b));
        let lo = f_exponent(&p1, &p2, alpha, lambda).unwrap().value;
        let hi = f_exponent(&p1, &p2, alpha, lambda * 1.5).unwrap().value;
        prop_assert!(hi <= lo + 1e-7, "F({lambda}) = {lo} < F({}) = {hi}", lambda * 1.5);
    }

    #[test]
    fn argmin_is_feasible_and_attains_value((a, b, alpha, lambda) in pair()) {
        let (p1, p2) = (d(a), d(b));
        let sol = f_exponent(&p1, &p2, alpha, lambda).unwrap();
        prop_assert!(sol.feasible);
        let (q1, q2) = (&sol.argmin[0], &sol.argmin[1]);
        prop_assert!(gjs(q1, q2, alpha).unwrap() <= lambda + 1e-9);
        let obj = kl_divergence(q2, &p2).unwrap() + alpha * kl_divergence(q1, &p1).unwrap();
        prop_assert!((obj - sol.value).abs() < 1e-9);
        prop_assert!(sol.certified_gap >= 0.0 && sol.certified_gap < 1e-6);
    }

    #[test]
    fn convex_branch_ignores_start((a, b, alpha, lambda) in pair(), seeds in prop::collection::vec(0.01f64..0.99, 20)) {
        let problem = ExponentProblem::binary_f(&d(a), &d(b), alpha, lambda).unwrap();
        let reference = multiclass_f(&problem).unwrap().value;
        for s in seeds.chunks(2) {
            let v = multiclass_f_from(&problem, &[d(s[0]), d(s[1])]).unwrap().value;
            prop_assert!((v - reference).abs() < 1e-6, "start {s:?}: {v} vs {reference}");
        }
    }
}
