use rayon::prelude::*;

use super::config::{ChannelSource, ExperimentConfig, ExperimentKind};
use super::emit::{Cell, Table, Unit};
use super::scores::{load_scores_csv, ScoreDataset};
use crate::bounds::{
    achievability_or_degenerate, converse_approx_or_trivial, converse_or_trivial, default_delta, random_audit_instance,
    verdu_han_slack, BoundReport,
};
use crate::error::{Error, Result};
use crate::exponents::{
    dispersion_v, f_exponent, f_exponent_grid, second_order_lambda, set_size_exponent, set_size_exponent_binary,
};
use crate::gutman::{
    fit_exponent, miscoverage_bound, set_size_law_exact, simulate_gutman, types_correction, GutmanConfig, RatePoint,
    DEFAULT_WORK_BUDGET,
};
use crate::predictors::{bonferroni_rate_experiment, idealized_eval_symmetric_log, SymmetricChannelSpec};
use crate::prob::{derive_seed, gjs, rng_from_seed, CategoricalDist, LogCondStats};

/// Placeholder for a build-time `git describe`.
pub const GIT_DESCRIBE: &str = match option_env!("TLAB_GIT_DESCRIBE") {
    Some(s) => s,
    None => "unknown",
};

enum Source {
    Symmetric(SymmetricChannelSpec),
    Scores(ScoreDataset),
}

impl Source {
    fn load(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.channel {
            ChannelSource::Symmetric(s) => {
                s.validate()?;
                Ok(Self::Symmetric(*s))
            }
            ChannelSource::ScoresCsv(p) => Ok(Self::Scores(load_scores_csv(p)?)),
        }
    }

    fn stats(&self) -> Result<LogCondStats> {
        match self {
            Self::Symmetric(s) => Ok(s.stats()),
            Self::Scores(d) => d.plug_in_stats(),
        }
    }

    fn label_count(&self) -> usize {
        match self {
            Self::Symmetric(s) => s.m_classes,
            Self::Scores(d) => d.m_classes,
        }
    }
}

fn columns(spec: &[(&str, Unit)]) -> Vec<(String, Unit)> {
    spec.iter().map(|(n, u)| (n.to_string(), *u)).collect()
}

fn stats_meta(t: &mut Table, stats: &LogCondStats, m: usize) {
    t.meta("cond_entropy", Unit::Info, stats.h);
    t.meta("dispersion_sd", Unit::Info, stats.sigma);
    t.meta("third_abs_moment", Unit::Plain, stats.rho);
    t.meta("label_count", Unit::Plain, m);
    t.meta("log_m", Unit::Info, (m as f64).ln());
}

fn per_sample(r: &BoundReport) -> f64 {
    r.per_sample_nats
}

/// Per-sample converse, approximate converse and achievability curves, with
/// the exact idealized predictor evaluated at the achievability threshold
/// when the channel is the symmetric one.
pub fn run_bounds_curve(cfg: &ExperimentConfig) -> Result<Table> {
    let source = Source::load(cfg)?;
    let stats = source.stats()?;
    let m = source.label_count();
    let mut t = Table {
        columns: columns(&[
            ("n", Unit::Plain),
            ("delta", Unit::Plain),
            ("converse_exact", Unit::Info),
            ("converse_exact_vacuous", Unit::Plain),
            ("converse_approx", Unit::Info),
            ("achievability", Unit::Info),
            ("achievability_valid", Unit::Plain),
            ("oracle_log_size", Unit::Info),
            ("oracle_coverage", Unit::Plain),
            ("cond_entropy", Unit::Info),
            ("log_m", Unit::Info),
        ]),
        ..Table::default()
    };
    stats_meta(&mut t, &stats, m);
    t.meta(
        "delta_rule",
        Unit::Plain,
        match cfg.delta_override {
            Some(d) => format!("fixed {}", super::emit::format_float(d)),
            None => "1/sqrt(n)".to_string(),
        },
    );
    for &n in &cfg.n_grid {
        let delta = cfg.delta_override.unwrap_or_else(|| default_delta(n));
        let conv = converse_or_trivial(&stats, n, cfg.alpha, delta)?.flag_full_set(m);
        let approx = converse_approx_or_trivial(&stats, n, cfg.alpha)?;
        let (ach, ach_valid, log_beta) = match achievability_or_degenerate(&stats, n, cfg.alpha) {
            Ok(r) => (per_sample(&r), true, r.terms.log_beta),
            Err(Error::SampleSizeTooSmall { .. }) => (f64::NAN, false, None),
            Err(e) => return Err(e),
        };
        let (oracle_size, oracle_cov) = match (&source, log_beta) {
            (Source::Symmetric(spec), Some(lb)) => {
                let e = idealized_eval_symmetric_log(spec, n, lb)?;
                (e.log_set_size / n as f64, e.coverage)
            }
            _ => (f64::NAN, f64::NAN),
        };
        t.push(vec![
            n.into(),
            delta.into(),
            per_sample(&conv).into(),
            conv.vacuous.into(),
            per_sample(&approx).into(),
            ach.into(),
            ach_valid.into(),
            oracle_size.into(),
            oracle_cov.into(),
            stats.h.into(),
            (m as f64).ln().into(),
        ]);
    }
    Ok(t)
}

/// Monte Carlo Bonferroni efficiency rate next to the converse bound.
pub fn run_bonferroni_compare(cfg: &ExperimentConfig) -> Result<Table> {
    let source = Source::load(cfg)?;
    let stats = source.stats()?;
    let m = source.label_count();
    let trials = usize::try_from(cfg.trials).map_err(|_| Error::Precondition("too many trials".into()))?;
    let rows = match &source {
        Source::Symmetric(s) => bonferroni_rate_experiment(s, cfg.m_cal, &cfg.n_grid, cfg.alpha, trials, cfg.seed)?,
        Source::Scores(d) => bonferroni_rate_experiment(d, cfg.m_cal, &cfg.n_grid, cfg.alpha, trials, cfg.seed)?,
    };
    let floor = 1.0 / (cfg.m_cal as f64 + 1.0);
    let mut t = Table {
        columns: columns(&[
            ("n", Unit::Plain),
            ("level", Unit::Plain),
            ("at_pvalue_floor", Unit::Plain),
            ("bonferroni_gamma", Unit::Info),
            ("converse_exact", Unit::Info),
            ("converse_exact_vacuous", Unit::Plain),
            ("converse_approx", Unit::Info),
            ("log_m", Unit::Info),
            ("coverage", Unit::Plain),
            ("coverage_se", Unit::Plain),
            ("empty_fraction", Unit::Plain),
        ]),
        ..Table::default()
    };
    stats_meta(&mut t, &stats, m);
    t.meta("m_cal", Unit::Plain, cfg.m_cal);
    t.meta("pvalue_floor", Unit::Plain, floor);
    t.meta("score", Unit::Plain, "1 - p(y|x)");
    for r in &rows {
        t.meta(&format!("level_n{}", r.n), Unit::Plain, r.level);
    }
    for r in rows {
        let n = r.n;
        let delta = cfg.delta_override.unwrap_or_else(|| default_delta(n));
        let conv = converse_or_trivial(&stats, n, cfg.alpha, delta)?.flag_full_set(m);
        let approx = converse_approx_or_trivial(&stats, n, cfg.alpha)?;
        t.push(vec![
            n.into(),
            r.level.into(),
            (r.level < floor).into(),
            r.gamma_nats.into(),
            per_sample(&conv).into(),
            conv.vacuous.into(),
            per_sample(&approx).into(),
            (m as f64).ln().into(),
            r.coverage.into(),
            r.coverage_se.into(),
            r.empty_fraction.into(),
        ]);
    }
    Ok(t)
}

fn fit_meta(t: &mut Table, key: &str, points: &[RatePoint]) -> Result<()> {
    let f = fit_exponent(points)?;
    t.meta(&format!("{key}_slope"), Unit::Info, f.slope);
    t.meta(&format!("{key}_slope_se"), Unit::Info, f.stderr);
    if let Some(lb) = f.lower_bound {
        t.meta(&format!("{key}_lower_bound"), Unit::Info, lb);
    }
    Ok(())
}

/// Simulated miscoverage and set-size frequencies of Gutman's test with
/// confidence, with the exact set-size law where enumeration is affordable.
pub fn run_gutman_sim(cfg: &ExperimentConfig) -> Result<Table> {
    let dists = cfg.class_dists()?;
    let m = dists.len();
    let k = dists[0].alphabet_size();
    let gcfg = GutmanConfig::new(cfg.alpha_ratio, cfg.lambda, m)?;
    let priors = CategoricalDist::uniform(m)?;
    let records = simulate_gutman(&dists, &priors, &gcfg, &cfg.n_grid, cfg.trials, cfg.seed)?;
    let laws: Vec<Option<_>> = cfg
        .n_grid
        .iter()
        .map(|&n| match set_size_law_exact(&dists, &priors, &gcfg, n, DEFAULT_WORK_BUDGET) {
            Ok(l) => Ok(Some(l)),
            Err(Error::TooLarge { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut cols = columns(&[
        ("n", Unit::Plain),
        ("training_len", Unit::Plain),
        ("trials", Unit::Plain),
        ("miscoverage_count", Unit::Plain),
        ("miscoverage_freq", Unit::Plain),
        ("miscoverage_se", Unit::Plain),
        ("miscoverage_bound", Unit::Plain),
        ("lambda_minus_types_correction", Unit::Info),
        ("exact_miscoverage", Unit::Plain),
    ]);
    for s in 0..=m {
        cols.push((format!("size{s}_freq"), Unit::Plain));
    }
    for s in 0..=m {
        cols.push((format!("exact_size{s}_prob"), Unit::Plain));
    }
    let mut t = Table {
        columns: cols,
        ..Table::default()
    };
    t.meta("classes", Unit::Plain, m);
    t.meta("alphabet_size", Unit::Plain, k);
    t.meta("lambda", Unit::Info, cfg.lambda);
    t.meta("priors", Unit::Plain, "uniform");
    if m == 2 {
        let e = set_size_exponent_binary(&dists[0], &dists[1], gcfg.alpha_ratio, gcfg.lambda)?;
        t.meta("full_set_exponent_theory", Unit::Info, e.full_set);
    } else {
        t.meta(
            "full_set_exponent_theory",
            Unit::Info,
            set_size_exponent(&dists, m, gcfg.alpha_ratio, gcfg.lambda)?,
        );
    }
    fit_meta(
        &mut t,
        "miscoverage_sim",
        &records.iter().map(|r| r.miscoverage_point()).collect::<Vec<_>>(),
    )?;
    if laws.iter().all(Option::is_some) {
        let laws: Vec<_> = laws.iter().flatten().collect();
        let pts = |s: usize| laws.iter().map(|l| RatePoint::exact(l.n, l.size_probs[s])).collect::<Vec<_>>();
        fit_meta(&mut t, "full_set_exact", &pts(m))?;
        fit_meta(&mut t, "empty_set_exact", &pts(0))?;
        fit_meta(
            &mut t,
            "miscoverage_exact",
            &laws.iter().map(|l| RatePoint::exact(l.n, l.miscoverage)).collect::<Vec<_>>(),
        )?;
    }
    for (r, law) in records.iter().zip(&laws) {
        let mut row: Vec<Cell> = vec![
            r.n.into(),
            r.training_len.into(),
            r.trials.into(),
            r.miscoverage_count.into(),
            r.miscoverage_freq().into(),
            r.miscoverage_se().into(),
            miscoverage_bound(r.n, r.training_len, k, cfg.lambda).into(),
            (cfg.lambda - types_correction(r.n, r.training_len, k)).into(),
            law.as_ref().map_or(f64::NAN, |l| l.miscoverage).into(),
        ];
        for s in 0..=m {
            row.push(r.set_size_freq(s).into());
        }
        for s in 0..=m {
            row.push(law.as_ref().map_or(f64::NAN, |l| l.size_probs[s]).into());
        }
        t.push(row);
    }
    Ok(t)
}

/// Set-size exponents over the threshold sweep `lambdas`, with grid-oracle
/// columns on binary alphabets.
pub fn run_exponent_table(cfg: &ExperimentConfig) -> Result<Table> {
    let dists = cfg.class_dists()?;
    let (p1, p2) = (&dists[0], &dists[1]);
    let a = cfg.alpha_ratio;
    let binary = p1.alphabet_size() == 2;
    let m = dists.len();
    let mut cols = columns(&[
        ("lambda", Unit::Info),
        ("gjs_p1_p2", Unit::Info),
        ("f12", Unit::Info),
        ("f21", Unit::Info),
        ("f12_grid", Unit::Info),
        ("f21_grid", Unit::Info),
        ("f12_certified_gap", Unit::Info),
        ("f21_certified_gap", Unit::Info),
        ("full_set_exponent", Unit::Info),
        ("empty_set_exponent", Unit::Info),
    ]);
    for k in 2..=m {
        if m > 2 {
            cols.push((format!("size{k}_exponent"), Unit::Info));
        }
    }
    let mut t = Table {
        columns: cols,
        ..Table::default()
    };
    let g = gjs(p1, p2, a)?;
    let v = dispersion_v(p1, p2, a)?;
    t.meta("gjs_p1_p2", Unit::Info, g);
    t.meta("dispersion_sd", Unit::Info, v.sqrt());
    t.meta("second_order_epsilon", Unit::Plain, cfg.alpha);
    t.meta("grid_points", Unit::Plain, cfg.grid_points);
    if cfg.alpha > 0.0 && cfg.alpha < 1.0 {
        for &n in &cfg.n_grid {
            t.meta(
                &format!("second_order_lambda_n{n}"),
                Unit::Info,
                second_order_lambda(p1, p2, a, n, cfg.alpha)?,
            );
        }
    }
    let rows: Vec<Result<Vec<Cell>>> = cfg
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let s12 = f_exponent(p1, p2, a, lambda)?;
            let s21 = f_exponent(p2, p1, a, lambda)?;
            let (g12, g21) = if binary {
                (
                    f_exponent_grid(p1, p2, a, lambda, cfg.grid_points)?,
                    f_exponent_grid(p2, p1, a, lambda, cfg.grid_points)?,
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            let mut row: Vec<Cell> = vec![
                lambda.into(),
                g.into(),
                s12.value.into(),
                s21.value.into(),
                g12.into(),
                g21.into(),
                s12.certified_gap.into(),
                s21.certified_gap.into(),
                s12.value.min(s21.value).into(),
                lambda.into(),
            ];
            if m > 2 {
                for k in 2..=m {
                    row.push(set_size_exponent(&dists, k, a, lambda)?.into());
                }
            }
            Ok(row)
        })
        .collect();
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

/// Brute-force audit of the one-shot inequality
/// `P(P(Y|X) <= beta) <= alpha + beta E|Gamma|` on `trials` random instances.
pub fn run_one_shot_audit(cfg: &ExperimentConfig) -> Result<Table> {
    let rows: Vec<Result<Vec<Cell>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, &[i]));
            let inst = random_audit_instance(&mut rng);
            let a = verdu_han_slack(&inst.joint, &inst.predictor, inst.alpha, inst.beta)?;
            Ok(vec![
                i.into(),
                inst.joint.n().into(),
                inst.joint.input_size().into(),
                inst.joint.label_count().into(),
                a.alpha.into(),
                a.beta.into(),
                a.error.into(),
                a.expected_size.into(),
                a.tail.into(),
                a.slack.into(),
            ])
        })
        .collect();
    let mut t = Table {
        columns: columns(&[
            ("instance", Unit::Plain),
            ("n", Unit::Plain),
            ("input_size", Unit::Plain),
            ("label_count", Unit::Plain),
            ("alpha", Unit::Plain),
            ("beta", Unit::Plain),
            ("error", Unit::Plain),
            ("expected_size", Unit::Plain),
            ("tail", Unit::Plain),
            ("slack", Unit::Plain),
        ]),
        ..Table::default()
    };
    for r in rows {
        t.push(r?);
    }
    let min = t
        .float_column("slack")
        .expect("slack column")
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    t.meta("instances", Unit::Plain, cfg.trials);
    t.meta("min_slack", Unit::Plain, min);
    Ok(t)
}

/// Runs the configured experiment. Metadata starts with the tool version,
/// the build description, the seed and a JSON echo of the whole config.
pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut body = match cfg.kind {
        ExperimentKind::BoundsCurve => run_bounds_curve(cfg)?,
        ExperimentKind::BonferroniCompare => run_bonferroni_compare(cfg)?,
        ExperimentKind::GutmanSim => run_gutman_sim(cfg)?,
        ExperimentKind::ExponentTable => run_exponent_table(cfg)?,
        ExperimentKind::OneShotAudit => run_one_shot_audit(cfg)?,
    };
    let mut t = Table {
        columns: std::mem::take(&mut body.columns),
        rows: std::mem::take(&mut body.rows),
        meta: Vec::new(),
    };
    t.meta("tool", Unit::Plain, concat!("tlab ", env!("CARGO_PKG_VERSION")));
    t.meta("git_describe", Unit::Plain, GIT_DESCRIBE);
    t.meta("experiment", Unit::Plain, cfg.kind.as_str());
    t.meta("seed", Unit::Plain, cfg.seed);
    t.meta("log_base", Unit::Plain, cfg.log_base.suffix());
    t.meta(
        "config",
        Unit::Plain,
        serde_json::to_string(cfg).map_err(|e| Error::Precondition(e.to_string()))?,
    );
    t.meta.extend(body.meta);
    Ok(t)
}
