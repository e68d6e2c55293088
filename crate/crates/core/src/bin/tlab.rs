use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tlab::harness::{self, ChannelSource, ExperimentConfig, ExperimentKind, LogBase, OutputFormat};
use tlab::predictors::SymmetricChannelSpec;

#[derive(Parser)]
#[command(name = "tlab", version, about = "Efficiency/confidence bounds and Gutman-test experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-sample converse/achievability curves against the exact predictor.
    BoundsCurve(Flags),
    /// Bonferroni split-conformal efficiency next to the converse bound.
    Bonferroni(Flags),
    /// Monte Carlo of Gutman's test with confidence.
    Gutman(Flags),
    /// Set-size exponents over a threshold sweep.
    Exponents(Flags),
    /// Brute-force audit of the one-shot converse inequality.
    AuditThm1(Flags),
}

#[derive(Args)]
struct Flags {
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    log_base: Option<LogBase>,
    /// JSON config; fields present there override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (output does not depend on it).
    #[arg(long)]
    threads: Option<usize>,

    /// Symmetric channel flip probability.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    m_classes: Option<usize>,
    /// Score CSV (`p_0,...,p_{M-1},label`) used instead of the symmetric channel.
    #[arg(long, conflicts_with_all = ["epsilon", "m_classes"])]
    scores: Option<PathBuf>,
    /// Significance level (second-order epsilon for `exponents`).
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    m_cal: Option<usize>,
    /// Class distributions, e.g. `0.8,0.2;0.2,0.8`.
    #[arg(long)]
    dists: Option<String>,
    #[arg(long)]
    alpha_ratio: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    grid_points: Option<usize>,
}

fn parse_dists(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("--dists: {v:?}: {e}")))
                .collect()
        })
        .collect()
}

fn build_config(kind: ExperimentKind, f: &Flags) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::default_for(kind);
    if let Some(path) = &f.scores {
        cfg.channel = ChannelSource::ScoresCsv(path.clone());
    } else if f.epsilon.is_some() || f.m_classes.is_some() {
        let ChannelSource::Symmetric(base) = cfg.channel.clone() else {
            unreachable!("defaults use the symmetric channel")
        };
        cfg.channel = ChannelSource::Symmetric(SymmetricChannelSpec {
            epsilon: f.epsilon.unwrap_or(base.epsilon),
            m_classes: f.m_classes.unwrap_or(base.m_classes),
        });
    }
    macro_rules! set {
        ($($field:ident <- $flag:expr),* $(,)?) => {
            $(if let Some(v) = $flag.clone() { cfg.$field = v; })*
        };
    }
    set!(
        alpha <- f.alpha,
        n_grid <- f.n_grid,
        trials <- f.trials,
        seed <- f.seed,
        log_base <- f.log_base,
        m_cal <- f.m_cal,
        alpha_ratio <- f.alpha_ratio,
        lambda <- f.lambda,
        lambdas <- f.lambdas,
        grid_points <- f.grid_points,
    );
    if f.delta.is_some() {
        cfg.delta_override = f.delta;
    }
    if let Some(d) = &f.dists {
        cfg.dists = parse_dists(d)?;
    }
    if let Some(fmt) = f.format {
        cfg.output.format = fmt;
    }
    cfg.output.path = Some(f.out.clone());
    if let Some(path) = &f.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg = ExperimentConfig::overlay_json(&cfg, &text).map_err(|e| e.to_string())?;
        if cfg.kind != kind {
            return Err(format!(
                "config kind {} does not match subcommand {}",
                cfg.kind.as_str(),
                kind.as_str()
            ));
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match &cli.command {
        Command::BoundsCurve(f) => (ExperimentKind::BoundsCurve, f),
        Command::Bonferroni(f) => (ExperimentKind::BonferroniCompare, f),
        Command::Gutman(f) => (ExperimentKind::GutmanSim, f),
        Command::Exponents(f) => (ExperimentKind::ExponentTable, f),
        Command::AuditThm1(f) => (ExperimentKind::OneShotAudit, f),
    };
    let cfg = match build_config(kind, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = flags.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match harness::run_and_emit(&cfg) {
        Ok(t) => {
            eprintln!(
                "{}: {} rows -> {}",
                kind.as_str(),
                t.rows.len(),
                flags.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
