use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::SymmetricChannelSpec;
use crate::prob::CategoricalDist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BoundsCurve,
    BonferroniCompare,
    GutmanSim,
    ExponentTable,
    #[serde(rename = "theorem1_audit")]
    OneShotAudit,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BoundsCurve => "bounds_curve",
            Self::BonferroniCompare => "bonferroni_compare",
            Self::GutmanSim => "gutman_sim",
            Self::ExponentTable => "exponent_table",
            Self::OneShotAudit => "theorem1_audit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    pub fn suffix(self) -> &'static str {
        match self {
            Self::Nats => "nats",
            Self::Bits => "bits",
        }
    }

    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Self::Nats => nats,
            Self::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    Symmetric(SymmetricChannelSpec),
    ScoresCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Not echoed into the metadata: the destination does not change content.
    #[serde(skip_serializing, default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Everything that determines an experiment's output. Fields unused by a
/// given kind are still echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub channel: ChannelSource,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub delta_override: Option<f64>,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default)]
    pub output: OutputSpec,
    /// Calibration set size for Bonferroni runs.
    pub m_cal: usize,
    /// Class-conditional distributions for Gutman and exponent runs.
    pub dists: Vec<Vec<f64>>,
    pub alpha_ratio: f64,
    pub lambda: f64,
    /// Threshold sweep of the exponent table.
    pub lambdas: Vec<f64>,
    pub grid_points: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment kind.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let n_grid = match kind {
            ExperimentKind::BoundsCurve => vec![100, 200, 400, 800, 1600],
            ExperimentKind::BonferroniCompare => vec![1, 2, 5, 10, 20, 40, 80],
            ExperimentKind::GutmanSim => (1..=8).map(|i| 100 * i).collect(),
            ExperimentKind::ExponentTable => vec![100, 400, 1600],
            ExperimentKind::OneShotAudit => vec![1, 2, 3],
        };
        let trials = match kind {
            ExperimentKind::BoundsCurve | ExperimentKind::ExponentTable => 1,
            ExperimentKind::BonferroniCompare => 500,
            ExperimentKind::GutmanSim => 10_000,
            ExperimentKind::OneShotAudit => 1000,
        };
        Self {
            kind,
            channel: ChannelSource::Symmetric(SymmetricChannelSpec {
                epsilon: 0.1,
                m_classes: 10,
            }),
            alpha: 0.1,
            n_grid,
            trials,
            seed: 0,
            delta_override: None,
            log_base: LogBase::Nats,
            output: OutputSpec::default(),
            m_cal: 180,
            dists: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            alpha_ratio: 1.0,
            lambda: 0.05,
            lambdas: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3],
            grid_points: 2001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "n_grid must be strictly increasing positive integers".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Precondition("trials must be at least 1".into()));
        }
        if let ChannelSource::Symmetric(spec) = &self.channel {
            spec.validate()?;
        }
        if let Some(d) = self.delta_override {
            if !(d > 0.0) {
                return Err(Error::Domain { value: d, domain: "(0, 1)" });
            }
        }
        match self.kind {
            ExperimentKind::BoundsCurve | ExperimentKind::BonferroniCompare => {
                if !(self.alpha > 0.0 && self.alpha < 1.0) {
                    return Err(Error::Domain {
                        value: self.alpha,
                        domain: "(0, 1)",
                    });
                }
            }
            ExperimentKind::GutmanSim | ExperimentKind::ExponentTable => {
                self.class_dists()?;
            }
            ExperimentKind::OneShotAudit => {}
        }
        Ok(())
    }

    pub fn class_dists(&self) -> Result<Vec<CategoricalDist>> {
        if self.dists.len() < 2 {
            return Err(Error::Precondition("at least two class distributions are required".into()));
        }
        let d = self
            .dists
            .iter()
            .map(|p| CategoricalDist::new(p.clone()))
            .collect::<Result<Vec<_>>>()?;
        for x in &d {
            x.ensure_same_alphabet(&d[0])?;
        }
        Ok(d)
    }

    /// Reads a JSON config; any field present in the file replaces the
    /// corresponding field of `base`.
    pub fn overlay_json(base: &Self, json: &str) -> Result<Self> {
        let mut value = serde_json::to_value(base).map_err(|e| Error::Precondition(e.to_string()))?;
        let patch: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::Precondition(format!("config: {e}")))?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(Error::Precondition("config must be a JSON object".into()));
        };
        let obj = value.as_object_mut().expect("config serializes to an object");
        for (k, v) in patch {
            if k == "output" {
                if let (Some(serde_json::Value::Object(dst)), serde_json::Value::Object(src)) = (obj.get_mut("output"), &v) {
                    for (ok, ov) in src {
                        dst.insert(ok.clone(), ov.clone());
                    }
                    continue;
                }
            }
            obj.insert(k, v);
        }
        let mut cfg: Self = serde_json::from_value(value).map_err(|e| Error::Precondition(format!("config: {e}")))?;
        if cfg.output.path.is_none() {
            cfg.output.path = base.output.path.clone();
        }
        Ok(cfg)
    }
}
