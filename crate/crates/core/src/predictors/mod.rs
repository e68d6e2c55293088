//! Confidence predictors: the idealized product-threshold predictor and the
//! split-conformal Bonferroni predictor.

mod conformal;
mod dp;
mod symmetric;

pub use conformal::{
    bonferroni_predict, bonferroni_rate_experiment, quantile_threshold, scp_pvalue, BonferroniPrediction,
    BonferroniRow, CalibrationScores, LabeledScoreSource,
};
pub use dp::{idealized_eval_dp, idealized_eval_dp_with_budget, DpEval, DEFAULT_CELL_BUDGET, DEFAULT_GRID_STEP};
pub use symmetric::{
    idealized_eval_symmetric, idealized_eval_symmetric_log, min_feasible_threshold, IdealizedEval,
    SymmetricChannelSpec,
};
