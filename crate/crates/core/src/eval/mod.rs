//! Imputation and downstream-prediction metrics, and the trial harness.

mod logreg;
mod metrics;
mod trials;

pub use logreg::{cross_validated_auroc, train_logreg, LogRegConfig, LogisticRegression};
pub use metrics::{auroc_binary, auroc_macro, rmse_missing};
pub use trials::{
    imputation_rmse, mask_and_impute, pretrain_per_trial, render_results_table, run_trial, run_trials, trial_seed,
    write_results_csv, AggregateResult, ExperimentConfig, ExperimentOutcome, ModelKind, PredictionConfig, TrialResult,
};
