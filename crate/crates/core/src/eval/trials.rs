//! Repeated masked-imputation trials with mean ± std aggregation.

use std::fmt::Write as _;
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{cross_validated_auroc, LogRegConfig};
use super::metrics::rmse_missing;
use crate::data::{generate_mcar_mask, normalize, DataTable, Normalizer};
use crate::gain::{GainHyperparams, Imputation};
use crate::rng::{derive_seed, stream, StreamKind};
use crate::transfer::{impute_with_bundle, impute_with_gain, pretrain, pretrain_seed, PretrainedBundle, TransferPlan};
use crate::{Error, Result};

const LOGREG_SALT: u64 = 0x6c6f_6772;

/// Seed of trial `t` under `master`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    derive_seed(master, &[t as u64])
}

/// Mean and population standard deviation of a set of trial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub mean: f64,
    pub std: f64,
    pub n_trials: usize,
}

impl AggregateResult {
    pub fn from_values(values: &[f64]) -> Self {
        // Welford
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, &v) in values.iter().enumerate() {
            let delta = v - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (v - mean);
        }
        let n = values.len();
        let std = if n == 0 { 0.0 } else { (m2 / n as f64).max(0.0).sqrt() };
        Self {
            mean: if n == 0 { f64::NAN } else { mean },
            std,
            n_trials: n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Gain,
    ClueGain(TransferPlan),
}

impl ModelKind {
    /// Short name used in result tables: `gain` or the strategy name.
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Gain => "gain",
            ModelKind::ClueGain(plan) => plan.strategy.as_str(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Gain => "GAIN",
            ModelKind::ClueGain(plan) => plan.strategy.model_label(),
        }
    }
}

/// Downstream-prediction settings: logistic regression scored by
/// cross-validated macro AUROC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionConfig {
    pub folds: usize,
    pub logreg: LogRegConfig,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            logreg: LogRegConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub miss_rate: f64,
    pub n_trials: usize,
    pub master_seed: u64,
    pub hyper: GainHyperparams,
    pub prediction: Option<PredictionConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// RMSE on missing cells in units normalized by the complete data's range.
    pub rmse: f64,
    /// RMSE on missing cells in original units.
    pub rmse_original: f64,
    pub auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub model: ModelKind,
    pub miss_rate: f64,
    pub trials: Vec<TrialResult>,
    pub rmse: AggregateResult,
    pub auroc: Option<AggregateResult>,
}

/// Pre-trains one bundle per trial on the complete `source` (original units).
/// Bundle `t` is seeded from trial `t`'s seed.
pub fn pretrain_per_trial(
    source: &DataTable,
    hyper: &GainHyperparams,
    master_seed: u64,
    n_trials: usize,
) -> Result<Vec<PretrainedBundle>> {
    source.require_complete("pre-training source")?;
    let (source_norm, _) = normalize(source)?;
    (0..n_trials)
        .into_par_iter()
        .map(|t| pretrain(&source_norm, hyper, pretrain_seed(trial_seed(master_seed, t))))
        .collect()
}

/// RMSE of `imputed` against `truth` over cells where `mask == 0`, in units
/// normalized by the range of `truth` and in original units.
pub fn imputation_rmse(truth: &DataTable, imputed: &Array2<f64>, mask: &Array2<f64>) -> Result<(f64, f64)> {
    let normalizer = Normalizer::fit(truth)?;
    let t = normalizer.transform_matrix(truth.values())?;
    let x = normalizer.transform_matrix(imputed)?;
    Ok((
        rmse_missing(&t, &x, mask)?,
        rmse_missing(truth.values(), imputed, mask)?,
    ))
}

/// Masks `truth` with a fresh MCAR mask drawn from `seed` and imputes it.
/// Returns the mask and the imputation.
pub fn mask_and_impute(
    truth: &DataTable,
    model: &ModelKind,
    miss_rate: f64,
    hyper: &GainHyperparams,
    bundle: Option<&PretrainedBundle>,
    seed: u64,
) -> Result<(Array2<f64>, Imputation)> {
    let mut rng = stream(seed, StreamKind::Mask);
    let mask = generate_mcar_mask(truth.n_rows(), truth.n_cols(), miss_rate, &mut rng)?;
    let masked = truth.with_mask(&mask)?;
    let imputation = match model {
        ModelKind::Gain => impute_with_gain(&masked, hyper, seed)?,
        ModelKind::ClueGain(plan) => {
            let bundle = bundle.ok_or_else(|| Error::Config("transfer model needs a pre-trained bundle".into()))?;
            impute_with_bundle(bundle, &masked, plan, hyper, seed)?
        }
    };
    Ok((mask, imputation))
}

/// One trial: mask, impute, score.
pub fn run_trial(
    truth: &DataTable,
    config: &ExperimentConfig,
    bundle: Option<&PretrainedBundle>,
    trial: usize,
) -> Result<TrialResult> {
    let seed = trial_seed(config.master_seed, trial);
    let (mask, imputation) = mask_and_impute(truth, &config.model, config.miss_rate, &config.hyper, bundle, seed)?;
    if !mask.iter().any(|&m| m == 0.0) {
        return Err(Error::Metric(format!(
            "miss rate {} left no cell missing in trial {trial}",
            config.miss_rate
        )));
    }
    let (rmse, rmse_original) = imputation_rmse(truth, &imputation.raw, &mask)?;
    let auroc = match (&config.prediction, truth.labels()) {
        (Some(pred), Some(labels)) => {
            let features = Normalizer::fit(&DataTable::complete(
                imputation.completed.clone(),
                truth.column_kinds().to_vec(),
            )?)?
            .transform_matrix(&imputation.completed)?;
            let logreg = LogRegConfig {
                seed: derive_seed(seed, &[LOGREG_SALT]),
                ..pred.logreg
            };
            Some(cross_validated_auroc(
                &features,
                &labels.ids,
                labels.n_classes(),
                pred.folds,
                &logreg,
            )?)
        }
        (Some(_), None) => return Err(Error::Input("prediction requested but the data has no labels".into())),
        _ => None,
    };
    Ok(TrialResult {
        trial,
        seed,
        rmse,
        rmse_original,
        auroc,
    })
}

/// Runs `config.n_trials` independent trials on the complete `truth`.
/// Transfer models need one bundle per trial.
pub fn run_trials(
    truth: &DataTable,
    config: &ExperimentConfig,
    bundles: Option<&[PretrainedBundle]>,
) -> Result<ExperimentOutcome> {
    truth.require_complete("evaluation data")?;
    config.hyper.validate()?;
    if config.n_trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if let (ModelKind::ClueGain(_), Some(b)) = (&config.model, bundles) {
        if b.len() < config.n_trials {
            return Err(Error::Config(format!(
                "{} bundles for {} trials",
                b.len(),
                config.n_trials
            )));
        }
    }
    let trials: Vec<TrialResult> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| run_trial(truth, config, bundles.map(|b| &b[t]), t))
        .collect::<Result<_>>()?;
    let rmse = AggregateResult::from_values(&trials.iter().map(|t| t.rmse).collect::<Vec<_>>());
    let aurocs: Option<Vec<f64>> = trials.iter().map(|t| t.auroc).collect();
    Ok(ExperimentOutcome {
        model: config.model,
        miss_rate: config.miss_rate,
        trials,
        rmse,
        auroc: aurocs.map(|a| AggregateResult::from_values(&a)),
    })
}

fn outcome_rows(outcomes: &[ExperimentOutcome]) -> Vec<(String, f64, &'static str, AggregateResult)> {
    let mut rows = Vec::new();
    for o in outcomes {
        rows.push((o.model.name().to_string(), o.miss_rate, "rmse", o.rmse));
        if let Some(a) = o.auroc {
            rows.push((o.model.name().to_string(), o.miss_rate, "auroc", a));
        }
    }
    rows
}

/// Writes `strategy,miss_rate,metric,mean,std,n_trials` rows.
pub fn write_results_csv<W: Write>(mut out: W, outcomes: &[ExperimentOutcome]) -> Result<()> {
    writeln!(out, "strategy,miss_rate,metric,mean,std,n_trials")?;
    for (name, miss, metric, agg) in outcome_rows(outcomes) {
        writeln!(out, "{name},{miss},{metric},{},{},{}", agg.mean, agg.std, agg.n_trials)?;
    }
    Ok(())
}

/// Human-readable table of the same rows.
pub fn render_results_table(outcomes: &[ExperimentOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>9} {:>7} {:>10} {:>10} {:>8}",
        "strategy", "miss_rate", "metric", "mean", "std", "n_trials"
    );
    for (name, miss, metric, agg) in outcome_rows(outcomes) {
        let _ = writeln!(
            s,
            "{name:<16} {miss:>9.2} {metric:>7} {:>10.5} {:>10.5} {:>8}",
            agg.mean, agg.std, agg.n_trials
        );
    }
    s
}
