//! Dataset similarity by transfer gain: pre-train on the target, then for each
//! candidate compare plain GAIN against the transferred model on the same
//! masked data. Larger gain means the candidate resembles the target more.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::data::{normalize, DataTable};
use crate::eval::{imputation_rmse, mask_and_impute, AggregateResult, ModelKind};
use crate::gain::GainHyperparams;
use crate::rng::derive_seed;
use crate::transfer::{pretrain, pretrain_seed, TransferPlan};
use crate::{Error, Result};

/// Transfer gain: `rmse_gain - rmse_clue`. Positive when transfer helped.
pub fn score_pair(rmse_gain: f64, rmse_clue: f64) -> f64 {
    rmse_gain - rmse_clue
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    /// Complete candidate data in original units.
    pub table: DataTable,
}

impl Candidate {
    pub fn new(name: impl Into<String>, table: DataTable) -> Self {
        Self {
            name: name.into(),
            table,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityConfig {
    pub miss_rate: f64,
    pub plan: TransferPlan,
    pub hyper: GainHyperparams,
    pub n_trials: usize,
    pub master_seed: u64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            miss_rate: 0.8,
            plan: TransferPlan::default(),
            hyper: GainHyperparams::default(),
            n_trials: 10,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub name: String,
    pub score: AggregateResult,
    /// Per-trial scores in trial order.
    pub trial_scores: Vec<f64>,
    pub rmse_gain: Vec<f64>,
    pub rmse_clue: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    /// In input order.
    pub candidates: Vec<CandidateScore>,
    /// Candidate indices by descending mean score; ties keep input order.
    pub ranking: Vec<usize>,
    pub miss_rate: f64,
    pub plan: TransferPlan,
    pub master_seed: u64,
    pub n_trials: usize,
}

impl SimilarityReport {
    /// Index of the highest-scoring candidate.
    pub fn top(&self) -> usize {
        self.ranking[0]
    }

    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|&i| self.candidates[i].name.as_str()).collect()
    }

    /// `rank,candidate,mean,std,n_trials,miss_rate,strategy,master_seed` rows in rank order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rank,candidate,mean,std,n_trials,miss_rate,strategy,master_seed")?;
        for (rank, &i) in self.ranking.iter().enumerate() {
            let c = &self.candidates[i];
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                rank + 1,
                c.name,
                c.score.mean,
                c.score.std,
                c.score.n_trials,
                self.miss_rate,
                self.plan.strategy,
                self.master_seed
            )?;
        }
        Ok(())
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "transfer gain (GAIN RMSE - {} RMSE), miss rate {}, {} trials, seed {}",
            self.plan.strategy.model_label(),
            self.miss_rate,
            self.n_trials,
            self.master_seed
        );
        let _ = writeln!(s, "{:>4}  {:<24} {:>10} {:>10}", "rank", "candidate", "mean", "std");
        for (rank, &i) in self.ranking.iter().enumerate() {
            let c = &self.candidates[i];
            let _ = writeln!(
                s,
                "{:>4}  {:<24} {:>10.5} {:>10.5}",
                rank + 1,
                c.name,
                c.score.mean,
                c.score.std
            );
        }
        s
    }
}

/// Candidate indices sorted by descending mean; stable on ties.
pub fn rank_by_mean(means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
    order
}

/// Seed shared by the paired GAIN and transfer runs of one candidate in one trial.
pub fn cell_seed(master_seed: u64, trial: usize, candidate: usize) -> u64 {
    derive_seed(master_seed, &[trial as u64, candidate as u64])
}

/// Ranks `candidates` by transfer gain from the complete `target`.
pub fn measure_similarity(
    target: &DataTable,
    candidates: &[Candidate],
    config: &SimilarityConfig,
) -> Result<SimilarityReport> {
    target.require_complete("similarity target")?;
    config.hyper.validate()?;
    config.plan.validate()?;
    if candidates.is_empty() {
        return Err(Error::Config("at least one candidate is required".into()));
    }
    if config.n_trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if !(config.miss_rate > 0.0 && config.miss_rate < 1.0) {
        return Err(Error::Precondition(format!(
            "miss rate must lie in (0, 1), got {}",
            config.miss_rate
        )));
    }
    for c in candidates {
        c.table.require_complete(&format!("candidate {}", c.name))?;
    }

    let (target_norm, _) = normalize(target)?;
    let bundles = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            pretrain(
                &target_norm,
                &config.hyper,
                pretrain_seed(derive_seed(config.master_seed, &[t as u64])),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..config.n_trials)
        .flat_map(|t| (0..candidates.len()).map(move |c| (t, c)))
        .collect();
    let transfer = ModelKind::ClueGain(config.plan);
    let results = cells
        .par_iter()
        .map(|&(t, c)| {
            let truth = &candidates[c].table;
            let seed = cell_seed(config.master_seed, t, c);
            let (mask_g, gain) = mask_and_impute(truth, &ModelKind::Gain, config.miss_rate, &config.hyper, None, seed)?;
            let (mask_c, clue) = mask_and_impute(
                truth,
                &transfer,
                config.miss_rate,
                &config.hyper,
                Some(&bundles[t]),
                seed,
            )?;
            if mask_g != mask_c {
                return Err(Error::Internal("paired runs drew different masks".into()));
            }
            let (rmse_gain, _) = imputation_rmse(truth, &gain.raw, &mask_g)?;
            let (rmse_clue, _) = imputation_rmse(truth, &clue.raw, &mask_c)?;
            Ok((rmse_gain, rmse_clue))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scores = Vec::with_capacity(candidates.len());
    for (c, cand) in candidates.iter().enumerate() {
        let pairs: Vec<(f64, f64)> = (0..config.n_trials)
            .map(|t| results[t * candidates.len() + c])
            .collect();
        let trial_scores: Vec<f64> = pairs.iter().map(|&(g, k)| score_pair(g, k)).collect();
        if trial_scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Metric(format!("non-finite score for candidate {}", cand.name)));
        }
        scores.push(CandidateScore {
            name: cand.name.clone(),
            score: AggregateResult::from_values(&trial_scores),
            trial_scores,
            rmse_gain: pairs.iter().map(|p| p.0).collect(),
            rmse_clue: pairs.iter().map(|p| p.1).collect(),
        });
    }
    let ranking = rank_by_mean(&scores.iter().map(|s| s.score.mean).collect::<Vec<_>>());
    Ok(SimilarityReport {
        candidates: scores,
        ranking,
        miss_rate: config.miss_rate,
        plan: config.plan,
        master_seed: config.master_seed,
        n_trials: config.n_trials,
    })
}
