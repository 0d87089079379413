use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use cluegain::data::{load_csv, normalize, write_completed_csv, DataTable, Schema};
use cluegain::eval::{
    pretrain_per_trial, render_results_table, run_trials, write_results_csv, ExperimentConfig, ModelKind,
};
use cluegain::similarity::{measure_similarity, Candidate, SimilarityConfig};
use cluegain::transfer::{impute_with_bundle, impute_with_gain, pretrain_seed, pretrain_with_curve};
use cluegain::{Error, PretrainedBundle, TransferPlan};
use log::{info, warn};

use crate::config::RunConfig;

fn schema(cfg: &RunConfig) -> anyhow::Result<Schema> {
    Ok(match &cfg.schema {
        Some(path) => Schema::load(path).with_context(|| format!("schema {}", path.display()))?,
        None => Schema::default(),
    })
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str, flag: &str) -> anyhow::Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("{what} is required (--{flag} or the config file)")).into())
}

fn load(path: &Path, schema: &Schema) -> anyhow::Result<DataTable> {
    let table = load_csv(path, schema).with_context(|| format!("loading {}", path.display()))?;
    info!(
        "{}: {} rows x {} columns, {} missing cells",
        path.display(),
        table.n_rows(),
        table.n_cols(),
        table.missing_count()
    );
    Ok(table)
}

fn drop_sparse(cfg: &RunConfig, table: DataTable) -> DataTable {
    match cfg.drop_missing_above {
        Some(threshold) => {
            let (kept, dropped) = table.drop_missing_above(threshold);
            if !dropped.is_empty() {
                warn!(
                    "dropped columns with more than {threshold} missing: {}",
                    dropped.join(", ")
                );
            }
            kept
        }
        None => table,
    }
}

fn out_path(cfg: &RunConfig, name: &Path) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.join(name))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn pretrain(cfg: &RunConfig) -> anyhow::Result<()> {
    let schema = schema(cfg)?;
    let source = drop_sparse(
        cfg,
        load(require(&cfg.pretrain.source, "a source CSV", "source")?, &schema)?,
    );
    source
        .require_complete("pre-training source")
        .context("pre-training needs complete data")?;
    let (source_norm, _) = normalize(&source)?;
    let (bundle, curve) = pretrain_with_curve(&source_norm, &cfg.hyper, pretrain_seed(cfg.seed))?;

    let bundle_path = out_path(cfg, &cfg.pretrain.bundle)?;
    bundle.save(&bundle_path)?;
    let curve_path = out_path(cfg, Path::new("pretrain_loss.csv"))?;
    let mut out = create(&curve_path)?;
    writeln!(out, "# {}", cfg.provenance())?;
    curve.write_csv(&mut out)?;
    out.flush()?;
    println!(
        "pre-trained on {} rows x {} columns; bundle {}",
        source.n_rows(),
        source.n_cols(),
        bundle_path.display()
    );
    Ok(())
}

fn check_bundle(bundle: &PretrainedBundle, cfg: &RunConfig) -> anyhow::Result<()> {
    let (b, h) = (&bundle.hyper, &cfg.hyper);
    if b.hidden_width != h.hidden_width || b.hidden_layers != h.hidden_layers {
        return Err(Error::Config(format!(
            "bundle was pre-trained with {} hidden layers of width {}, configuration asks for {} of width {}",
            b.hidden_layers, b.hidden_width, h.hidden_layers, h.hidden_width
        ))
        .into());
    }
    Ok(())
}

pub fn impute(cfg: &RunConfig) -> anyhow::Result<()> {
    let schema = schema(cfg)?;
    let target_path = require(&cfg.impute.target, "a target CSV", "target")?;
    let target = drop_sparse(cfg, load(target_path, &schema)?);
    let missing = target.missing_count();

    let completed = if missing == 0 {
        target.values().clone()
    } else {
        match &cfg.impute.bundle {
            Some(path) => {
                let bundle = PretrainedBundle::load(path).with_context(|| format!("bundle {}", path.display()))?;
                check_bundle(&bundle, cfg)?;
                let plan = TransferPlan::new(cfg.impute.strategy);
                info!("fine-tuning with {}", plan.strategy.model_label());
                impute_with_bundle(&bundle, &target, &plan, &cfg.hyper, cfg.seed)?.completed
            }
            None => {
                info!("no bundle given; training plain GAIN");
                impute_with_gain(&target, &cfg.hyper, cfg.seed)?.completed
            }
        }
    };

    let output = out_path(cfg, &cfg.impute.output)?;
    let mut out = create(&output)?;
    let replaced = write_completed_csv(target_path, &mut out, &target, &completed, Some(&cfg.provenance()))?;
    out.flush()?;
    println!(
        "imputed {replaced} of {} cells ({missing} missing) -> {}",
        target.n_rows() * target.n_cols(),
        output.display()
    );
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> anyhow::Result<()> {
    let ev = &cfg.evaluate;
    if ev.miss_rates.is_empty() {
        return Err(Error::Config("no miss rates to evaluate".into()).into());
    }
    if ev.strategies.is_empty() && !ev.include_gain {
        return Err(Error::Config("nothing to evaluate: no strategies and GAIN excluded".into()).into());
    }
    let schema = schema(cfg)?;
    let data = drop_sparse(cfg, load(require(&ev.data, "a ground-truth CSV", "data")?, &schema)?);
    data.require_complete("evaluation data")
        .context("evaluation needs complete ground truth")?;

    let bundles = if ev.strategies.is_empty() {
        None
    } else {
        let source_path = require(&ev.source, "a source CSV for transfer strategies", "source")?;
        let source = drop_sparse(cfg, load(source_path, &schema)?);
        info!("pre-training {} bundles", ev.trials);
        Some(pretrain_per_trial(&source, &cfg.hyper, cfg.seed, ev.trials)?)
    };

    let mut models = Vec::new();
    if ev.include_gain {
        models.push(ModelKind::Gain);
    }
    models.extend(ev.strategies.iter().map(|&s| ModelKind::ClueGain(TransferPlan::new(s))));

    let mut outcomes = Vec::new();
    for &miss_rate in &ev.miss_rates {
        for &model in &models {
            info!("{} at miss rate {miss_rate}", model.label());
            let config = ExperimentConfig {
                model,
                miss_rate,
                n_trials: ev.trials,
                master_seed: cfg.seed,
                hyper: cfg.hyper,
                prediction: ev.predict.then_some(ev.prediction),
            };
            outcomes.push(
                run_trials(&data, &config, bundles.as_deref())
                    .with_context(|| format!("{} at miss rate {miss_rate}", model.label()))?,
            );
        }
    }

    let output = out_path(cfg, &ev.output)?;
    let mut out = create(&output)?;
    writeln!(out, "# {}", cfg.provenance())?;
    write_results_csv(&mut out, &outcomes)?;
    out.flush()?;
    print!("{}", render_results_table(&outcomes));
    println!("results -> {}", output.display());
    Ok(())
}

/// Returns the index of the top-ranked candidate.
pub fn similarity(cfg: &RunConfig) -> anyhow::Result<usize> {
    let sim = &cfg.similarity;
    if sim.candidates.len() < 2 {
        return Err(Error::Config(format!(
            "similarity needs at least 2 candidates, got {}",
            sim.candidates.len()
        ))
        .into());
    }
    let schema = schema(cfg)?;
    let target = drop_sparse(cfg, load(require(&sim.target, "a target CSV", "target")?, &schema)?);
    let candidates = sim
        .candidates
        .iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| anyhow!("candidate path {} has no file name", path.display()))?;
            Ok(Candidate::new(name, load(path, &schema)?))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let config = SimilarityConfig {
        miss_rate: sim.miss_rate,
        plan: TransferPlan::new(sim.strategy),
        hyper: cfg.hyper,
        n_trials: sim.trials,
        master_seed: cfg.seed,
    };
    let report = measure_similarity(&target, &candidates, &config)?;

    let output = out_path(cfg, &sim.output)?;
    let mut out = create(&output)?;
    writeln!(out, "# {}", cfg.provenance())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    print!("{}", report.render_table());
    let top = report.top();
    println!("top: {} (index {top})", report.candidates[top].name);
    Ok(top)
}
