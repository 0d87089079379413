use std::io::Write;

use ndarray::{s, Array2, Axis};

use super::loss::{discriminator_objective, generator_finetune_objective, reconstruction_objective};
use super::{compose, generator_input, GainHyperparams, GainModel};
use crate::data::{generate_mcar_mask, sample_batch, sample_hint, sample_noise, DataTable};
use crate::nn::{adam_step, AdamConfig, AdamState, Gradients};
use crate::rng::RngStreams;
use crate::{Error, Result};

/// Which generator loss drives the G-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorObjective {
    /// Adversarial term on missing cells plus alpha-weighted reconstruction on observed cells.
    Adversarial,
    /// Pure reconstruction of every component against known true values
    /// (pre-training on complete data under artificial masks).
    Reconstruction,
}

/// Everything one training step needs.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub x_tilde: Array2<f64>,
    pub mask: Array2<f64>,
    pub noise: Array2<f64>,
    pub hint: Array2<f64>,
    /// Hint reveal indicator `B`; the discriminator is scored where `B == 0`.
    pub hint_mask: Array2<f64>,
    /// True values for every cell; required by [`GeneratorObjective::Reconstruction`].
    pub truth: Option<Array2<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossCurve {
    pub records: Vec<LossRecord>,
}

impl LossCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,d_loss,g_loss")?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.iteration, r.d_loss, r.g_loss)?;
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&LossRecord> {
        self.records.last()
    }
}

fn discriminator_input(x_hat: &Array2<f64>, hint: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate![Axis(1), *x_hat, *hint]
}

/// Objective minimized by the discriminator (negated log-likelihood) and its
/// parameter gradients, with the generator held fixed.
pub fn discriminator_gradients(model: &GainModel, batch: &TrainBatch) -> Result<(f64, Gradients)> {
    let x_bar = model
        .generator
        .forward_batch(generator_input(&batch.x_tilde, &batch.mask, &batch.noise).view())?;
    let x_hat = compose(&batch.x_tilde, &batch.mask, &x_bar);
    let cache = model
        .discriminator
        .forward_cached(discriminator_input(&x_hat, &batch.hint).view())?;
    let (loss, d_mhat) = discriminator_objective(&batch.mask, cache.output(), &batch.hint_mask)?;
    let grads = model.discriminator.backward(&cache, d_mhat.view())?;
    Ok((loss, grads))
}

/// Generator objective and its parameter gradients, with the discriminator
/// held fixed. The adversarial term is back-propagated through `D`.
pub fn generator_gradients(
    model: &GainModel,
    batch: &TrainBatch,
    objective: GeneratorObjective,
) -> Result<(f64, Gradients)> {
    let d = model.dim();
    let g_cache = model
        .generator
        .forward_cached(generator_input(&batch.x_tilde, &batch.mask, &batch.noise).view())?;
    let x_bar = g_cache.output();
    let (loss, d_xbar) = match objective {
        GeneratorObjective::Reconstruction => {
            let truth = batch
                .truth
                .as_ref()
                .ok_or_else(|| Error::Internal("reconstruction objective needs true values".into()))?;
            reconstruction_objective(truth, x_bar, model.column_kinds(), model.hyper.binary_loss)?
        }
        GeneratorObjective::Adversarial => {
            let x_hat = compose(&batch.x_tilde, &batch.mask, x_bar);
            let d_cache = model
                .discriminator
                .forward_cached(discriminator_input(&x_hat, &batch.hint).view())?;
            let (loss, d_mhat, mut d_xbar) = generator_finetune_objective(
                &batch.mask,
                d_cache.output(),
                &batch.x_tilde,
                x_bar,
                model.hyper.alpha,
                model.column_kinds(),
                model.hyper.binary_loss,
            )?;
            let through_d = model.discriminator.backward(&d_cache, d_mhat.view())?;
            let d_xhat = through_d.input.slice(s![.., ..d]);
            // X̂ only depends on X̄ where the cell is missing.
            ndarray::Zip::from(&mut d_xbar)
                .and(&d_xhat)
                .and(&batch.mask)
                .for_each(|g, &dx, &m| *g += (1.0 - m) * dx);
            (loss, d_xbar)
        }
    };
    let grads = model.generator.backward(&g_cache, d_xbar.view())?;
    Ok((loss, grads))
}

fn draw_batch(
    table: &DataTable,
    hyper: &GainHyperparams,
    objective: GeneratorObjective,
    streams: &mut RngStreams,
) -> Result<TrainBatch> {
    let idx = sample_batch(table.n_rows(), hyper.batch_size, &mut streams.batch)?;
    let rows = idx.len();
    let d = table.n_cols();
    let values = table.values().select(Axis(0), &idx);
    let (x_tilde, mask, truth) = match objective {
        GeneratorObjective::Adversarial => (values, table.mask().select(Axis(0), &idx), None),
        GeneratorObjective::Reconstruction => {
            let mask = generate_mcar_mask(rows, d, hyper.pretrain_miss_rate, &mut streams.mask)?;
            (&values * &mask, mask, Some(values))
        }
    };
    let noise = sample_noise(rows, d, hyper.noise_high, &mut streams.noise);
    let (hint, hint_mask) = sample_hint(&mask, hyper.hint_rate, &mut streams.hint)?;
    Ok(TrainBatch {
        x_tilde,
        mask,
        noise,
        hint,
        hint_mask,
        truth,
    })
}

/// Alternating training: per iteration one Adam step on `D`, then one on `G`,
/// on the same minibatch. Runs `model.hyper.iterations` iterations
/// (`pretrain_iteration_count()` for the reconstruction objective) and appends
/// to the model's loss curve.
pub fn fit(
    model: &mut GainModel,
    table: &DataTable,
    objective: GeneratorObjective,
    streams: &mut RngStreams,
) -> Result<()> {
    model.check_schema(table)?;
    table.require_normalized()?;
    if table.n_rows() == 0 {
        return Err(Error::Input("cannot train on an empty table".into()));
    }
    let hyper = model.hyper;
    hyper.validate()?;
    let adam = AdamConfig {
        learning_rate: hyper.learning_rate,
        ..AdamConfig::default()
    };
    let mut d_opt = AdamState::new(&model.discriminator, adam);
    let mut g_opt = AdamState::new(&model.generator, adam);

    let iterations = match objective {
        GeneratorObjective::Adversarial => hyper.iterations,
        GeneratorObjective::Reconstruction => hyper.pretrain_iteration_count(),
    };
    let offset = model.loss_curve().records.len();
    for it in 0..iterations {
        let batch = draw_batch(table, &hyper, objective, streams)?;

        let (d_loss, d_grads) = discriminator_gradients(model, &batch)?;
        adam_step(&mut model.discriminator, &d_grads, &mut d_opt)?;

        let (g_loss, g_grads) = generator_gradients(model, &batch, objective)?;
        if !d_loss.is_finite() || !g_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: it,
                d_loss,
                g_loss,
            });
        }
        adam_step(&mut model.generator, &g_grads, &mut g_opt)?;

        model.curve_mut().records.push(LossRecord {
            iteration: offset + it,
            d_loss,
            g_loss,
        });
    }
    Ok(())
}

/// Trains plain GAIN on a normalized table (mask taken from the table).
pub fn train_gain(table: &DataTable, hyper: &GainHyperparams, seed: u64) -> Result<GainModel> {
    let mut streams = RngStreams::new(seed);
    let mut model = GainModel::init(table.column_kinds(), *hyper, &mut streams.init)?;
    fit(&mut model, table, GeneratorObjective::Adversarial, &mut streams)?;
    Ok(model)
}
