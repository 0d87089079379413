//! Generative adversarial imputation: generator `G(X̃, M, Z)` proposes values
//! for every cell, the composite `X̂ = M ⊙ X̃ + (1 - M) ⊙ X̄` keeps observed
//! values, and a discriminator `D(X̂, H)` guesses which cells were observed.

mod loss;
mod train;

pub use loss::{
    discriminator_loss, generator_finetune_loss, reconstruction_loss, reconstruction_term, BinaryReconstruction,
    PROB_EPS,
};
pub use train::{
    discriminator_gradients, fit, generator_gradients, train_gain, GeneratorObjective, LossCurve, LossRecord,
    TrainBatch,
};

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{make_observed, sample_noise, ColumnKind, DataTable, Normalizer};
use crate::nn::{Activation, Network};
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainHyperparams {
    pub batch_size: usize,
    pub hint_rate: f64,
    /// Weight of the observed-cell reconstruction term in the generator loss.
    pub alpha: f64,
    pub learning_rate: f64,
    /// Training iterations (fine-tuning and plain GAIN).
    pub iterations: usize,
    /// Pre-training iterations; `None` means the same as `iterations`.
    pub pretrain_iterations: Option<usize>,
    /// Upper bound of the uniform noise fed to the generator for missing cells.
    pub noise_high: f64,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    /// Artificial MCAR rate applied per batch while pre-training on complete data.
    pub pretrain_miss_rate: f64,
    pub binary_loss: BinaryReconstruction,
}

impl Default for GainHyperparams {
    fn default() -> Self {
        Self {
            batch_size: 128,
            hint_rate: 0.9,
            alpha: 10.0,
            learning_rate: 1e-3,
            iterations: 10_000,
            pretrain_iterations: None,
            noise_high: 0.01,
            hidden_width: 10,
            hidden_layers: 4,
            pretrain_miss_rate: 0.5,
            binary_loss: BinaryReconstruction::PositiveOnly,
        }
    }
}

impl GainHyperparams {
    pub fn pretrain_iteration_count(&self) -> usize {
        self.pretrain_iterations.unwrap_or(self.iterations)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} is out of range")))
            }
        };
        positive("batch_size", self.batch_size >= 1)?;
        positive("hint_rate", (0.0..=1.0).contains(&self.hint_rate))?;
        positive("alpha", self.alpha >= 0.0 && self.alpha.is_finite())?;
        positive(
            "learning_rate",
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
        )?;
        positive("noise_high", self.noise_high >= 0.0 && self.noise_high <= 1.0)?;
        positive("hidden_width", self.hidden_width >= 1)?;
        positive("hidden_layers", self.hidden_layers >= 1)?;
        positive("pretrain_miss_rate", (0.0..=1.0).contains(&self.pretrain_miss_rate))
    }

    /// Widths and activations for a `2d -> d` network: one input layer, the
    /// configured hidden stack, and a sigmoid output layer.
    pub fn topology(&self, d: usize) -> (Vec<usize>, Vec<Activation>) {
        let mut widths = vec![2 * d];
        widths.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers + 1));
        widths.push(d);
        let mut acts = vec![Activation::Relu; self.hidden_layers + 1];
        acts.push(Activation::Sigmoid);
        (widths, acts)
    }
}

/// A generator/discriminator pair for one column schema.
#[derive(Debug, Clone)]
pub struct GainModel {
    pub generator: Network,
    pub discriminator: Network,
    pub hyper: GainHyperparams,
    column_kinds: Vec<ColumnKind>,
    curve: LossCurve,
}

impl GainModel {
    /// Fresh GAIN networks for the given columns.
    pub fn init(column_kinds: &[ColumnKind], hyper: GainHyperparams, rng: &mut Stream) -> Result<Self> {
        hyper.validate()?;
        let d = column_kinds.len();
        if d == 0 {
            return Err(Error::Config("table has no columns".into()));
        }
        let (widths, acts) = hyper.topology(d);
        let generator = Network::init_with_rng(&widths, &acts, rng)?;
        let discriminator = Network::init_with_rng(&widths, &acts, rng)?;
        Self::from_networks(generator, discriminator, column_kinds, hyper)
    }

    pub fn from_networks(
        generator: Network,
        discriminator: Network,
        column_kinds: &[ColumnKind],
        hyper: GainHyperparams,
    ) -> Result<Self> {
        let d = column_kinds.len();
        for (name, net) in [("generator", &generator), ("discriminator", &discriminator)] {
            if net.input_dim() != 2 * d || net.output_dim() != d {
                return Err(Error::Config(format!(
                    "{name} maps {} -> {}, expected {} -> {d}",
                    net.input_dim(),
                    net.output_dim(),
                    2 * d
                )));
            }
        }
        Ok(Self {
            generator,
            discriminator,
            hyper,
            column_kinds: column_kinds.to_vec(),
            curve: LossCurve::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.column_kinds.len()
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn loss_curve(&self) -> &LossCurve {
        &self.curve
    }

    pub(crate) fn curve_mut(&mut self) -> &mut LossCurve {
        &mut self.curve
    }

    fn check_schema(&self, table: &DataTable) -> Result<()> {
        if table.column_kinds() != self.column_kinds.as_slice() {
            return Err(Error::Input(format!(
                "model was built for {} columns of kinds {:?}, table has {} columns",
                self.dim(),
                self.column_kinds,
                table.n_cols()
            )));
        }
        Ok(())
    }

    /// Imputes a normalized table; returns `X̂` in normalized units with raw
    /// generator outputs (no thresholding) on missing cells.
    pub fn impute_normalized(&self, table: &DataTable, rng: &mut Stream) -> Result<Array2<f64>> {
        self.check_schema(table)?;
        let x_tilde = make_observed(table.values(), table.mask())?;
        let z = sample_noise(table.n_rows(), table.n_cols(), self.hyper.noise_high, rng);
        let (_, x_hat) = impute_batch(self, &x_tilde, table.mask(), &z)?;
        Ok(x_hat)
    }
}

/// Generator input `[M ⊙ X̃ + (1 - M) ⊙ Z, M]`.
pub(crate) fn generator_input(x_tilde: &Array2<f64>, mask: &Array2<f64>, noise: &Array2<f64>) -> Array2<f64> {
    let mut filled = x_tilde.clone();
    ndarray::Zip::from(&mut filled)
        .and(mask)
        .and(noise)
        .for_each(|x, &m, &z| *x = m * *x + (1.0 - m) * z);
    concatenate![Axis(1), filled, *mask]
}

/// `X̂ = M ⊙ X̃ + (1 - M) ⊙ X̄`.
pub(crate) fn compose(x_tilde: &Array2<f64>, mask: &Array2<f64>, x_bar: &Array2<f64>) -> Array2<f64> {
    let mut out = x_bar.clone();
    ndarray::Zip::from(&mut out)
        .and(x_tilde)
        .and(mask)
        .for_each(|o, &x, &m| {
            if m == 1.0 {
                *o = x;
            }
        });
    out
}

/// Runs the generator on one batch and returns `(X̄, X̂)`.
pub fn impute_batch(
    model: &GainModel,
    x_tilde: &Array2<f64>,
    mask: &Array2<f64>,
    noise: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = model.dim();
    for (name, m) in [("x_tilde", x_tilde), ("mask", mask), ("noise", noise)] {
        if m.ncols() != d || m.nrows() != x_tilde.nrows() {
            return Err(Error::Input(format!(
                "`{name}` has shape {:?}, expected ({}, {d})",
                m.dim(),
                x_tilde.nrows()
            )));
        }
    }
    let x_bar = model
        .generator
        .forward_batch(generator_input(x_tilde, mask, noise).view())?;
    let x_hat = compose(x_tilde, mask, &x_bar);
    Ok((x_bar, x_hat))
}

/// Completed data in original units.
#[derive(Debug, Clone)]
pub struct Imputation {
    /// `X̂` in normalized units, raw generator outputs on missing cells.
    pub normalized: Array2<f64>,
    /// De-normalized `X̂` without thresholding; observed cells are the input values.
    pub raw: Array2<f64>,
    /// Like `raw` but binary columns thresholded at 0.5.
    pub completed: Array2<f64>,
}

/// Imputes every missing cell of `table` (original units). Observed cells are
/// copied from the input unchanged.
pub fn impute_full(
    model: &GainModel,
    table: &DataTable,
    normalizer: &Normalizer,
    rng: &mut Stream,
) -> Result<Imputation> {
    model.check_schema(table)?;
    let normalized_table = normalizer.transform(table)?;
    let normalized = model.impute_normalized(&normalized_table, rng)?;
    let mut raw = normalizer.inverse_matrix(&normalized)?;
    ndarray::Zip::from(&mut raw)
        .and(table.values())
        .and(table.mask())
        .for_each(|r, &v, &m| {
            if m == 1.0 {
                *r = v;
            }
        });
    let mut completed = raw.clone();
    for ((_, j), v) in completed.indexed_iter_mut() {
        if model.column_kinds[j] == ColumnKind::Binary {
            *v = if *v >= 0.5 { 1.0 } else { 0.0 };
        }
    }
    if completed.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal("imputation produced non-finite values".into()));
    }
    Ok(Imputation {
        normalized,
        raw,
        completed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_mcar_mask;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn model(d: usize, seed: u64) -> GainModel {
        let hyper = GainHyperparams {
            hidden_width: 4,
            hidden_layers: 2,
            ..Default::default()
        };
        GainModel::init(
            &vec![ColumnKind::Continuous; d],
            hyper,
            &mut Stream::seed_from_u64(seed),
        )
        .unwrap()
    }

    #[test]
    fn topology_default_has_six_layers() {
        let (widths, acts) = GainHyperparams::default().topology(44);
        assert_eq!(widths, vec![88, 10, 10, 10, 10, 10, 44]);
        assert_eq!(acts.len(), 6);
        assert_eq!(acts[5], Activation::Sigmoid);
    }

    #[test]
    fn full_mask_returns_input() {
        let m = model(3, 1);
        let x = array![[0.1, 0.2, 0.3], [0.9, 0.8, 0.7]];
        let ones = Array2::ones((2, 3));
        let z = Array2::from_elem((2, 3), 0.005);
        let (_, x_hat) = impute_batch(&m, &x, &ones, &z).unwrap();
        assert_eq!(x_hat, x);
    }

    #[test]
    fn empty_mask_returns_generator_output() {
        let m = model(3, 1);
        let x = Array2::zeros((2, 3));
        let zeros = Array2::zeros((2, 3));
        let z = Array2::from_elem((2, 3), 0.005);
        let (x_bar, x_hat) = impute_batch(&m, &x, &zeros, &z).unwrap();
        assert_eq!(x_hat, x_bar);
    }

    #[test]
    fn observed_positions_preserved() {
        let m = model(4, 2);
        let mut rng = Stream::seed_from_u64(3);
        let x = Array2::from_shape_simple_fn((16, 4), || rng.random::<f64>());
        let mask = generate_mcar_mask(16, 4, 0.5, &mut rng).unwrap();
        let x_tilde = make_observed(&x, &mask).unwrap();
        let z = sample_noise(16, 4, 0.01, &mut rng);
        let (x_bar, x_hat) = impute_batch(&m, &x_tilde, &mask, &z).unwrap();
        for ((idx, &mv), &h) in mask.indexed_iter().zip(x_hat.iter()) {
            if mv == 1.0 {
                assert_eq!(h, x_tilde[idx]);
            } else {
                assert_eq!(h, x_bar[idx]);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = model(3, 1);
        let x = Array2::zeros((2, 2));
        assert!(matches!(impute_batch(&m, &x, &x, &x).unwrap_err(), Error::Input(_)));
    }

    #[test]
    fn impute_full_binary_and_observed() {
        let kinds = vec![ColumnKind::Continuous, ColumnKind::Binary];
        let hyper = GainHyperparams {
            hidden_width: 4,
            hidden_layers: 1,
            ..Default::default()
        };
        let m = GainModel::init(&kinds, hyper, &mut Stream::seed_from_u64(0)).unwrap();
        let t = DataTable::new(
            array![[3.0, 1.0], [7.0, 0.0], [5.5, 1.0]],
            array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            kinds,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let norm = Normalizer::fit(&t).unwrap();
        let imp = impute_full(&m, &t, &norm, &mut Stream::seed_from_u64(1)).unwrap();
        assert_eq!(imp.completed[[0, 0]], 3.0);
        assert_eq!(imp.completed[[2, 0]], 5.5);
        assert!(imp.completed[[0, 1]] == 0.0 || imp.completed[[0, 1]] == 1.0);
        assert!(imp.completed.iter().all(|v| v.is_finite()));
    }
}
