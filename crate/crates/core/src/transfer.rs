//! Two-stage imputation with transferred hidden layers.
//!
//! Stage one pre-trains GAIN on a complete source table, replacing the
//! generator loss with pure reconstruction of every masked and unmasked
//! component. Stage two rebuilds both networks around the pre-trained hidden
//! stacks (fresh input/output layers sized for the target) and trains on the
//! incomplete target with the ordinary GAIN losses.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{DataTable, Normalizer};
use crate::gain::{fit, GainHyperparams, GainModel, GeneratorObjective, Imputation, LossCurve};
use crate::nn::{extract_hidden, read_layers, rebuild, write_layers, Activation, Layer};
use crate::rng::{derive_seed, RngStreams};
use crate::{Error, Result};

/// Fine-tuning strategy. The numeric labels follow the ClueGAIN1..5 naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// All pre-trained hiddens frozen; only the new input/output layers learn.
    DirectReuse,
    /// Everything trainable, hiddens initialized from the pre-trained ones.
    WarmStart,
    /// Pre-trained hiddens frozen, followed by freshly initialized trainable hiddens.
    AppendLayers,
    /// The half of the hiddens nearest the input is frozen.
    FreezeShallow,
    /// The half of the hiddens nearest the output is frozen.
    FreezeDeep,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::DirectReuse,
        Strategy::WarmStart,
        Strategy::AppendLayers,
        Strategy::FreezeShallow,
        Strategy::FreezeDeep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::DirectReuse => "direct_reuse",
            Strategy::WarmStart => "warm_start",
            Strategy::AppendLayers => "append_layers",
            Strategy::FreezeShallow => "freeze_shallow",
            Strategy::FreezeDeep => "freeze_deep",
        }
    }

    /// `ClueGAIN1` .. `ClueGAIN5`.
    pub fn model_label(self) -> &'static str {
        match self {
            Strategy::DirectReuse => "ClueGAIN1",
            Strategy::WarmStart => "ClueGAIN2",
            Strategy::AppendLayers => "ClueGAIN3",
            Strategy::FreezeShallow => "ClueGAIN4",
            Strategy::FreezeDeep => "ClueGAIN5",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown strategy `{s}` (expected one of direct_reuse, warm_start, \
                     append_layers, freeze_shallow, freeze_deep)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferPlan {
    pub strategy: Strategy,
    pub pretrain_hidden_count: usize,
    pub append_hidden_count: usize,
}

impl Default for TransferPlan {
    fn default() -> Self {
        Self::new(Strategy::FreezeDeep)
    }
}

impl TransferPlan {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            pretrain_hidden_count: 4,
            append_hidden_count: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pretrain_hidden_count == 0 {
            return Err(Error::Config("pretrain_hidden_count must be at least 1".into()));
        }
        if self.strategy == Strategy::AppendLayers && self.append_hidden_count == 0 {
            return Err(Error::Config("append_layers needs append_hidden_count >= 1".into()));
        }
        Ok(())
    }

    /// Frozen flag for each of `n` carried hidden layers. Half-freezing
    /// freezes `floor(n / 2)` layers.
    pub fn freeze_mask(&self, n: usize) -> Vec<bool> {
        let half = n / 2;
        (0..n)
            .map(|k| match self.strategy {
                Strategy::DirectReuse | Strategy::AppendLayers => true,
                Strategy::WarmStart => false,
                Strategy::FreezeShallow => k < half,
                Strategy::FreezeDeep => k >= n - half,
            })
            .collect()
    }

    /// Number of hidden layers appended after the carried ones.
    pub fn appended(&self) -> usize {
        if self.strategy == Strategy::AppendLayers {
            self.append_hidden_count
        } else {
            0
        }
    }
}

/// Hidden stacks of a pre-trained generator and discriminator.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedBundle {
    pub generator_hidden: Vec<Layer>,
    pub discriminator_hidden: Vec<Layer>,
    pub source_dim: usize,
    pub schema_digest: String,
    pub hyper: GainHyperparams,
}

const BUNDLE_MAGIC: &[u8; 8] = b"CGBUNDLE";
const BUNDLE_VERSION: u32 = 1;

impl PretrainedBundle {
    pub fn hidden_count(&self) -> usize {
        self.generator_hidden.len()
    }

    fn validate(&self) -> Result<()> {
        for (name, stack) in [
            ("generator", &self.generator_hidden),
            ("discriminator", &self.discriminator_hidden),
        ] {
            if stack.is_empty() {
                return Err(Error::Format(format!("{name} hidden stack is empty")));
            }
            if stack.windows(2).any(|w| w[0].fan_out() != w[1].fan_in()) {
                return Err(Error::Format(format!("{name} hidden stack does not chain")));
            }
        }
        if self.generator_hidden.len() != self.discriminator_hidden.len() {
            return Err(Error::Format("generator and discriminator hidden counts differ".into()));
        }
        Ok(())
    }

    /// Binary layout: magic, `u32` version, length-prefixed UTF-8 schema
    /// digest, `u32` source dimension, length-prefixed JSON hyperparameters,
    /// then the generator and discriminator layer blocks.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        use crate::nn::codec::write_u32;
        w.write_all(BUNDLE_MAGIC)?;
        write_u32(&mut w, BUNDLE_VERSION)?;
        write_u32(&mut w, self.schema_digest.len() as u32)?;
        w.write_all(self.schema_digest.as_bytes())?;
        write_u32(&mut w, self.source_dim as u32)?;
        let hyper = serde_json::to_vec(&self.hyper).map_err(|e| Error::Internal(e.to_string()))?;
        write_u32(&mut w, hyper.len() as u32)?;
        w.write_all(&hyper)?;
        write_layers(&mut w, &self.generator_hidden)?;
        write_layers(&mut w, &self.discriminator_hidden)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        use crate::nn::codec::{read_bytes, read_u32};
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(crate::nn::codec::truncated)?;
        if &magic != BUNDLE_MAGIC {
            return Err(Error::Format("not a pretrained bundle".into()));
        }
        let version = read_u32(&mut r)?;
        if version != BUNDLE_VERSION {
            return Err(Error::Format(format!("unsupported bundle version {version}")));
        }
        let len = read_u32(&mut r)? as usize;
        let schema_digest = String::from_utf8(read_bytes(&mut r, len)?)
            .map_err(|_| Error::Format("schema digest is not UTF-8".into()))?;
        let source_dim = read_u32(&mut r)? as usize;
        let len = read_u32(&mut r)? as usize;
        let hyper: GainHyperparams = serde_json::from_slice(&read_bytes(&mut r, len)?)
            .map_err(|e| Error::Format(format!("hyperparameters: {e}")))?;
        let generator_hidden = read_layers(&mut r)?;
        let discriminator_hidden = read_layers(&mut r)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rest.len())));
        }
        let bundle = Self {
            generator_hidden,
            discriminator_hidden,
            source_dim,
            schema_digest,
            hyper,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}

/// Pre-trains on a complete, normalized source table.
///
/// Each batch gets a fresh artificial MCAR mask at `hyper.pretrain_miss_rate`;
/// the generator learns to reconstruct all components and the discriminator
/// trains on its usual objective.
pub fn pretrain(source: &DataTable, hyper: &GainHyperparams, seed: u64) -> Result<PretrainedBundle> {
    pretrain_with_curve(source, hyper, seed).map(|(bundle, _)| bundle)
}

/// [`pretrain`], also returning the loss curve.
pub fn pretrain_with_curve(
    source: &DataTable,
    hyper: &GainHyperparams,
    seed: u64,
) -> Result<(PretrainedBundle, LossCurve)> {
    source.require_complete("pre-training source")?;
    let mut streams = RngStreams::new(seed);
    let mut model = GainModel::init(source.column_kinds(), *hyper, &mut streams.init)?;
    fit(&mut model, source, GeneratorObjective::Reconstruction, &mut streams)?;
    let bundle = PretrainedBundle {
        generator_hidden: extract_hidden(&model.generator)?,
        discriminator_hidden: extract_hidden(&model.discriminator)?,
        source_dim: source.n_cols(),
        schema_digest: source.schema_digest(),
        hyper: *hyper,
    };
    Ok((bundle, model.loss_curve().clone()))
}

/// Builds the fine-tuning networks for `plan` without training them.
pub fn build_finetune_model(
    bundle: &PretrainedBundle,
    target: &DataTable,
    plan: &TransferPlan,
    hyper: &GainHyperparams,
    streams: &mut RngStreams,
) -> Result<GainModel> {
    plan.validate()?;
    bundle.validate()?;
    if bundle.hidden_count() != plan.pretrain_hidden_count {
        return Err(Error::Config(format!(
            "bundle carries {} hidden layers but the plan expects {}",
            bundle.hidden_count(),
            plan.pretrain_hidden_count
        )));
    }
    let d = target.n_cols();
    let freeze = plan.freeze_mask(bundle.hidden_count());
    let mut build = |hidden: &[Layer]| {
        let width = hidden.last().unwrap().fan_out();
        let append = (0..plan.appended())
            .map(|_| Layer::xavier(width, width, Activation::Relu, &mut streams.init))
            .collect();
        rebuild(hidden.to_vec(), 2 * d, d, &freeze, append, &mut streams.init)
    };
    let generator = build(&bundle.generator_hidden)?;
    let discriminator = build(&bundle.discriminator_hidden)?;
    GainModel::from_networks(generator, discriminator, target.column_kinds(), *hyper)
}

/// Fine-tunes on a normalized (incomplete) target with the GAIN losses.
/// Never sees source rows: only the bundle's layers cross over.
pub fn finetune(
    bundle: &PretrainedBundle,
    target: &DataTable,
    plan: &TransferPlan,
    hyper: &GainHyperparams,
    seed: u64,
) -> Result<GainModel> {
    let mut streams = RngStreams::new(seed);
    let mut model = build_finetune_model(bundle, target, plan, hyper, &mut streams)?;
    fit(&mut model, target, GeneratorObjective::Adversarial, &mut streams)?;
    Ok(model)
}

const PRETRAIN_SALT: u64 = 0x7072_6574;
const IMPUTE_SALT: u64 = 0x696d_7075;

/// Seed used for the pre-training stage of a run seeded with `seed`.
pub fn pretrain_seed(seed: u64) -> u64 {
    derive_seed(seed, &[PRETRAIN_SALT])
}

/// Seed of the noise stream used when imputing after training with `seed`.
pub fn impute_seed(seed: u64) -> u64 {
    derive_seed(seed, &[IMPUTE_SALT])
}

/// End to end: normalize, pre-train on `source`, fine-tune on `target`
/// (original units, mask included), impute.
pub fn run_cluegain(
    source: &DataTable,
    target: &DataTable,
    plan: &TransferPlan,
    hyper: &GainHyperparams,
    seed: u64,
) -> Result<Imputation> {
    source.require_complete("pre-training source")?;
    let (source_norm, _) = crate::data::normalize(source)?;
    let bundle = pretrain(&source_norm, hyper, pretrain_seed(seed))?;
    impute_with_bundle(&bundle, target, plan, hyper, seed)
}

/// Fine-tunes a given bundle on `target` (original units) and imputes it.
pub fn impute_with_bundle(
    bundle: &PretrainedBundle,
    target: &DataTable,
    plan: &TransferPlan,
    hyper: &GainHyperparams,
    seed: u64,
) -> Result<Imputation> {
    let normalizer = Normalizer::fit(target)?;
    let target_norm = normalizer.transform(target)?;
    let model = finetune(bundle, &target_norm, plan, hyper, seed)?;
    let mut rng = crate::rng::stream(impute_seed(seed), crate::rng::StreamKind::Noise);
    crate::gain::impute_full(&model, target, &normalizer, &mut rng)
}

/// Plain GAIN counterpart of [`impute_with_bundle`], seeded identically.
pub fn impute_with_gain(target: &DataTable, hyper: &GainHyperparams, seed: u64) -> Result<Imputation> {
    let normalizer = Normalizer::fit(target)?;
    let target_norm = normalizer.transform(target)?;
    let model = crate::gain::train_gain(&target_norm, hyper, seed)?;
    let mut rng = crate::rng::stream(impute_seed(seed), crate::rng::StreamKind::Noise);
    crate::gain::impute_full(&model, target, &normalizer, &mut rng)
}
