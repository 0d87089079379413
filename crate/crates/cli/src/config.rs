//! Run configuration: a TOML file with shared settings at the top level and
//! one section per command. Every field has a default except input paths.
//!
//! ```toml
//! seed = 7
//! out_dir = "runs/a"
//! schema = "schema.toml"
//!
//! [hyper]
//! iterations = 5000
//!
//! [evaluate]
//! data = "truth.csv"
//! source = "source.csv"
//! miss_rates = [0.6, 0.7, 0.8, 0.9]
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use cluegain::eval::PredictionConfig;
use cluegain::{GainHyperparams, Strategy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub schema: Option<PathBuf>,
    /// Drop columns whose missing fraction exceeds this before imputing.
    pub drop_missing_above: Option<f64>,
    pub hyper: GainHyperparams,
    pub pretrain: PretrainSection,
    pub impute: ImputeSection,
    pub evaluate: EvaluateSection,
    pub similarity: SimilaritySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            schema: None,
            drop_missing_above: None,
            hyper: GainHyperparams::default(),
            pretrain: PretrainSection::default(),
            impute: ImputeSection::default(),
            evaluate: EvaluateSection::default(),
            similarity: SimilaritySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    pub source: Option<PathBuf>,
    /// Bundle file name, relative to `out_dir`.
    pub bundle: PathBuf,
}

impl Default for PretrainSection {
    fn default() -> Self {
        Self {
            source: None,
            bundle: PathBuf::from("bundle.cgb"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeSection {
    pub target: Option<PathBuf>,
    /// Pre-trained bundle; without one, plain GAIN is used.
    pub bundle: Option<PathBuf>,
    pub strategy: Strategy,
    /// Output file name, relative to `out_dir`.
    pub output: PathBuf,
}

impl Default for ImputeSection {
    fn default() -> Self {
        Self {
            target: None,
            bundle: None,
            strategy: Strategy::FreezeDeep,
            output: PathBuf::from("completed.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Complete ground-truth data.
    pub data: Option<PathBuf>,
    /// Complete pre-training source; needed when any strategy is listed.
    pub source: Option<PathBuf>,
    pub miss_rates: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub include_gain: bool,
    pub trials: usize,
    /// Score post-imputation classification when the data has labels.
    pub predict: bool,
    pub prediction: PredictionConfig,
    pub output: PathBuf,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            data: None,
            source: None,
            miss_rates: vec![0.6, 0.7, 0.8, 0.9],
            strategies: Strategy::ALL.to_vec(),
            include_gain: true,
            trials: 10,
            predict: false,
            prediction: PredictionConfig::default(),
            output: PathBuf::from("metrics.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    pub target: Option<PathBuf>,
    pub candidates: Vec<PathBuf>,
    pub miss_rate: f64,
    pub strategy: Strategy,
    pub trials: usize,
    pub output: PathBuf,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        Self {
            target: None,
            candidates: Vec::new(),
            miss_rate: 0.8,
            strategy: Strategy::FreezeDeep,
            trials: 10,
            output: PathBuf::from("similarity.csv"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the serialized config.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_toml_string().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Comment line recorded at the top of every output CSV.
    pub fn provenance(&self) -> String {
        format!("cluegain config={} seed={}", self.digest(), self.seed)
    }
}
