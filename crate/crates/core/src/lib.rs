//! GAIN imputation for tabular data, with transfer from a complete source
//! dataset (ClueGAIN), an evaluation harness, and transfer-gain dataset
//! similarity.
//!
//! ```no_run
//! use cluegain::data::{load_csv, Schema};
//! use cluegain::gain::GainHyperparams;
//! use cluegain::transfer::{run_cluegain, Strategy, TransferPlan};
//!
//! let schema = Schema::default();
//! let source = load_csv("source.csv", &schema)?;
//! let target = load_csv("target.csv", &schema)?;
//! let plan = TransferPlan::new(Strategy::FreezeDeep);
//! let out = run_cluegain(&source, &target, &plan, &GainHyperparams::default(), 42)?;
//! println!("{}", out.completed);
//! # Ok::<(), cluegain::Error>(())
//! ```

pub mod data;
mod error;
pub mod eval;
pub mod gain;
pub mod nn;
pub mod rng;
pub mod similarity;
pub mod synthetic;
pub mod transfer;

pub use data::{ColumnKind, DataTable, Labels, Normalizer, Schema};
pub use error::{Error, Result};
pub use eval::{AggregateResult, ExperimentConfig, ExperimentOutcome, ModelKind, TrialResult};
pub use gain::{GainHyperparams, GainModel, Imputation};
pub use nn::{Activation, Layer, Network};
pub use similarity::{measure_similarity, Candidate, SimilarityConfig, SimilarityReport};
pub use transfer::{PretrainedBundle, Strategy, TransferPlan};
