//! Memoryless comparison models: ridge regression and a shallow decoder on
//! the current measurement only.

mod linear;
mod sdn;

pub use linear::{fit_linear, LinearModel, LINEAR_MAGIC};
pub use sdn::{fit_sdn, SdnModel};

use serde::Serialize;

use crate::error::Result;
use crate::eval::{evaluate, EvalReport};
use crate::fieldgen::FieldDataset;
use crate::pipeline::{fit_prepared, prepare, Setup};
use crate::seed::derive_seed;
use crate::sensing::{SensorTrajectory, Split};

/// Test MSEs of the three models fitted on one shared partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison {
    pub shred_mse: f64,
    pub sdn_mse: f64,
    pub linear_mse: f64,
}

pub struct ComparisonRuns {
    pub shred: EvalReport,
    pub sdn: EvalReport,
    pub linear: EvalReport,
}

impl ComparisonRuns {
    pub fn summary(&self) -> ModelComparison {
        ModelComparison {
            shred_mse: self.shred.mse,
            sdn_mse: self.sdn.mse,
            linear_mse: self.linear.mse,
        }
    }
}

/// Fits SHRED, an SDN with SHRED's decoder widths and training settings,
/// and a ridge model, all on the same windows and partition.
pub fn compare_models(
    field: &FieldDataset,
    traj: &SensorTrajectory,
    setup: &Setup,
    lambda: f64,
    lagged_linear: bool,
    seed: u64,
) -> Result<ComparisonRuns> {
    let prepared = prepare(field, traj, &setup.model, &setup.partition, seed)?;
    let test_raw = prepared.raw_split(Split::Test);
    let scaler = prepared.scaler.clone();

    let linear = fit_linear(&prepared.scaled.train, lambda, lagged_linear)?;
    let linear_eval = evaluate(&linear, &test_raw, &scaler)?;

    let (sdn, _) = fit_sdn(
        &prepared.scaled.train,
        &prepared.scaled.val,
        &setup.model.decoder_widths,
        setup.model.final_activation,
        &crate::optimizer::TrainConfig {
            seed: derive_seed(seed, "train", 0),
            ..setup.train.clone()
        },
        derive_seed(seed, "init", 0),
    )?;
    let sdn_eval = evaluate(&sdn, &test_raw, &scaler)?;

    let shred = fit_prepared(prepared, setup, seed, 0)?;
    Ok(ComparisonRuns {
        shred: shred.eval,
        sdn: sdn_eval,
        linear: linear_eval,
    })
}
