//! Shared fit-and-evaluate path used by the ensemble, sweep, route-table,
//! baseline and independence experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShredError};
use crate::eval::{evaluate, EvalReport};
use crate::fieldgen::FieldDataset;
use crate::nncore::{init_params, Architecture, LossKind, ShredParams};
use crate::optimizer::{train, TrainConfig, TrainReport};
use crate::seed::derive_seed;
use crate::sensing::{
    assemble_windows, extrapolation_warning, partition_windows, Partition, PartitionMode, Scaler, SensorTrajectory,
    Splits, WindowSample,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    /// Window length K.
    pub lag: usize,
    pub hidden: usize,
    pub layers: usize,
    pub decoder_widths: Vec<usize>,
    pub coord_channels: bool,
    /// ReLU on the decoder output layer.
    pub final_activation: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            lag: 50,
            hidden: 64,
            layers: 1,
            decoder_widths: vec![350, 400],
            coord_channels: false,
            final_activation: false,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lag == 0 {
            return Err(ShredError::spec("model.lag", "must be >= 1"));
        }
        if self.hidden == 0 {
            return Err(ShredError::spec("model.hidden", "must be >= 1"));
        }
        if self.layers == 0 {
            return Err(ShredError::spec("model.layers", "must be >= 1"));
        }
        if self.decoder_widths.contains(&0) {
            return Err(ShredError::spec("model.decoder_widths", "widths must be positive"));
        }
        Ok(())
    }

    pub fn architecture(&self, input: usize, output: usize) -> Architecture {
        Architecture {
            hidden: self.hidden,
            input,
            output,
            layers: self.layers,
            decoder_widths: self.decoder_widths.clone(),
            final_activation: self.final_activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub fractions: [f64; 3],
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec {
            mode: PartitionMode::Random,
            fractions: [0.8, 0.1, 0.1],
        }
    }
}

/// Everything needed to train one model on one trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Setup {
    pub model: ModelSpec,
    pub partition: PartitionSpec,
    pub train: TrainConfig,
}

impl Setup {
    pub fn loss(&self) -> LossKind {
        self.train.loss
    }
}

/// Windows cut, partitioned and scaled.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub windows: Vec<WindowSample>,
    pub partition: Partition,
    pub scaler: Scaler,
    /// Scaled splits.
    pub scaled: Splits,
}

impl Prepared {
    pub fn raw_split(&self, split: crate::sensing::Split) -> Vec<WindowSample> {
        self.partition.select(&self.windows, split)
    }
}

/// Window assembly, partition and scaler fit. The partition seed is
/// `derive_seed(seed, "partition", 0)`.
pub fn prepare(
    field: &FieldDataset,
    traj: &SensorTrajectory,
    model: &ModelSpec,
    partition: &PartitionSpec,
    seed: u64,
) -> Result<Prepared> {
    model.validate()?;
    if let Some(msg) = extrapolation_warning(partition.mode, traj) {
        log::warn!("{msg}");
    }
    let windows = assemble_windows(field, traj, model.lag, model.coord_channels)?;
    let partition = partition_windows(
        &windows,
        partition.mode,
        partition.fractions,
        derive_seed(seed, "partition", 0),
    )?;
    let raw = partition.apply(&windows);
    let scaler = Scaler::fit(&raw.train)?;
    let scaled = Splits {
        train: scaler.apply_all(&raw.train)?,
        val: scaler.apply_all(&raw.val)?,
        test: scaler.apply_all(&raw.test)?,
    };
    Ok(Prepared {
        windows,
        partition,
        scaler,
        scaled,
    })
}

#[derive(Debug, Clone)]
pub struct ShredRun {
    pub params: ShredParams,
    pub report: TrainReport,
    pub eval: EvalReport,
    pub prepared: Prepared,
}

/// Trains and tests one SHRED model. `replicate` varies the weight
/// initialization and minibatch order while the partition stays fixed by
/// `seed`.
pub fn fit_shred(
    field: &FieldDataset,
    traj: &SensorTrajectory,
    setup: &Setup,
    seed: u64,
    replicate: u64,
) -> Result<ShredRun> {
    let prepared = prepare(field, traj, &setup.model, &setup.partition, seed)?;
    fit_prepared(prepared, setup, seed, replicate)
}

pub fn fit_prepared(prepared: Prepared, setup: &Setup, seed: u64, replicate: u64) -> Result<ShredRun> {
    let width = prepared.scaler.channels();
    let arch = setup.model.architecture(width, prepared.scaler.nodes());
    let init = init_params(&arch, derive_seed(seed, "init", replicate));
    let config = TrainConfig {
        seed: derive_seed(seed, "train", replicate),
        ..setup.train.clone()
    };
    let (params, report) = train(&prepared.scaled.train, &prepared.scaled.val, init, &config)?;
    let test_raw = prepared.raw_split(crate::sensing::Split::Test);
    let eval = evaluate(&params, &test_raw, &prepared.scaler)?;
    Ok(ShredRun {
        params,
        report,
        eval,
        prepared,
    })
}
