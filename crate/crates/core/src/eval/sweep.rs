use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ShredError};
use crate::fieldgen::FieldDataset;
use crate::linalg::singular_values;
use crate::pipeline::{fit_prepared, prepare, Setup};
use crate::sensing::{SensorTrajectory, Split};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub hidden: usize,
    /// Test MSE of each successful repeat.
    pub mses: Vec<f64>,
    /// Mean over successful repeats; NaN when every repeat failed.
    pub mean_mse: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    /// Singular values of the training snapshot matrix, descending.
    pub singular_values: Vec<f64>,
}

impl SweepReport {
    pub fn cell(&self, hidden: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.hidden == hidden)
    }

    /// `sweep.csv`: `h,mse,repeats`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["h", "mse", "repeats"])?;
        for c in &self.cells {
            w.write_record([c.hidden.to_string(), c.mean_mse.to_string(), c.mses.len().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_spectrum_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "singular_value"])?;
        for (i, s) in self.singular_values.iter().enumerate() {
            w.write_record([(i + 1).to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains `repeats` models for each hidden width on one shared partition
/// and reports the mean test MSE per width. Cells train concurrently.
pub fn hidden_size_sweep(
    field: &FieldDataset,
    traj: &SensorTrajectory,
    widths: &[usize],
    repeats: usize,
    setup: &Setup,
    seed: u64,
) -> Result<SweepReport> {
    if widths.is_empty() || repeats == 0 {
        return Err(ShredError::arg("sweep needs at least one width and one repeat"));
    }
    if widths.contains(&0) {
        return Err(ShredError::arg("hidden widths must be positive"));
    }
    let prepared = prepare(field, traj, &setup.model, &setup.partition, seed)?;
    let train_times = prepared.partition.times(Split::Train);
    let spectrum = singular_values(field.n(), train_times.len(), &field.select_columns(train_times));

    let jobs: Vec<(usize, usize)> = widths.iter().flat_map(|&h| (0..repeats).map(move |r| (h, r))).collect();
    let outcomes: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(h, r)| {
            let mut cell_setup = setup.clone();
            cell_setup.model.hidden = h;
            let run = fit_prepared(prepared.clone(), &cell_setup, seed, r as u64)?;
            log::info!("sweep h={h} repeat={r}: test mse {:.3e}", run.eval.mse);
            Ok(run.eval.mse)
        })
        .collect();

    let cells = widths
        .iter()
        .zip(outcomes.chunks(repeats))
        .map(|(&hidden, chunk)| {
            let mut mses = Vec::new();
            let mut failures = Vec::new();
            for o in chunk {
                match o {
                    Ok(m) => mses.push(*m),
                    Err(e) => failures.push(e.to_string()),
                }
            }
            let mean_mse = if mses.is_empty() {
                f64::NAN
            } else {
                mses.iter().sum::<f64>() / mses.len() as f64
            };
            SweepCell {
                hidden,
                mses,
                mean_mse,
                failures,
            }
        })
        .collect();
    Ok(SweepReport {
        cells,
        singular_values: spectrum,
    })
}
