use serde::Serialize;

use super::report::{predict_physical, EvalReport};
use crate::error::{Result, ShredError};
use crate::fieldgen::{in_left_half, FieldDataset};
use crate::pipeline::{fit_shred, Setup};
use crate::sensing::{SensorTrajectory, Split};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoupledReport {
    /// Whether the sensor stays in the left half (first axis below len/2).
    pub observed_left: bool,
    pub observed_nmse: f64,
    pub unobserved_nmse: f64,
    pub overall_mse: f64,
    pub best_epoch: usize,
}

fn column_subset(rows: &[Vec<f64>], keep: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| keep.iter().map(|&i| r[i]).collect()).collect()
}

/// Trains on a field whose halves are independent with every sensor kept
/// in one half, then scores each half separately.
pub fn decoupled_sanity(
    field: &FieldDataset,
    traj: &SensorTrajectory,
    setup: &Setup,
    seed: u64,
) -> Result<DecoupledReport> {
    let shape = field.grid_shape();
    traj.check_against(field.n(), field.len())?;
    let observed_left = in_left_half(traj.at(0)[0], shape);
    if let Some(node) = traj.nodes().find(|&v| in_left_half(v, shape) != observed_left) {
        return Err(ShredError::arg(format!(
            "trajectory visits node {node} outside the {} half",
            if observed_left { "left" } else { "right" }
        )));
    }
    let run = fit_shred(field, traj, setup, seed, 0)?;
    let test = run.prepared.raw_split(Split::Test);
    let (pred, target) = predict_physical(&run.params, &test, &run.prepared.scaler)?;
    let t_index: Vec<usize> = test.iter().map(|w| w.t_index).collect();
    let (observed, unobserved): (Vec<usize>, Vec<usize>) =
        (0..field.n()).partition(|&i| in_left_half(i, shape) == observed_left);
    let score = |nodes: &[usize]| -> Result<f64> {
        let r = EvalReport::from_predictions(
            &column_subset(&pred, nodes),
            &column_subset(&target, nodes),
            t_index.clone(),
        )?;
        Ok(r.nmse)
    };
    Ok(DecoupledReport {
        observed_left,
        observed_nmse: score(&observed)?,
        unobserved_nmse: score(&unobserved)?,
        overall_mse: run.eval.mse,
        best_epoch: run.report.best_epoch,
    })
}
