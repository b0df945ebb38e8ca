use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ShredError};
use crate::fieldgen::FieldDataset;
use crate::pipeline::{fit_shred, Setup};
use crate::sensing::{PartitionMode, SensorTrajectory};

/// One trained model per route combination and partition mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteCell {
    /// Route names joined by `+`.
    pub route: String,
    pub partition: PartitionMode,
    pub mse: Option<f64>,
    pub error: Option<String>,
}

/// Each combination lists indices into `routes`; a combination of several
/// routes is one model with that many parallel sensors. Failures are
/// recorded per cell.
pub fn route_table(
    field: &FieldDataset,
    routes: &[(String, SensorTrajectory)],
    combinations: &[Vec<usize>],
    modes: &[PartitionMode],
    setup: &Setup,
    seed: u64,
) -> Result<Vec<RouteCell>> {
    if combinations.is_empty() || modes.is_empty() {
        return Err(ShredError::arg(
            "route table needs at least one combination and one partition mode",
        ));
    }
    for combo in combinations {
        if combo.is_empty() || combo.iter().any(|&i| i >= routes.len()) {
            return Err(ShredError::arg(format!(
                "route combination {combo:?} does not index the {} routes",
                routes.len()
            )));
        }
    }
    let jobs: Vec<(&Vec<usize>, PartitionMode)> = combinations
        .iter()
        .flat_map(|c| modes.iter().map(move |&m| (c, m)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(combo, mode)| {
            let route = combo
                .iter()
                .map(|&i| routes[i].0.as_str())
                .collect::<Vec<_>>()
                .join("+");
            let outcome = (|| {
                let parts: Vec<&SensorTrajectory> = combo.iter().map(|&i| &routes[i].1).collect();
                let traj = SensorTrajectory::combine(&parts)?;
                let mut cell_setup = setup.clone();
                cell_setup.partition.mode = mode;
                fit_shred(field, &traj, &cell_setup, seed, 0)
            })();
            match outcome {
                Ok(run) => {
                    log::info!("route {route} ({mode}): test mse {:.3e}", run.eval.mse);
                    RouteCell {
                        route,
                        partition: mode,
                        mse: Some(run.eval.mse),
                        error: None,
                    }
                }
                Err(e) => {
                    log::warn!("route {route} ({mode}) failed: {e}");
                    RouteCell {
                        route,
                        partition: mode,
                        mse: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(cells)
}

/// `route_table.csv`: `route,partition,mse,error`.
pub fn write_route_table_csv(cells: &[RouteCell], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["route", "partition", "mse", "error"])?;
    for c in cells {
        w.write_record([
            c.route.clone(),
            c.partition.to_string(),
            c.mse.map(|m| m.to_string()).unwrap_or_default(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
