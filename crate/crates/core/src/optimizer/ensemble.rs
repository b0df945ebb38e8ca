use rayon::prelude::*;

use super::train::TrainReport;
use crate::error::Result;
use crate::eval::EvalReport;
use crate::fieldgen::FieldDataset;
use crate::nncore::ShredParams;
use crate::pipeline::{fit_shred, Setup};
use crate::seed::derive_seed;
use crate::sensing::SensorTrajectory;

#[derive(Debug, Clone)]
pub struct MemberRun {
    pub params: ShredParams,
    pub report: TrainReport,
    pub eval: EvalReport,
}

#[derive(Debug)]
pub struct EnsembleMember {
    pub index: usize,
    /// `derive_seed(seed, "member", index)`; drives the member's trajectory,
    /// partition, initialization and minibatch order.
    pub seed: u64,
    pub outcome: Result<MemberRun>,
}

/// Trains `count` independent models concurrently. `trajectory` builds the
/// sensor path of a member from its seed. A failed member is recorded and
/// does not stop the others. Members come back in index order.
pub fn train_ensemble<F>(
    field: &FieldDataset,
    trajectory: F,
    count: usize,
    setup: &Setup,
    seed: u64,
) -> Vec<EnsembleMember>
where
    F: Fn(u64) -> Result<SensorTrajectory> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|index| {
            let member_seed = derive_seed(seed, "member", index as u64);
            let outcome = trajectory(member_seed).and_then(|traj| {
                let run = fit_shred(field, &traj, setup, member_seed, 0)?;
                log::info!("member {index}: test mse {:.3e}", run.eval.mse);
                Ok(MemberRun {
                    params: run.params,
                    report: run.report,
                    eval: run.eval,
                })
            });
            if let Err(e) = &outcome {
                log::warn!("member {index} failed: {e}");
            }
            EnsembleMember {
                index,
                seed: member_seed,
                outcome,
            }
        })
        .collect()
}
