//! Test-set metrics in physical units and the experiment protocols built
//! on them.

mod boxplot;
mod decoupled;
mod ppm;
mod report;
mod routes;
mod sweep;

pub use boxplot::{ensemble_mse_distribution, BoxStats};
pub use decoupled::{decoupled_sanity, DecoupledReport};
pub use ppm::{colormap, write_triptych, TriptychLayout};
pub use report::{
    compare_distributions, evaluate, predict_physical, DistributionComparison, EvalReport, Histogram, HISTOGRAM_BINS,
};
pub use routes::{route_table, write_route_table_csv, RouteCell};
pub use sweep::{hidden_size_sweep, SweepCell, SweepReport};

use crate::nncore::{shred_forward, ShredParams};
use crate::sensing::WindowSample;

/// Maps a scaled window to a scaled full-state reconstruction.
pub trait Reconstructor {
    fn reconstruct(&self, window: &WindowSample) -> Vec<f64>;
}

impl Reconstructor for ShredParams {
    fn reconstruct(&self, window: &WindowSample) -> Vec<f64> {
        shred_forward(self, &window.inputs, window.steps)
    }
}

impl<F: Fn(&WindowSample) -> Vec<f64>> Reconstructor for F {
    fn reconstruct(&self, window: &WindowSample) -> Vec<f64> {
        self(window)
    }
}
