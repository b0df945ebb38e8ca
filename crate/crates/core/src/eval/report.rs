use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::Reconstructor;
use crate::error::{Result, ShredError};
use crate::sensing::{Scaler, WindowSample};

pub const HISTOGRAM_BINS: usize = 101;

/// Uniform bins over `mean ± 4 std` of the pooled errors. Errors outside
/// the span are counted in the end bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], mean: f64, std: f64) -> Self {
        let half = if std > 0.0 { 4.0 * std } else { 1.0 };
        let lo = mean - half;
        let width = 2.0 * half / HISTOGRAM_BINS as f64;
        let edges = (0..=HISTOGRAM_BINS).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; HISTOGRAM_BINS];
        for &v in values {
            let bin = ((v - lo) / width).floor();
            let bin = if bin < 0.0 {
                0
            } else {
                (bin as usize).min(HISTOGRAM_BINS - 1)
            };
            counts[bin] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bin_lo", "bin_hi", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([self.edges[i].to_string(), self.edges[i + 1].to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reconstruction errors on a test set, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub t_index: Vec<usize>,
    pub per_sample_mse: Vec<f64>,
    /// Mean over nodes and samples of the squared error.
    pub mse: f64,
    /// `mse` divided by the mean per-node variance of the test targets.
    pub nmse: f64,
    pub target_variance: f64,
    pub error_mean: f64,
    pub error_variance: f64,
    pub histogram: Histogram,
    /// Pooled pointwise errors `x̂ − x`, sample by sample.
    pub errors: Vec<f64>,
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Mean over nodes of each node's variance across samples.
fn mean_node_variance(targets: &[Vec<f64>]) -> f64 {
    let n = targets[0].len();
    let count = targets.len() as f64;
    (0..n)
        .map(|i| {
            let mean = targets.iter().map(|t| t[i]).sum::<f64>() / count;
            targets.iter().map(|t| (t[i] - mean).powi(2)).sum::<f64>() / count
        })
        .sum::<f64>()
        / n as f64
}

impl EvalReport {
    pub fn from_predictions(predictions: &[Vec<f64>], targets: &[Vec<f64>], t_index: Vec<usize>) -> Result<Self> {
        if predictions.is_empty() || predictions.len() != targets.len() {
            return Err(ShredError::Shape(format!(
                "{} predictions for {} targets",
                predictions.len(),
                targets.len()
            )));
        }
        let mut errors = Vec::with_capacity(predictions.len() * predictions[0].len());
        let mut per_sample_mse = Vec::with_capacity(predictions.len());
        for (p, t) in predictions.iter().zip(targets) {
            if p.len() != t.len() || t.len() != targets[0].len() {
                return Err(ShredError::Shape("predictions and targets must share one width".into()));
            }
            let start = errors.len();
            errors.extend(p.iter().zip(t).map(|(a, b)| a - b));
            per_sample_mse.push(errors[start..].iter().map(|e| e * e).sum::<f64>() / p.len() as f64);
        }
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
        let target_variance = mean_node_variance(targets);
        Ok(Self::assemble(t_index, per_sample_mse, mse, target_variance, errors))
    }

    fn assemble(
        t_index: Vec<usize>,
        per_sample_mse: Vec<f64>,
        mse: f64,
        target_variance: f64,
        errors: Vec<f64>,
    ) -> Self {
        let (error_mean, error_variance) = mean_var(&errors);
        let histogram = Histogram::build(&errors, error_mean, error_variance.sqrt());
        let nmse = if target_variance > 0.0 {
            mse / target_variance
        } else if mse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        EvalReport {
            t_index,
            per_sample_mse,
            mse,
            nmse,
            target_variance,
            error_mean,
            error_variance,
            histogram,
            errors,
        }
    }

    /// Pools several reports (for example an ensemble) into one error
    /// distribution. The pooled NMSE uses the mean target variance.
    pub fn pool(reports: &[EvalReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(ShredError::arg("nothing to pool"));
        }
        let errors: Vec<f64> = reports.iter().flat_map(|r| r.errors.iter().copied()).collect();
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
        let target_variance = reports.iter().map(|r| r.target_variance).sum::<f64>() / reports.len() as f64;
        Ok(Self::assemble(
            reports.iter().flat_map(|r| r.t_index.iter().copied()).collect(),
            reports.iter().flat_map(|r| r.per_sample_mse.iter().copied()).collect(),
            mse,
            target_variance,
            errors,
        ))
    }

    pub fn sample_count(&self) -> usize {
        self.per_sample_mse.len()
    }

    /// `evalreport.csv`: per-sample MSE.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_index", "mse"])?;
        for (t, m) in self.t_index.iter().zip(&self.per_sample_mse) {
            w.write_record([t.to_string(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reconstructions and targets of raw windows, both in physical units.
pub fn predict_physical<M: Reconstructor + Sync>(
    model: &M,
    windows: &[WindowSample],
    scaler: &Scaler,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let scaled = scaler.apply_all(windows)?;
    let predictions: Vec<Vec<f64>> = scaled
        .par_iter()
        .map(|w| scaler.invert_target(&model.reconstruct(w)))
        .collect();
    if let Some(p) = predictions.iter().find(|p| p.len() != scaler.nodes()) {
        return Err(ShredError::Shape(format!(
            "model produced {} values for {} nodes",
            p.len(),
            scaler.nodes()
        )));
    }
    let targets = windows.iter().map(|w| w.target.clone()).collect();
    Ok((predictions, targets))
}

/// Scales the inputs, reconstructs, inverts the scaling and compares with
/// the raw targets.
pub fn evaluate<M: Reconstructor + Sync>(model: &M, windows: &[WindowSample], scaler: &Scaler) -> Result<EvalReport> {
    if windows.is_empty() {
        return Err(ShredError::arg("test split is empty"));
    }
    let (predictions, targets) = predict_physical(model, windows, scaler)?;
    EvalReport::from_predictions(&predictions, &targets, windows.iter().map(|w| w.t_index).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionComparison {
    pub mean_a: f64,
    pub variance_a: f64,
    pub mean_b: f64,
    pub variance_b: f64,
    /// `variance_a / variance_b`.
    pub variance_ratio: f64,
}

pub fn compare_distributions(a: &EvalReport, b: &EvalReport) -> DistributionComparison {
    DistributionComparison {
        mean_a: a.error_mean,
        variance_a: a.error_variance,
        mean_b: b.error_mean,
        variance_b: b.error_variance,
        variance_ratio: a.error_variance / b.error_variance,
    }
}
