use std::path::Path;

use serde::Serialize;

use crate::error::{Result, ShredError};

/// Box-plot summary with linearly interpolated quartiles and whiskers at
/// the most extreme values within 1.5 IQR of the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub count: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn ensemble_mse_distribution(values: &[f64]) -> Result<BoxStats> {
    if values.len() < 4 {
        return Err(ShredError::arg(format!(
            "box statistics need at least 4 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ShredError::arg("box statistics need finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |v: &&f64| **v >= lo_fence && **v <= hi_fence;
    let whisker_low = *sorted.iter().find(inside).expect("median lies inside the fences");
    let whisker_high = *sorted.iter().rev().find(inside).expect("median lies inside the fences");
    let outliers = sorted
        .iter()
        .copied()
        .filter(|v| *v < lo_fence || *v > hi_fence)
        .collect();
    Ok(BoxStats {
        count: sorted.len(),
        q1,
        median,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    })
}

impl BoxStats {
    /// Writes labelled rows `label,count,q1,median,q3,whisker_low,whisker_high,outliers`.
    pub fn write_csv(rows: &[(String, BoxStats)], path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "label",
            "count",
            "q1",
            "median",
            "q3",
            "whisker_low",
            "whisker_high",
            "outliers",
        ])?;
        for (label, b) in rows {
            let outliers: Vec<String> = b.outliers.iter().map(f64::to_string).collect();
            w.write_record([
                label.clone(),
                b.count.to_string(),
                b.q1.to_string(),
                b.median.to_string(),
                b.q3.to_string(),
                b.whisker_low.to_string(),
                b.whisker_high.to_string(),
                outliers.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
