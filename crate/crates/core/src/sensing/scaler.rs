use serde::{Deserialize, Serialize};

use super::WindowSample;
use crate::error::{Result, ShredError};

/// Per-node and per-input-channel min-max scaling fitted on training windows.
///
/// A constant entry (`max == min`) maps to `v - min + 0.5`, so it is still
/// invertible. Out-of-range values are not clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub target_min: Vec<f64>,
    pub target_max: Vec<f64>,
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
}

#[inline]
fn forward(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        v - lo + 0.5
    }
}

#[inline]
fn backward(s: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        s * (hi - lo) + lo
    } else {
        s - 0.5 + lo
    }
}

fn min_max<'a>(width: usize, rows: impl Iterator<Item = &'a [f64]>) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for row in rows {
        for ((l, h), &v) in lo.iter_mut().zip(hi.iter_mut()).zip(row) {
            *l = l.min(v);
            *h = h.max(v);
        }
    }
    (lo, hi)
}

impl Scaler {
    pub fn fit(train: &[WindowSample]) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| ShredError::arg("cannot fit a scaler on an empty training set"))?;
        let (target_min, target_max) = min_max(first.target.len(), train.iter().map(|s| s.target.as_slice()));
        let (input_min, input_max) = min_max(first.width, train.iter().flat_map(|s| s.inputs.chunks_exact(s.width)));
        Ok(Scaler {
            target_min,
            target_max,
            input_min,
            input_max,
        })
    }

    pub fn nodes(&self) -> usize {
        self.target_min.len()
    }

    pub fn channels(&self) -> usize {
        self.input_min.len()
    }

    pub fn scale_inputs(&self, inputs: &[f64]) -> Vec<f64> {
        let d = self.channels();
        inputs
            .iter()
            .enumerate()
            .map(|(i, &v)| forward(v, self.input_min[i % d], self.input_max[i % d]))
            .collect()
    }

    pub fn scale_target(&self, target: &[f64]) -> Vec<f64> {
        target
            .iter()
            .enumerate()
            .map(|(i, &v)| forward(v, self.target_min[i], self.target_max[i]))
            .collect()
    }

    pub fn invert_target(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .enumerate()
            .map(|(i, &s)| backward(s, self.target_min[i], self.target_max[i]))
            .collect()
    }

    pub fn invert_inputs(&self, scaled: &[f64]) -> Vec<f64> {
        let d = self.channels();
        scaled
            .iter()
            .enumerate()
            .map(|(i, &s)| backward(s, self.input_min[i % d], self.input_max[i % d]))
            .collect()
    }

    pub fn apply(&self, sample: &WindowSample) -> Result<WindowSample> {
        if sample.width != self.channels() || sample.target.len() != self.nodes() {
            return Err(ShredError::Shape(format!(
                "window (width {}, n {}) does not match scaler (width {}, n {})",
                sample.width,
                sample.target.len(),
                self.channels(),
                self.nodes()
            )));
        }
        Ok(WindowSample {
            inputs: self.scale_inputs(&sample.inputs),
            target: self.scale_target(&sample.target),
            ..sample.clone()
        })
    }

    pub fn apply_all(&self, samples: &[WindowSample]) -> Result<Vec<WindowSample>> {
        samples.iter().map(|s| self.apply(s)).collect()
    }
}
