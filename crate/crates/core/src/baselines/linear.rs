use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::container::{read_arrays, take_array, write_arrays, NamedArray};
use crate::error::{Result, ShredError};
use crate::eval::Reconstructor;
use crate::linalg::Mat;
use crate::sensing::WindowSample;

pub const LINEAR_MAGIC: &[u8; 5] = b"SHRL1";

/// Relative Cholesky pivot below which the normal equations count as
/// singular.
const PIVOT_FLOOR: f64 = 1e-7;

/// Affine map `x = W y + b` from the current measurement (or the whole
/// flattened window when `lagged`) to the state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Mat,
    pub b: Vec<f64>,
    pub lambda: f64,
    pub lagged: bool,
}

impl LinearModel {
    pub fn features<'a>(&self, window: &'a WindowSample) -> &'a [f64] {
        features(window, self.lagged)
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.w.cols {
            return Err(ShredError::Shape(format!(
                "linear model expects {} features, got {}",
                self.w.cols,
                features.len()
            )));
        }
        let mut out = self.b.clone();
        self.w.matvec_acc(features, &mut out);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let arrays = [
            NamedArray::new("W", vec![self.w.rows, self.w.cols], self.w.data.clone()),
            NamedArray::new("b", vec![self.b.len()], self.b.clone()),
            NamedArray::new("lambda", vec![1], vec![self.lambda]),
            NamedArray::new("lag", vec![1], vec![if self.lagged { 1.0 } else { 0.0 }]),
        ];
        let mut w = BufWriter::new(File::create(path)?);
        write_arrays(&mut w, LINEAR_MAGIC, &arrays)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut arrays = read_arrays(&mut BufReader::new(File::open(path)?), LINEAR_MAGIC)?;
        let shape = arrays
            .iter()
            .find(|a| a.name == "W")
            .map(|a| a.shape.clone())
            .ok_or_else(|| ShredError::Format("missing array `W`".into()))?;
        if shape.len() != 2 {
            return Err(ShredError::Format("`W` must be a matrix".into()));
        }
        let w = Mat::from_vec(shape[0], shape[1], take_array(&mut arrays, "W", &shape)?);
        let b = take_array(&mut arrays, "b", &[shape[0]])?;
        let lambda = take_array(&mut arrays, "lambda", &[1])?[0];
        let lagged = take_array(&mut arrays, "lag", &[1])?[0] != 0.0;
        Ok(LinearModel { w, b, lambda, lagged })
    }
}

impl Reconstructor for LinearModel {
    fn reconstruct(&self, window: &WindowSample) -> Vec<f64> {
        self.predict(self.features(window))
            .expect("window width matches the fitted model")
    }
}

fn features(window: &WindowSample, lagged: bool) -> &[f64] {
    if lagged {
        &window.inputs
    } else {
        window.last_row()
    }
}

/// Ridge regression with an unpenalized intercept:
/// minimizes `Σ ‖x − (W y + b)‖² + λ ‖W‖²_F` through the centered normal
/// equations and a Cholesky solve.
pub fn fit_linear(train: &[WindowSample], lambda: f64, lagged: bool) -> Result<LinearModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ShredError::arg(format!(
            "ridge parameter must be finite and >= 0, got {lambda}"
        )));
    }
    let first = train.first().ok_or_else(|| ShredError::arg("no training pairs"))?;
    let d = features(first, lagged).len();
    let n = first.target.len();
    if train.len() < d + 1 {
        return Err(ShredError::arg(format!(
            "{} training pairs for {d} features; need at least {}",
            train.len(),
            d + 1
        )));
    }
    if train
        .iter()
        .any(|w| features(w, lagged).len() != d || w.target.len() != n)
    {
        return Err(ShredError::Shape("training pairs have inconsistent widths".into()));
    }

    let count = train.len() as f64;
    let mut y_mean = vec![0.0; d];
    let mut x_mean = vec![0.0; n];
    for w in train {
        y_mean
            .iter_mut()
            .zip(features(w, lagged))
            .for_each(|(m, v)| *m += v / count);
        x_mean.iter_mut().zip(&w.target).for_each(|(m, v)| *m += v / count);
    }
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut cross = DMatrix::<f64>::zeros(d, n);
    let mut yc = vec![0.0; d];
    for w in train {
        yc.iter_mut()
            .zip(features(w, lagged))
            .zip(&y_mean)
            .for_each(|((c, v), m)| *c = v - m);
        for i in 0..d {
            for j in 0..d {
                gram[(i, j)] += yc[i] * yc[j];
            }
            for (k, (x, m)) in w.target.iter().zip(&x_mean).enumerate() {
                cross[(i, k)] += yc[i] * (x - m);
            }
        }
    }
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let scale = (0..d).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let singular = || {
        ShredError::Singular(format!(
            "normal equations are singular at lambda = {lambda}; use a positive ridge parameter"
        ))
    };
    if scale <= 0.0 {
        return Err(singular());
    }
    let chol = gram.cholesky().ok_or_else(singular)?;
    let min_pivot = chol.l_dirty().diagonal().iter().copied().fold(f64::INFINITY, f64::min);
    if min_pivot < PIVOT_FLOOR * scale.sqrt() {
        return Err(singular());
    }
    // gram · Wᵀ = cross
    let wt = chol.solve(&cross);
    let mut w = Mat::zeros(n, d);
    for k in 0..n {
        for i in 0..d {
            w.set(k, i, wt[(i, k)]);
        }
    }
    let mut b = x_mean;
    for (k, bk) in b.iter_mut().enumerate() {
        *bk -= (0..d).map(|i| w.get(k, i) * y_mean[i]).sum::<f64>();
    }
    Ok(LinearModel { w, b, lambda, lagged })
}
