use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::decoder::{decoder_backward, decoder_forward, DecoderParams};
use super::lstm::{lstm_backward, lstm_sequence, LstmLayer, LstmParams, GATES};
use super::params::{Dense, ParamArrays};
use crate::container::{read_arrays, take_array, write_arrays, NamedArray};
use crate::error::{Result, ShredError};
use crate::linalg::Mat;
use crate::seed;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"SHRP1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Mean over nodes of the squared error.
    #[default]
    Mse,
    /// Euclidean norm of the error (not squared).
    L2norm,
}

impl LossKind {
    /// Loss value and its gradient with respect to the prediction.
    pub fn evaluate(self, prediction: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        let err: Vec<f64> = prediction.iter().zip(target).map(|(p, t)| p - t).collect();
        let sq: f64 = err.iter().map(|e| e * e).sum();
        match self {
            LossKind::Mse => {
                let n = err.len() as f64;
                (sq / n, err.iter().map(|e| 2.0 * e / n).collect())
            }
            LossKind::L2norm => {
                let norm = sq.sqrt();
                let grad = if norm > 0.0 {
                    err.iter().map(|e| e / norm).collect()
                } else {
                    vec![0.0; err.len()]
                };
                (norm, grad)
            }
        }
    }
}

/// Architecture of a SHRED network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: usize,
    pub input: usize,
    pub output: usize,
    pub layers: usize,
    pub decoder_widths: Vec<usize>,
    pub final_activation: bool,
}

/// LSTM encoder followed by the shallow decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ShredParams {
    pub lstm: LstmParams,
    pub decoder: DecoderParams,
}

/// Gradient of a scalar loss, shaped like [`ShredParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub ShredParams);

impl ShredParams {
    pub fn zeros(arch: &Architecture) -> Self {
        ShredParams {
            lstm: LstmParams::zeros(arch.hidden, arch.input, arch.layers),
            decoder: DecoderParams::zeros(arch.hidden, &arch.decoder_widths, arch.output, arch.final_activation),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden: self.lstm.hidden(),
            input: self.lstm.input(),
            output: self.decoder.output(),
            layers: self.lstm.layers.len(),
            decoder_widths: self.decoder.hidden_widths(),
            final_activation: self.decoder.final_activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        ShredParams::zeros(&self.architecture())
    }

    pub fn to_named_arrays(&self) -> Vec<NamedArray> {
        let mut out = Vec::new();
        for (l, layer) in self.lstm.layers.iter().enumerate() {
            for (g, name) in GATES.iter().enumerate() {
                out.push(NamedArray::new(
                    format!("lstm.{l}.W_{name}"),
                    vec![layer.w[g].rows, layer.w[g].cols],
                    layer.w[g].data.clone(),
                ));
            }
            for (g, name) in GATES.iter().enumerate() {
                out.push(NamedArray::new(
                    format!("lstm.{l}.b_{name}"),
                    vec![layer.b[g].len()],
                    layer.b[g].clone(),
                ));
            }
        }
        for (l, layer) in self.decoder.layers.iter().enumerate() {
            out.push(NamedArray::new(
                format!("decoder.{l}.W"),
                vec![layer.w.rows, layer.w.cols],
                layer.w.data.clone(),
            ));
            out.push(NamedArray::new(
                format!("decoder.{l}.b"),
                vec![layer.b.len()],
                layer.b.clone(),
            ));
        }
        out
    }

    pub fn from_named_arrays(mut arrays: Vec<NamedArray>, arch: &Architecture) -> Result<Self> {
        let mut params = ShredParams::zeros(arch);
        for (l, layer) in params.lstm.layers.iter_mut().enumerate() {
            let (h, zw) = (layer.hidden(), layer.w[0].cols);
            for (g, name) in GATES.iter().enumerate() {
                layer.w[g].data = take_array(&mut arrays, &format!("lstm.{l}.W_{name}"), &[h, zw])?;
                layer.b[g] = take_array(&mut arrays, &format!("lstm.{l}.b_{name}"), &[h])?;
            }
        }
        for (l, layer) in params.decoder.layers.iter_mut().enumerate() {
            let (rows, cols) = (layer.w.rows, layer.w.cols);
            layer.w.data = take_array(&mut arrays, &format!("decoder.{l}.W"), &[rows, cols])?;
            layer.b = take_array(&mut arrays, &format!("decoder.{l}.b"), &[rows])?;
        }
        if let Some(extra) = arrays.first() {
            return Err(ShredError::Format(format!("unexpected array `{}`", extra.name)));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_arrays(&mut w, CHECKPOINT_MAGIC, &self.to_named_arrays())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, arch: &Architecture) -> Result<Self> {
        let arrays = read_arrays(&mut BufReader::new(File::open(path)?), CHECKPOINT_MAGIC)?;
        ShredParams::from_named_arrays(arrays, arch)
    }
}

fn lstm_layer_arrays(layer: &LstmLayer) -> impl Iterator<Item = &[f64]> {
    layer
        .w
        .iter()
        .map(|m| m.data.as_slice())
        .chain(layer.b.iter().map(Vec::as_slice))
}

impl ParamArrays for ShredParams {
    fn array_names(&self) -> Vec<String> {
        self.to_named_arrays().into_iter().map(|a| a.name).collect()
    }

    fn arrays(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.lstm.layers.iter().flat_map(lstm_layer_arrays).collect();
        for layer in &self.decoder.layers {
            out.push(&layer.w.data);
            out.push(&layer.b);
        }
        out
    }

    fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.lstm.layers {
            let LstmLayer { w, b } = layer;
            out.extend(w.iter_mut().map(|m: &mut Mat| m.data.as_mut_slice()));
            out.extend(b.iter_mut().map(Vec::as_mut_slice));
        }
        for layer in &mut self.decoder.layers {
            let Dense { w, b } = layer;
            out.push(&mut w.data);
            out.push(b);
        }
        out
    }
}

impl ParamArrays for GradientSet {
    fn array_names(&self) -> Vec<String> {
        self.0.array_names()
    }
    fn arrays(&self) -> Vec<&[f64]> {
        self.0.arrays()
    }
    fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        self.0.arrays_mut()
    }
}

/// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, where
/// an LSTM gate's fan-in is `hidden + input`.
pub fn init_params(arch: &Architecture, seed: u64) -> ShredParams {
    let mut rng = seed::rng(seed);
    let lstm = LstmParams::init(arch.hidden, arch.input, arch.layers, &mut rng);
    let decoder = DecoderParams::init(
        arch.hidden,
        &arch.decoder_widths,
        arch.output,
        arch.final_activation,
        &mut rng,
    );
    ShredParams { lstm, decoder }
}

/// Reconstruction `F(G(y))` for a `steps × input` window.
pub fn shred_forward(params: &ShredParams, inputs: &[f64], steps: usize) -> Vec<f64> {
    let trace = lstm_sequence(&params.lstm, inputs, steps);
    decoder_forward(&params.decoder, trace.final_hidden()).into_output()
}

/// Loss of one window and its exact gradient with respect to every
/// parameter, by backpropagation through time.
pub fn shred_backward(
    params: &ShredParams,
    inputs: &[f64],
    steps: usize,
    target: &[f64],
    loss: LossKind,
) -> Result<(f64, GradientSet)> {
    let mut grads = params.zeros_like();
    let value = accumulate_gradient(params, inputs, steps, target, loss, 1.0, &mut grads);
    if let Some(array) = grads.first_non_finite() {
        return Err(ShredError::NumericFailure { array });
    }
    Ok((value, GradientSet(grads)))
}

/// Adds `weight * dL/dθ` into `grads` and returns the unweighted loss.
pub(crate) fn accumulate_gradient(
    params: &ShredParams,
    inputs: &[f64],
    steps: usize,
    target: &[f64],
    loss: LossKind,
    weight: f64,
    grads: &mut ShredParams,
) -> f64 {
    assert_eq!(target.len(), params.decoder.output(), "target width");
    let lstm_trace = lstm_sequence(&params.lstm, inputs, steps);
    let dec_trace = decoder_forward(&params.decoder, lstm_trace.final_hidden());
    let (value, mut d_out) = loss.evaluate(dec_trace.output(), target);
    if weight != 1.0 {
        d_out.iter_mut().for_each(|v| *v *= weight);
    }
    let d_hidden = decoder_backward(&params.decoder, &dec_trace, &d_out, &mut grads.decoder);
    lstm_backward(&params.lstm, &lstm_trace, &d_hidden, &mut grads.lstm);
    value
}
