use crate::error::Result;
use crate::eval::Reconstructor;
use crate::nncore::{decoder_backward, decoder_forward, DecoderParams, LossKind, ParamArrays};
use crate::optimizer::{train, TrainConfig, TrainReport, Trainable};
use crate::seed;
use crate::sensing::WindowSample;

/// Shallow decoder applied to the latest measurement row of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct SdnModel {
    pub decoder: DecoderParams,
}

impl SdnModel {
    pub fn init(input: usize, widths: &[usize], output: usize, final_activation: bool, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        SdnModel {
            decoder: DecoderParams::init(input, widths, output, final_activation, &mut rng),
        }
    }
}

impl Reconstructor for SdnModel {
    fn reconstruct(&self, window: &WindowSample) -> Vec<f64> {
        decoder_forward(&self.decoder, window.last_row()).into_output()
    }
}

impl ParamArrays for SdnModel {
    fn array_names(&self) -> Vec<String> {
        self.decoder.array_names()
    }
    fn arrays(&self) -> Vec<&[f64]> {
        self.decoder.arrays()
    }
    fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        self.decoder.arrays_mut()
    }
}

impl Trainable for SdnModel {
    fn accumulate(&self, window: &WindowSample, loss: LossKind, weight: f64, grads: &mut Self) -> f64 {
        let trace = decoder_forward(&self.decoder, window.last_row());
        let (value, mut d_out) = loss.evaluate(trace.output(), &window.target);
        d_out.iter_mut().for_each(|v| *v *= weight);
        decoder_backward(&self.decoder, &trace, &d_out, &mut grads.decoder);
        value
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero();
        z
    }

    fn io_widths(&self) -> (usize, usize) {
        (self.decoder.input(), self.decoder.output())
    }
}

/// Trains an SDN on scaled windows with the same trainer as SHRED.
pub fn fit_sdn(
    train_set: &[WindowSample],
    val_set: &[WindowSample],
    widths: &[usize],
    final_activation: bool,
    config: &TrainConfig,
    init_seed: u64,
) -> Result<(SdnModel, TrainReport)> {
    let first = train_set
        .first()
        .ok_or_else(|| crate::error::ShredError::arg("no training windows"))?;
    let init = SdnModel::init(first.width, widths, first.target.len(), final_activation, init_seed);
    train(train_set, val_set, init, config)
}
