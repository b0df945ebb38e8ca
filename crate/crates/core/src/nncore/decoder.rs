//! Shallow fully connected decoder: affine maps separated by ReLU.

use super::activation::relu;
use super::params::{fill_uniform, Dense, ParamArrays};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub layers: Vec<Dense>,
    /// Apply ReLU after the last layer too. Off by default: the output
    /// layer is linear.
    pub final_activation: bool,
}

impl DecoderParams {
    /// `input → hidden_widths… → output`.
    pub fn zeros(input: usize, hidden_widths: &[usize], output: usize, final_activation: bool) -> Self {
        let widths: Vec<usize> = std::iter::once(input)
            .chain(hidden_widths.iter().copied())
            .chain(std::iter::once(output))
            .collect();
        let layers = widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        DecoderParams {
            layers,
            final_activation,
        }
    }

    pub fn init(
        input: usize,
        hidden_widths: &[usize],
        output: usize,
        final_activation: bool,
        rng: &mut seed::Rng,
    ) -> Self {
        let mut params = DecoderParams::zeros(input, hidden_widths, output, final_activation);
        for layer in &mut params.layers {
            let fan_in = layer.inputs();
            fill_uniform(&mut layer.w.data, fan_in, rng);
            fill_uniform(&mut layer.b, fan_in, rng);
        }
        params
    }

    pub fn input(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output(&self) -> usize {
        self.layers.last().expect("decoder has layers").outputs()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Dense::outputs)
            .collect()
    }

    fn activated(&self, layer: usize) -> bool {
        layer + 1 < self.layers.len() || self.final_activation
    }
}

impl ParamArrays for DecoderParams {
    fn array_names(&self) -> Vec<String> {
        (0..self.layers.len())
            .flat_map(|l| [format!("decoder.{l}.W"), format!("decoder.{l}.b")])
            .collect()
    }

    fn arrays(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|d| [d.w.data.as_slice(), d.b.as_slice()])
            .collect()
    }

    fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|d| [d.w.data.as_mut_slice(), d.b.as_mut_slice()])
            .collect()
    }
}

/// Per-layer inputs and pre-activations of one decoder pass.
#[derive(Debug, Clone)]
pub struct DecoderTrace {
    /// `inputs[l]` is what layer `l` consumed.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl DecoderTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn into_output(self) -> Vec<f64> {
        self.output
    }
}

pub fn decoder_forward(params: &DecoderParams, h: &[f64]) -> DecoderTrace {
    assert_eq!(h.len(), params.input(), "decoder input width");
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut current = h.to_vec();
    for (l, layer) in params.layers.iter().enumerate() {
        let mut a = layer.b.clone();
        layer.w.matvec_acc(&current, &mut a);
        let out = if params.activated(l) {
            a.iter().map(|&v| relu(v)).collect()
        } else {
            a.clone()
        };
        inputs.push(std::mem::replace(&mut current, out));
        pre.push(a);
    }
    DecoderTrace {
        inputs,
        pre,
        output: current,
    }
}

/// Accumulates parameter gradients into `grads` and returns the gradient
/// with respect to the decoder input.
pub(crate) fn decoder_backward(
    params: &DecoderParams,
    trace: &DecoderTrace,
    d_output: &[f64],
    grads: &mut DecoderParams,
) -> Vec<f64> {
    let mut delta = d_output.to_vec();
    for l in (0..params.layers.len()).rev() {
        if params.activated(l) {
            for (d, &a) in delta.iter_mut().zip(&trace.pre[l]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        let grad = &mut grads.layers[l];
        grad.w.outer_acc(&delta, &trace.inputs[l]);
        grad.b.iter_mut().zip(&delta).for_each(|(b, d)| *b += d);
        let mut below = vec![0.0; params.layers[l].inputs()];
        params.layers[l].w.matvec_t_acc(&delta, &mut below);
        delta = below;
    }
    delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn zero_input_zero_bias_gives_zero() {
        let mut r = rng(1);
        let mut p = DecoderParams::init(4, &[6], 3, false, &mut r);
        for layer in &mut p.layers {
            layer.b.fill(0.0);
        }
        assert_eq!(decoder_forward(&p, &[0.0; 4]).output(), &[0.0; 3]);
    }

    #[test]
    fn single_layer_is_affine() {
        let mut p = DecoderParams::zeros(2, &[], 2, false);
        p.layers[0].w.data = vec![1.0, 0.0, 0.0, 1.0];
        p.layers[0].b = vec![0.5, -3.0];
        assert_eq!(decoder_forward(&p, &[2.0, 1.0]).output(), &[2.5, -2.0]);
        // Literal form clamps negatives.
        p.final_activation = true;
        assert_eq!(decoder_forward(&p, &[2.0, 1.0]).output(), &[2.5, 0.0]);
    }
}
