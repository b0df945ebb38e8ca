//! LSTM cell and stacked sequence encoder with backpropagation through time.
//!
//! Gates act on the concatenation `z = [h_{t-1}, y_t]`:
//!
//! ```text
//! o = σ(W_o z + b_o)   f = σ(W_f z + b_f)   i = σ(W_i z + b_i)   g = tanh(W_g z + b_g)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use super::activation::{sigmoid, tanh};
use super::params::fill_uniform;
use crate::linalg::Mat;
use crate::seed;

/// Gate order used for storage and array names.
pub const GATES: [&str; 4] = ["o", "f", "i", "g"];
const O: usize = 0;
const F: usize = 1;
const I: usize = 2;
const G: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// `W_o, W_f, W_i, W_g`, each `hidden × (hidden + input)`.
    pub w: [Mat; 4],
    /// `b_o, b_f, b_i, b_g`.
    pub b: [Vec<f64>; 4],
}

impl LstmLayer {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = || Mat::zeros(hidden, hidden + input);
        let b = || vec![0.0; hidden];
        LstmLayer {
            w: [w(), w(), w(), w()],
            b: [b(), b(), b(), b()],
        }
    }

    pub fn hidden(&self) -> usize {
        self.w[0].rows
    }

    pub fn input(&self) -> usize {
        self.w[0].cols - self.w[0].rows
    }

    fn init(hidden: usize, input: usize, rng: &mut seed::Rng) -> Self {
        let mut layer = LstmLayer::zeros(hidden, input);
        let fan_in = hidden + input;
        for gate in 0..4 {
            fill_uniform(&mut layer.w[gate].data, fan_in, rng);
            fill_uniform(&mut layer.b[gate], fan_in, rng);
        }
        layer
    }
}

/// Stacked LSTM; layer `l > 0` consumes the hidden sequence of layer `l - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub layers: Vec<LstmLayer>,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize, layer_count: usize) -> Self {
        let layers = (0..layer_count)
            .map(|l| LstmLayer::zeros(hidden, if l == 0 { input } else { hidden }))
            .collect();
        LstmParams { layers }
    }

    pub fn init(hidden: usize, input: usize, layer_count: usize, rng: &mut seed::Rng) -> Self {
        let layers = (0..layer_count)
            .map(|l| LstmLayer::init(hidden, if l == 0 { input } else { hidden }, rng))
            .collect();
        LstmParams { layers }
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    pub fn input(&self) -> usize {
        self.layers[0].input()
    }
}

/// Values saved by one cell step for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCache {
    pub z: Vec<f64>,
    /// Post-activation gates `o, f, i, g`, each of length `hidden`.
    pub gates: [Vec<f64>; 4],
    pub c_prev: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// Core of one step. Writes post-activation gates (`4h`, gate-major), the new
/// cell state, `tanh(c_t)` and `h_t`.
#[inline]
fn step(
    layer: &LstmLayer,
    z: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    tanh_c: &mut [f64],
    h: &mut [f64],
) {
    let hd = layer.hidden();
    for (gate, out) in gates.chunks_exact_mut(hd).enumerate() {
        out.copy_from_slice(&layer.b[gate]);
        layer.w[gate].matvec_acc(z, out);
        if gate == G {
            out.iter_mut().for_each(|v| *v = tanh(*v));
        } else {
            out.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
    }
    for k in 0..hd {
        let (o, f, i, g) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = tanh(c[k]);
        h[k] = o * tanh_c[k];
    }
}

/// One cell step from `(h_prev, c_prev)` with input `y`.
pub fn lstm_cell_forward(
    layer: &LstmLayer,
    h_prev: &[f64],
    c_prev: &[f64],
    y: &[f64],
) -> (Vec<f64>, Vec<f64>, CellCache) {
    let hd = layer.hidden();
    assert_eq!(h_prev.len(), hd, "h_prev width");
    assert_eq!(c_prev.len(), hd, "c_prev width");
    assert_eq!(y.len(), layer.input(), "input width");
    let z: Vec<f64> = h_prev.iter().chain(y).copied().collect();
    let mut gates = vec![0.0; 4 * hd];
    let (mut c, mut tanh_c, mut h) = (vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]);
    step(layer, &z, c_prev, &mut gates, &mut c, &mut tanh_c, &mut h);
    let split = |g: usize| gates[g * hd..(g + 1) * hd].to_vec();
    let cache = CellCache {
        z,
        gates: [split(O), split(F), split(I), split(G)],
        c_prev: c_prev.to_vec(),
        tanh_c,
    };
    (h, c, cache)
}

/// Forward record of one layer over `steps` inputs.
#[derive(Debug, Clone)]
pub(crate) struct LayerTrace {
    /// `steps × (hidden + input)`
    z: Vec<f64>,
    /// `steps × 4·hidden`
    gates: Vec<f64>,
    /// `(steps + 1) × hidden`; row 0 is the zero initial state.
    c: Vec<f64>,
    /// `steps × hidden`
    tanh_c: Vec<f64>,
    /// `steps × hidden`
    h: Vec<f64>,
}

/// Full forward record of the stack.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub(crate) layers: Vec<LayerTrace>,
    steps: usize,
}

impl LstmTrace {
    /// Top-layer hidden state after the last step.
    pub fn final_hidden(&self) -> &[f64] {
        let top = self.layers.last().expect("at least one layer");
        let hd = top.h.len() / self.steps;
        &top.h[(self.steps - 1) * hd..]
    }
}

fn layer_forward(layer: &LstmLayer, inputs: &[f64], steps: usize) -> LayerTrace {
    let (hd, d) = (layer.hidden(), layer.input());
    let zw = hd + d;
    let mut trace = LayerTrace {
        z: vec![0.0; steps * zw],
        gates: vec![0.0; steps * 4 * hd],
        c: vec![0.0; (steps + 1) * hd],
        tanh_c: vec![0.0; steps * hd],
        h: vec![0.0; steps * hd],
    };
    for t in 0..steps {
        let z = &mut trace.z[t * zw..(t + 1) * zw];
        if t > 0 {
            z[..hd].copy_from_slice(&trace.h[(t - 1) * hd..t * hd]);
        }
        z[hd..].copy_from_slice(&inputs[t * d..(t + 1) * d]);
        let (c_prev, c_rest) = trace.c.split_at_mut((t + 1) * hd);
        step(
            layer,
            &trace.z[t * zw..(t + 1) * zw],
            &c_prev[t * hd..],
            &mut trace.gates[t * 4 * hd..(t + 1) * 4 * hd],
            &mut c_rest[..hd],
            &mut trace.tanh_c[t * hd..(t + 1) * hd],
            &mut trace.h[t * hd..(t + 1) * hd],
        );
    }
    trace
}

/// Runs the stack over a `steps × input` row-major sequence from zero
/// initial states.
pub fn lstm_sequence(params: &LstmParams, inputs: &[f64], steps: usize) -> LstmTrace {
    assert!(steps >= 1, "sequence needs at least one step");
    assert_eq!(inputs.len(), steps * params.input(), "sequence shape");
    let mut layers: Vec<LayerTrace> = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let trace = if l == 0 {
            layer_forward(layer, inputs, steps)
        } else {
            layer_forward(layer, &layers[l - 1].h, steps)
        };
        layers.push(trace);
    }
    LstmTrace { layers, steps }
}

/// Backpropagates `d_final` (gradient w.r.t. the top layer's last hidden
/// state) through every step and layer, accumulating into `grads`.
pub(crate) fn lstm_backward(params: &LstmParams, trace: &LstmTrace, d_final: &[f64], grads: &mut LstmParams) {
    let steps = trace.steps;
    let top = params.layers.len() - 1;
    // Gradient w.r.t. each step's hidden output of the current layer.
    let hd = params.hidden();
    let mut dh_seq = vec![0.0; steps * hd];
    dh_seq[(steps - 1) * hd..].copy_from_slice(d_final);

    for l in (0..=top).rev() {
        let layer = &params.layers[l];
        let grad = &mut grads.layers[l];
        let rec = &trace.layers[l];
        let d = layer.input();
        let zw = hd + d;
        let mut dx_seq = vec![0.0; steps * d];
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut da = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
        let mut dz = vec![0.0; zw];

        for t in (0..steps).rev() {
            let gates = &rec.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let tanh_c = &rec.tanh_c[t * hd..(t + 1) * hd];
            let c_prev = &rec.c[t * hd..(t + 1) * hd];
            for k in 0..hd {
                let (o, f, i, g) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
                let dh = dh_seq[t * hd + k] + dh_next[k];
                let tc = tanh_c[k];
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                da[O][k] = dh * tc * o * (1.0 - o);
                da[F][k] = dc * c_prev[k] * f * (1.0 - f);
                da[I][k] = dc * g * i * (1.0 - i);
                da[G][k] = dc * i * (1.0 - g * g);
                dc_next[k] = dc * f;
            }
            let z = &rec.z[t * zw..(t + 1) * zw];
            dz.fill(0.0);
            for gate in 0..4 {
                grad.w[gate].outer_acc(&da[gate], z);
                grad.b[gate].iter_mut().zip(&da[gate]).for_each(|(b, v)| *b += v);
                layer.w[gate].matvec_t_acc(&da[gate], &mut dz);
            }
            dh_next.copy_from_slice(&dz[..hd]);
            dx_seq[t * d..(t + 1) * d].copy_from_slice(&dz[hd..]);
        }
        dh_seq = dx_seq;
    }
}
