//! Independent oracles for the neural core. Parameters are read through the
//! checkpoint array names and every formula is evaluated with plain loops,
//! so nothing here shares code with the implementation under test.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use shred_core::nncore::{shred_backward, Architecture, LossKind, ParamArrays, ShredParams};
use shred_core::seed;

type Arrays = HashMap<String, (Vec<usize>, Vec<f64>)>;

fn arrays(params: &ShredParams) -> Arrays {
    params
        .to_named_arrays()
        .into_iter()
        .map(|a| (a.name, (a.shape, a.data)))
        .collect()
}

fn matvec(a: &Arrays, name: &str, x: &[f64]) -> Vec<f64> {
    let (shape, w) = &a[name];
    assert_eq!(shape[1], x.len());
    (0..shape[0])
        .map(|r| {
            let mut s = 0.0;
            for c in 0..shape[1] {
                s += w[r * shape[1] + c] * x[c];
            }
            s
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Top-layer `h_T` from the literal recurrence
/// `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)` over `z = [h_prev, y]`.
pub fn lstm_oracle(params: &ShredParams, inputs: &[f64], steps: usize) -> Vec<f64> {
    let a = arrays(params);
    let arch = params.architecture();
    let h = arch.hidden;
    let mut seq: Vec<Vec<f64>> = inputs.chunks(inputs.len() / steps).map(<[f64]>::to_vec).collect();
    for l in 0..arch.layers {
        let mut hp = vec![0.0; h];
        let mut cp = vec![0.0; h];
        let mut out = Vec::new();
        for y in &seq {
            let mut z = hp.clone();
            z.extend_from_slice(y);
            let gate = |g: &str| -> Vec<f64> {
                let mut v = matvec(&a, &format!("lstm.{l}.W_{g}"), &z);
                for (k, b) in a[&format!("lstm.{l}.b_{g}")].1.iter().enumerate() {
                    v[k] += b;
                }
                v
            };
            let (o, f, i, g) = (gate("o"), gate("f"), gate("i"), gate("g"));
            let mut c = vec![0.0; h];
            let mut hn = vec![0.0; h];
            for k in 0..h {
                c[k] = sigmoid(f[k]) * cp[k] + sigmoid(i[k]) * g[k].tanh();
                hn[k] = sigmoid(o[k]) * c[k].tanh();
            }
            cp = c;
            hp = hn.clone();
            out.push(hn);
        }
        seq = out;
    }
    seq.pop().unwrap()
}

/// `W_b σ(… σ(W_1 x + b_1) …) + b_b`, ReLU between layers.
pub fn decoder_oracle(params: &ShredParams, h: &[f64]) -> Vec<f64> {
    let a = arrays(params);
    let arch = params.architecture();
    let count = arch.decoder_widths.len() + 1;
    let mut x = h.to_vec();
    for l in 0..count {
        let mut v = matvec(&a, &format!("decoder.{l}.W"), &x);
        for (k, b) in a[&format!("decoder.{l}.b")].1.iter().enumerate() {
            v[k] += b;
        }
        if l + 1 < count || arch.final_activation {
            v.iter_mut().for_each(|e| *e = e.max(0.0));
        }
        x = v;
    }
    x
}

pub fn shred_oracle(params: &ShredParams, inputs: &[f64], steps: usize) -> Vec<f64> {
    decoder_oracle(params, &lstm_oracle(params, inputs, steps))
}

fn loss_oracle(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

pub struct Instance {
    pub params: ShredParams,
    pub inputs: Vec<f64>,
    pub steps: usize,
    pub target: Vec<f64>,
}

/// Parameters, inputs and targets drawn from `U(-scale, scale)`.
pub fn random_instance(arch: &Architecture, steps: usize, scale: f64, seed_value: u64) -> Instance {
    let mut rng = seed::rng(seed_value);
    let mut params = ShredParams::zeros(arch);
    for a in params.arrays_mut() {
        a.iter_mut().for_each(|v| *v = rng.random_range(-scale..scale));
    }
    let inputs = (0..steps * arch.input).map(|_| rng.random_range(-1.0..1.0)).collect();
    let target = (0..arch.output).map(|_| rng.random_range(-1.0..1.0)).collect();
    Instance {
        params,
        inputs,
        steps,
        target,
    }
}

/// Per array: `max |analytic − fd| / max(max |analytic|, max |fd|, 1e-12)`
/// with central differences of step `h` on the oracle loss.
pub fn gradient_check(inst: &Instance, h: f64) -> Vec<(String, f64)> {
    let (_, grads) = shred_backward(&inst.params, &inst.inputs, inst.steps, &inst.target, LossKind::Mse).unwrap();
    let names = inst.params.array_names();
    let analytic: Vec<Vec<f64>> = grads.arrays().iter().map(|a| a.to_vec()).collect();
    let mut probe = inst.params.clone();
    let loss = |p: &ShredParams| loss_oracle(&shred_oracle(p, &inst.inputs, inst.steps), &inst.target);
    let mut out = Vec::new();
    for (ai, name) in names.iter().enumerate() {
        let mut fd = Vec::with_capacity(analytic[ai].len());
        for k in 0..analytic[ai].len() {
            let orig = probe.arrays()[ai][k];
            probe.arrays_mut()[ai][k] = orig + h;
            let up = loss(&probe);
            probe.arrays_mut()[ai][k] = orig - h;
            let down = loss(&probe);
            probe.arrays_mut()[ai][k] = orig;
            fd.push((up - down) / (2.0 * h));
        }
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = analytic[ai]
            .iter()
            .zip(&fd)
            .fold(0.0f64, |m, (a, f)| m.max((a - f).abs()));
        let denom = max_abs(&analytic[ai]).max(max_abs(&fd)).max(1e-12);
        out.push((name.clone(), diff / denom));
    }
    out
}

pub fn gradcheck_arch() -> Architecture {
    Architecture {
        hidden: 4,
        input: 2,
        output: 5,
        layers: 1,
        decoder_widths: vec![6],
        final_activation: false,
    }
}
