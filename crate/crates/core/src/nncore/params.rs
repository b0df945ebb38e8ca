use rand::Rng;

use crate::linalg::Mat;
use crate::seed;

/// Uniform access to every trainable array of a model, in a fixed order.
pub trait ParamArrays {
    fn array_names(&self) -> Vec<String>;
    fn arrays(&self) -> Vec<&[f64]>;
    fn arrays_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    /// Name of the first array containing a non-finite value.
    fn first_non_finite(&self) -> Option<String> {
        self.arrays()
            .iter()
            .position(|a| a.iter().any(|v| !v.is_finite()))
            .map(|i| self.array_names()[i].clone())
    }

    fn scale(&mut self, factor: f64) {
        for a in self.arrays_mut() {
            a.iter_mut().for_each(|v| *v *= factor);
        }
    }

    fn add_assign(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (a, b) in self.arrays_mut().into_iter().zip(other.arrays()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn squared_norm(&self) -> f64 {
        self.arrays().iter().flat_map(|a| a.iter()).map(|v| v * v).sum()
    }

    fn zero(&mut self) {
        for a in self.arrays_mut() {
            a.fill(0.0);
        }
    }
}

/// One dense layer `W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Mat,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            w: Mat::zeros(outputs, inputs),
            b: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.cols
    }

    pub fn outputs(&self) -> usize {
        self.w.rows
    }
}

/// Fills with `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub(crate) fn fill_uniform(values: &mut [f64], fan_in: usize, rng: &mut seed::Rng) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in values {
        *v = rng.random_range(-bound..=bound);
    }
}
