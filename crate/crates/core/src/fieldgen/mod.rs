//! Synthetic spatio-temporal fields.
//!
//! Four generators stand in for measured data: a low-rank separable field,
//! periodic explicit diffusion, a two-halves field whose halves share no
//! information, and an 18-channel gait-like signal driven by a common phase.
//! Every generator is a pure function of its [`FieldSpec`], seed included.

mod dataset;
mod diffusion;
mod gait;
mod io;
mod lowrank;

pub use dataset::FieldDataset;
pub use diffusion::generate_diffusion;
pub use gait::{gait_waveform, generate_gait, GAIT_CHANNELS, GAIT_RIGHT_ANKLE};
pub use io::{read_snapshot_file, write_csv_preview, write_snapshot_file, SNAPSHOT_MAGIC};
pub use lowrank::{default_frequencies, generate_decoupled, generate_lowrank, in_left_half};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShredError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Lowrank,
    Diffusion,
    Decoupled,
    Gait,
}

/// Initial condition for the diffusion generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Sum of low-wavenumber Fourier modes with seeded coefficients.
    Random,
    Constant {
        value: f64,
    },
    HotNode {
        node: usize,
        value: f64,
    },
}

/// Parameters for one synthetic field.
///
/// `frequencies` are in cycles per unit time (snapshot `t` sits at time
/// `t * dt`); an empty list selects the default incommensurate set.
/// `noise_std` is relative: the added Gaussian noise has standard deviation
/// `noise_std` times the standard deviation of the noiseless signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub grid_shape: Vec<usize>,
    pub snapshots: usize,
    pub rank: usize,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Decoupled only: amplitudes for the left half (defaults to `amplitudes`).
    pub left_amplitudes: Option<Vec<f64>>,
    pub diffusivity: f64,
    pub initial: InitialCondition,
    /// Gait only: stride period in snapshots.
    pub stride_period: f64,
    /// Gait only: relative standard deviation of the stride-speed fluctuation.
    pub phase_jitter: f64,
    pub dt: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub name: Option<String>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec {
            kind: FieldKind::Lowrank,
            grid_shape: vec![20, 20],
            snapshots: 1200,
            rank: 5,
            frequencies: Vec::new(),
            amplitudes: Vec::new(),
            left_amplitudes: None,
            diffusivity: 1e-4,
            initial: InitialCondition::Random,
            stride_period: 40.0,
            phase_jitter: 0.05,
            dt: 1.0,
            noise_std: 0.01,
            seed: 0,
            name: None,
        }
    }
}

impl FieldSpec {
    pub fn lowrank(grid_shape: Vec<usize>, snapshots: usize, rank: usize) -> Self {
        FieldSpec {
            grid_shape,
            snapshots,
            rank,
            ..Default::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.grid_shape.iter().product()
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{:?}", self.kind).to_lowercase())
    }

    /// Checks the generic invariants shared by every generator.
    pub fn validate(&self) -> Result<()> {
        if self.grid_shape.is_empty() || self.grid_shape.contains(&0) {
            return Err(ShredError::spec(
                "grid_shape",
                format!("every axis must be positive, got {:?}", self.grid_shape),
            ));
        }
        if self.snapshots < 3 {
            return Err(ShredError::spec(
                "snapshots",
                format!("need at least 3 snapshots, got {}", self.snapshots),
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(ShredError::spec("noise_std", "must be finite and >= 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ShredError::spec("dt", "must be positive"));
        }
        if let Some(f) = self.frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(ShredError::spec(
                "frequencies",
                format!("all frequencies must be > 0, got {f}"),
            ));
        }
        if self.amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(ShredError::spec("amplitudes", "must be finite"));
        }
        match self.kind {
            FieldKind::Lowrank => lowrank::check_rank(self, self.node_count()),
            FieldKind::Decoupled => lowrank::check_rank(self, self.node_count() / 2),
            _ => Ok(()),
        }
    }
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &FieldSpec) -> Result<FieldDataset> {
    match spec.kind {
        FieldKind::Lowrank => generate_lowrank(spec),
        FieldKind::Diffusion => generate_diffusion(spec),
        FieldKind::Decoupled => generate_decoupled(spec),
        FieldKind::Gait => generate_gait(spec),
    }
}

fn expect_kind(spec: &FieldSpec, kind: FieldKind) -> Result<()> {
    if spec.kind != kind {
        return Err(ShredError::spec(
            "kind",
            format!("expected {kind:?}, got {:?}", spec.kind),
        ));
    }
    Ok(())
}

fn pooled_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Adds `relative * std(values)` Gaussian noise in place.
fn add_relative_noise(values: &mut [f64], relative: f64, seed: u64) {
    if relative == 0.0 {
        return;
    }
    let sigma = relative * pooled_std(values);
    if sigma == 0.0 {
        return;
    }
    let mut rng = seed::rng(seed);
    for v in values.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
}
