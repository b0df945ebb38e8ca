use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{expect_kind, pooled_std, FieldDataset, FieldKind, FieldSpec};
use crate::error::{Result, ShredError};
use crate::seed::{self, derive_seed};

/// Channel labels of the gait proxy, pelvis translations first.
pub const GAIT_CHANNELS: [&str; 18] = [
    "pelvis_tx",
    "pelvis_ty",
    "pelvis_tz",
    "pelvis_tilt",
    "pelvis_list",
    "pelvis_rotation",
    "lumbar_extension",
    "lumbar_bending",
    "hip_flexion_r",
    "hip_adduction_r",
    "hip_rotation_r",
    "knee_flexion_r",
    "ankle_angle_r",
    "hip_flexion_l",
    "hip_adduction_l",
    "hip_rotation_l",
    "knee_flexion_l",
    "ankle_angle_l",
];

pub const GAIT_RIGHT_ANKLE: usize = 12;

const HARMONICS: usize = 3;
const JITTER_MEMORY: f64 = 0.95;

/// Per-channel Fourier waveform of the stride phase.
#[derive(Debug, Clone)]
struct Waveform {
    offset: f64,
    scale: f64,
    amps: [f64; HARMONICS],
    phases: [f64; HARMONICS],
}

impl Waveform {
    fn eval(&self, phase: f64) -> f64 {
        let shape: f64 = (0..HARMONICS)
            .map(|h| self.amps[h] * ((h + 1) as f64 * phase + self.phases[h]).cos())
            .sum();
        self.offset + self.scale * shape
    }
}

fn waveforms(seed: u64) -> Vec<Waveform> {
    let mut rng = seed::rng(derive_seed(seed, "gait-waveform", 0));
    let mut right: Vec<Waveform> = Vec::new();
    let mut out = Vec::with_capacity(18);
    for channel in 0..18 {
        let mirror = match GAIT_CHANNELS[channel].strip_suffix("_l") {
            Some(stem) => GAIT_CHANNELS.iter().position(|c| *c == format!("{stem}_r")),
            None => None,
        };
        let wf = if let Some(r) = mirror {
            // Contralateral joint: same waveform half a stride later.
            let mut w = right[r - 8].clone();
            for h in 0..HARMONICS {
                w.phases[h] += (h + 1) as f64 * PI;
            }
            w
        } else {
            let translational = channel < 3;
            Waveform {
                offset: rng.random_range(-1.0..1.0) * if translational { 0.1 } else { 5.0 },
                scale: if translational {
                    rng.random_range(0.01..0.05)
                } else {
                    rng.random_range(3.0..20.0)
                },
                amps: [
                    rng.random_range(0.5..1.5),
                    rng.random_range(0.2..0.8),
                    rng.random_range(0.0..0.4),
                ],
                phases: [
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(0.0..2.0 * PI),
                ],
            }
        };
        if (8..13).contains(&channel) {
            right.push(wf.clone());
        }
        out.push(wf);
    }
    out
}

/// Noise-free value of `channel` at stride phase `phase` (radians).
pub fn gait_waveform(spec: &FieldSpec, channel: usize, phase: f64) -> f64 {
    waveforms(spec.seed)[channel].eval(phase)
}

/// 18-channel quasi-periodic signal from a shared stride phase.
///
/// The phase advances by `2 pi / stride_period * (1 + phase_jitter * z_t)`
/// per snapshot with `z_t` a unit-variance AR(1) process. Noise is added per
/// channel, relative to that channel's standard deviation.
pub fn generate_gait(spec: &FieldSpec) -> Result<FieldDataset> {
    expect_kind(spec, FieldKind::Gait)?;
    spec.validate()?;
    if spec.grid_shape != [18] {
        return Err(ShredError::spec(
            "grid_shape",
            format!("gait field has 18 channels, got {:?}", spec.grid_shape),
        ));
    }
    if !(spec.stride_period > 0.0) {
        return Err(ShredError::spec("stride_period", "must be positive"));
    }
    if !(spec.phase_jitter >= 0.0) {
        return Err(ShredError::spec("phase_jitter", "must be >= 0"));
    }
    let forms = waveforms(spec.seed);
    let mut rng = seed::rng(derive_seed(spec.seed, "gait-phase", 0));
    let phase0 = rng.random_range(0.0..2.0 * PI);
    let omega = 2.0 * PI / spec.stride_period;
    let innovation = (1.0 - JITTER_MEMORY * JITTER_MEMORY).sqrt();

    let mut phases = Vec::with_capacity(spec.snapshots);
    let mut drift = 0.0;
    let mut z: f64 = StandardNormal.sample(&mut rng);
    for t in 0..spec.snapshots {
        phases.push(phase0 + omega * t as f64 + drift);
        drift += omega * spec.phase_jitter * z;
        let e: f64 = StandardNormal.sample(&mut rng);
        z = JITTER_MEMORY * z + innovation * e;
    }

    let n = 18;
    let mut data = vec![0.0; n * spec.snapshots];
    for (t, &phase) in phases.iter().enumerate() {
        for (c, wf) in forms.iter().enumerate() {
            data[t * n + c] = wf.eval(phase);
        }
    }
    if spec.noise_std > 0.0 {
        let mut noise_rng = seed::rng(derive_seed(spec.seed, "noise", 0));
        for c in 0..n {
            let series: Vec<f64> = (0..spec.snapshots).map(|t| data[t * n + c]).collect();
            let sigma = spec.noise_std * pooled_std(&series);
            for t in 0..spec.snapshots {
                let e: f64 = StandardNormal.sample(&mut noise_rng);
                data[t * n + c] += sigma * e;
            }
        }
    }
    FieldDataset::new(data, vec![18], spec.snapshots, spec.dt, spec.label())
}
