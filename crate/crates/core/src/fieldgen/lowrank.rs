use std::f64::consts::PI;

use rand::Rng;

use super::{add_relative_noise, expect_kind, FieldDataset, FieldKind, FieldSpec};
use crate::error::{Result, ShredError};
use crate::grid;
use crate::seed::{self, derive_seed};

/// Large enough that a few dozen snapshots separate the first several
/// frequencies; at 0.01 a 50-sample window cannot tell five modes apart.
const BASE_FREQUENCY: f64 = 0.05;

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while out.len() < count {
        if out
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// `0.05 * sqrt(p) / dt` cycles per unit time for the primes
/// `p_offset .. p_offset + count`: pairwise incommensurate.
pub fn default_frequencies(count: usize, offset: usize, dt: f64) -> Vec<f64> {
    primes(offset + count)[offset..]
        .iter()
        .map(|&p| BASE_FREQUENCY * (p as f64).sqrt() / dt)
        .collect()
}

/// First `count` wavenumber multi-indices (each component in `1..=len`)
/// ordered by total wavenumber, then lexicographically.
fn wavenumbers(shape: &[usize], count: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(count);
    let max_total: usize = shape.iter().sum();
    for total in shape.len()..=max_total {
        let mut current = Vec::with_capacity(shape.len());
        compositions(shape, total, &mut current, &mut out, count);
        if out.len() >= count {
            break;
        }
    }
    out.truncate(count);
    out
}

fn compositions(shape: &[usize], remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) {
    if out.len() >= limit {
        return;
    }
    let axis = current.len();
    if axis == shape.len() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    let axes_left = shape.len() - axis - 1;
    for k in 1..=shape[axis] {
        if k + axes_left > remaining {
            break;
        }
        current.push(k);
        compositions(shape, remaining - k, current, out, limit);
        current.pop();
    }
}

/// Spatial mode: product over axes of `sin(pi * k * (i + 1/2) / len)`.
fn spatial_mode(shape: &[usize], k: &[usize]) -> Vec<f64> {
    let n = grid::node_count(shape);
    (0..n)
        .map(|node| {
            grid::coords(node, shape)
                .iter()
                .zip(shape)
                .zip(k)
                .map(|((&i, &len), &kk)| (PI * kk as f64 * (i as f64 + 0.5) / len as f64).sin())
                .product()
        })
        .collect()
}

/// Noiseless separable field `sum_k mode_k(x) * a_k sin(2 pi f_k t dt + phase_k)`.
fn separable_field(
    shape: &[usize],
    snapshots: usize,
    frequencies: &[f64],
    amplitudes: &[f64],
    dt: f64,
    phase_seed: u64,
) -> Vec<f64> {
    let n = grid::node_count(shape);
    let rank = frequencies.len();
    let modes: Vec<Vec<f64>> = wavenumbers(shape, rank)
        .iter()
        .map(|k| spatial_mode(shape, k))
        .collect();
    let mut rng = seed::rng(phase_seed);
    let phases: Vec<f64> = (0..rank).map(|_| rng.random_range(0.0..2.0 * PI)).collect();

    let mut data = vec![0.0; n * snapshots];
    for t in 0..snapshots {
        let time = t as f64 * dt;
        let column = &mut data[t * n..(t + 1) * n];
        for k in 0..rank {
            let coeff = amplitudes[k] * (2.0 * PI * frequencies[k] * time + phases[k]).sin();
            if coeff != 0.0 {
                for (x, m) in column.iter_mut().zip(&modes[k]) {
                    *x += coeff * m;
                }
            }
        }
    }
    data
}

pub(super) fn check_rank(spec: &FieldSpec, n: usize) -> Result<()> {
    if spec.rank == 0 || spec.rank > n {
        return Err(ShredError::spec(
            "rank",
            format!("rank must be in 1..={n}, got {}", spec.rank),
        ));
    }
    Ok(())
}

fn amplitudes_for(values: &[f64], rank: usize, field: &str) -> Result<Vec<f64>> {
    match values.len() {
        0 => Ok(vec![1.0; rank]),
        len if len == rank => Ok(values.to_vec()),
        len => Err(ShredError::spec(
            field,
            format!("expected {rank} amplitudes, got {len}"),
        )),
    }
}

pub fn generate_lowrank(spec: &FieldSpec) -> Result<FieldDataset> {
    expect_kind(spec, FieldKind::Lowrank)?;
    spec.validate()?;
    let n = spec.node_count();
    check_rank(spec, n)?;
    let frequencies = match spec.frequencies.len() {
        0 => default_frequencies(spec.rank, 0, spec.dt),
        len if len == spec.rank => spec.frequencies.clone(),
        len => {
            return Err(ShredError::spec(
                "frequencies",
                format!("expected {} frequencies, got {len}", spec.rank),
            ))
        }
    };
    let amplitudes = amplitudes_for(&spec.amplitudes, spec.rank, "amplitudes")?;
    let mut data = separable_field(
        &spec.grid_shape,
        spec.snapshots,
        &frequencies,
        &amplitudes,
        spec.dt,
        derive_seed(spec.seed, "phase", 0),
    );
    add_relative_noise(&mut data, spec.noise_std, derive_seed(spec.seed, "noise", 0));
    FieldDataset::new(data, spec.grid_shape.clone(), spec.snapshots, spec.dt, spec.label())
}

/// Two independent low-rank fields side by side along the first axis.
///
/// The left half (first-axis index `< len/2`) and the right half use
/// disjoint incommensurate frequency sets, independent phase and noise
/// seeds. An explicit `frequencies` list must hold `2 * rank` entries:
/// left half first.
pub fn generate_decoupled(spec: &FieldSpec) -> Result<FieldDataset> {
    expect_kind(spec, FieldKind::Decoupled)?;
    spec.validate()?;
    let shape = &spec.grid_shape;
    if shape[0] % 2 != 0 {
        return Err(ShredError::spec(
            "grid_shape",
            format!("first axis must be even to split into halves, got {}", shape[0]),
        ));
    }
    let mut half_shape = shape.clone();
    half_shape[0] /= 2;
    let half_n = grid::node_count(&half_shape);
    check_rank(spec, half_n)?;

    let rank = spec.rank;
    let (left_freq, right_freq) = match spec.frequencies.len() {
        0 => (
            default_frequencies(rank, 0, spec.dt),
            default_frequencies(rank, rank, spec.dt),
        ),
        len if len == 2 * rank => (spec.frequencies[..rank].to_vec(), spec.frequencies[rank..].to_vec()),
        len => {
            return Err(ShredError::spec(
                "frequencies",
                format!("decoupled field needs {} frequencies, got {len}", 2 * rank),
            ))
        }
    };
    let right_amp = amplitudes_for(&spec.amplitudes, rank, "amplitudes")?;
    let left_amp = match &spec.left_amplitudes {
        Some(a) => amplitudes_for(a, rank, "left_amplitudes")?,
        None => right_amp.clone(),
    };

    let halves: Vec<Vec<f64>> = [("left", &left_freq, &left_amp), ("right", &right_freq, &right_amp)]
        .iter()
        .map(|(side, freq, amp)| {
            let mut data = separable_field(
                &half_shape,
                spec.snapshots,
                freq,
                amp,
                spec.dt,
                derive_seed(spec.seed, &format!("phase-{side}"), 0),
            );
            add_relative_noise(
                &mut data,
                spec.noise_std,
                derive_seed(spec.seed, &format!("noise-{side}"), 0),
            );
            data
        })
        .collect();

    // With C ordering the left half is exactly the first `half_n` nodes.
    let n = 2 * half_n;
    let mut data = vec![0.0; n * spec.snapshots];
    for t in 0..spec.snapshots {
        data[t * n..t * n + half_n].copy_from_slice(&halves[0][t * half_n..(t + 1) * half_n]);
        data[t * n + half_n..(t + 1) * n].copy_from_slice(&halves[1][t * half_n..(t + 1) * half_n]);
    }
    FieldDataset::new(data, shape.clone(), spec.snapshots, spec.dt, spec.label())
}

/// True when `node` lies in the left half of a decoupled field.
pub fn in_left_half(node: usize, shape: &[usize]) -> bool {
    grid::coords(node, shape)[0] < shape[0] / 2
}
