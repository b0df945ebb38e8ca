use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{add_relative_noise, expect_kind, FieldDataset, FieldKind, FieldSpec, InitialCondition};
use crate::error::{Result, ShredError};
use crate::grid;
use crate::seed::{self, derive_seed};

/// Explicit-Euler heat equation on the unit periodic box, `h_axis = 1 / len`.
/// Snapshot 0 is the initial condition; snapshot `t + 1` is one step of `t`.
pub fn generate_diffusion(spec: &FieldSpec) -> Result<FieldDataset> {
    expect_kind(spec, FieldKind::Diffusion)?;
    spec.validate()?;
    let shape = &spec.grid_shape;
    let n = spec.node_count();

    let inv_h2: Vec<f64> = shape.iter().map(|&len| (len * len) as f64).collect();
    let courant = spec.dt * spec.diffusivity * inv_h2.iter().sum::<f64>();
    if !(spec.diffusivity >= 0.0) || courant > 0.25 {
        return Err(ShredError::spec(
            "diffusivity",
            format!("dt*diffusivity*sum(1/h^2) = {courant} exceeds the stability limit 1/4"),
        ));
    }

    let mut u = initial_condition(spec)?;
    // Neighbour strides per axis in C order.
    let strides: Vec<usize> = (0..shape.len()).map(|a| shape[a + 1..].iter().product()).collect();
    let coords: Vec<Vec<usize>> = (0..n).map(|i| grid::coords(i, shape)).collect();

    let mut data = Vec::with_capacity(n * spec.snapshots);
    data.extend_from_slice(&u);
    let mut next = vec![0.0; n];
    for _ in 1..spec.snapshots {
        for i in 0..n {
            let mut lap = 0.0;
            for (axis, &len) in shape.iter().enumerate() {
                if len == 1 {
                    continue;
                }
                let c = coords[i][axis];
                let base = i - c * strides[axis];
                let up = base + ((c + 1) % len) * strides[axis];
                let down = base + ((c + len - 1) % len) * strides[axis];
                lap += (u[up] - 2.0 * u[i] + u[down]) * inv_h2[axis];
            }
            next[i] = u[i] + spec.dt * spec.diffusivity * lap;
        }
        std::mem::swap(&mut u, &mut next);
        data.extend_from_slice(&u);
    }
    add_relative_noise(&mut data, spec.noise_std, derive_seed(spec.seed, "noise", 0));
    FieldDataset::new(data, shape.clone(), spec.snapshots, spec.dt, spec.label())
}

fn initial_condition(spec: &FieldSpec) -> Result<Vec<f64>> {
    let shape = &spec.grid_shape;
    let n = spec.node_count();
    match spec.initial {
        InitialCondition::Constant { value } => Ok(vec![value; n]),
        InitialCondition::HotNode { node, value } => {
            if node >= n {
                return Err(ShredError::spec("initial.node", format!("{node} >= {n}")));
            }
            let mut u = vec![0.0; n];
            u[node] = value;
            Ok(u)
        }
        InitialCondition::Random => {
            // Wavenumbers 0..=3 per axis, amplitude ~ N(0,1) / (1 + |k|^2).
            let mut rng = seed::rng(derive_seed(spec.seed, "initial", 0));
            let mut u = vec![0.0; n];
            let ks = grid::node_count(&vec![4; shape.len()]);
            for flat in 1..ks {
                let k = grid::coords(flat, &vec![4; shape.len()]);
                let k2: usize = k.iter().map(|v| v * v).sum();
                let z: f64 = StandardNormal.sample(&mut rng);
                let amp = z / (1.0 + k2 as f64);
                let phase = rng.random_range(0.0..2.0 * PI);
                for (i, ui) in u.iter_mut().enumerate() {
                    let x = grid::coords(i, shape);
                    let arg: f64 = x
                        .iter()
                        .zip(&k)
                        .zip(shape)
                        .map(|((&xi, &ki), &len)| 2.0 * PI * ki as f64 * xi as f64 / len as f64)
                        .sum();
                    *ui += amp * (arg + phase).cos();
                }
            }
            Ok(u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(initial: InitialCondition) -> FieldSpec {
        FieldSpec {
            kind: FieldKind::Diffusion,
            grid_shape: vec![12, 10],
            snapshots: 200,
            diffusivity: 5e-4,
            noise_std: 0.0,
            initial,
            ..Default::default()
        }
    }

    #[test]
    fn constant_is_steady() {
        let field = generate_diffusion(&spec(InitialCondition::Constant { value: 2.5 })).unwrap();
        assert!(field.as_column_major().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn mean_is_conserved() {
        let field = generate_diffusion(&spec(InitialCondition::Random)).unwrap();
        let mean = |t: usize| field.snapshot(t).iter().sum::<f64>() / field.n() as f64;
        let scale = field.snapshot(0).iter().map(|v| v.abs()).fold(0.0, f64::max);
        let (first, last) = (mean(0), mean(field.len() - 1));
        assert!((first - last).abs() <= 1e-10 * scale.max(first.abs()));
    }

    #[test]
    fn hot_node_maximum_principle() {
        let field = generate_diffusion(&spec(InitialCondition::HotNode { node: 37, value: 1.0 })).unwrap();
        let maxima: Vec<f64> = (0..field.len())
            .map(|t| field.snapshot(t).iter().copied().fold(f64::MIN, f64::max))
            .collect();
        assert!(maxima.windows(2).all(|w| w[1] <= w[0]));
        assert!(maxima[field.len() - 1] < 1.0);
    }

    #[test]
    fn unstable_step_rejected() {
        let s = FieldSpec {
            diffusivity: 1.0,
            ..spec(InitialCondition::Random)
        };
        assert!(matches!(
            generate_diffusion(&s),
            Err(ShredError::InvalidSpec { field, .. }) if field == "diffusivity"
        ));
    }
}
