use super::SensorTrajectory;
use crate::error::{Result, ShredError};
use crate::fieldgen::FieldDataset;
use crate::grid;

/// One training pair: `steps × width` inputs (row `i` is the measurement at
/// snapshot `t_index - steps + 1 + i`) and the full state at `t_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub inputs: Vec<f64>,
    pub steps: usize,
    pub width: usize,
    pub target: Vec<f64>,
    pub t_index: usize,
}

impl WindowSample {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.width..(i + 1) * self.width]
    }

    /// The measurement at `t_index` alone.
    pub fn last_row(&self) -> &[f64] {
        self.row(self.steps - 1)
    }
}

/// `C_t x_t`: the values of snapshot `t` at the sensor nodes, in sensor order.
pub fn measure(field: &FieldDataset, traj: &SensorTrajectory, t: usize) -> Result<Vec<f64>> {
    if t >= field.len() {
        return Err(ShredError::Index {
            index: t,
            len: field.len(),
        });
    }
    if t >= traj.len() {
        return Err(ShredError::Index {
            index: t,
            len: traj.len(),
        });
    }
    let x = field.snapshot(t);
    traj.at(t)
        .iter()
        .map(|&node| {
            x.get(node).copied().ok_or(ShredError::Index {
                index: node,
                len: x.len(),
            })
        })
        .collect()
}

/// One window per end time `T` in `[K, N-1]`, unscaled: the first `K`
/// snapshots are set aside, leaving `N - K` windows of `K` rows each.
///
/// With `coord_channels`, each row holds the `m` measurements followed by
/// every sensor's lattice coordinates, normalized per axis to `[0, 1]`.
pub fn assemble_windows(
    field: &FieldDataset,
    traj: &SensorTrajectory,
    lag: usize,
    coord_channels: bool,
) -> Result<Vec<WindowSample>> {
    let len = field.len();
    if lag == 0 || lag >= len {
        return Err(ShredError::arg(format!("lag K must be in 1..{len}, got {lag}")));
    }
    traj.check_against(field.n(), len)?;
    let shape = field.grid_shape();
    let m = traj.sensors();
    let width = if coord_channels { m * (1 + shape.len()) } else { m };

    let rows: Vec<Vec<f64>> = (0..len)
        .map(|t| {
            let mut row = measure(field, traj, t)?;
            if coord_channels {
                for &node in traj.at(t) {
                    row.extend(grid::coords(node, shape).iter().zip(shape).map(|(&c, &l)| {
                        if l > 1 {
                            c as f64 / (l - 1) as f64
                        } else {
                            0.0
                        }
                    }));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    Ok((lag..len)
        .map(|t| WindowSample {
            inputs: rows[t + 1 - lag..=t].concat(),
            steps: lag,
            width,
            target: field.snapshot(t).to_vec(),
            t_index: t,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{immobile_trajectory, random_walk_trajectory};

    fn field(n: usize, len: usize, f: impl Fn(usize, usize) -> f64) -> FieldDataset {
        let data = (0..len)
            .flat_map(|t| (0..n).map(move |i| (i, t)))
            .map(|(i, t)| f(i, t))
            .collect();
        FieldDataset::new(data, vec![n], len, 1.0, "test").unwrap()
    }

    #[test]
    fn measure_selects_hot_node() {
        let f = field(6, 4, |i, _| if i == 3 { 1.0 } else { 0.0 });
        let traj = SensorTrajectory::new(vec![vec![3]; 4], Some(1)).unwrap();
        assert_eq!(measure(&f, &traj, 2).unwrap(), vec![1.0]);
        assert!(matches!(measure(&f, &traj, 4), Err(ShredError::Index { .. })));
    }

    #[test]
    fn measure_matches_selection_matrix() {
        let f = field(12, 30, |i, t| ((i * 7 + t * 3) % 11) as f64 - 0.3 * i as f64);
        let traj = random_walk_trajectory(&[3, 4], 30, 1, 2).unwrap();
        for t in 0..30 {
            // C_t as explicit identity rows.
            let rows: Vec<Vec<f64>> = traj
                .at(t)
                .iter()
                .map(|&node| (0..12).map(|j| if j == node { 1.0 } else { 0.0 }).collect())
                .collect();
            let x = f.snapshot(t);
            let expected: Vec<f64> = rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
            assert_eq!(measure(&f, &traj, t).unwrap(), expected);
        }
    }

    #[test]
    fn window_count_and_alignment() {
        let f = field(5, 1257, |i, t| (i + 10 * t) as f64);
        let traj = immobile_trajectory(5, 1, 1257, 0).unwrap();
        let node = traj.at(0)[0];
        let w = assemble_windows(&f, &traj, 100, false).unwrap();
        assert_eq!(w.len(), 1157);
        assert_eq!(w[0].t_index, 100);
        assert_eq!(w[0].row(0), [f.value(node, 1)]);
        assert_eq!(w[0].last_row(), [f.value(node, 100)]);
        assert_eq!(w[0].target, f.snapshot(100));

        let k1 = assemble_windows(&f, &traj, 1, false).unwrap();
        assert_eq!(k1.len(), 1256);
        assert_eq!(k1[10].inputs, vec![f.value(node, 11)]);
        assert!(assemble_windows(&f, &traj, 1257, false).is_err());
    }

    #[test]
    fn constant_field_rows_identical() {
        let f = field(4, 20, |_, _| 3.0);
        let traj = random_walk_trajectory(&[4], 20, 1, 0).unwrap();
        for w in assemble_windows(&f, &traj, 6, false).unwrap() {
            assert!((0..6).all(|i| w.row(i) == [3.0]));
        }
    }

    #[test]
    fn coordinate_channels() {
        let data = vec![0.0; 6 * 5];
        let f = FieldDataset::new(data, vec![2, 3], 5, 1.0, "c").unwrap();
        let traj = SensorTrajectory::new(vec![vec![5]; 5], Some(1)).unwrap();
        let w = assemble_windows(&f, &traj, 2, true).unwrap();
        assert_eq!(w[0].width, 3);
        assert_eq!(w[0].row(0), [0.0, 1.0, 1.0]);
    }
}
