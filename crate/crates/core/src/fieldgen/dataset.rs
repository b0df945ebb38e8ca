use crate::error::{Result, ShredError};

/// Snapshot matrix `n × N` stored column-major: snapshot `t` is the
/// contiguous slice `[t * n, (t + 1) * n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDataset {
    snapshots: Vec<f64>,
    grid_shape: Vec<usize>,
    len: usize,
    pub dt: f64,
    pub name: String,
}

impl FieldDataset {
    pub fn new(
        snapshots: Vec<f64>,
        grid_shape: Vec<usize>,
        len: usize,
        dt: f64,
        name: impl Into<String>,
    ) -> Result<Self> {
        let n: usize = grid_shape.iter().product();
        if grid_shape.is_empty() || n == 0 {
            return Err(ShredError::spec("grid_shape", "must describe at least one node"));
        }
        if snapshots.len() != n * len {
            return Err(ShredError::Shape(format!(
                "{} values for {n} nodes x {len} snapshots",
                snapshots.len()
            )));
        }
        if len < 3 {
            return Err(ShredError::spec("snapshots", "need at least 3 snapshots"));
        }
        if let Some(pos) = snapshots.iter().position(|v| !v.is_finite()) {
            return Err(ShredError::NumericFailure {
                array: format!("snapshots[node {}, t {}]", pos % n, pos / n),
            });
        }
        Ok(FieldDataset {
            snapshots,
            grid_shape,
            len,
            dt,
            name: name.into(),
        })
    }

    /// Number of spatial nodes.
    pub fn n(&self) -> usize {
        self.snapshots.len() / self.len
    }

    /// Number of snapshots.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn grid_shape(&self) -> &[usize] {
        &self.grid_shape
    }

    pub fn snapshot(&self, t: usize) -> &[f64] {
        let n = self.n();
        &self.snapshots[t * n..(t + 1) * n]
    }

    pub fn value(&self, node: usize, t: usize) -> f64 {
        self.snapshots[t * self.n() + node]
    }

    pub fn node_series(&self, node: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.value(node, t)).collect()
    }

    /// Column-major `n × N` data.
    pub fn as_column_major(&self) -> &[f64] {
        &self.snapshots
    }

    /// Column-major submatrix made of the selected snapshots.
    pub fn select_columns(&self, times: &[usize]) -> Vec<f64> {
        times.iter().flat_map(|&t| self.snapshot(t).iter().copied()).collect()
    }
}
