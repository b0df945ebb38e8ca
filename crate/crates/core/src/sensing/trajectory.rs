use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Result, ShredError};
use crate::grid;
use crate::seed;

/// Per-snapshot node indices of `m` point sensors; row `t` holds the rows
/// of the identity selected by `C_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorTrajectory {
    positions: Vec<usize>,
    sensors: usize,
    period: Option<usize>,
}

impl SensorTrajectory {
    pub fn new(rows: Vec<Vec<usize>>, period: Option<usize>) -> Result<Self> {
        let sensors = rows.first().map_or(0, Vec::len);
        if sensors == 0 {
            return Err(ShredError::arg("trajectory needs at least one sensor and one step"));
        }
        if let Some(t) = rows.iter().position(|r| r.len() != sensors) {
            return Err(ShredError::arg(format!(
                "step {t} has {} sensors, expected {sensors}",
                rows[t].len()
            )));
        }
        let traj = SensorTrajectory {
            positions: rows.into_iter().flatten().collect(),
            sensors,
            period,
        };
        traj.check_period()?;
        Ok(traj)
    }

    fn check_period(&self) -> Result<()> {
        if let Some(p) = self.period {
            if p == 0 {
                return Err(ShredError::arg("period must be >= 1"));
            }
            if let Some(t) = (p..self.len()).find(|&t| self.at(t) != self.at(t % p)) {
                return Err(ShredError::arg(format!(
                    "trajectory marked periodic with period {p} differs at t={t}"
                )));
            }
        }
        Ok(())
    }

    /// Number of snapshots covered.
    pub fn len(&self) -> usize {
        self.positions.len() / self.sensors
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    pub fn at(&self, t: usize) -> &[usize] {
        &self.positions[t * self.sensors..(t + 1) * self.sensors]
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.positions.iter().copied()
    }

    /// Checks every index against a field with `n` nodes and `len` snapshots.
    pub fn check_against(&self, n: usize, len: usize) -> Result<()> {
        if let Some(&bad) = self.positions.iter().find(|&&i| i >= n) {
            return Err(ShredError::Index { index: bad, len: n });
        }
        if self.len() < len {
            return Err(ShredError::arg(format!(
                "trajectory covers {} snapshots, field has {len}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Runs sensors of several trajectories in parallel (`m = sum m_i`).
    pub fn combine(parts: &[&SensorTrajectory]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| ShredError::arg("no trajectories to combine"))?;
        let len = first.len();
        if parts.iter().any(|p| p.len() != len) {
            return Err(ShredError::arg("combined trajectories must have equal length"));
        }
        let period = parts
            .iter()
            .map(|p| p.period)
            .try_fold(1usize, |acc, p| p.map(|p| lcm(acc, p)));
        let rows = (0..len)
            .map(|t| parts.iter().flat_map(|p| p.at(t).iter().copied()).collect())
            .collect();
        SensorTrajectory::new(rows, period)
    }

    /// CSV with columns `t,sensor_id,node_index`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "sensor_id", "node_index"])?;
        for t in 0..self.len() {
            for (s, node) in self.at(t).iter().enumerate() {
                w.write_record([t.to_string(), s.to_string(), node.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Periodicity
    /// is not stored and is detected as the smallest exact period.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |i: usize| -> Result<usize> {
                record
                    .get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| ShredError::Format(format!("bad trajectory row {record:?}")))
            };
            let (t, s, node) = (field(0)?, field(1)?, field(2)?);
            if t == rows.len() {
                rows.push(Vec::new());
            }
            if t + 1 != rows.len() || s != rows[t].len() {
                return Err(ShredError::Format(format!(
                    "trajectory rows out of order at t={t}, sensor {s}"
                )));
            }
            rows[t].push(node);
        }
        let mut traj = SensorTrajectory::new(rows, None)?;
        traj.period = (1..=traj.len())
            .find(|&p| (p..traj.len()).all(|t| traj.at(t) == traj.at(t % p)))
            .filter(|&p| p < traj.len());
        Ok(traj)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// `m` distinct nodes drawn uniformly without replacement, held fixed.
pub fn immobile_trajectory(n: usize, m: usize, len: usize, seed: u64) -> Result<SensorTrajectory> {
    if m == 0 || m > n {
        return Err(ShredError::arg(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    if len == 0 {
        return Err(ShredError::arg("trajectory length must be positive"));
    }
    let mut rng = seed::rng(seed);
    let nodes = sample(&mut rng, n, m).into_vec();
    SensorTrajectory::new(vec![nodes; len], Some(1))
}

/// Single sensor starting at the lattice center; at every positive multiple
/// of `step_interval` it moves one node along one axis. Each of the
/// `2 * axes` moves is equally likely; moves leaving the lattice are
/// rejected and redrawn.
pub fn random_walk_trajectory(
    grid_shape: &[usize],
    len: usize,
    step_interval: usize,
    seed: u64,
) -> Result<SensorTrajectory> {
    if step_interval == 0 {
        return Err(ShredError::arg("step_interval must be >= 1"));
    }
    if grid_shape.is_empty() || grid_shape.contains(&0) || len == 0 {
        return Err(ShredError::arg("random walk needs a nonempty lattice and length"));
    }
    let mut rng = seed::rng(seed);
    let mut pos = grid::coords(grid::center(grid_shape), grid_shape);
    let can_move = grid_shape.iter().any(|&l| l > 1);
    let mut rows = Vec::with_capacity(len);
    for t in 0..len {
        if t > 0 && t % step_interval == 0 && can_move {
            loop {
                let mv = rng.random_range(0..2 * grid_shape.len());
                let axis = mv / 2;
                if mv % 2 == 0 && pos[axis] + 1 < grid_shape[axis] {
                    pos[axis] += 1;
                    break;
                }
                if mv % 2 == 1 && pos[axis] > 0 {
                    pos[axis] -= 1;
                    break;
                }
            }
        }
        rows.push(vec![grid::index(&pos, grid_shape)]);
    }
    let period = if can_move { None } else { Some(1) };
    SensorTrajectory::new(rows, period)
}

/// Closed loop through `waypoints` (lattice coordinates), traversed at
/// constant speed once every `period` snapshots and rounded to the nearest
/// node.
pub fn circuit_trajectory(
    grid_shape: &[usize],
    len: usize,
    waypoints: &[Vec<usize>],
    period: usize,
) -> Result<SensorTrajectory> {
    if waypoints.is_empty() {
        return Err(ShredError::arg("circuit needs at least one waypoint"));
    }
    if period == 0 || period > len {
        return Err(ShredError::arg(format!(
            "circuit period must be in 1..={len}, got {period}"
        )));
    }
    for w in waypoints {
        if w.len() != grid_shape.len() || w.iter().zip(grid_shape).any(|(&c, &l)| c >= l) {
            return Err(ShredError::arg(format!(
                "waypoint {w:?} outside lattice {grid_shape:?}"
            )));
        }
    }
    let pts: Vec<Vec<f64>> = waypoints
        .iter()
        .map(|w| w.iter().map(|&c| c as f64).collect())
        .collect();
    let segments: Vec<f64> = (0..pts.len())
        .map(|i| {
            let (a, b) = (&pts[i], &pts[(i + 1) % pts.len()]);
            a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let total: f64 = segments.iter().sum();

    let one_loop: Vec<usize> = (0..period)
        .map(|t| {
            if total == 0.0 {
                return grid::index(&waypoints[0], grid_shape);
            }
            let mut s = total * t as f64 / period as f64;
            let mut seg = 0;
            while seg + 1 < segments.len() && s >= segments[seg] {
                s -= segments[seg];
                seg += 1;
            }
            let (a, b) = (&pts[seg], &pts[(seg + 1) % pts.len()]);
            let frac = if segments[seg] > 0.0 { s / segments[seg] } else { 0.0 };
            let coords: Vec<usize> = a
                .iter()
                .zip(b)
                .zip(grid_shape)
                .map(|((x, y), &l)| ((x + frac * (y - x)).round().max(0.0) as usize).min(l - 1))
                .collect();
            grid::index(&coords, grid_shape)
        })
        .collect();
    let rows = (0..len).map(|t| vec![one_loop[t % period]]).collect();
    SensorTrajectory::new(rows, Some(period))
}
