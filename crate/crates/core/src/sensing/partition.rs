use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{SensorTrajectory, WindowSample};
use crate::error::{Result, ShredError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// End times shuffled uniformly (interpolation).
    Random,
    /// Contiguous blocks in time order (extrapolation).
    Temporal,
}

impl std::fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PartitionMode::Random => "random",
            PartitionMode::Temporal => "temporal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = ShredError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(ShredError::arg(format!("unknown split `{other}`"))),
        }
    }
}

/// Disjoint, sorted sets of window end times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub mode: PartitionMode,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Owned window subsets for one partition.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<WindowSample>,
    pub val: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
}

impl Partition {
    pub fn times(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Windows whose end time falls in `split`. `samples` must be the full
    /// contiguous window list the partition was built from.
    pub fn select(&self, samples: &[WindowSample], split: Split) -> Vec<WindowSample> {
        let first = samples.first().map_or(0, |s| s.t_index);
        self.times(split).iter().map(|&t| samples[t - first].clone()).collect()
    }

    pub fn apply(&self, samples: &[WindowSample]) -> Splits {
        Splits {
            train: self.select(samples, Split::Train),
            val: self.select(samples, Split::Val),
            test: self.select(samples, Split::Test),
        }
    }

    /// CSV rows `(t_index, split)` in time order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut rows: Vec<(usize, Split)> = [Split::Train, Split::Val, Split::Test]
            .iter()
            .flat_map(|&s| self.times(s).iter().map(move |&t| (t, s)))
            .collect();
        rows.sort_unstable_by_key(|r| r.0);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_index", "split"])?;
        for (t, s) in rows {
            w.write_record([t.to_string(), s.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a partition CSV; mode and seed are not stored in the file.
pub fn read_partition_csv(path: &Path, mode: PartitionMode, seed: u64) -> Result<Partition> {
    let mut r = csv::Reader::from_path(path)?;
    let mut p = Partition {
        mode,
        train: vec![],
        val: vec![],
        test: vec![],
        seed,
    };
    for record in r.records() {
        let record = record?;
        let t: usize = record
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ShredError::Format(format!("bad partition row {record:?}")))?;
        let split: Split = record.get(1).unwrap_or("").parse()?;
        match split {
            Split::Train => p.train.push(t),
            Split::Val => p.val.push(t),
            Split::Test => p.test.push(t),
        }
    }
    Ok(p)
}

/// Splits window end times into train/validation/test.
///
/// Counts are `round(f_train * total)` and `round(f_val * total)`, the
/// remainder goes to test.
pub fn partition_windows(
    samples: &[WindowSample],
    mode: PartitionMode,
    fractions: [f64; 3],
    seed: u64,
) -> Result<Partition> {
    if fractions.iter().any(|f| !(*f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(ShredError::arg(format!(
            "fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let total = samples.len();
    let n_train = (fractions[0] * total as f64).round() as usize;
    let n_val = (fractions[1] * total as f64).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= total {
        return Err(ShredError::arg(format!(
            "{total} windows cannot fill three nonempty splits with fractions {fractions:?}"
        )));
    }
    let mut times: Vec<usize> = samples.iter().map(|s| s.t_index).collect();
    if mode == PartitionMode::Random {
        times.shuffle(&mut seed::rng(seed));
    }
    let take = |range: std::ops::Range<usize>| {
        let mut v = times[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(Partition {
        mode,
        train: take(0..n_train),
        val: take(n_train..n_train + n_val),
        test: take(n_train + n_val..total),
        seed,
    })
}

/// Warning text when a temporal split is asked to extrapolate along a
/// trajectory that never repeats.
pub fn extrapolation_warning(mode: PartitionMode, traj: &SensorTrajectory) -> Option<String> {
    (mode == PartitionMode::Temporal && traj.period().is_none()).then(|| {
        "temporal partition with a non-periodic sensor trajectory: test windows follow \
         sensor paths never seen in training"
            .to_string()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn windows(count: usize) -> Vec<WindowSample> {
        (0..count)
            .map(|i| WindowSample {
                inputs: vec![i as f64],
                steps: 1,
                width: 1,
                target: vec![i as f64],
                t_index: i + 99,
            })
            .collect()
    }

    #[test]
    fn counts_follow_fractions() {
        let w = windows(1157);
        let f = [900.0 / 1157.0, 128.5 / 1157.0, 128.5 / 1157.0];
        let p = partition_windows(&w, PartitionMode::Random, f, 1).unwrap();
        assert_eq!(p.train.len(), 900);
        assert_eq!(p.val.len() + p.test.len(), 257);
        assert!(p.val.len().abs_diff(p.test.len()) <= 1);
        let mut all: Vec<usize> = [p.train.clone(), p.val.clone(), p.test.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (99..1256).collect::<Vec<_>>());
        assert_eq!(p, partition_windows(&w, PartitionMode::Random, f, 1).unwrap());
    }

    #[test]
    fn temporal_is_ordered() {
        let w = windows(100);
        let p = partition_windows(&w, PartitionMode::Temporal, [0.7, 0.15, 0.15], 0).unwrap();
        assert!(p.train.iter().max() < p.val.iter().min());
        assert!(p.val.iter().max() < p.test.iter().min());
    }

    #[test]
    fn empty_split_rejected() {
        let w = windows(5);
        assert!(partition_windows(&w, PartitionMode::Random, [0.98, 0.01, 0.01], 0).is_err());
        assert!(partition_windows(&w, PartitionMode::Random, [0.5, 0.5, 0.0], 0).is_err());
    }

    #[test]
    fn select_and_csv() {
        let w = windows(20);
        let p = partition_windows(&w, PartitionMode::Random, [0.5, 0.25, 0.25], 4).unwrap();
        let s = p.apply(&w);
        assert!(s.test.iter().all(|x| p.test.contains(&x.t_index)));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        p.write_csv(&path).unwrap();
        assert_eq!(read_partition_csv(&path, p.mode, p.seed).unwrap(), p);
    }
}
