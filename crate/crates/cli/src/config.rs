//! Experiment configuration. One TOML file describes one reproducible
//! experiment; every table rejects unknown keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shred_core::fieldgen::{FieldDataset, FieldSpec};
use shred_core::grid;
use shred_core::optimizer::TrainConfig;
use shred_core::pipeline::{ModelSpec, PartitionSpec, Setup};
use shred_core::seed::derive_seed;
use shred_core::sensing::{
    circuit_trajectory, immobile_trajectory, random_walk_trajectory, PartitionMode, SensorTrajectory,
};
use shred_core::{Result, ShredError};

/// How a sensor path is built. Seeded variants draw from the seed passed to
/// [`TrajectorySpec::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// `sensors` distinct fixed nodes drawn from the seed.
    Immobile {
        #[serde(default = "one")]
        sensors: usize,
    },
    /// Fixed, explicitly chosen nodes.
    Fixed { nodes: Vec<usize> },
    RandomWalk {
        #[serde(default = "one")]
        step_interval: usize,
    },
    /// Closed loop through lattice waypoints, one lap per `period`.
    Circuit { waypoints: Vec<Vec<usize>>, period: usize },
}

fn one() -> usize {
    1
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec::RandomWalk { step_interval: 1 }
    }
}

impl TrajectorySpec {
    pub fn build(&self, grid_shape: &[usize], len: usize, seed: u64) -> Result<SensorTrajectory> {
        let n = grid::node_count(grid_shape);
        match self {
            TrajectorySpec::Immobile { sensors } => immobile_trajectory(n, *sensors, len, seed),
            TrajectorySpec::Fixed { nodes } => SensorTrajectory::new(vec![nodes.clone(); len], Some(1)),
            TrajectorySpec::RandomWalk { step_interval } => {
                random_walk_trajectory(grid_shape, len, *step_interval, seed)
            }
            TrajectorySpec::Circuit { waypoints, period } => circuit_trajectory(grid_shape, len, waypoints, *period),
        }
    }

    pub fn validate(&self, key: &str, grid_shape: &[usize], len: usize) -> Result<()> {
        let n = grid::node_count(grid_shape);
        let bad = |field: &str, reason: String| {
            Err(ShredError::InvalidSpec {
                field: format!("{key}.{field}"),
                reason,
            })
        };
        match self {
            TrajectorySpec::Immobile { sensors } if *sensors == 0 || *sensors > n => {
                bad("sensors", format!("must be in 1..={n}"))
            }
            TrajectorySpec::Fixed { nodes } if nodes.is_empty() || nodes.iter().any(|&v| v >= n) => {
                bad("nodes", format!("must be a nonempty list of node indices below {n}"))
            }
            TrajectorySpec::RandomWalk { step_interval } if *step_interval == 0 => {
                bad("step_interval", "must be >= 1".into())
            }
            TrajectorySpec::Circuit { period, .. } if *period == 0 || *period > len => {
                bad("period", format!("must be in 1..={len}"))
            }
            TrajectorySpec::Circuit { waypoints, .. }
                if waypoints.is_empty()
                    || waypoints
                        .iter()
                        .any(|w| w.len() != grid_shape.len() || w.iter().zip(grid_shape).any(|(c, l)| c >= l)) =>
            {
                bad(
                    "waypoints",
                    format!("must be lattice coordinates inside {grid_shape:?}"),
                )
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub count: usize,
    pub mobile: TrajectorySpec,
    pub immobile: TrajectorySpec,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            count: 20,
            mobile: TrajectorySpec::RandomWalk { step_interval: 3 },
            immobile: TrajectorySpec::Immobile { sensors: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub widths: Vec<usize>,
    pub repeats: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            widths: vec![1, 2, 3, 5, 8, 16],
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteTableSection {
    /// Each entry names routes from `[routes]`; several names form one
    /// multi-sensor model.
    pub combinations: Vec<Vec<String>>,
    pub partitions: Vec<PartitionMode>,
}

impl Default for RouteTableSection {
    fn default() -> Self {
        RouteTableSection {
            combinations: Vec::new(),
            partitions: vec![PartitionMode::Random, PartitionMode::Temporal],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselinesSection {
    /// Ridge parameter of the linear model.
    pub lambda: f64,
    /// Feed the linear model the whole flattened window.
    pub lagged: bool,
    /// Independent repetitions (field, partition and initialization seeds).
    pub repeats: usize,
}

impl Default for BaselinesSection {
    fn default() -> Self {
        BaselinesSection {
            lambda: 1e-8,
            lagged: false,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Number of snapshot triptychs written by `eval`.
    pub triptychs: usize,
    /// Pixels per node edge in the triptychs.
    pub pixel_scale: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            triptychs: 3,
            pixel_scale: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory; the command line and `SHRED_OUT` take precedence.
    pub out: Option<PathBuf>,
    /// Snapshot file to use instead of generating `[field]`.
    pub dataset: Option<PathBuf>,
    pub field: FieldSpec,
    pub trajectory: TrajectorySpec,
    pub model: ModelSpec,
    pub partition: PartitionSpec,
    pub train: TrainConfig,
    pub ensemble: EnsembleSection,
    pub sweep: SweepSection,
    pub routes: BTreeMap<String, TrajectorySpec>,
    pub route_table: RouteTableSection,
    pub baselines: BaselinesSection,
    pub eval: EvalSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ShredError::InvalidSpec {
            field: "config".into(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ShredError::InvalidSpec {
            field: "config".into(),
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    pub fn setup(&self) -> Setup {
        Setup {
            model: self.model.clone(),
            partition: self.partition.clone(),
            train: self.train.clone(),
        }
    }

    /// Seed of the main trajectory.
    pub fn trajectory_seed(&self) -> u64 {
        derive_seed(self.seed, "trajectory", 0)
    }

    /// Static checks run before any compute. Grid-dependent checks use
    /// `[field]` unless a dataset is supplied, in which case they run again
    /// once it is loaded.
    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.validate_against(&self.field.grid_shape, self.field.snapshots)
    }

    pub fn validate_against(&self, grid_shape: &[usize], len: usize) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        let f = self.partition.fractions;
        if f.iter().any(|v| !(*v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ShredError::InvalidSpec {
                field: "partition.fractions".into(),
                reason: format!("must be positive and sum to 1, got {f:?}"),
            });
        }
        if self.model.lag >= len {
            return Err(ShredError::InvalidSpec {
                field: "model.lag".into(),
                reason: format!("must be below the snapshot count {len}"),
            });
        }
        self.trajectory.validate("trajectory", grid_shape, len)?;
        self.ensemble.mobile.validate("ensemble.mobile", grid_shape, len)?;
        self.ensemble.immobile.validate("ensemble.immobile", grid_shape, len)?;
        for (name, spec) in &self.routes {
            spec.validate(&format!("routes.{name}"), grid_shape, len)?;
        }
        for combo in &self.route_table.combinations {
            if combo.is_empty() {
                return Err(ShredError::InvalidSpec {
                    field: "route_table.combinations".into(),
                    reason: "combinations must be nonempty".into(),
                });
            }
            if let Some(name) = combo.iter().find(|n| !self.routes.contains_key(*n)) {
                return Err(ShredError::InvalidSpec {
                    field: "route_table.combinations".into(),
                    reason: format!("unknown route `{name}`"),
                });
            }
        }
        if self.sweep.widths.is_empty() || self.sweep.widths.contains(&0) || self.sweep.repeats == 0 {
            return Err(ShredError::InvalidSpec {
                field: "sweep".into(),
                reason: "widths must be a nonempty list of positive values and repeats >= 1".into(),
            });
        }
        if !(self.baselines.lambda >= 0.0) || self.baselines.repeats == 0 {
            return Err(ShredError::InvalidSpec {
                field: "baselines".into(),
                reason: "lambda must be >= 0 and repeats >= 1".into(),
            });
        }
        if self.eval.pixel_scale == 0 {
            return Err(ShredError::InvalidSpec {
                field: "eval.pixel_scale".into(),
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        crate::manifest::sha256_hex(&json)
    }

    pub fn load_dataset(&self, out: &Path) -> Result<FieldDataset> {
        let path = self
            .dataset
            .clone()
            .unwrap_or_else(|| out.join(crate::commands::FIELD_FILE));
        if !path.exists() {
            return Err(ShredError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "dataset {} not found; run `shred generate` or set `dataset`",
                    path.display()
                ),
            )));
        }
        let field = shred_core::fieldgen::read_snapshot_file(&path)?;
        self.validate_against(field.grid_shape(), field.len())?;
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml("[train]\nepochz = 3\n").unwrap_err();
        assert!(err.to_string().contains("epochz"), "{err}");
    }

    #[test]
    fn validation_names_key() {
        let cfg = ExperimentConfig::from_toml("[field]\nrank = 500\ngrid_shape = [4, 4]\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("rank"));
        let cfg = ExperimentConfig::from_toml("[train]\nepochs = 0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("train.epochs"));
        let cfg = ExperimentConfig::from_toml("[trajectory]\nkind = \"circuit\"\nwaypoints = [[0, 99]]\nperiod = 10\n")
            .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("trajectory.waypoints"));
        let cfg = ExperimentConfig::from_toml("[route_table]\ncombinations = [[\"nope\"]]\n").unwrap();
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("route_table.combinations"));
    }

    #[test]
    fn trajectory_tables_parse() {
        let cfg = ExperimentConfig::from_toml(
            "[routes.loop]\nkind = \"circuit\"\nwaypoints = [[0, 0], [3, 3]]\nperiod = 20\n\n[routes.still]\nkind = \"immobile\"\n",
        )
        .unwrap();
        assert_eq!(cfg.routes["still"], TrajectorySpec::Immobile { sensors: 1 });
        assert!(matches!(cfg.routes["loop"], TrajectorySpec::Circuit { period: 20, .. }));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
