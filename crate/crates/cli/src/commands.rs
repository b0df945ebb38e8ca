//! One function per subcommand. Each validates its inputs, writes its
//! artifacts under the output directory and records them in a manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shred_core::baselines::compare_models;
use shred_core::eval::{
    compare_distributions, ensemble_mse_distribution, evaluate, hidden_size_sweep, predict_physical, route_table,
    write_route_table_csv, write_triptych, BoxStats, DistributionComparison, EvalReport, RouteCell, SweepReport,
    TriptychLayout,
};
use shred_core::fieldgen::{generate, write_csv_preview, write_snapshot_file, FieldDataset};
use shred_core::nncore::{Architecture, LossKind, ShredParams};
use shred_core::optimizer::train_ensemble;
use shred_core::pipeline::fit_shred;
use shred_core::seed::derive_seed;
use shred_core::sensing::{assemble_windows, read_partition_csv, PartitionMode, Scaler, SensorTrajectory, Split};
use shred_core::{Result, ShredError};

use crate::config::{ExperimentConfig, TrajectorySpec};
use crate::manifest::{ManifestBuilder, RunManifest};

pub const FIELD_FILE: &str = "field.shrd";
pub const CHECKPOINT_FILE: &str = "checkpoint.shrp";
pub const MODEL_FILE: &str = "model.json";
pub const SCALER_FILE: &str = "scaler.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const PARTITION_FILE: &str = "partition.csv";

fn builder(cfg: &ExperimentConfig, out: &Path, command: &str) -> Result<ManifestBuilder> {
    std::fs::create_dir_all(out)?;
    Ok(ManifestBuilder::new(out, command, cfg.hash(), cfg.seed))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ShredError::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| ShredError::Format(format!("{}: {e}", path.display())))
}

/// The configured dataset file if one exists, otherwise `[field]`
/// generated in memory.
fn experiment_field(cfg: &ExperimentConfig, out: &Path) -> Result<FieldDataset> {
    let stored = cfg.dataset.clone().unwrap_or_else(|| out.join(FIELD_FILE));
    if cfg.dataset.is_some() || stored.exists() {
        cfg.load_dataset(out)
    } else {
        generate(&cfg.field)
    }
}

fn sample_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<FieldDataset> {
    cfg.validate()?;
    let mut m = builder(cfg, out, "generate")?;
    let field = generate(&cfg.field)?;
    m.stage("generate");
    write_snapshot_file(&m.path(FIELD_FILE), &field)?;
    m.artifact(FIELD_FILE)?;
    write_csv_preview(&m.path("field_preview.csv"), &field, Some(50))?;
    m.artifact("field_preview.csv")?;
    m.stage("write");
    m.finish()?;
    Ok(field)
}

/// What `eval` needs to rebuild a trained run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunModel {
    pub architecture: Architecture,
    pub lag: usize,
    pub coord_channels: bool,
    pub loss: LossKind,
    pub partition: PartitionMode,
    pub partition_seed: u64,
    pub grid_shape: Vec<usize>,
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub test_mse: f64,
    pub test_nmse: f64,
    pub snapshot_id: String,
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    let mut m = builder(cfg, out, "train")?;
    let field = cfg.load_dataset(out)?;
    let traj = cfg
        .trajectory
        .build(field.grid_shape(), field.len(), cfg.trajectory_seed())?;
    m.stage("load");
    let run = fit_shred(&field, &traj, &cfg.setup(), cfg.seed, 0)?;
    m.stage("train");

    run.params.save(&m.path(CHECKPOINT_FILE))?;
    m.artifact(CHECKPOINT_FILE)?;
    let model = RunModel {
        architecture: run.params.architecture(),
        lag: cfg.model.lag,
        coord_channels: cfg.model.coord_channels,
        loss: cfg.train.loss,
        partition: run.prepared.partition.mode,
        partition_seed: run.prepared.partition.seed,
        grid_shape: field.grid_shape().to_vec(),
        snapshots: field.len(),
    };
    write_json(&m.path(MODEL_FILE), &model)?;
    m.artifact(MODEL_FILE)?;
    write_json(&m.path(SCALER_FILE), &run.prepared.scaler)?;
    m.artifact(SCALER_FILE)?;
    run.report.write_csv(&m.path("train_report.csv"))?;
    m.artifact("train_report.csv")?;
    traj.write_csv(&m.path(TRAJECTORY_FILE))?;
    m.artifact(TRAJECTORY_FILE)?;
    run.prepared.partition.write_csv(&m.path(PARTITION_FILE))?;
    m.artifact(PARTITION_FILE)?;
    m.stage("write");
    m.finish()?;
    Ok(TrainSummary {
        best_epoch: run.report.best_epoch,
        best_val_mse: run.report.best_val_mse,
        test_mse: run.eval.mse,
        test_nmse: run.eval.nmse,
        snapshot_id: run.report.snapshot_id,
    })
}

/// Evaluates a trained run (the directory written by `train`) on one split
/// of the dataset.
pub fn cmd_eval(cfg: &ExperimentConfig, out: &Path, run_dir: &Path, split: Split) -> Result<EvalReport> {
    cfg.validate()?;
    RunManifest::read(run_dir, "train")?.verify(run_dir)?;
    let model: RunModel = read_json(&run_dir.join(MODEL_FILE))?;
    let field = cfg.load_dataset(out)?;
    if field.n() != model.architecture.output || field.grid_shape() != model.grid_shape.as_slice() {
        return Err(ShredError::Shape(format!(
            "checkpoint was trained on grid {:?} ({} nodes); dataset has grid {:?} ({} nodes)",
            model.grid_shape,
            model.architecture.output,
            field.grid_shape(),
            field.n()
        )));
    }
    if field.len() != model.snapshots {
        return Err(ShredError::Shape(format!(
            "checkpoint was trained on {} snapshots; dataset has {}",
            model.snapshots,
            field.len()
        )));
    }
    let mut m = builder(cfg, out, "eval")?;
    let params = ShredParams::load(&run_dir.join(CHECKPOINT_FILE), &model.architecture)?;
    let scaler: Scaler = read_json(&run_dir.join(SCALER_FILE))?;
    let traj = SensorTrajectory::read_csv(&run_dir.join(TRAJECTORY_FILE))?;
    let partition = read_partition_csv(&run_dir.join(PARTITION_FILE), model.partition, model.partition_seed)?;
    let windows = assemble_windows(&field, &traj, model.lag, model.coord_channels)?;
    let selected = partition.select(&windows, split);
    m.stage("load");

    let report = evaluate(&params, &selected, &scaler)?;
    m.stage("evaluate");
    report.write_csv(&m.path("evalreport.csv"))?;
    m.artifact("evalreport.csv")?;
    report.histogram.write_csv(&m.path("histogram.csv"))?;
    m.artifact("histogram.csv")?;

    let count = cfg.eval.triptychs.min(selected.len());
    if count > 0 {
        let picks: Vec<_> = (0..count)
            .map(|k| &selected[k * selected.len() / count])
            .cloned()
            .collect();
        let (pred, target) = predict_physical(&params, &picks, &scaler)?;
        let layout = TriptychLayout::for_grid(field.grid_shape(), cfg.eval.pixel_scale);
        for (w, (p, t)) in picks.iter().zip(pred.iter().zip(&target)) {
            let name = format!("snapshot_{}_t{}.ppm", split.as_str(), w.t_index);
            write_triptych(&m.path(&name), t, p, layout)?;
            m.artifact(&name)?;
        }
    }
    m.stage("write");
    m.finish()?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    Mobile,
    Immobile,
}

impl EnsembleKind {
    pub fn label(self) -> &'static str {
        match self {
            EnsembleKind::Mobile => "mobile",
            EnsembleKind::Immobile => "immobile",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    pub label: &'static str,
    pub mses: Vec<f64>,
    pub failures: usize,
    pub pooled: Option<EvalReport>,
    pub boxplot: Option<BoxStats>,
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub outcomes: Vec<EnsembleOutcome>,
    /// First ensemble against the second, when two ran.
    pub comparison: Option<DistributionComparison>,
}

/// Trains the mobile and/or immobile ensembles. Members of the two kinds
/// share seeds, hence partitions and initializations.
pub fn cmd_ensemble(
    cfg: &ExperimentConfig,
    out: &Path,
    kinds: &[EnsembleKind],
    count: Option<usize>,
) -> Result<EnsembleSummary> {
    cfg.validate()?;
    let count = count.unwrap_or(cfg.ensemble.count);
    if count == 0 {
        return Err(ShredError::InvalidSpec {
            field: "ensemble.count".into(),
            reason: "must be >= 1".into(),
        });
    }
    let mut m = builder(cfg, out, "ensemble")?;
    let field = experiment_field(cfg, out)?;
    m.stage("load");
    let setup = cfg.setup();

    let mut mse_rows = csv::Writer::from_path(m.path("ensemble_mse.csv")).map_err(ShredError::from)?;
    mse_rows
        .write_record(["label", "member", "mse", "nmse", "best_epoch", "error"])
        .map_err(ShredError::from)?;
    let mut outcomes = Vec::new();
    for &kind in kinds {
        let spec: &TrajectorySpec = match kind {
            EnsembleKind::Mobile => &cfg.ensemble.mobile,
            EnsembleKind::Immobile => &cfg.ensemble.immobile,
        };
        let shape = field.grid_shape().to_vec();
        let len = field.len();
        let members = train_ensemble(
            &field,
            |s| spec.build(&shape, len, derive_seed(s, "trajectory", 0)),
            count,
            &setup,
            cfg.seed,
        );
        m.stage(&format!("train-{}", kind.label()));
        let mut mses = Vec::new();
        let mut reports = Vec::new();
        for member in &members {
            let record = match &member.outcome {
                Ok(run) => {
                    mses.push(run.eval.mse);
                    reports.push(run.eval.clone());
                    [
                        run.eval.mse.to_string(),
                        run.eval.nmse.to_string(),
                        run.report.best_epoch.to_string(),
                        String::new(),
                    ]
                }
                Err(e) => [String::new(), String::new(), String::new(), e.to_string()],
            };
            let mut row = vec![kind.label().to_string(), member.index.to_string()];
            row.extend(record);
            mse_rows.write_record(&row).map_err(ShredError::from)?;
        }
        let failures = members.len() - mses.len();
        let pooled = if reports.is_empty() {
            None
        } else {
            Some(EvalReport::pool(&reports)?)
        };
        let boxplot = ensemble_mse_distribution(&mses).ok();
        if let Some(p) = &pooled {
            let name = format!("histogram_{}.csv", kind.label());
            p.histogram.write_csv(&m.path(&name))?;
            m.artifact(&name)?;
        }
        outcomes.push(EnsembleOutcome {
            label: kind.label(),
            mses,
            failures,
            pooled,
            boxplot,
        });
    }
    mse_rows.flush()?;
    drop(mse_rows);
    m.artifact("ensemble_mse.csv")?;

    let rows: Vec<(String, BoxStats)> = outcomes
        .iter()
        .filter_map(|o| o.boxplot.clone().map(|b| (o.label.to_string(), b)))
        .collect();
    BoxStats::write_csv(&rows, &m.path("boxplot.csv"))?;
    m.artifact("boxplot.csv")?;

    let comparison = match outcomes.as_slice() {
        [a, b] => match (&a.pooled, &b.pooled) {
            (Some(pa), Some(pb)) => Some(compare_distributions(pa, pb)),
            _ => None,
        },
        _ => None,
    };
    if let Some(c) = &comparison {
        let mut w = csv::Writer::from_path(m.path("comparison.csv")).map_err(ShredError::from)?;
        w.write_record(["label", "error_mean", "error_variance"])
            .map_err(ShredError::from)?;
        w.write_record([outcomes[0].label, &c.mean_a.to_string(), &c.variance_a.to_string()])
            .map_err(ShredError::from)?;
        w.write_record([outcomes[1].label, &c.mean_b.to_string(), &c.variance_b.to_string()])
            .map_err(ShredError::from)?;
        w.write_record(["variance_ratio", "", &c.variance_ratio.to_string()])
            .map_err(ShredError::from)?;
        w.flush()?;
        drop(w);
        m.artifact("comparison.csv")?;
    }
    m.stage("write");
    m.finish()?;
    if outcomes.iter().all(|o| o.mses.is_empty()) {
        return Err(ShredError::NumericFailure {
            array: "every ensemble member failed".into(),
        });
    }
    Ok(EnsembleSummary { outcomes, comparison })
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, widths: Option<Vec<usize>>) -> Result<SweepReport> {
    let mut cfg = cfg.clone();
    if let Some(w) = widths {
        cfg.sweep.widths = w;
    }
    cfg.validate()?;
    let mut m = builder(&cfg, out, "sweep")?;
    let field = experiment_field(&cfg, out)?;
    let traj = cfg
        .trajectory
        .build(field.grid_shape(), field.len(), cfg.trajectory_seed())?;
    m.stage("load");
    let report = hidden_size_sweep(
        &field,
        &traj,
        &cfg.sweep.widths,
        cfg.sweep.repeats,
        &cfg.setup(),
        cfg.seed,
    )?;
    m.stage("train");
    report.write_csv(&m.path("sweep.csv"))?;
    m.artifact("sweep.csv")?;
    report.write_spectrum_csv(&m.path("spectrum.csv"))?;
    m.artifact("spectrum.csv")?;
    m.stage("write");
    m.finish()?;
    if report.cells.iter().all(|c| c.mses.is_empty()) {
        return Err(ShredError::NumericFailure {
            array: "every sweep cell failed".into(),
        });
    }
    Ok(report)
}

pub fn cmd_route_table(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RouteCell>> {
    cfg.validate()?;
    if cfg.route_table.combinations.is_empty() {
        return Err(ShredError::InvalidSpec {
            field: "route_table.combinations".into(),
            reason: "at least one route combination is required".into(),
        });
    }
    let mut m = builder(cfg, out, "route-table")?;
    let field = experiment_field(cfg, out)?;
    let names: Vec<&String> = cfg.routes.keys().collect();
    let routes = cfg
        .routes
        .iter()
        .enumerate()
        .map(|(i, (name, spec))| {
            let traj = spec.build(
                field.grid_shape(),
                field.len(),
                derive_seed(cfg.seed, "trajectory", i as u64),
            )?;
            Ok((name.clone(), traj))
        })
        .collect::<Result<Vec<_>>>()?;
    let combos: Vec<Vec<usize>> = cfg
        .route_table
        .combinations
        .iter()
        .map(|c| {
            c.iter()
                .map(|n| names.iter().position(|k| *k == n).expect("validated"))
                .collect()
        })
        .collect();
    m.stage("load");
    let cells = route_table(
        &field,
        &routes,
        &combos,
        &cfg.route_table.partitions,
        &cfg.setup(),
        cfg.seed,
    )?;
    m.stage("train");
    write_route_table_csv(&cells, &m.path("route_table.csv"))?;
    m.artifact("route_table.csv")?;
    m.stage("write");
    m.finish()?;
    if cells.iter().all(|c| c.mse.is_none()) {
        return Err(ShredError::NumericFailure {
            array: "every route-table cell failed".into(),
        });
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub model: String,
    pub mse_mean: f64,
    pub mse_sd: f64,
}

/// SHRED, SDN and linear test MSEs over `[baselines] repeats` seeds.
pub fn cmd_baselines(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<BaselineSummary>> {
    cfg.validate()?;
    let mut m = builder(cfg, out, "baselines")?;
    let field = experiment_field(cfg, out)?;
    m.stage("load");
    let setup = cfg.setup();
    let mut per = csv::Writer::from_path(m.path("baselines.csv")).map_err(ShredError::from)?;
    per.write_record(["repeat", "shred_mse", "sdn_mse", "linear_mse"])
        .map_err(ShredError::from)?;
    let mut cols: [Vec<f64>; 3] = Default::default();
    for r in 0..cfg.baselines.repeats {
        let seed = derive_seed(cfg.seed, "repeat", r as u64);
        let traj = cfg
            .trajectory
            .build(field.grid_shape(), field.len(), derive_seed(seed, "trajectory", 0))?;
        let runs = compare_models(&field, &traj, &setup, cfg.baselines.lambda, cfg.baselines.lagged, seed)?;
        let s = runs.summary();
        log::info!(
            "repeat {r}: shred {:.3e} sdn {:.3e} linear {:.3e}",
            s.shred_mse,
            s.sdn_mse,
            s.linear_mse
        );
        per.write_record([
            r.to_string(),
            s.shred_mse.to_string(),
            s.sdn_mse.to_string(),
            s.linear_mse.to_string(),
        ])
        .map_err(ShredError::from)?;
        cols[0].push(s.shred_mse);
        cols[1].push(s.sdn_mse);
        cols[2].push(s.linear_mse);
    }
    per.flush()?;
    drop(per);
    m.artifact("baselines.csv")?;
    m.stage("train");

    let summary: Vec<BaselineSummary> = ["shred", "sdn", "linear"]
        .iter()
        .zip(&cols)
        .map(|(name, v)| {
            let (mse_mean, mse_sd) = sample_sd(v);
            BaselineSummary {
                model: name.to_string(),
                mse_mean,
                mse_sd,
            }
        })
        .collect();
    let mut w = csv::Writer::from_path(m.path("baselines_summary.csv")).map_err(ShredError::from)?;
    w.write_record(["model", "mse_mean", "mse_sd"])
        .map_err(ShredError::from)?;
    for s in &summary {
        w.write_record([s.model.clone(), s.mse_mean.to_string(), s.mse_sd.to_string()])
            .map_err(ShredError::from)?;
    }
    w.flush()?;
    drop(w);
    m.artifact("baselines_summary.csv")?;
    m.finish()?;
    Ok(summary)
}

/// Exit status for a failed command: 2 configuration, 3 data, 4 numerics.
pub fn exit_code(err: &ShredError) -> i32 {
    match err {
        ShredError::InvalidSpec { .. } | ShredError::InvalidArgument(_) => 2,
        ShredError::NumericFailure { .. } | ShredError::Divergence { .. } | ShredError::Singular(_) => 4,
        _ => 3,
    }
}
