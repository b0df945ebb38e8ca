use std::path::Path;
use std::process::Command;

use shred_cli::{manifest_file, RunManifest};

const SMALL: &str = r#"
seed = 11

[field]
kind = "lowrank"
grid_shape = [6, 6]
snapshots = 160
rank = 3
noise_std = 0.0

[trajectory]
kind = "random_walk"
step_interval = 2

[model]
lag = 10
hidden = 4
decoder_widths = [12]

[train]
epochs = 4
batch_size = 16
learning_rate = 0.005

[ensemble]
count = 2

[sweep]
widths = [2, 3]
repeats = 1

[routes.still]
kind = "fixed"
nodes = [7]

[routes.loop]
kind = "circuit"
waypoints = [[0, 0], [5, 0], [5, 5], [0, 5]]
period = 20

[route_table]
combinations = [["still"], ["still", "loop"]]
partitions = ["random", "temporal"]

[baselines]
repeats = 2

[eval]
triptychs = 2
pixel_scale = 2
"#;

fn shred(dir: &Path, config: &str, args: &[&str]) -> std::process::Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_shred"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--jobs")
        .arg("1")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, config: &str, args: &[&str]) {
    let o = shred(dir, config, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn csv_rows(path: &Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

#[test]
fn generate_writes_readable_field() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["generate"]);
    let out = dir.path().join("out");
    let field = shred_core::fieldgen::read_snapshot_file(&out.join("field.shrd")).unwrap();
    assert_eq!(field.len(), 160);
    assert_eq!(field.grid_shape(), &[6, 6]);
    RunManifest::read(&out, "generate").unwrap().verify(&out).unwrap();
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = shred(dir.path(), "[train]\nepochz = 3\n", &["generate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epochz"));
}

#[test]
fn invalid_value_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = shred(dir.path(), "[model]\nlag = 0\n", &["generate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.lag"));
}

#[test]
fn train_without_dataset_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = shred(dir.path(), SMALL, &["train"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["generate"]);
    ok(dir.path(), SMALL, &["train"]);
    let out = dir.path().join("out");
    let manifest = RunManifest::read(&out, "train").unwrap();
    manifest.verify(&out).unwrap();
    let names: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.to_str().unwrap()).collect();
    for f in [
        "checkpoint.shrp",
        "model.json",
        "scaler.json",
        "train_report.csv",
        "trajectory.csv",
        "partition.csv",
    ] {
        assert!(names.contains(&f), "{f} missing from {names:?}");
    }

    ok(dir.path(), SMALL, &["eval", "--split", "test"]);
    assert!(out.join(manifest_file("eval")).exists());
    let ppms: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".ppm"))
        .collect();
    assert_eq!(ppms.len(), 2);
    let bytes = std::fs::read(ppms[0].path()).unwrap();
    assert!(bytes.starts_with(b"P6\n"));
    assert!(csv_rows(&out.join("evalreport.csv")) > 0);
    assert_eq!(csv_rows(&out.join("histogram.csv")), 101);
}

#[test]
fn eval_rejects_tampered_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["generate"]);
    ok(dir.path(), SMALL, &["train"]);
    let ckpt = dir.path().join("out/checkpoint.shrp");
    let mut bytes = std::fs::read(&ckpt).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&ckpt, bytes).unwrap();
    let o = shred(dir.path(), SMALL, &["eval"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ensemble_writes_one_row_per_member() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["ensemble"]);
    let out = dir.path().join("out");
    assert_eq!(csv_rows(&out.join("ensemble_mse.csv")), 4);
    assert_eq!(csv_rows(&out.join("comparison.csv")), 3);
    ok(dir.path(), SMALL, &["ensemble", "--kind", "mobile", "--count", "3"]);
    assert_eq!(csv_rows(&out.join("ensemble_mse.csv")), 3);
}

#[test]
fn sweep_widths_override() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["sweep", "--widths", "5"]);
    let out = dir.path().join("out");
    let mut r = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "5");
    assert_eq!(csv_rows(&out.join("spectrum.csv")), 36);
}

#[test]
fn route_table_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["route-table"]);
    let mut r = csv::Reader::from_path(dir.path().join("out/route_table.csv")).unwrap();
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|row| &row[0] == "still+loop"));
}

#[test]
fn baselines_summarize_three_models() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), SMALL, &["baselines"]);
    let out = dir.path().join("out");
    assert_eq!(csv_rows(&out.join("baselines.csv")), 2);
    assert_eq!(csv_rows(&out.join("baselines_summary.csv")), 3);
}

#[test]
fn ensemble_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), SMALL, &["ensemble", "--count", "2"]);
    ok(b.path(), SMALL, &["ensemble", "--count", "2"]);
    let read = |d: &Path| std::fs::read(d.join("out/ensemble_mse.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}
