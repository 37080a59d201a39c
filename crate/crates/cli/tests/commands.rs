use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use barytrack_cli::{
    cmd_cluster, cmd_ingest, cmd_pipeline, cmd_test, failed_stage, read_tree, RunConfig, Stage,
};
use barytrack_core::hurdat::serialize_hurdat2;
use barytrack_core::synthetic::{generate, SyntheticConfig};
use serde_json::Value;
use tempfile::TempDir;

fn table1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/table1_labels.csv")
}

fn synthetic_data(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join("hurdat2.txt");
    let storms = generate(&SyntheticConfig {
        seed,
        ..Default::default()
    });
    fs::write(&path, serialize_hurdat2(&storms)).unwrap();
    path
}

fn config(dir: &TempDir, out: &str) -> RunConfig {
    RunConfig {
        data: Some(synthetic_data(dir.path(), 4)),
        out: dir.path().join(out),
        permutations: 200,
        ..Default::default()
    }
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = config(&dir, "a");
    let b = RunConfig {
        out: dir.path().join("b"),
        ..a.clone()
    };
    let run = cmd_pipeline(&a).unwrap();
    cmd_pipeline(&b).unwrap();
    let (ta, tb) = (read_tree(&a.out).unwrap(), read_tree(&b.out).unwrap());
    assert_eq!(ta, tb);

    assert!(run.manifest.len() >= 6);
    let manifest = read_json(a.out.join("manifest.json"));
    let files: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["file"].as_str().unwrap())
        .collect();
    for name in [
        "config.txt",
        "counts.csv",
        "clustering.json",
        "centroids.geojson",
        "trajectories.geojson",
        "rms.csv",
        "labels.csv",
        "report.json",
        "qq.csv",
    ] {
        assert!(files.contains(&name), "{name} missing from {files:?}");
    }
    assert_eq!(run.tests.plain.labels, run.table.total_labels());
    assert_eq!(run.table.total_labels(), run.cluster.cropped.len());

    // The configuration written beside the outputs reproduces the run.
    let mut reloaded = RunConfig::default();
    reloaded.apply_file(&a.out.join("config.txt")).unwrap();
    reloaded.out = dir.path().join("c");
    cmd_pipeline(&reloaded).unwrap();
    assert_eq!(read_tree(&reloaded.out).unwrap(), ta);
}

#[test]
fn counts_do_not_depend_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = config(&dir, "a");
    let b = RunConfig {
        seed: 1,
        out: dir.path().join("b"),
        ..a.clone()
    };
    cmd_ingest(&a).unwrap();
    cmd_ingest(&b).unwrap();
    assert_eq!(
        fs::read(a.out.join("counts.csv")).unwrap(),
        fs::read(b.out.join("counts.csv")).unwrap()
    );
}

#[test]
fn ingest_counts_cover_every_year() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(&dir, "o");
    let s = cmd_ingest(&c).unwrap();
    let storms = generate(&SyntheticConfig {
        seed: 4,
        ..Default::default()
    });
    assert_eq!(s.storms, storms.len());
    assert_eq!(
        s.counts.iter().map(|y| y.total).sum::<usize>(),
        storms.len()
    );
    assert_eq!(s.counts.len(), (s.last_year - s.first_year + 1) as usize);
    assert!(s.counts.iter().all(|y| y.crossing <= y.total));
    let csv = fs::read_to_string(c.out.join("counts.csv")).unwrap();
    assert!(csv.starts_with("year,total,crossing\n"));
    assert_eq!(csv.lines().count(), s.counts.len() + 1);
}

#[test]
fn cluster_with_one_and_four_groups() {
    let dir = tempfile::tempdir().unwrap();
    let one = RunConfig {
        k: 1,
        ..config(&dir, "k1")
    };
    let run = cmd_cluster(&one).unwrap();
    assert_eq!(run.clustering.centroids.len(), 1);
    let centroids = read_json(one.out.join("centroids.geojson"));
    assert_eq!(centroids["features"].as_array().unwrap().len(), 1);

    let four = RunConfig {
        k: 4,
        ..config(&dir, "k4")
    };
    let run = cmd_cluster(&four).unwrap();
    let centroids = read_json(four.out.join("centroids.geojson"));
    let features = centroids["features"].as_array().unwrap();
    assert_eq!(features.len(), 4);
    // Labels run from far west to far east at the registration latitude.
    let lons: Vec<f64> = run
        .clustering
        .centroids
        .iter()
        .map(|c| barytrack_core::kmeans::crossing_longitude(c, four.register_lat))
        .collect();
    assert!(lons.windows(2).all(|w| w[0] <= w[1]), "{lons:?}");
    let clustering = read_json(four.out.join("clustering.json"));
    assert_eq!(clustering["sizes"].as_array().unwrap().len(), 4);
    assert_eq!(
        clustering["members"].as_array().unwrap().len(),
        run.cropped.len()
    );
    let traj = read_json(four.out.join("trajectories.geojson"));
    let f = &traj["features"][0];
    let coords = f["geometry"]["coordinates"].as_array().unwrap();
    assert_eq!(coords.len(), (run.domain.1 - run.domain.0 + 1) as usize);
    let rms = fs::read_to_string(four.out.join("rms.csv")).unwrap();
    assert_eq!(rms.lines().count(), run.cropped.len() + 1);
}

#[test]
fn test_command_on_label_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        out: dir.path().join("t"),
        ..Default::default()
    };
    let fixture = table1();
    let outcome = cmd_test(&c, Some(&fixture)).unwrap();
    assert_eq!(outcome.plain.t_observed, 15.0);
    assert!((outcome.plain.p_normal.unwrap() - 0.043).abs() < 0.002);
    let report = read_json(c.out.join("report.json"));
    assert_eq!(report["plain"]["t_observed"], 15.0);
    assert_eq!(report["decayed"]["beta"], 0.25);
    let qq = fs::read_to_string(c.out.join("qq.csv")).unwrap();
    assert_eq!(qq.lines().count(), 1 + 2 * c.permutations);
    assert!(c.out.join("config.txt").exists());
}

#[test]
fn errors_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let c = RunConfig {
        data: Some(empty),
        out: dir.path().join("o"),
        ..Default::default()
    };
    let err = cmd_ingest(&c).unwrap_err();
    assert_eq!(failed_stage(&err), Some(Stage::Ingest));
    assert!(format!("{err:#}").contains("line 0"), "{err:#}");

    let too_many = RunConfig {
        k: 10_000,
        ..config(&dir, "o")
    };
    let err = cmd_cluster(&too_many).unwrap_err();
    assert_eq!(failed_stage(&err), Some(Stage::Cluster));

    let narrow = RunConfig {
        year_from: 1900,
        year_to: 1901,
        ..config(&dir, "o")
    };
    let err = cmd_cluster(&narrow).unwrap_err();
    assert_eq!(failed_stage(&err), Some(Stage::Cluster));

    let header_only = dir.path().join("labels.csv");
    fs::write(&header_only, "year,position,label\n").unwrap();
    let err = cmd_test(&config(&dir, "o"), Some(&header_only)).unwrap_err();
    assert_eq!(failed_stage(&err), Some(Stage::Test));
    assert!(
        format!("{err:#}").to_lowercase().contains("year"),
        "{err:#}"
    );

    let bad = RunConfig {
        beta: 0.0,
        ..config(&dir, "o")
    };
    assert_eq!(
        failed_stage(&cmd_ingest(&bad).unwrap_err()),
        Some(Stage::Config)
    );
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_barytrack");
    let data = synthetic_data(dir.path(), 2);
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        format!("data = {}\nk = 3\nrestarts = 2\n", data.display()),
    )
    .unwrap();

    let out = Command::new(bin)
        .args(["cluster", "--config"])
        .arg(&conf)
        .args(["--k", "5", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let saved = fs::read_to_string(dir.path().join("o/config.txt")).unwrap();
    assert!(
        saved.contains("k = 5\n") && saved.contains("restarts = 2\n"),
        "{saved}"
    );

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = Command::new(bin)
        .args(["ingest", "--data"])
        .arg(&empty)
        .args(["--out"])
        .arg(dir.path().join("e"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("ingest stage failed") && stderr.contains("line 0"),
        "{stderr}"
    );
}
