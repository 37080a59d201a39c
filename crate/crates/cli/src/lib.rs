//! Command implementations behind the `barytrack` binary.
//!
//! Every command writes into `config.out`, drops the effective configuration
//! beside its outputs as `config.txt`, and produces byte-identical files when
//! rerun with the same data and configuration.

pub mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use barytrack_core::geojson;
use barytrack_core::hurdat::{self, ParseError, ParseErrorKind, Storm};
use barytrack_core::kmeans::{self, Clustering};
use barytrack_core::stats::{self, LabelTable, Statistic, TestReport};
use barytrack_core::trajectory::{self, RegisteredTrajectory};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::RunConfig;

/// Pipeline stage, attached to errors as the outermost context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Register,
    Cluster,
    Test,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Register => "register",
            Stage::Cluster => "cluster",
            Stage::Test => "test",
            Stage::Write => "write",
        };
        write!(f, "{name} stage failed")
    }
}

/// The stage an error was tagged with by one of the `cmd_*` functions.
pub fn failed_stage(err: &anyhow::Error) -> Option<Stage> {
    err.downcast_ref::<Stage>().copied()
}

fn write_file(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, text)
}

fn prepare_output(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    write_file(&config.out, "config.txt", config.to_text())
}

/// Reads and parses the configured HURDAT2 file. A file without any storm
/// record is an error at line 0.
pub fn load_storms(config: &RunConfig) -> Result<Vec<Storm>> {
    let path = config.data_path()?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let storms =
        hurdat::parse_hurdat2(&text).with_context(|| format!("parsing {}", path.display()))?;
    if storms.is_empty() {
        return Err(ParseError {
            line: 0,
            kind: ParseErrorKind::NoRecords,
        })
        .with_context(|| format!("parsing {}", path.display()));
    }
    Ok(storms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearCount {
    pub year: i32,
    pub total: usize,
    pub crossing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub storms: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Storms in `year_from..=year_to`.
    pub storms_in_range: usize,
    /// Storms in range that upcross both latitudes.
    pub crossing_in_range: usize,
    pub counts: Vec<YearCount>,
}

pub fn summarize(storms: &[Storm], config: &RunConfig) -> IngestSummary {
    let years: Vec<i32> = storms.iter().filter_map(Storm::first_year).collect();
    let first = years.iter().copied().min().unwrap_or(config.year_from);
    let last = years.iter().copied().max().unwrap_or(config.year_to);
    let totals = hurdat::count_by_year(storms, first..=last);
    let spec = config.crossing_spec();
    let crossing_storms: Vec<Storm> = storms
        .iter()
        .filter(|s| trajectory::crosses_both(s, &spec))
        .cloned()
        .collect();
    let crossing = hurdat::count_by_year(&crossing_storms, first..=last);
    let counts: Vec<YearCount> = totals
        .iter()
        .map(|(&year, &total)| YearCount {
            year,
            total,
            crossing: crossing[&year],
        })
        .collect();
    let in_range = |c: &&YearCount| (config.year_from..=config.year_to).contains(&c.year);
    IngestSummary {
        storms: storms.len(),
        first_year: first,
        last_year: last,
        storms_in_range: counts.iter().filter(in_range).map(|c| c.total).sum(),
        crossing_in_range: counts.iter().filter(in_range).map(|c| c.crossing).sum(),
        counts,
    }
}

fn write_ingest(summary: &IngestSummary, config: &RunConfig) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &summary.counts {
        w.serialize(c)?;
    }
    write_file(&config.out, "counts.csv", w.into_inner()?)?;
    let mut header = serde_json::to_value(summary)?;
    header.as_object_mut().expect("object").remove("counts");
    write_json(
        &config.out,
        "ingest.json",
        &json!({ "config": config, "summary": header }),
    )
}

/// `ingest`: per-year counts of all storms and of crossing storms.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestSummary> {
    config.validate().context(Stage::Config)?;
    let storms = load_storms(config).context(Stage::Ingest)?;
    let summary = summarize(&storms, config);
    (|| {
        prepare_output(config)?;
        write_ingest(&summary, config)
    })()
    .context(Stage::Write)?;
    Ok(summary)
}

/// Trajectories and clustering produced by the `cluster` stage.
#[derive(Debug, Clone)]
pub struct ClusterRun {
    /// Registered trajectories before cropping, after the sparse-year filter.
    pub registered: Vec<RegisteredTrajectory>,
    pub cropped: Vec<RegisteredTrajectory>,
    pub domain: (i64, i64),
    /// Labelled west to east.
    pub clustering: Clustering,
}

impl ClusterRun {
    pub fn label_table(&self, config: &RunConfig) -> LabelTable {
        stats::build_label_table(&self.clustering, &self.cropped, config.min_per_year)
    }

    pub fn rms_km(&self) -> Vec<Vec<f64>> {
        let paths: Vec<_> = self.cropped.iter().map(|t| t.path.clone()).collect();
        kmeans::rms_distances(&self.clustering, &paths)
    }
}

pub fn register(storms: &[Storm], config: &RunConfig) -> Result<Vec<RegisteredTrajectory>> {
    let registered =
        trajectory::select_and_register(storms, &config.crossing_spec(), config.grid_step_seconds);
    Ok(trajectory::exclude_sparse_years(
        registered,
        config.min_per_year,
    ))
}

pub fn cluster(registered: Vec<RegisteredTrajectory>, config: &RunConfig) -> Result<ClusterRun> {
    let (cropped, domain) = trajectory::crop_common(&registered)?;
    let paths: Vec<_> = cropped.iter().map(|t| t.path.clone()).collect();
    let raw = kmeans::lloyd_kmeans(&paths, config.k, config.restarts, config.seed)?;
    let clustering = kmeans::order_west_to_east(&raw, config.register_lat);
    Ok(ClusterRun {
        registered,
        cropped,
        domain,
        clustering,
    })
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

fn write_cluster(run: &ClusterRun, config: &RunConfig) -> Result<()> {
    let out = &config.out;
    let c = &run.clustering;
    let sizes = c.sizes();
    let rms = run.rms_km();
    let members: Vec<Value> = run
        .cropped
        .iter()
        .zip(&c.assignments)
        .map(|(t, &label)| {
            json!({
                "storm_id": t.storm_id,
                "name": t.name,
                "registration_time": t.registration_datetime().to_rfc3339(),
                "year": t.registration_year(),
                "cluster": label,
            })
        })
        .collect();
    let crossing_lon: Vec<f64> = c
        .centroids
        .iter()
        .map(|p| kmeans::crossing_longitude(p, config.register_lat))
        .collect();
    write_json(
        out,
        "clustering.json",
        &json!({
            "config": config,
            "trajectories": run.cropped.len(),
            "domain": [run.domain.0, run.domain.1],
            "sizes": sizes,
            "crossing_longitude": crossing_lon,
            "median_rms_km": rms.iter().map(|g| median(g)).collect::<Vec<_>>(),
            "members": members,
            "clustering": c,
        }),
    )?;

    write_json(
        out,
        "centroids.geojson",
        &geojson::centroids(&c.centroids, &sizes),
    )?;
    write_json(
        out,
        "trajectories.geojson",
        &geojson::trajectories(&run.cropped, Some(&c.assignments)),
    )?;

    let uncropped: Vec<_> = run.registered.iter().map(|t| t.path.clone()).collect();
    let features = kmeans::recropped_centroids(&uncropped, c)
        .into_iter()
        .enumerate()
        .filter_map(|(label, r)| {
            let path = r.ok().flatten()?;
            let mut props = serde_json::Map::new();
            props.insert("cluster".into(), json!(label));
            props.insert("size".into(), json!(sizes[label]));
            Some(geojson::path_feature(&path, props))
        })
        .collect();
    write_json(
        out,
        "centroids_recropped.geojson",
        &geojson::feature_collection(features),
    )?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster", "storm_id", "rms_km"])?;
    let mut cursor = vec![0; c.k];
    for (t, &label) in run.cropped.iter().zip(&c.assignments) {
        let d = rms[label][cursor[label]];
        cursor[label] += 1;
        w.write_record([label.to_string(), t.storm_id.clone(), format!("{d:.3}")])?;
    }
    write_file(out, "rms.csv", w.into_inner()?)?;

    let mut labels = Vec::new();
    run.label_table(config).to_csv(&mut labels)?;
    write_file(out, "labels.csv", labels)
}

/// `cluster`: registration, cropping, k-means and west-to-east labelling.
pub fn cmd_cluster(config: &RunConfig) -> Result<ClusterRun> {
    config.validate().context(Stage::Config)?;
    let storms = load_storms(config).context(Stage::Ingest)?;
    let registered = register(&storms, config).context(Stage::Register)?;
    let run = cluster(registered, config).context(Stage::Cluster)?;
    (|| {
        prepare_output(config)?;
        write_cluster(&run, config)
    })()
    .context(Stage::Write)?;
    Ok(run)
}

/// Reports for the plain and decayed statistics on one label table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub plain: TestReport,
    pub decayed: TestReport,
}

pub fn run_tests(table: &LabelTable, config: &RunConfig) -> Result<(TestOutcome, String)> {
    let decayed = Statistic::decayed(config.beta)?;
    let outcome = TestOutcome {
        plain: stats::permutation_test(table, Statistic::Plain, config.permutations, config.seed)?,
        decayed: stats::permutation_test(table, decayed, config.permutations, config.seed)?,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["statistic", "rank", "theoretical", "standardized"])?;
    for (name, stat) in [("plain", Statistic::Plain), ("decayed", decayed)] {
        let qq = match stats::qq_data(table, stat, config.permutations, config.seed) {
            Ok(q) => q,
            // A table whose shuffles all score the same has nothing to plot.
            Err(stats::StatsError::ZeroVariance) => continue,
            Err(e) => return Err(e.into()),
        };
        for (i, (t, s)) in qq.theoretical.iter().zip(&qq.standardized).enumerate() {
            w.write_record([
                name.to_string(),
                (i + 1).to_string(),
                t.to_string(),
                s.to_string(),
            ])?;
        }
    }
    Ok((outcome, String::from_utf8(w.into_inner()?)?))
}

fn write_test(
    outcome: &TestOutcome,
    qq: &str,
    config: &RunConfig,
    labels: Option<&Path>,
) -> Result<()> {
    write_json(
        &config.out,
        "report.json",
        &json!({
            "config": config,
            "labels": labels,
            "plain": outcome.plain,
            "decayed": outcome.decayed,
        }),
    )?;
    write_file(&config.out, "qq.csv", qq)
}

pub fn read_labels(path: &Path, k: Option<usize>) -> Result<LabelTable> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(LabelTable::from_csv(file, k)?)
}

/// `test`: permutation and normal-approximation tests. The label table comes
/// from `labels` when given, otherwise from clustering the data file.
pub fn cmd_test(config: &RunConfig, labels: Option<&Path>) -> Result<TestOutcome> {
    config.validate().context(Stage::Config)?;
    let table = match labels {
        Some(p) => read_labels(p, None).context(Stage::Ingest)?,
        None => {
            let storms = load_storms(config).context(Stage::Ingest)?;
            let registered = register(&storms, config).context(Stage::Register)?;
            cluster(registered, config)
                .context(Stage::Cluster)?
                .label_table(config)
        }
    };
    let (outcome, qq) = run_tests(&table, config).context(Stage::Test)?;
    (|| {
        prepare_output(config)?;
        write_test(&outcome, &qq, config, labels)
    })()
    .context(Stage::Write)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Hashes every regular file in `dir` except `manifest.json`, sorted by name.
pub fn manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "manifest.json" || !entry.file_type()?.is_file() {
            continue;
        }
        let bytes = fs::read(entry.path())?;
        entries.insert(
            name.clone(),
            ManifestEntry {
                file: name,
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            },
        );
    }
    Ok(entries.into_values().collect())
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub ingest: IngestSummary,
    pub cluster: ClusterRun,
    pub table: LabelTable,
    pub tests: TestOutcome,
    pub manifest: Vec<ManifestEntry>,
}

/// `pipeline`: ingest, cluster and test in sequence, then a manifest of every
/// output with its SHA-256.
pub fn cmd_pipeline(config: &RunConfig) -> Result<PipelineRun> {
    config.validate().context(Stage::Config)?;
    let storms = load_storms(config).context(Stage::Ingest)?;
    let ingest = summarize(&storms, config);
    let registered = register(&storms, config).context(Stage::Register)?;
    let cluster = cluster(registered, config).context(Stage::Cluster)?;
    let table = cluster.label_table(config);
    let (tests, qq) = run_tests(&table, config).context(Stage::Test)?;
    let manifest = (|| {
        prepare_output(config)?;
        write_ingest(&ingest, config)?;
        write_cluster(&cluster, config)?;
        write_test(&tests, &qq, config, None)?;
        let entries = manifest(&config.out)?;
        write_json(&config.out, "manifest.json", &json!({ "files": entries }))?;
        Ok::<_, anyhow::Error>(entries)
    })()
    .context(Stage::Write)?;
    Ok(PipelineRun {
        ingest,
        cluster,
        table,
        tests,
        manifest,
    })
}

/// Output directory contents as `(name, bytes)`, sorted by name.
pub fn read_tree(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push((PathBuf::from(entry.file_name()), fs::read(entry.path())?));
        }
    }
    files.sort();
    Ok(files)
}
