use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use barytrack_cli::{cmd_cluster, cmd_ingest, cmd_pipeline, cmd_test, RunConfig};
use barytrack_core::hurdat::serialize_hurdat2;
use barytrack_core::synthetic::{generate, SyntheticConfig};
use clap::{Args, Parser, Subcommand};

/// Cluster Atlantic hurricane tracks on the sphere and test whether storms
/// of the same cluster follow each other within a season.
///
/// The best-track data is the NHC HURDAT2 Atlantic file, available from
/// https://www.nhc.noaa.gov/data/#hurdat
#[derive(Parser)]
#[command(name = "barytrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-year storm counts (counts.csv, ingest.json).
    Ingest(Common),
    /// Register, crop and cluster tracks (clustering.json, GeoJSON, rms.csv, labels.csv).
    Cluster(Common),
    /// Run-statistic tests (report.json, qq.csv).
    Test {
        #[command(flatten)]
        common: Common,
        /// Label table CSV (`year,position,label`) used instead of clustering.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Ingest, cluster and test, then write manifest.json.
    Pipeline(Common),
    /// Write a synthetic HURDAT2 file for trying the pipeline out.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic_hurdat2.txt")]
        output: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    year_from: Option<i32>,
    #[arg(long)]
    year_to: Option<i32>,
    #[arg(long)]
    lower_lat: Option<f64>,
    #[arg(long)]
    register_lat: Option<f64>,
    #[arg(long)]
    grid_step_seconds: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    min_per_year: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        if self.data.is_some() {
            c.data = self.data;
        }
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        take!(
            year_from,
            year_to,
            lower_lat,
            register_lat,
            grid_step_seconds,
            k,
            restarts,
            min_per_year,
            beta,
            permutations,
            seed,
            out
        );
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let s = cmd_ingest(&common.resolve()?)?;
            println!(
                "{} storms, {}-{}; {} in range, {} crossing",
                s.storms, s.first_year, s.last_year, s.storms_in_range, s.crossing_in_range
            );
        }
        Command::Cluster(common) => {
            let run = cmd_cluster(&common.resolve()?)?;
            println!(
                "{} trajectories on grid {:?}; cluster sizes {:?}; objective {:.6}",
                run.cropped.len(),
                run.domain,
                run.clustering.sizes(),
                run.clustering.objective
            );
        }
        Command::Test { common, labels } => {
            let t = cmd_test(&common.resolve()?, labels.as_deref())?;
            println!(
                "T = {} (p_perm {:?}, p_normal {:?}); T_beta = {:.6} (p_perm {:?})",
                t.plain.t_observed,
                t.plain.p_permutation,
                t.plain.p_normal,
                t.decayed.t_observed,
                t.decayed.p_permutation
            );
        }
        Command::Pipeline(common) => {
            let config = common.resolve()?;
            let p = cmd_pipeline(&config)?;
            println!(
                "{} trajectories, {} years; T = {} (p {:?}); {} files in {}",
                p.cluster.cropped.len(),
                p.table.years(),
                p.tests.plain.t_observed,
                p.tests.plain.p_permutation,
                p.manifest.len(),
                config.out.display()
            );
        }
        Command::Synth { seed, output } => {
            let storms = generate(&SyntheticConfig {
                seed,
                ..Default::default()
            });
            std::fs::write(&output, serialize_hurdat2(&storms))
                .with_context(|| format!("writing {}", output.display()))?;
            println!("{} storms written to {}", storms.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
