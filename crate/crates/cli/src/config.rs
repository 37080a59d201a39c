//! Run configuration: defaults, `key = value` files and command-line
//! overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use barytrack_core::stats::Statistic;
use barytrack_core::trajectory::{CrossingSpec, DEFAULT_GRID_STEP};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub year_from: i32,
    pub year_to: i32,
    pub lower_lat: f64,
    pub register_lat: f64,
    pub grid_step_seconds: f64,
    pub k: usize,
    pub restarts: usize,
    pub min_per_year: usize,
    pub beta: f64,
    pub permutations: usize,
    pub seed: u64,
    /// Left out of the serialized forms so that output trees written to
    /// different directories compare equal.
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            year_from: 1950,
            year_to: 2012,
            lower_lat: 20.0,
            register_lat: 35.0,
            grid_step_seconds: DEFAULT_GRID_STEP,
            k: 20,
            restarts: 10,
            min_per_year: 3,
            beta: 0.25,
            permutations: 1000,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value {value:?} for {key}: {e}"))
}

impl RunConfig {
    /// Applies one `key = value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "data" | "data_path" => self.data = Some(PathBuf::from(value)),
            "year_from" => self.year_from = parse(key, value)?,
            "year_to" => self.year_to = parse(key, value)?,
            "lower_lat" => self.lower_lat = parse(key, value)?,
            "register_lat" => self.register_lat = parse(key, value)?,
            "grid_step_seconds" => self.grid_step_seconds = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "restarts" => self.restarts = parse(key, value)?,
            "min_per_year" => self.min_per_year = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "permutations" => self.permutations = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" | "output_dir" => self.out = PathBuf::from(value),
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    /// Reads settings from `key = value` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), i + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        }
        Ok(())
    }

    /// The configuration, minus `out`, in the `key = value` form
    /// `apply_file` reads.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(d) = &self.data {
            writeln!(s, "data = {}", d.display()).unwrap();
        }
        for (k, v) in [
            ("year_from", self.year_from.to_string()),
            ("year_to", self.year_to.to_string()),
            ("lower_lat", self.lower_lat.to_string()),
            ("register_lat", self.register_lat.to_string()),
            ("grid_step_seconds", self.grid_step_seconds.to_string()),
            ("k", self.k.to_string()),
            ("restarts", self.restarts.to_string()),
            ("min_per_year", self.min_per_year.to_string()),
            ("beta", self.beta.to_string()),
            ("permutations", self.permutations.to_string()),
            ("seed", self.seed.to_string()),
        ] {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn crossing_spec(&self) -> CrossingSpec {
        CrossingSpec {
            lower_lat: self.lower_lat,
            register_lat: self.register_lat,
            year_from: self.year_from,
            year_to: self.year_to,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.crossing_spec().validate()?;
        if !(self.grid_step_seconds.is_finite() && self.grid_step_seconds > 0.0) {
            bail!("grid_step_seconds must be positive");
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        if self.permutations < 2 {
            bail!("permutations must be at least 2");
        }
        Statistic::decayed(self.beta)?;
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| anyhow!("no data file given (use --data or `data = ...`)"))
    }
}
