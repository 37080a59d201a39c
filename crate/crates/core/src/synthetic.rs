//! Synthetic storms in HURDAT2 shape.
//!
//! Tracks start in the tropics, drift west-north-west and recurve to the
//! north-east, crossing 35°N near one of a handful of preferred longitudes.
//! Some storms dissipate before reaching 35°N. The output exercises the full
//! pipeline when the official best-track file is not at hand; it carries no
//! climatological meaning.

use std::ops::RangeInclusive;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hurdat::{Storm, TrackPoint, WindRadii};

const NAMES: [&str; 12] = [
    "ALPHA", "BRAVO", "CHARLIE", "DELTA", "ECHO", "FOXTROT", "GOLF", "HOTEL", "INDIA", "JULIETT",
    "KILO", "LIMA",
];

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub years: RangeInclusive<i32>,
    /// Inclusive bounds on storms generated per year.
    pub storms_per_year: RangeInclusive<usize>,
    /// Longitudes (degrees east) around which recurving storms cross 35°N.
    pub regimes: Vec<f64>,
    /// Probability that a storm dissipates before recurving.
    pub dissipation: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            years: 1950..=2012,
            storms_per_year: 1..=8,
            regimes: vec![-82.0, -76.0, -70.0, -64.0, -57.0, -50.0, -42.0],
            dissipation: 0.3,
            seed: 0,
        }
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn track(rng: &mut ChaCha8Rng, regime: f64, dissipates: bool) -> Vec<(f64, f64)> {
    let recurve_lat = rng.random_range(24.0..30.0);
    // Start far enough east that the westward drift ends near the regime.
    let mut lat = rng.random_range(11.0..18.0);
    let mut lon = regime + rng.random_range(8.0..16.0);
    let end_lat = if dissipates {
        rng.random_range(21.0..33.0)
    } else {
        rng.random_range(40.0..48.0)
    };
    let mut heading_east: f64 = rng.random_range(-1.4..-0.9);
    let mut points = vec![(lat, lon)];
    while lat < end_lat && points.len() < 80 {
        let (dlat, dlon) = if lat < recurve_lat {
            (
                rng.random_range(0.3..0.8),
                heading_east + rng.random_range(-0.2..0.2),
            )
        } else {
            heading_east = (heading_east + rng.random_range(0.25..0.45)).min(1.8);
            (rng.random_range(0.8..1.3), heading_east)
        };
        lat += dlat;
        lon += dlon;
        points.push((lat, lon));
    }
    points
}

/// Deterministic synthetic storms for `config.seed`, in chronological order.
pub fn generate(config: &SyntheticConfig) -> Vec<Storm> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut storms = Vec::new();
    for year in config.years.clone() {
        let count = rng.random_range(config.storms_per_year.clone());
        let mut starts: Vec<i64> = (0..count).map(|_| rng.random_range(0..600)).collect();
        starts.sort_unstable();
        for (n, start) in starts.into_iter().enumerate() {
            let regime = config.regimes[rng.random_range(0..config.regimes.len())];
            let dissipates = rng.random_bool(config.dissipation);
            let t0 = NaiveDate::from_ymd_opt(year, 6, 1)
                .expect("valid date")
                .and_hms_opt(0, 0, 0)
                .expect("valid time")
                + Duration::hours(6 * start);
            let path = track(&mut rng, regime, dissipates);
            let peak = rng.random_range(65..140);
            let points = path
                .iter()
                .enumerate()
                .map(|(i, &(lat, lon))| {
                    let phase = i as f64 / path.len() as f64;
                    let wind = (35.0 + (peak as f64 - 35.0) * (std::f64::consts::PI * phase).sin())
                        .round() as i32;
                    let radii = (year >= 2004).then(|| {
                        let r34 = Some(wind * 2);
                        let r50 = Some(if wind >= 50 { wind } else { 0 });
                        let r64 = Some(if wind >= 64 { wind / 2 } else { 0 });
                        WindRadii([r34, r34, r34, r34, r50, r50, r50, r50, r64, r64, r64, r64])
                    });
                    TrackPoint {
                        timestamp: t0 + Duration::hours(6 * i as i64),
                        record_id: None,
                        status: if wind >= 64 { "HU" } else { "TS" }.to_string(),
                        latitude: round1(lat),
                        longitude: round1(lon),
                        max_wind: Some(wind),
                        min_pressure: (year >= 1979).then_some(1010 - wind),
                        wind_radii: radii,
                        max_wind_radius: None,
                    }
                })
                .collect();
            storms.push(Storm {
                basin: "AL".into(),
                cyclone_number: n as u32 + 1,
                year,
                name: if year < 1953 {
                    "UNNAMED".into()
                } else {
                    NAMES[n % NAMES.len()].into()
                },
                points,
                extended_rows: false,
            });
        }
    }
    storms
}
