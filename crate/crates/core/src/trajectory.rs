//! Selection, time registration and cropping of storm tracks.
//!
//! A storm qualifies when it makes an upcrossing of both the lower latitude
//! and the registration latitude. Its clock is shifted so that relative time
//! 0 is the first upcrossing of the registration latitude. The track is then
//! resampled by slerp onto the grid `i * grid_step`, so all registered
//! trajectories share grid phase.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hurdat::Storm;
use crate::sphere::{slerp, UnitVector};

/// Six hours, the HURDAT2 synoptic interval.
pub const DEFAULT_GRID_STEP: f64 = 21_600.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajError {
    #[error("no trajectories supplied")]
    EmptyInput,
    #[error("registered time ranges do not overlap (common range [{lo}, {hi}] is empty)")]
    EmptyOverlap { lo: i64, hi: i64 },
    #[error("trajectories are not on the same time grid")]
    GridMismatch,
    #[error("invalid crossing specification: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingSpec {
    pub lower_lat: f64,
    pub register_lat: f64,
    pub year_from: i32,
    pub year_to: i32,
}

impl Default for CrossingSpec {
    fn default() -> Self {
        Self {
            lower_lat: 20.0,
            register_lat: 35.0,
            year_from: 1950,
            year_to: 2012,
        }
    }
}

impl CrossingSpec {
    pub fn validate(&self) -> Result<(), TrajError> {
        let open = |l: f64| l > -90.0 && l < 90.0;
        if !(open(self.lower_lat) && open(self.register_lat)) {
            return Err(TrajError::InvalidSpec(
                "latitudes must lie in (-90, 90)".into(),
            ));
        }
        if self.lower_lat >= self.register_lat {
            return Err(TrajError::InvalidSpec(format!(
                "lower latitude {} must be below registration latitude {}",
                self.lower_lat, self.register_lat
            )));
        }
        if self.year_from > self.year_to {
            return Err(TrajError::InvalidSpec(format!(
                "empty year range {}..={}",
                self.year_from, self.year_to
            )));
        }
        Ok(())
    }
}

/// Positions sampled at relative grid indices `first_index ..= last_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub first_index: i64,
    /// Seconds between grid points.
    pub grid_step: f64,
    pub positions: Vec<UnitVector>,
}

impl GridPath {
    pub fn last_index(&self) -> i64 {
        self.first_index + self.positions.len() as i64 - 1
    }

    pub fn domain(&self) -> (i64, i64) {
        (self.first_index, self.last_index())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn at(&self, index: i64) -> Option<&UnitVector> {
        let offset = usize::try_from(index - self.first_index).ok()?;
        self.positions.get(offset)
    }

    /// Relative time in hours of grid index `index`.
    pub fn hours(&self, index: i64) -> f64 {
        index as f64 * self.grid_step / 3600.0
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.first_index == other.first_index
            && self.positions.len() == other.positions.len()
            && self.grid_step == other.grid_step
    }

    /// The sub-path on `[lo, hi]`, or `None` if that range is not covered.
    pub fn restrict(&self, lo: i64, hi: i64) -> Option<Self> {
        if lo > hi || lo < self.first_index || hi > self.last_index() {
            return None;
        }
        let start = (lo - self.first_index) as usize;
        let end = (hi - self.first_index) as usize;
        Some(Self {
            first_index: lo,
            grid_step: self.grid_step,
            positions: self.positions[start..=end].to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredTrajectory {
    pub storm_id: String,
    pub name: String,
    /// Seconds since the Unix epoch of the first registration-latitude
    /// upcrossing.
    pub registration_time: f64,
    pub path: GridPath,
}

impl RegisteredTrajectory {
    pub fn registration_datetime(&self) -> DateTime<Utc> {
        let secs = self.registration_time.floor();
        let nanos = ((self.registration_time - secs) * 1e9).round() as u32;
        DateTime::from_timestamp(secs as i64, nanos.min(999_999_999)).unwrap_or_default()
    }

    pub fn registration_year(&self) -> i32 {
        self.registration_datetime().year()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Upcrossing {
    /// Index `i` of the segment between fixes `i` and `i + 1`.
    pub segment: usize,
    /// Seconds since the Unix epoch.
    pub time: f64,
}

/// Indices `i` with `lats[i] < lat <= lats[i + 1]`, paired with the fraction
/// along the segment where the latitude is reached.
pub fn latitude_upcrossings(lats: &[f64], lat: f64) -> Vec<(usize, f64)> {
    lats.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < lat && lat <= w[1])
        .map(|(i, w)| (i, (lat - w[0]) / (w[1] - w[0])))
        .collect()
}

/// Upcrossings of latitude `lat`, with the crossing time interpolated
/// linearly in latitude within the segment.
pub fn find_upcrossings(storm: &Storm, lat: f64) -> Vec<Upcrossing> {
    let lats: Vec<f64> = storm.points.iter().map(|p| p.latitude).collect();
    latitude_upcrossings(&lats, lat)
        .into_iter()
        .map(|(segment, frac)| {
            let t0 = storm.points[segment].epoch_seconds();
            let t1 = storm.points[segment + 1].epoch_seconds();
            Upcrossing {
                segment,
                time: t0 + frac * (t1 - t0),
            }
        })
        .collect()
}

fn register(storm: &Storm, registration_time: f64, grid_step: f64) -> Option<RegisteredTrajectory> {
    let times: Vec<f64> = storm.points.iter().map(|p| p.epoch_seconds()).collect();
    let fixes = storm
        .points
        .iter()
        .map(|p| UnitVector::from_latlon(p.latitude, p.longitude))
        .collect::<Result<Vec<_>, _>>()
        .ok()?;
    let first = ((times[0] - registration_time) / grid_step).ceil() as i64;
    let last = ((times[times.len() - 1] - registration_time) / grid_step).floor() as i64;

    let mut positions = Vec::with_capacity((last - first + 1).max(0) as usize);
    for i in first..=last {
        let t = registration_time + i as f64 * grid_step;
        // Segment j with times[j] <= t <= times[j + 1].
        let j = times
            .partition_point(|&s| s <= t)
            .saturating_sub(1)
            .min(times.len() - 2);
        let frac = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
        positions.push(slerp(&fixes[j], &fixes[j + 1], frac).ok()?);
    }
    if positions.is_empty() {
        return None;
    }
    Some(RegisteredTrajectory {
        storm_id: storm.id(),
        name: storm.name.clone(),
        registration_time,
        path: GridPath {
            first_index: first,
            grid_step,
            positions,
        },
    })
}

/// Storms passing the crossing filter, without registration.
pub fn crosses_both(storm: &Storm, spec: &CrossingSpec) -> bool {
    storm.points.len() >= 2
        && !find_upcrossings(storm, spec.lower_lat).is_empty()
        && !find_upcrossings(storm, spec.register_lat).is_empty()
}

/// Keeps storms whose first fix lies in the year range and that upcross both
/// latitudes, registered at their first upcrossing of `spec.register_lat`
/// and resampled onto the grid `i * grid_step`. Order follows the input.
pub fn select_and_register(
    storms: &[Storm],
    spec: &CrossingSpec,
    grid_step: f64,
) -> Vec<RegisteredTrajectory> {
    storms
        .iter()
        .filter(|s| {
            s.first_year()
                .is_some_and(|y| (spec.year_from..=spec.year_to).contains(&y))
        })
        .filter(|s| crosses_both(s, spec))
        .filter_map(|s| {
            let reg = find_upcrossings(s, spec.register_lat)[0].time;
            register(s, reg, grid_step)
        })
        .collect()
}

/// Drops every trajectory whose registration year holds fewer than
/// `min_per_year` trajectories.
pub fn exclude_sparse_years(
    trajs: Vec<RegisteredTrajectory>,
    min_per_year: usize,
) -> Vec<RegisteredTrajectory> {
    let mut per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for t in &trajs {
        *per_year.entry(t.registration_year()).or_default() += 1;
    }
    trajs
        .into_iter()
        .filter(|t| per_year[&t.registration_year()] >= min_per_year)
        .collect()
}

/// Restricts every trajectory to the largest grid range on which all of them
/// are defined.
pub fn crop_common(
    trajs: &[RegisteredTrajectory],
) -> Result<(Vec<RegisteredTrajectory>, (i64, i64)), TrajError> {
    let first = trajs.first().ok_or(TrajError::EmptyInput)?;
    if trajs
        .iter()
        .any(|t| t.path.grid_step != first.path.grid_step)
    {
        return Err(TrajError::GridMismatch);
    }
    let lo = trajs.iter().map(|t| t.path.first_index).max().unwrap_or(0);
    let hi = trajs.iter().map(|t| t.path.last_index()).min().unwrap_or(0);
    if lo > hi {
        return Err(TrajError::EmptyOverlap { lo, hi });
    }
    let cropped = trajs
        .iter()
        .map(|t| RegisteredTrajectory {
            path: t.path.restrict(lo, hi).expect("range checked above"),
            ..t.clone()
        })
        .collect();
    Ok((cropped, (lo, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hurdat::TrackPoint;
    use crate::sphere::gc_distance;
    use chrono::{NaiveDate, NaiveDateTime};

    fn at_hours(h: i64) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2005, 8, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
            + chrono::Duration::hours(h)
    }

    fn storm(track: &[(i64, f64, f64)]) -> Storm {
        Storm {
            basin: "AL".into(),
            cyclone_number: 1,
            year: 2005,
            name: "TEST".into(),
            points: track
                .iter()
                .map(|&(h, lat, lon)| TrackPoint {
                    timestamp: at_hours(h),
                    record_id: None,
                    status: "HU".into(),
                    latitude: lat,
                    longitude: lon,
                    max_wind: Some(70),
                    min_pressure: None,
                    wind_radii: None,
                    max_wind_radius: None,
                })
                .collect(),
            extended_rows: false,
        }
    }

    fn path(first: i64, len: usize) -> RegisteredTrajectory {
        RegisteredTrajectory {
            storm_id: format!("AL{first}"),
            name: "X".into(),
            registration_time: 0.0,
            path: GridPath {
                first_index: first,
                grid_step: DEFAULT_GRID_STEP,
                positions: vec![UnitVector::from_latlon(30.0, -60.0).unwrap(); len],
            },
        }
    }

    #[test]
    fn interpolated_crossing_time() {
        let s = storm(&[(0, 33.9, -70.0), (6, 34.8, -70.0), (12, 35.2, -70.0)]);
        let c = find_upcrossings(&s, 35.0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].segment, 1);
        let t0 = s.points[0].epoch_seconds();
        assert!((c[0].time - t0 - 9.0 * 3600.0).abs() < 1e-6);
    }

    #[test]
    fn southbound_track_has_no_crossing() {
        let s = storm(&[(0, 40.0, -70.0), (6, 36.0, -70.0), (12, 30.0, -70.0)]);
        assert!(find_upcrossings(&s, 35.0).is_empty());
    }

    #[test]
    fn oscillating_track_crosses_twice() {
        let s = storm(&[
            (0, 34.0, -70.0),
            (6, 36.0, -70.0),
            (12, 34.0, -70.0),
            (18, 36.0, -70.0),
        ]);
        let segs: Vec<_> = find_upcrossings(&s, 35.0)
            .iter()
            .map(|c| c.segment)
            .collect();
        assert_eq!(segs, vec![0, 2]);
    }

    #[test]
    fn fix_on_latitude_counts_as_arrival() {
        let s = storm(&[(0, 34.0, -70.0), (6, 35.0, -70.0), (12, 36.0, -70.0)]);
        let c = find_upcrossings(&s, 35.0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].segment, 0);
    }

    #[test]
    fn registration_filters() {
        let spec = CrossingSpec {
            year_from: 2000,
            year_to: 2010,
            ..Default::default()
        };
        // Crosses 35N but never 20N.
        let north_only = storm(&[(0, 25.0, -70.0), (6, 33.0, -70.0), (12, 36.0, -68.0)]);
        // Starts north of 35N with no later upcrossing.
        let already_north = storm(&[(0, 36.0, -70.0), (6, 38.0, -68.0), (12, 40.0, -65.0)]);
        let good = storm(&[
            (0, 18.0, -60.0),
            (6, 22.0, -65.0),
            (12, 30.0, -70.0),
            (18, 36.0, -68.0),
            (24, 40.0, -60.0),
        ]);
        let out = select_and_register(
            &[north_only, already_north, good.clone()],
            &spec,
            DEFAULT_GRID_STEP,
        );
        assert_eq!(out.len(), 1);

        let mut old = good;
        for p in &mut old.points {
            p.timestamp -= chrono::Duration::days(365 * 20);
        }
        assert!(select_and_register(&[old], &spec, DEFAULT_GRID_STEP).is_empty());
    }

    #[test]
    fn registered_grid_and_anchor() {
        let s = storm(&[
            (0, 18.0, -60.0),
            (6, 22.0, -65.0),
            (12, 30.0, -70.0),
            (18, 36.0, -68.0),
            (24, 40.0, -60.0),
        ]);
        let spec = CrossingSpec::default();
        let mut spec = spec;
        spec.year_from = 2000;
        let out = select_and_register(std::slice::from_ref(&s), &spec, DEFAULT_GRID_STEP);
        let t = &out[0];
        // Crossing at 12h + 6h * 5/6 = 17h.
        let t0 = s.points[0].epoch_seconds();
        assert!((t.registration_time - t0 - 17.0 * 3600.0).abs() < 1e-6);
        // Grid covers [-17h, +7h] -> indices -2..=1.
        assert_eq!(t.path.domain(), (-2, 1));
        let lat0 = t.path.at(0).unwrap().latitude();
        assert!((lat0 - 35.0).abs() < 0.05, "{lat0}");
    }

    #[test]
    fn grid_lands_on_fixes() {
        // Crossing exactly at the 6 h fix, so grid times coincide with fixes.
        let s = storm(&[
            (0, 28.0, -71.0),
            (6, 30.0, -70.0),
            (12, 35.0, -69.0),
            (18, 38.0, -66.0),
        ]);
        let spec = CrossingSpec {
            lower_lat: 29.0,
            year_from: 2000,
            ..Default::default()
        };
        let t = select_and_register(std::slice::from_ref(&s), &spec, DEFAULT_GRID_STEP).remove(0);
        assert_eq!(t.path.domain(), (-2, 1));
        for (i, p) in (-2..=1).zip(&s.points) {
            let fix = UnitVector::from_latlon(p.latitude, p.longitude).unwrap();
            assert!(gc_distance(t.path.at(i).unwrap(), &fix) < 1e-9);
        }
    }

    #[test]
    fn crop_to_common_range() {
        let a = path(-4, 13);
        let b = path(-2, 8);
        let (out, range) = crop_common(&[a, b]).unwrap();
        assert_eq!(range, (-2, 5));
        assert!(out.iter().all(|t| t.path.domain() == (-2, 5)));

        let single = path(-3, 5);
        let (out, range) = crop_common(std::slice::from_ref(&single)).unwrap();
        assert_eq!(range, (-3, 1));
        assert_eq!(out[0], single);
    }

    #[test]
    fn crop_errors() {
        assert_eq!(crop_common(&[]), Err(TrajError::EmptyInput));
        assert_eq!(
            crop_common(&[path(-4, 2), path(0, 3)]),
            Err(TrajError::EmptyOverlap { lo: 0, hi: -3 })
        );
    }

    #[test]
    fn sparse_years_dropped() {
        let mut ts = vec![path(0, 1), path(0, 1), path(0, 1)];
        ts[2].registration_time = 1.0e9;
        let kept = exclude_sparse_years(ts, 2);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn spec_validation() {
        assert!(CrossingSpec::default().validate().is_ok());
        let bad = CrossingSpec {
            lower_lat: 40.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
