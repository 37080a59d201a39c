//! HURDAT2 best-track files.
//!
//! A file is a sequence of storms. Each storm starts with a header line
//!
//! ```text
//! AL092011,              IRENE,     39,
//! ```
//!
//! followed by the declared number of comma-delimited fixes:
//!
//! ```text
//! 20110821, 0000,  , TS, 15.0N,  59.0W,  45, 1006,  105,    0,    0,   45,    0, ...
//! ```
//!
//! Missing numbers are written as `-99` (wind) or `-999` (pressure, radii) and
//! are held as `None` after parsing. [`serialize_hurdat2`] writes the
//! canonical column widths, so parsing and re-serialising a canonical file
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const WIND_MISSING: i32 = -99;
const FIELD_MISSING: i32 = -999;
const RADII_COUNT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based line number; 0 when the error is not tied to a line.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("storm {storm} declares {declared} rows but has {found}")]
    RowCountMismatch {
        storm: String,
        declared: usize,
        found: usize,
    },
    #[error("bad coordinate: {0}")]
    BadCoordinate(String),
    #[error("timestamp {0} does not follow the previous fix")]
    NonMonotoneTime(NaiveDateTime),
    #[error("malformed data row: {0}")]
    MalformedRow(String),
    #[error("no storm records")]
    NoRecords,
}

/// Wind radii in nautical miles: 34, 50 and 64 kt thresholds, each split into
/// NE, SE, SW, NW quadrants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindRadii(pub [Option<i32>; RADII_COUNT]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub timestamp: NaiveDateTime,
    /// Single-letter record identifier, e.g. `L` for landfall.
    pub record_id: Option<char>,
    /// Two-letter system status, e.g. `HU`, `TS`, `EX`.
    pub status: String,
    /// Degrees north.
    pub latitude: f64,
    /// Degrees east, in (-180, 180].
    pub longitude: f64,
    /// Knots.
    pub max_wind: Option<i32>,
    /// Millibars.
    pub min_pressure: Option<i32>,
    /// `None` when all twelve radii are missing.
    pub wind_radii: Option<WindRadii>,
    /// Radius of maximum wind (n mi), only present in later file revisions.
    pub max_wind_radius: Option<i32>,
}

impl TrackPoint {
    /// Seconds since the Unix epoch (UTC).
    pub fn epoch_seconds(&self) -> f64 {
        self.timestamp.and_utc().timestamp() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storm {
    pub basin: String,
    pub cyclone_number: u32,
    pub year: i32,
    pub name: String,
    pub points: Vec<TrackPoint>,
    /// Rows carry the trailing radius-of-maximum-wind column.
    pub extended_rows: bool,
}

impl Storm {
    /// ATCF-style identifier, e.g. `AL092011`.
    pub fn id(&self) -> String {
        format!("{}{:02}{:04}", self.basin, self.cyclone_number, self.year)
    }

    /// Year of the first fix; storms spanning New Year belong to the year
    /// they started in.
    pub fn first_year(&self) -> Option<i32> {
        self.points.first().map(|p| p.timestamp.year())
    }
}

struct Header {
    basin: String,
    number: u32,
    year: i32,
    name: String,
    rows: usize,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn fields(line: &str) -> Vec<&str> {
    let mut f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.last() == Some(&"") {
        f.pop();
    }
    f
}

fn looks_like_header(line: &str) -> bool {
    let first = line.split(',').next().unwrap_or("").trim();
    first.len() == 8 && first.chars().take(2).all(|c| c.is_ascii_alphabetic())
}

fn parse_header(line: &str, lineno: usize) -> Result<Header, ParseError> {
    let bad = |msg: String| err(lineno, ParseErrorKind::MalformedHeader(msg));
    let f = fields(line);
    if f.len() != 3 {
        return Err(bad(format!("expected 3 fields, found {}", f.len())));
    }
    let id = f[0];
    if id.len() != 8 || !id.is_ascii() || !id[..2].chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(bad(format!("invalid storm identifier {id:?}")));
    }
    let number: u32 = id[2..4]
        .parse()
        .map_err(|_| bad(format!("invalid cyclone number in {id:?}")))?;
    if number == 0 {
        return Err(bad(format!("cyclone number must be positive in {id:?}")));
    }
    let year: i32 = id[4..8]
        .parse()
        .map_err(|_| bad(format!("invalid year in {id:?}")))?;
    let rows: usize = f[2]
        .parse()
        .map_err(|_| bad(format!("non-numeric row count {:?}", f[2])))?;
    if rows == 0 {
        return Err(bad("row count must be positive".into()));
    }
    Ok(Header {
        basin: id[..2].to_string(),
        number,
        year,
        name: f[1].to_string(),
        rows,
    })
}

fn parse_int(field: &str, what: &str, lineno: usize) -> Result<i32, ParseError> {
    field.parse().map_err(|_| {
        err(
            lineno,
            ParseErrorKind::MalformedRow(format!("{what} {field:?} is not an integer")),
        )
    })
}

fn optional(value: i32, sentinel: i32) -> Option<i32> {
    (value != sentinel).then_some(value)
}

fn parse_coordinate(field: &str, lineno: usize, latitude: bool) -> Result<f64, ParseError> {
    let bad = || err(lineno, ParseErrorKind::BadCoordinate(field.to_string()));
    let hemi = field.chars().last().ok_or_else(bad)?;
    let magnitude: f64 = field[..field.len() - hemi.len_utf8()]
        .trim()
        .parse()
        .map_err(|_| bad())?;
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(bad());
    }
    let value = match (latitude, hemi.to_ascii_uppercase()) {
        (true, 'N') | (false, 'E') => magnitude,
        (true, 'S') | (false, 'W') => -magnitude,
        _ => return Err(bad()),
    };
    if latitude && magnitude > 90.0 {
        return Err(bad());
    }
    if !latitude {
        if magnitude > 180.0 {
            return Err(bad());
        }
        if value == -180.0 {
            return Ok(180.0);
        }
    }
    Ok(value)
}

fn parse_row(line: &str, lineno: usize) -> Result<TrackPoint, ParseError> {
    let bad = |msg: String| err(lineno, ParseErrorKind::MalformedRow(msg));
    let f = fields(line);
    if f.len() != 8 + RADII_COUNT && f.len() != 9 + RADII_COUNT {
        return Err(bad(format!("expected 20 or 21 fields, found {}", f.len())));
    }
    let (date, time) = (f[0], f[1]);
    if date.len() != 8 || time.len() != 4 {
        return Err(bad(format!("bad date/time {date:?} {time:?}")));
    }
    let num = |s: &str| s.parse::<u32>().ok();
    let day =
        (|| NaiveDate::from_ymd_opt(date[..4].parse().ok()?, num(&date[4..6])?, num(&date[6..])?))(
        )
        .ok_or_else(|| bad(format!("bad date {date:?}")))?;
    let clock = (|| NaiveTime::from_hms_opt(num(&time[..2])?, num(&time[2..])?, 0))()
        .ok_or_else(|| bad(format!("bad time {time:?}")))?;

    let record_id = match f[2].chars().count() {
        0 => None,
        1 => f[2].chars().next(),
        _ => return Err(bad(format!("bad record identifier {:?}", f[2]))),
    };
    if f[3].len() != 2 {
        return Err(bad(format!("bad status {:?}", f[3])));
    }
    let latitude = parse_coordinate(f[4], lineno, true)?;
    let longitude = parse_coordinate(f[5], lineno, false)?;
    let max_wind = optional(parse_int(f[6], "wind", lineno)?, WIND_MISSING);
    let min_pressure = optional(parse_int(f[7], "pressure", lineno)?, FIELD_MISSING);
    let mut radii = [None; RADII_COUNT];
    for (slot, field) in radii.iter_mut().zip(&f[8..8 + RADII_COUNT]) {
        *slot = optional(parse_int(field, "wind radius", lineno)?, FIELD_MISSING);
    }
    let wind_radii = radii
        .iter()
        .any(Option::is_some)
        .then_some(WindRadii(radii));
    let max_wind_radius = match f.get(8 + RADII_COUNT) {
        Some(field) => optional(
            parse_int(field, "radius of maximum wind", lineno)?,
            FIELD_MISSING,
        ),
        None => None,
    };
    Ok(TrackPoint {
        timestamp: day.and_time(clock),
        record_id,
        status: f[3].to_string(),
        latitude,
        longitude,
        max_wind,
        min_pressure,
        wind_radii,
        max_wind_radius,
    })
}

/// Parses a HURDAT2 file. CRLF and LF line endings are accepted; blank lines
/// between storms are ignored.
pub fn parse_hurdat2(text: &str) -> Result<Vec<Storm>, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let mut storms = Vec::new();

    while let Some((lineno, line)) = lines.next() {
        if !looks_like_header(line) {
            // Data rows past the declared count of the previous storm.
            if let Some(prev) = storms.last() {
                let prev: &Storm = prev;
                let mut extra = 1;
                while lines.next_if(|(_, l)| !looks_like_header(l)).is_some() {
                    extra += 1;
                }
                return Err(err(
                    lineno,
                    ParseErrorKind::RowCountMismatch {
                        storm: prev.id(),
                        declared: prev.points.len(),
                        found: prev.points.len() + extra,
                    },
                ));
            }
        }
        let header = parse_header(line, lineno)?;
        let id = format!("{}{:02}{:04}", header.basin, header.number, header.year);
        let mut points: Vec<TrackPoint> = Vec::with_capacity(header.rows);
        let mut extended_rows = false;
        for found in 0..header.rows {
            let Some((row_no, row)) = lines.next_if(|(_, l)| !looks_like_header(l)) else {
                let at = lines.peek().map_or(lineno + found, |(n, _)| *n);
                return Err(err(
                    at,
                    ParseErrorKind::RowCountMismatch {
                        storm: id,
                        declared: header.rows,
                        found,
                    },
                ));
            };
            let point = parse_row(row, row_no)?;
            if let Some(prev) = points.last() {
                if point.timestamp <= prev.timestamp {
                    return Err(err(
                        row_no,
                        ParseErrorKind::NonMonotoneTime(point.timestamp),
                    ));
                }
            }
            extended_rows |= fields(row).len() == 9 + RADII_COUNT;
            points.push(point);
        }
        storms.push(Storm {
            basin: header.basin,
            cyclone_number: header.number,
            year: header.year,
            name: header.name,
            points,
            extended_rows,
        });
    }
    Ok(storms)
}

fn write_hemisphere(out: &mut String, value: f64, width: usize, pos: char, neg: char) {
    let hemi = if value.is_sign_negative() { neg } else { pos };
    let _ = write!(out, " {:>width$.1}{hemi},", value.abs());
}

fn write_optional(out: &mut String, value: Option<i32>, sentinel: i32, width: usize) {
    let _ = write!(out, " {:>width$},", value.unwrap_or(sentinel));
}

/// Writes storms in canonical HURDAT2 layout with LF line endings.
pub fn serialize_hurdat2(storms: &[Storm]) -> String {
    let mut out = String::new();
    for storm in storms {
        let _ = writeln!(
            out,
            "{},{:>19},{:>7},",
            storm.id(),
            storm.name,
            storm.points.len()
        );
        for p in &storm.points {
            let t = p.timestamp;
            let _ = write!(
                out,
                "{:04}{:02}{:02}, {:02}{:02}, {}, {:>2},",
                t.year(),
                t.month(),
                t.day(),
                t.hour(),
                t.minute(),
                p.record_id.unwrap_or(' '),
                p.status
            );
            write_hemisphere(&mut out, p.latitude, 4, 'N', 'S');
            write_hemisphere(&mut out, p.longitude, 5, 'E', 'W');
            write_optional(&mut out, p.max_wind, WIND_MISSING, 3);
            write_optional(&mut out, p.min_pressure, FIELD_MISSING, 4);
            let radii = p.wind_radii.map_or([None; RADII_COUNT], |r| r.0);
            for r in radii {
                write_optional(&mut out, r, FIELD_MISSING, 4);
            }
            if storm.extended_rows {
                write_optional(&mut out, p.max_wind_radius, FIELD_MISSING, 4);
            }
            out.push('\n');
        }
    }
    out
}

/// Number of storms whose first fix falls in each year of `years`. Every year
/// in the range is present in the result, with zero where nothing occurred.
pub fn count_by_year(storms: &[Storm], years: RangeInclusive<i32>) -> BTreeMap<i32, usize> {
    let mut counts: BTreeMap<i32, usize> = years.clone().map(|y| (y, 0)).collect();
    for year in storms.iter().filter_map(Storm::first_year) {
        if let Some(c) = counts.get_mut(&year) {
            *c += 1;
        }
    }
    counts
}
