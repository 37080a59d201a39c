//! Unit-sphere primitives.
//!
//! Points on S² are carried as [`UnitVector`]s. Distances are great-circle
//! arc lengths in radians; kilometre figures use a spherical Earth of radius
//! [`EARTH_RADIUS_KM`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for every kilometre conversion.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Norm of the weighted mean below which the cosine barycentre is undefined.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Below this separation (radians) slerp falls back to normalised linear
/// interpolation.
const SLERP_LINEAR_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("latitude {0} outside [-90, 90]")]
    Domain(f64),
    #[error("vector ({0}, {1}, {2}) cannot be normalised")]
    ZeroVector(f64, f64, f64),
    #[error("slerp endpoints are antipodal")]
    Antipodal,
    #[error("barycentre of an empty point set")]
    Empty,
    #[error("invalid weight {0}: weights must be finite and nonnegative")]
    BadWeight(f64),
    #[error("weights sum to zero")]
    ZeroWeight,
    #[error("weighted mean has norm {0:e}; every point on the sphere minimizes the cosine energy")]
    DegenerateMean(f64),
}

/// A point on the unit sphere embedded in R³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector {
    /// Normalises `(x, y, z)` onto the sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GeomError::ZeroVector(x, y, z));
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Geographic embedding: `(cos lat cos lon, cos lat sin lon, sin lat)`.
    pub fn from_latlon(lat: f64, lon: f64) -> Result<Self, GeomError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeomError::Domain(lat));
        }
        let (sin_lat, cos_lat) = lat.to_radians().sin_cos();
        let (sin_lon, cos_lon) = lon.to_radians().sin_cos();
        Self::new(cos_lat * cos_lon, cos_lat * sin_lon, sin_lat)
    }

    /// Latitude and longitude in degrees, longitude in (-180, 180].
    pub fn to_latlon(&self) -> (f64, f64) {
        let lat = self.z.atan2(self.x.hypot(self.y)).to_degrees();
        let mut lon = self.y.atan2(self.x).to_degrees();
        if lon <= -180.0 {
            lon += 360.0;
        }
        (lat, lon)
    }

    pub fn latitude(&self) -> f64 {
        self.to_latlon().0
    }

    pub fn longitude(&self) -> f64 {
        self.to_latlon().1
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> [f64; 3] {
        [
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        ]
    }

    pub fn antipode(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// `1 - <a, b>`, i.e. `1 - cos dist(a, b)`. Lies in [0, 2].
pub fn cosine_energy(a: &UnitVector, b: &UnitVector) -> f64 {
    (1.0 - a.dot(b)).clamp(0.0, 2.0)
}

/// Great-circle distance in radians, computed as `atan2(|a x b|, a . b)`.
pub fn gc_distance(a: &UnitVector, b: &UnitVector) -> f64 {
    let [cx, cy, cz] = a.cross(b);
    (cx * cx + cy * cy + cz * cz).sqrt().atan2(a.dot(b))
}

/// Great-circle distance in kilometres.
pub fn gc_distance_km(a: &UnitVector, b: &UnitVector) -> f64 {
    gc_distance(a, b) * EARTH_RADIUS_KM
}

/// Spherical linear interpolation along the minor arc from `a` (t = 0) to
/// `b` (t = 1).
pub fn slerp(a: &UnitVector, b: &UnitVector, t: f64) -> Result<UnitVector, GeomError> {
    let omega = gc_distance(a, b);
    if std::f64::consts::PI - omega < SLERP_LINEAR_THRESHOLD {
        return Err(GeomError::Antipodal);
    }
    if t == 0.0 {
        return Ok(*a);
    }
    if t == 1.0 {
        return Ok(*b);
    }
    let (wa, wb) = if omega < SLERP_LINEAR_THRESHOLD {
        (1.0 - t, t)
    } else {
        let s = omega.sin();
        (((1.0 - t) * omega).sin() / s, (t * omega).sin() / s)
    };
    UnitVector::new(
        wa * a.x + wb * b.x,
        wa * a.y + wb * b.y,
        wa * a.z + wb * b.z,
    )
}

/// Weighted Euclidean mean of the points, before projection onto the sphere.
/// Weights are normalised to sum to one.
pub fn weighted_mean(points: &[(UnitVector, f64)]) -> Result<[f64; 3], GeomError> {
    if points.is_empty() {
        return Err(GeomError::Empty);
    }
    let mut total = 0.0;
    let mut acc = [0.0; 3];
    for (p, w) in points {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(GeomError::BadWeight(*w));
        }
        total += w;
        acc[0] += w * p.x;
        acc[1] += w * p.y;
        acc[2] += w * p.z;
    }
    if total <= 0.0 {
        return Err(GeomError::ZeroWeight);
    }
    Ok(acc.map(|c| c / total))
}

/// Cosine barycentre `E[X] / |E[X]|` of a weighted point set.
///
/// This is the minimiser over S² of the weighted mean cosine energy. It is
/// undefined when the weighted mean (with weights normalised to one) has
/// norm below [`DEGENERACY_TOLERANCE`].
pub fn cosine_barycentre(points: &[(UnitVector, f64)]) -> Result<UnitVector, GeomError> {
    let [x, y, z] = weighted_mean(points)?;
    let norm = (x * x + y * y + z * z).sqrt();
    if norm < DEGENERACY_TOLERANCE {
        return Err(GeomError::DegenerateMean(norm));
    }
    UnitVector::new(x, y, z)
}

/// Equal-weight cosine barycentre.
pub fn mean_direction(points: &[UnitVector]) -> Result<UnitVector, GeomError> {
    let weighted: Vec<_> = points.iter().map(|p| (*p, 1.0)).collect();
    cosine_barycentre(&weighted)
}

/// Weighted mean cosine energy of `points` about `centre`.
pub fn mean_cosine_energy(points: &[(UnitVector, f64)], centre: &UnitVector) -> f64 {
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    points
        .iter()
        .map(|(p, w)| w * cosine_energy(p, centre))
        .sum::<f64>()
        / total
}
