//! GeoJSON FeatureCollections of trajectories and centroids.
//!
//! Coordinates are `[longitude, latitude]` in degrees. Each feature carries
//! its relative grid times in hours so the tracks can be aligned when
//! plotted. Single-point paths are written as `Point` geometries.

use serde_json::{json, Map, Value};

use crate::kmeans::GridPath;
use crate::trajectory::RegisteredTrajectory;

fn geometry(path: &GridPath) -> Value {
    let coords: Vec<Value> = path
        .positions
        .iter()
        .map(|p| {
            let (lat, lon) = p.to_latlon();
            json!([lon, lat])
        })
        .collect();
    if coords.len() == 1 {
        json!({ "type": "Point", "coordinates": coords[0] })
    } else {
        json!({ "type": "LineString", "coordinates": coords })
    }
}

/// A feature for `path` with the grid description merged into `properties`.
pub fn path_feature(path: &GridPath, mut properties: Map<String, Value>) -> Value {
    let hours: Vec<f64> = (path.first_index..=path.last_index())
        .map(|i| path.hours(i))
        .collect();
    properties.insert("first_index".into(), json!(path.first_index));
    properties.insert("last_index".into(), json!(path.last_index()));
    properties.insert("grid_step_seconds".into(), json!(path.grid_step));
    properties.insert("relative_hours".into(), json!(hours));
    json!({
        "type": "Feature",
        "geometry": geometry(path),
        "properties": properties,
    })
}

pub fn feature_collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}

/// Registered trajectories, optionally tagged with cluster labels.
pub fn trajectories(trajs: &[RegisteredTrajectory], labels: Option<&[usize]>) -> Value {
    let features = trajs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut props = Map::new();
            props.insert("storm_id".into(), json!(t.storm_id));
            props.insert("name".into(), json!(t.name));
            props.insert(
                "registration_time".into(),
                json!(t.registration_datetime().to_rfc3339()),
            );
            if let Some(labels) = labels {
                props.insert("cluster".into(), json!(labels[i]));
            }
            path_feature(&t.path, props)
        })
        .collect();
    feature_collection(features)
}

/// Centroid trajectories labelled by index, with cluster sizes.
pub fn centroids(paths: &[GridPath], sizes: &[usize]) -> Value {
    let features = paths
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(label, (p, &size))| {
            let mut props = Map::new();
            props.insert("cluster".into(), json!(label));
            props.insert("size".into(), json!(size));
            path_feature(p, props)
        })
        .collect();
    feature_collection(features)
}
