//! CSV interfaces for raw trajectories, offices and extracted features.
//!
//! | file               | header                                           |
//! |--------------------|--------------------------------------------------|
//! | `trajectories.csv` | `user_id,timestamp,lat,lon` (RFC 3339 times)     |
//! | `pois.csv`         | `office_id,lat,lon,radius_m`                     |
//! | `geofeatures.csv`  | `user_id,date,office_id,` then the feature names |
//!
//! Undefined features are written as the literal `-1`.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{merge_trajectories, DailyGeoRow, GeoFeatureRow, GpsPoint, GpsTrajectory, Poi, DEFAULT_RADII, NEAREST, SENTINEL};
use crate::error::{Error, Result};
use crate::regions::io::{read_rows, write_rows};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const POIS_FILE: &str = "pois.csv";
pub const GEOFEATURES_FILE: &str = "geofeatures.csv";

#[derive(Serialize, Deserialize)]
struct TrajectoryRow {
    user_id: String,
    timestamp: DateTime<Utc>,
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct PoiRow {
    office_id: String,
    lat: f64,
    lon: f64,
    radius_m: f64,
}

/// Rows may come in any order; they are grouped by user and sorted by time.
pub fn read_trajectories(path: &Path) -> Result<Vec<GpsTrajectory>> {
    let rows: Vec<TrajectoryRow> = read_rows(path)?;
    let mut by_user: BTreeMap<String, Vec<GpsPoint>> = BTreeMap::new();
    for r in rows {
        by_user.entry(r.user_id).or_default().push(GpsPoint::new(r.timestamp, r.lat, r.lon));
    }
    let parts = by_user
        .into_iter()
        .map(|(user, mut pts)| {
            pts.sort_by_key(|p| p.timestamp);
            pts.dedup();
            GpsTrajectory::new(user, pts)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::parse(path, e.to_string()))?;
    merge_trajectories(parts).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_trajectories(path: &Path, trajectories: &[GpsTrajectory]) -> Result<()> {
    write_rows(
        path,
        trajectories.iter().flat_map(|t| {
            t.points().iter().map(|p| TrajectoryRow {
                user_id: t.user().to_owned(),
                timestamp: p.timestamp,
                lat: p.position.lat,
                lon: p.position.lon,
            })
        }),
    )
}

pub fn read_pois(path: &Path) -> Result<Vec<Poi>> {
    let rows: Vec<PoiRow> = read_rows(path)?;
    let mut seen = std::collections::BTreeSet::new();
    rows.into_iter()
        .map(|r| {
            if !seen.insert(r.office_id.clone()) {
                return Err(Error::parse(path, format!("duplicate office `{}`", r.office_id)));
            }
            Poi::new(r.office_id, r.lat, r.lon, r.radius_m).map_err(|e| Error::parse(path, e.to_string()))
        })
        .collect()
}

pub fn write_pois(path: &Path, pois: &[Poi]) -> Result<()> {
    write_rows(
        path,
        pois.iter().map(|p| PoiRow {
            office_id: p.office_id.clone(),
            lat: p.location.lat,
            lon: p.location.lon,
            radius_m: p.radius_m,
        }),
    )
}

fn default_names() -> Vec<String> {
    GeoFeatureRow {
        radii: DEFAULT_RADII.to_vec(),
        records_inside: vec![0; DEFAULT_RADII.len()],
        records_outside_500m: 0,
        poi_radius: 0.0,
        records_inside_building: 0,
        mean_speed: SENTINEL,
        max_speed: SENTINEL,
        stay_count: 0,
        speed_at_9: [SENTINEL; NEAREST],
        cosine_at_9: [SENTINEL; NEAREST],
    }
    .names()
}

/// The header comes from the first row; all rows must share its radii.
pub fn write_geofeatures(path: &Path, rows: &[DailyGeoRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let names = match rows.first() {
        Some(r) => r.features.names(),
        None => default_names(),
    };
    let mut header = vec!["user_id".to_owned(), "date".to_owned(), "office_id".to_owned()];
    header.extend(names.iter().cloned());
    writer.write_record(&header)?;
    for r in rows {
        if r.features.names() != names {
            return Err(Error::Shape(format!(
                "row for {} on {} has a different radius ladder",
                r.user, r.date
            )));
        }
        let mut record = vec![r.user.clone(), r.date.to_string(), r.office_id.clone()];
        record.extend(r.features.values().into_iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_geofeatures(path: &Path) -> Result<Vec<DailyGeoRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < 3 || header[..3] != ["user_id", "date", "office_id"] {
        return Err(Error::parse(path, "header must start with user_id,date,office_id"));
    }
    let names = &header[3..];
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = i + 2;
        let date: NaiveDate = record[1]
            .parse()
            .map_err(|e| Error::parse(path, format!("line {line}: bad date: {e}")))?;
        let values = record
            .iter()
            .skip(3)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        let features =
            GeoFeatureRow::from_columns(names, &values).map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        out.push(DailyGeoRow {
            user: record[0].to_owned(),
            date,
            office_id: record[2].to_owned(),
            features,
        });
    }
    Ok(out)
}
