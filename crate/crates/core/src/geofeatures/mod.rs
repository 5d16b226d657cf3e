//! Geo-features from raw GPS trajectories around points of interest, and
//! the daily visit counts they feed into the panel.

mod extract;
pub mod io;
mod visits;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use extract::{
    count_within_radius, detect_stay_points, extract_features, nearest9_features, speed_profile, FeatureConfig,
    GeoFeatureRow, DEFAULT_RADII, NEAREST, SENTINEL,
};
pub use visits::{
    assign_office, classify_visit, daily_geo_rows, daily_visit_counts, merge_trajectories, visits_to_features,
    DailyGeoRow, LogisticClassifier, ThresholdRule, VisitClassifier,
};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    pub fn is_valid(self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpsPoint {
    pub timestamp: DateTime<Utc>,
    pub position: LatLon,
}

impl GpsPoint {
    pub fn new(timestamp: DateTime<Utc>, lat: f64, lon: f64) -> Self {
        GpsPoint {
            timestamp,
            position: LatLon::new(lat, lon),
        }
    }
}

/// One user's time-ordered GPS records.
#[derive(Clone, Debug, PartialEq)]
pub struct GpsTrajectory {
    user: String,
    points: Vec<GpsPoint>,
}

impl GpsTrajectory {
    /// Timestamps must be strictly increasing and coordinates in range.
    pub fn new(user: impl Into<String>, points: Vec<GpsPoint>) -> Result<Self> {
        let user = user.into();
        if let Some(p) = points.iter().find(|p| !p.position.is_valid()) {
            return Err(Error::InvalidArgument(format!(
                "user `{user}`: coordinate ({}, {}) out of range",
                p.position.lat, p.position.lon
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(Error::InvalidArgument(format!(
                "user `{user}`: timestamps not strictly increasing at {}",
                w[1].timestamp
            )));
        }
        Ok(GpsTrajectory { user, points })
    }

    pub fn user(&self) -> &str {
        &self.user
    }

    pub fn points(&self) -> &[GpsPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A point of interest: an office and the radius of its building.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub office_id: String,
    pub location: LatLon,
    pub radius_m: f64,
}

impl Poi {
    pub fn new(office_id: impl Into<String>, lat: f64, lon: f64, radius_m: f64) -> Result<Self> {
        let poi = Poi {
            office_id: office_id.into(),
            location: LatLon::new(lat, lon),
            radius_m,
        };
        if !(radius_m > 0.0 && radius_m.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "office `{}`: radius must be positive",
                poi.office_id
            )));
        }
        if !poi.location.is_valid() {
            return Err(Error::InvalidArgument(format!("office `{}`: coordinate out of range", poi.office_id)));
        }
        Ok(poi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StayPoint {
    pub centroid: LatLon,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub count: usize,
}
