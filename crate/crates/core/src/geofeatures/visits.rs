use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_features, haversine, FeatureConfig, GeoFeatureRow, GpsTrajectory, LatLon, Poi};
use crate::error::{Error, Result};
use crate::regions::Features;

/// Decides whether a feature row is a visit to its office.
pub trait VisitClassifier: Sync {
    fn is_visit(&self, row: &GeoFeatureRow) -> bool;
}

/// Visit when at least `min_inside_building` records fall inside the
/// building and the user stayed somewhere at least once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub min_inside_building: u64,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule { min_inside_building: 3 }
    }
}

impl VisitClassifier for ThresholdRule {
    fn is_visit(&self, row: &GeoFeatureRow) -> bool {
        row.records_inside_building >= self.min_inside_building && row.stay_count >= 1
    }
}

/// `sigmoid(bias + w . values) > cut`, with weights aligned to
/// [`GeoFeatureRow::values`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub cut: f64,
}

impl LogisticClassifier {
    pub fn probability(&self, row: &GeoFeatureRow) -> f64 {
        let z = self.bias + self.weights.iter().zip(row.values()).map(|(w, x)| w * x).sum::<f64>();
        crate::netcore::sigmoid(z)
    }
}

impl VisitClassifier for LogisticClassifier {
    fn is_visit(&self, row: &GeoFeatureRow) -> bool {
        self.probability(row) > self.cut
    }
}

pub fn classify_visit(row: &GeoFeatureRow, classifier: &dyn VisitClassifier) -> bool {
    classifier.is_visit(row)
}

/// Nearest office; exact ties go to the smallest `office_id`.
pub fn assign_office<'a>(point: LatLon, offices: &'a [Poi]) -> Result<&'a Poi> {
    offices
        .iter()
        .map(|o| (haversine(point, o.location), o))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.office_id.cmp(&b.1.office_id)))
        .map(|(_, o)| o)
        .ok_or_else(|| Error::Empty("no offices to assign to".into()))
}

/// Combine trajectory pieces by user, ordering records by time. Repeated
/// identical records are kept once.
pub fn merge_trajectories(parts: Vec<GpsTrajectory>) -> Result<Vec<GpsTrajectory>> {
    let mut by_user: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for part in parts {
        by_user.entry(part.user().to_owned()).or_default().extend_from_slice(part.points());
    }
    by_user
        .into_iter()
        .map(|(user, mut points)| {
            points.sort_by_key(|p| p.timestamp);
            points.dedup();
            GpsTrajectory::new(user, points)
        })
        .collect()
}

/// Geo-features of one user on one UTC day around one candidate office.
#[derive(Clone, Debug, PartialEq)]
pub struct DailyGeoRow {
    pub user: String,
    pub date: NaiveDate,
    pub office_id: String,
    pub features: GeoFeatureRow,
}

fn split_by_day(trajectory: &GpsTrajectory) -> Result<Vec<(NaiveDate, GpsTrajectory)>> {
    let mut days: BTreeMap<NaiveDate, Vec<_>> = BTreeMap::new();
    for p in trajectory.points() {
        days.entry(p.timestamp.date_naive()).or_default().push(*p);
    }
    days.into_iter()
        .map(|(d, pts)| Ok((d, GpsTrajectory::new(trajectory.user(), pts)?)))
        .collect()
}

/// One row per (user, day, office), where the offices of a day are those
/// nearest to at least one of that day's records.
pub fn daily_geo_rows(trajectories: &[GpsTrajectory], offices: &[Poi], config: &FeatureConfig) -> Result<Vec<DailyGeoRow>> {
    config.check()?;
    if trajectories.iter().any(|t| !t.is_empty()) && offices.is_empty() {
        return Err(Error::Empty("no offices to assign to".into()));
    }
    let per_user: Vec<Result<Vec<DailyGeoRow>>> = trajectories
        .par_iter()
        .map(|t| {
            let mut rows = Vec::new();
            for (date, day) in split_by_day(t)? {
                let mut candidates = BTreeSet::new();
                for p in day.points() {
                    candidates.insert(assign_office(p.position, offices)?.office_id.clone());
                }
                for office_id in candidates {
                    let poi = offices.iter().find(|o| o.office_id == office_id).expect("office from list");
                    rows.push(DailyGeoRow {
                        user: t.user().to_owned(),
                        date,
                        office_id,
                        features: extract_features(&day, poi, config)?,
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_user {
        out.extend(rows?);
    }
    out.sort_by(|a, b| (a.date, &a.office_id, &a.user).cmp(&(b.date, &b.office_id, &b.user)));
    Ok(out)
}

/// Visits per (office, day): each user counts at most once per office per
/// day. Offices and days without visits are absent.
pub fn daily_visit_counts(
    trajectories: &[GpsTrajectory],
    offices: &[Poi],
    classifier: &dyn VisitClassifier,
    config: &FeatureConfig,
) -> Result<BTreeMap<(String, NaiveDate), u64>> {
    let merged = merge_trajectories(trajectories.to_vec())?;
    let mut visitors: BTreeMap<(String, NaiveDate), BTreeSet<String>> = BTreeMap::new();
    for row in daily_geo_rows(&merged, offices, config)? {
        if classifier.is_visit(&row.features) {
            visitors.entry((row.office_id, row.date)).or_default().insert(row.user);
        }
    }
    Ok(visitors.into_iter().map(|(k, users)| (k, users.len() as u64)).collect())
}

/// Daily counts as panel features, with offices as small areas.
pub fn visits_to_features(counts: &BTreeMap<(String, NaiveDate), u64>) -> Features {
    counts
        .iter()
        .map(|((office, date), &n)| (office.as_str().into(), *date, n as f64))
        .collect()
}
