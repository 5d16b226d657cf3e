//! CSV interfaces for hierarchies, labels and features.
//!
//! | file            | header                                  |
//! |-----------------|-----------------------------------------|
//! | `hierarchy.csv` | `small_area_id,large_area_id,weight`    |
//! | `labels.csv`    | `period,large_area_id,value`            |
//! | `features.csv`  | `date,small_area_id,visit_count`        |
//!
//! `weight` may be empty or the column omitted, meaning 1.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{AreaId, Features, FrequencyCalendar, Labels, MixedFrequencyPanel, Period, RegionHierarchy};
use crate::error::{Error, Result};

pub const HIERARCHY_FILE: &str = "hierarchy.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const FEATURES_FILE: &str = "features.csv";

#[derive(Serialize, Deserialize)]
struct HierarchyRow {
    small_area_id: String,
    large_area_id: String,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    period: String,
    large_area_id: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct FeatureRow {
    date: NaiveDate,
    small_area_id: String,
    visit_count: f64,
}

pub(crate) fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::parse(path, e.to_string())))
        .collect()
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_hierarchy(path: &Path) -> Result<RegionHierarchy> {
    let rows: Vec<HierarchyRow> = read_rows(path)?;
    RegionHierarchy::new(rows.into_iter().map(|r| (r.small_area_id, r.large_area_id, r.weight)))
        .map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_hierarchy(path: &Path, hierarchy: &RegionHierarchy) -> Result<()> {
    write_rows(
        path,
        hierarchy.entries().map(|(q, p, w)| HierarchyRow {
            small_area_id: q.to_string(),
            large_area_id: p.to_string(),
            weight: Some(w),
        }),
    )
}

pub fn read_labels(path: &Path) -> Result<Labels> {
    let rows: Vec<LabelRow> = read_rows(path)?;
    let mut labels = Labels::new();
    for row in rows {
        let period: Period = row.period.parse().map_err(|e: Error| Error::parse(path, e.to_string()))?;
        if !row.value.is_finite() {
            return Err(Error::parse(path, format!("non-finite label for {} {}", row.large_area_id, period)));
        }
        labels.insert((AreaId::new(row.large_area_id), period), row.value);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &Labels) -> Result<()> {
    write_rows(
        path,
        labels.iter().map(|((p, t), v)| LabelRow {
            period: t.to_string(),
            large_area_id: p.to_string(),
            value: *v,
        }),
    )
}

pub fn read_features(path: &Path) -> Result<Features> {
    let rows: Vec<FeatureRow> = read_rows(path)?;
    let mut features = Features::new();
    for row in rows {
        if !(row.visit_count.is_finite() && row.visit_count >= 0.0) {
            return Err(Error::parse(
                path,
                format!("visit_count for {} on {} must be non-negative", row.small_area_id, row.date),
            ));
        }
        features.insert(row.small_area_id, row.date, row.visit_count);
    }
    Ok(features)
}

pub fn write_features(path: &Path, features: &Features) -> Result<()> {
    // Date-major order reads naturally and diffs well.
    let mut rows: Vec<_> = features.iter().collect();
    rows.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    write_rows(
        path,
        rows.into_iter().map(|(q, date, v)| FeatureRow {
            date,
            small_area_id: q.to_string(),
            visit_count: v,
        }),
    )
}

/// Load `hierarchy.csv`, `labels.csv` and `features.csv` from `dir`.
///
/// The calendar spans whole months from the earliest to the latest
/// feature date or label period.
pub fn read_panel(dir: &Path) -> Result<MixedFrequencyPanel> {
    let hierarchy = read_hierarchy(&dir.join(HIERARCHY_FILE))?;
    let labels = read_labels(&dir.join(LABELS_FILE))?;
    let features = read_features(&dir.join(FEATURES_FILE))?;
    let periods = labels
        .keys()
        .map(|(_, t)| *t)
        .chain(features.iter().map(|(_, d, _)| Period::of(d)));
    let (first, last) = periods.fold((None, None), |(lo, hi): (Option<Period>, Option<Period>), t| {
        (Some(lo.map_or(t, |l| l.min(t))), Some(hi.map_or(t, |h| h.max(t))))
    });
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::Empty(format!("no labels or features in {}", dir.display())));
    };
    let calendar = FrequencyCalendar::monthly(first, last)?;
    Ok(MixedFrequencyPanel::new(hierarchy, calendar, features, labels))
}

pub fn write_panel(dir: &Path, panel: &MixedFrequencyPanel) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_hierarchy(&dir.join(HIERARCHY_FILE), &panel.hierarchy)?;
    write_labels(&dir.join(LABELS_FILE), &panel.labels)?;
    write_features(&dir.join(FEATURES_FILE), &panel.features)?;
    Ok(())
}
