use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::evaluate::{forecast_ar, forecast_rf, mfagl_aggregate, BaselineConfig};
use crate::aggl::MfAglModel;
use crate::baselines::LagSchema;
use crate::error::{Error, Result};
use crate::regions::{AreaId, LabelView, Labels, MixedFrequencyPanel, Period};

/// When official figures for a month become public.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseSchedule {
    /// Days after the last day of the month. 32 puts August on October 2.
    pub release_lag_days: i64,
}

impl Default for ReleaseSchedule {
    fn default() -> Self {
        ReleaseSchedule { release_lag_days: 32 }
    }
}

impl ReleaseSchedule {
    pub fn release_date(&self, t: Period) -> NaiveDate {
        t.last_day() + Duration::days(self.release_lag_days)
    }

    pub fn is_released(&self, t: Period, as_of: NaiveDate) -> bool {
        self.release_date(t) <= as_of
    }
}

/// One attempt to read a label value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAccess {
    pub area: AreaId,
    pub period: Period,
    pub release_date: NaiveDate,
    /// Whether a value was handed out.
    pub granted: bool,
}

/// The labels public on `as_of`. Every value request is recorded.
pub struct ReleasedLabels<'a> {
    labels: &'a Labels,
    as_of: NaiveDate,
    schedule: ReleaseSchedule,
    log: Mutex<Vec<LabelAccess>>,
}

impl<'a> ReleasedLabels<'a> {
    pub fn new(labels: &'a Labels, as_of: NaiveDate, schedule: ReleaseSchedule) -> Self {
        ReleasedLabels {
            labels,
            as_of,
            schedule,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn as_of(&self) -> NaiveDate {
        self.as_of
    }

    pub fn accesses(&self) -> Vec<LabelAccess> {
        self.log.lock().expect("access log poisoned").clone()
    }

    /// Everything visible, read through [`LabelView::value`].
    pub fn materialize(&self) -> Labels {
        self.keys()
            .into_iter()
            .filter_map(|(p, t)| self.value(&p, t).map(|v| ((p, t), v)))
            .collect()
    }
}

impl LabelView for ReleasedLabels<'_> {
    fn keys(&self) -> Vec<(AreaId, Period)> {
        self.labels
            .keys()
            .filter(|(_, t)| self.schedule.is_released(*t, self.as_of))
            .cloned()
            .collect()
    }

    fn value(&self, p: &AreaId, t: Period) -> Option<f64> {
        let granted = self.schedule.is_released(t, self.as_of);
        let value = if granted { self.labels.get(&(p.clone(), t)).copied() } else { None };
        self.log.lock().expect("access log poisoned").push(LabelAccess {
            area: p.clone(),
            period: t,
            release_date: self.schedule.release_date(t),
            granted: value.is_some(),
        });
        value
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub release: ReleaseSchedule,
    pub baselines: BaselineConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Availability {
    Available(BTreeMap<AreaId, f64>),
    /// Why no forecast could be made.
    Unavailable(String),
}

impl Availability {
    pub fn values(&self) -> Option<&BTreeMap<AreaId, f64>> {
        match self {
            Availability::Available(v) => Some(v),
            Availability::Unavailable(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScheduleRun {
    pub as_of: NaiveDate,
    /// The month being nowcast: the one containing `as_of`.
    pub target: Period,
    pub newest_released: Option<Period>,
    pub ar: Availability,
    pub rf: Availability,
    /// Granular nowcasts and their large-area totals, when a model is given.
    pub mfagl: Option<(BTreeMap<AreaId, f64>, BTreeMap<AreaId, f64>)>,
    pub label_accesses: Vec<LabelAccess>,
}

fn baseline(result: Result<BTreeMap<AreaId, f64>>) -> Result<Availability> {
    match result {
        Ok(v) => Ok(Availability::Available(v)),
        Err(e @ (Error::InsufficientHistory(_) | Error::NoLabels)) => Ok(Availability::Unavailable(e.to_string())),
        Err(e) => Err(e),
    }
}

/// Nowcast the month of `as_of` with only what is public on that day:
/// released labels for AR and RF, features dated up to `as_of` for MF-AGL.
pub fn schedule_run(
    panel: &MixedFrequencyPanel,
    model: Option<&MfAglModel>,
    as_of: NaiveDate,
    config: &ScheduleConfig,
) -> Result<ScheduleRun> {
    if !panel.calendar.contains(as_of) {
        return Err(Error::UnknownDate(as_of));
    }
    let target = Period::of(as_of);
    let view = ReleasedLabels::new(&panel.labels, as_of, config.release);
    let visible = view.materialize();
    let newest_released = visible.keys().map(|(_, t)| *t).max();

    let (ar, rf) = if visible.is_empty() {
        let why = format!("no labels are released by {as_of}");
        (Availability::Unavailable(why.clone()), Availability::Unavailable(why))
    } else {
        let areas = panel.hierarchy.large_areas();
        let schema = LagSchema::from_panel(panel, config.baselines.lag_order);
        (
            baseline(forecast_ar(&visible, areas, target, &config.baselines))?,
            baseline(forecast_rf(&visible, &schema, target, &config.baselines))?,
        )
    };

    let mfagl = match model {
        Some(m) => Some(mfagl_aggregate(m, &panel.features, &panel.hierarchy, as_of)?),
        None => None,
    };

    Ok(ScheduleRun {
        as_of,
        target,
        newest_released,
        ar,
        rf,
        mfagl,
        label_accesses: view.accesses(),
    })
}
