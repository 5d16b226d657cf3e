//! Aggregate-level comparison models: a pooled autoregression and a random
//! forest over lags and calendar/area dummies. Both predict `y_t^p`
//! directly at the large-area level.

pub mod ar;
pub mod forest;

use std::collections::BTreeMap;

pub use ar::{fit_ar, fit_ar_per_area, predict_ar, ArModel};
pub use forest::{fit_rf, predict_rf, ForestConfig, Node, RandomForest, RegressionTree};

use crate::error::{Error, Result};
use crate::regions::{AreaId, Labels, MixedFrequencyPanel, Period};

/// Column layout for forest rows: `lag_1..lag_k` (newest first), then
/// year, month and large-area one-hots.
#[derive(Clone, Debug, PartialEq)]
pub struct LagSchema {
    pub lag_order: usize,
    pub years: Vec<i32>,
    pub large_areas: Vec<AreaId>,
}

impl LagSchema {
    /// Years come from the panel calendar, so forecasts anywhere inside it
    /// have a column to switch on.
    pub fn from_panel(panel: &MixedFrequencyPanel, lag_order: usize) -> Self {
        let mut years: Vec<i32> = panel.calendar.periods().iter().map(|p| p.year()).collect();
        years.dedup();
        LagSchema {
            lag_order,
            years,
            large_areas: panel.hierarchy.large_areas().to_vec(),
        }
    }

    pub fn width(&self) -> usize {
        self.lag_order + self.years.len() + 12 + self.large_areas.len()
    }

    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = (1..=self.lag_order).map(|i| format!("lag_{i}")).collect();
        out.extend(self.years.iter().map(|y| format!("year_{y}")));
        out.extend((1..=12).map(|m| format!("month_{m:02}")));
        out.extend(self.large_areas.iter().map(|p| format!("area_{p}")));
        out
    }

    /// Row for predicting `y_t^p` from `recent`, newest last.
    pub fn row(&self, p: &str, t: Period, recent: &[f64]) -> Result<Vec<f64>> {
        if recent.len() != self.lag_order {
            return Err(Error::Shape(format!(
                "forest rows take {} lags, got {}",
                self.lag_order,
                recent.len()
            )));
        }
        let year = self.years.iter().position(|&y| y == t.year()).ok_or_else(|| Error::UnseenCategory {
            vocabulary: "year",
            value: t.year().to_string(),
        })?;
        let area = self
            .large_areas
            .iter()
            .position(|a| a.as_str() == p)
            .ok_or_else(|| Error::UnknownLargeArea(p.to_owned()))?;
        let mut row = vec![0.0; self.width()];
        for (slot, v) in row.iter_mut().zip(recent.iter().rev()) {
            *slot = *v;
        }
        let mut at = self.lag_order;
        row[at + year] = 1.0;
        at += self.years.len();
        row[at + t.month() as usize - 1] = 1.0;
        at += 12;
        row[at + area] = 1.0;
        Ok(row)
    }

    /// Every labeled `(p, t)` whose lags are all labeled too.
    pub fn training_table(&self, labels: &Labels) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (p, series) in ar::series_of(labels) {
            for (&t, &y) in &series {
                if let Some(lags) = ar::lags_before(&series, t, self.lag_order) {
                    rows.push(self.row(p.as_str(), t, &lags)?);
                    targets.push(y);
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::InsufficientHistory(format!(
                "no large area has {} consecutive labeled months",
                self.lag_order + 1
            )));
        }
        Ok((rows, targets))
    }
}

/// Predict `target` from the values of `series` before it. Months between
/// the newest known value and `target` are filled with the model's own
/// one-step predictions.
pub fn recursive_forecast<F>(series: &BTreeMap<Period, f64>, target: Period, lag_order: usize, mut step: F) -> Result<f64>
where
    F: FnMut(Period, &[f64]) -> Result<f64>,
{
    let Some((&newest, _)) = series.range(..target).next_back() else {
        return Err(Error::InsufficientHistory(format!("no values before {target}")));
    };
    let mut extended: BTreeMap<Period, f64> = series.range(..=newest).map(|(&t, &v)| (t, v)).collect();
    let mut t = newest.next();
    loop {
        let lags = ar::lags_before(&extended, t, lag_order).ok_or_else(|| {
            Error::InsufficientHistory(format!("forecasting {t} needs the {lag_order} preceding months"))
        })?;
        let y = step(t, &lags)?;
        if t == target {
            return Ok(y);
        }
        extended.insert(t, y);
        t = t.next();
    }
}

/// Series of one large area from a label map.
pub fn series_for(labels: &Labels, p: &str) -> BTreeMap<Period, f64> {
    labels
        .iter()
        .filter(|((q, _), _)| q.as_str() == p)
        .map(|((_, t), &y)| (*t, y))
        .collect()
}
