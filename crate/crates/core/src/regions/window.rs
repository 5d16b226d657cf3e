use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{AreaId, Features, MixedFrequencyPanel, RegionHierarchy};
use crate::error::{Error, Result};

/// Which calendar position the day dummy encodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayEncoding {
    /// 31 categories, day 1 at index 0.
    #[default]
    DayOfMonth,
    /// 7 categories, Monday at index 0.
    DayOfWeek,
}

impl DayEncoding {
    pub fn len(self) -> usize {
        match self {
            DayEncoding::DayOfMonth => 31,
            DayEncoding::DayOfWeek => 7,
        }
    }

    pub fn index(self, date: NaiveDate) -> usize {
        match self {
            DayEncoding::DayOfMonth => date.day0() as usize,
            DayEncoding::DayOfWeek => date.weekday().num_days_from_monday() as usize,
        }
    }
}

/// Frozen category vocabularies for the one-hot blocks.
///
/// Months always have 12 categories; years and areas are whatever was
/// present when the vocabulary was built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub years: Vec<i32>,
    pub large_areas: Vec<AreaId>,
    pub small_areas: Vec<AreaId>,
    pub day_encoding: DayEncoding,
}

impl Vocabulary {
    pub fn from_panel(panel: &MixedFrequencyPanel) -> Self {
        let mut years: Vec<i32> = panel.calendar.periods().iter().map(|p| p.year()).collect();
        years.dedup();
        Vocabulary {
            years,
            large_areas: panel.hierarchy.large_areas().to_vec(),
            small_areas: panel.hierarchy.small_areas().to_vec(),
            day_encoding: DayEncoding::default(),
        }
    }

    pub fn with_day_encoding(mut self, day_encoding: DayEncoding) -> Self {
        self.day_encoding = day_encoding;
        self
    }

    /// Total width of the concatenated one-hot blocks.
    pub fn dummy_len(&self) -> usize {
        self.years.len() + 12 + self.day_encoding.len() + self.large_areas.len() + self.small_areas.len()
    }

    fn year_index(&self, year: i32) -> Result<usize> {
        self.years
            .binary_search(&year)
            .map_err(|_| Error::UnseenCategory {
                vocabulary: "year",
                value: year.to_string(),
            })
    }

    fn area_index(list: &[AreaId], id: &str, vocabulary: &'static str) -> Result<usize> {
        list.binary_search_by(|a| a.as_str().cmp(id))
            .map_err(|_| Error::UnseenCategory {
                vocabulary,
                value: id.to_owned(),
            })
    }
}

fn one_hot(len: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

/// Model input for one `(small area, day)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureWindow {
    pub origin: (AreaId, NaiveDate),
    /// Daily visit counts, oldest first; the last entry is the origin day.
    pub visit_lags: Vec<f64>,
    /// `true` where no observation existed and the lag was zero-filled.
    pub padding_mask: Vec<bool>,
    pub year_onehot: Vec<f64>,
    pub month_onehot: Vec<f64>,
    pub day_onehot: Vec<f64>,
    pub large_area_onehot: Vec<f64>,
    pub small_area_onehot: Vec<f64>,
}

impl FeatureWindow {
    /// Build a window against explicit vocabularies.
    ///
    /// `visit_lags[i]` is the feature at `date - (lag_days - 1 - i)` days.
    pub fn build(
        features: &Features,
        vocabulary: &Vocabulary,
        hierarchy: &RegionHierarchy,
        q: &str,
        date: NaiveDate,
        lag_days: usize,
    ) -> Result<Self> {
        if lag_days == 0 {
            return Err(Error::InvalidArgument("lag_days must be at least 1".into()));
        }
        let parent = hierarchy.parent_of(q)?;
        let year = vocabulary.year_index(date.year())?;
        let large = Vocabulary::area_index(&vocabulary.large_areas, parent.as_str(), "large area")?;
        let small = Vocabulary::area_index(&vocabulary.small_areas, q, "small area")?;

        let history = features.area(q);
        let mut visit_lags = Vec::with_capacity(lag_days);
        let mut padding_mask = Vec::with_capacity(lag_days);
        for back in (0..lag_days).rev() {
            let day = date - Duration::days(back as i64);
            match history.and_then(|h| h.get(&day)) {
                Some(&v) => {
                    visit_lags.push(v);
                    padding_mask.push(false);
                }
                None => {
                    visit_lags.push(0.0);
                    padding_mask.push(true);
                }
            }
        }

        Ok(FeatureWindow {
            origin: (AreaId::new(q), date),
            visit_lags,
            padding_mask,
            year_onehot: one_hot(vocabulary.years.len(), year),
            month_onehot: one_hot(12, date.month0() as usize),
            day_onehot: one_hot(vocabulary.day_encoding.len(), vocabulary.day_encoding.index(date)),
            large_area_onehot: one_hot(vocabulary.large_areas.len(), large),
            small_area_onehot: one_hot(vocabulary.small_areas.len(), small),
        })
    }

    /// Concatenated one-hot blocks: year, month, day, large area, small area.
    pub fn dummies(&self) -> Vec<f64> {
        [
            &self.year_onehot[..],
            &self.month_onehot,
            &self.day_onehot,
            &self.large_area_onehot,
            &self.small_area_onehot,
        ]
        .concat()
    }

    pub fn is_fully_padded(&self) -> bool {
        self.padding_mask.iter().all(|&m| m)
    }
}

impl MixedFrequencyPanel {
    /// Window at `(q, date)` using this panel's own vocabularies.
    pub fn feature_window(&self, q: &str, date: NaiveDate, lag_days: usize) -> Result<FeatureWindow> {
        if lag_days == 0 {
            return Err(Error::InvalidArgument("lag_days must be at least 1".into()));
        }
        self.calendar.period_of(date)?;
        FeatureWindow::build(&self.features, &self.vocabulary(), &self.hierarchy, q, date, lag_days)
    }
}
