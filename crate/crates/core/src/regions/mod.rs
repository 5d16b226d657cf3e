//! Spatial hierarchy, mixed-frequency calendar and the panel dataset.
//!
//! Small areas `q` (offices, cities) roll up into large areas `p`
//! (prefectures) through a total parent map, and fine ticks (days) roll up
//! into coarse periods (months). Features live on `(q, day)`, labels on
//! `(p, month)`.

mod calendar;
mod hierarchy;
pub mod io;
mod panel;
mod window;

pub use calendar::{FrequencyCalendar, Period};
pub use hierarchy::RegionHierarchy;
pub use panel::{Features, LabelView, Labels, MixedFrequencyPanel, Violation};
pub use window::{DayEncoding, FeatureWindow, Vocabulary};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque identifier of a small or large area.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaId(String);

impl AreaId {
    pub fn new(id: impl Into<String>) -> Self {
        AreaId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AreaId {
    fn from(s: &str) -> Self {
        AreaId(s.to_owned())
    }
}

impl From<String> for AreaId {
    fn from(s: String) -> Self {
        AreaId(s)
    }
}

impl std::borrow::Borrow<str> for AreaId {
    fn borrow(&self) -> &str {
        &self.0
    }
}
