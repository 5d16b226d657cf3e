use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;

use super::{AreaId, FrequencyCalendar, Period, RegionHierarchy, Vocabulary};

/// Daily feature values keyed by small area, then date.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Features {
    by_area: BTreeMap<AreaId, BTreeMap<NaiveDate, f64>>,
}

impl Features {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or overwrite one observation.
    pub fn insert(&mut self, q: impl Into<AreaId>, date: NaiveDate, value: f64) {
        self.by_area.entry(q.into()).or_default().insert(date, value);
    }

    pub fn get(&self, q: &str, date: NaiveDate) -> Option<f64> {
        self.by_area.get(q)?.get(&date).copied()
    }

    pub fn area(&self, q: &str) -> Option<&BTreeMap<NaiveDate, f64>> {
        self.by_area.get(q)
    }

    /// All observations in `(area, date)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&AreaId, NaiveDate, f64)> {
        self.by_area
            .iter()
            .flat_map(|(q, days)| days.iter().map(move |(d, v)| (q, *d, *v)))
    }

    pub fn len(&self) -> usize {
        self.by_area.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keep only observations dated on or before `as_of`.
    pub fn truncated(&self, as_of: NaiveDate) -> Features {
        let by_area = self
            .by_area
            .iter()
            .map(|(q, days)| {
                let kept = days.range(..=as_of).map(|(d, v)| (*d, *v)).collect();
                (q.clone(), kept)
            })
            .collect();
        Features { by_area }
    }
}

impl FromIterator<(AreaId, NaiveDate, f64)> for Features {
    fn from_iter<T: IntoIterator<Item = (AreaId, NaiveDate, f64)>>(iter: T) -> Self {
        let mut f = Features::new();
        for (q, d, v) in iter {
            f.insert(q, d, v);
        }
        f
    }
}

/// Coarse labels `y_t^p` keyed by large area and period.
pub type Labels = BTreeMap<(AreaId, Period), f64>;

/// Read access to coarse labels.
///
/// Training, baselines and the release-schedule driver read labels only
/// through this trait, which lets callers restrict (or record) what a
/// model is allowed to see.
pub trait LabelView {
    /// Keys with a visible label, in `(area, period)` order. Does not
    /// read any label value.
    fn keys(&self) -> Vec<(AreaId, Period)>;

    /// The label value, if visible.
    fn value(&self, p: &AreaId, t: Period) -> Option<f64>;
}

impl LabelView for Labels {
    fn keys(&self) -> Vec<(AreaId, Period)> {
        BTreeMap::keys(self).cloned().collect()
    }

    fn value(&self, p: &AreaId, t: Period) -> Option<f64> {
        self.get(&(p.clone(), t)).copied()
    }
}

impl<L: LabelView + ?Sized> LabelView for &L {
    fn keys(&self) -> Vec<(AreaId, Period)> {
        (**self).keys()
    }

    fn value(&self, p: &AreaId, t: Period) -> Option<f64> {
        (**self).value(p, t)
    }
}

/// One broken panel invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Fine-grained features with coarse labels over a region hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedFrequencyPanel {
    pub hierarchy: RegionHierarchy,
    pub calendar: FrequencyCalendar,
    pub features: Features,
    pub labels: Labels,
}

impl MixedFrequencyPanel {
    /// Assemble a panel. No validation is done here; see [`Self::validate`].
    pub fn new(
        hierarchy: RegionHierarchy,
        calendar: FrequencyCalendar,
        features: Features,
        labels: Labels,
    ) -> Self {
        MixedFrequencyPanel {
            hierarchy,
            calendar,
            features,
            labels,
        }
    }

    /// Category vocabularies implied by this panel's hierarchy and calendar.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_panel(self)
    }

    /// Periods that carry at least one label, ascending.
    pub fn labeled_periods(&self) -> Vec<Period> {
        let mut periods: Vec<Period> = self.labels.keys().map(|(_, t)| *t).collect();
        periods.sort_unstable();
        periods.dedup();
        periods
    }

    /// Same panel with labels for `period` and later removed.
    pub fn without_labels_from(&self, period: Period) -> MixedFrequencyPanel {
        let mut panel = self.clone();
        panel.labels.retain(|(_, t), _| *t < period);
        panel
    }

    /// Every violated invariant; empty iff the panel is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |entity: String, rule: &str| {
            out.push(Violation {
                entity,
                rule: rule.to_owned(),
            })
        };
        for ((p, t), value) in &self.labels {
            let entity = format!("label ({p}, {t})");
            if !self.hierarchy.is_large(p.as_str()) {
                push(entity.clone(), "references an unknown large area");
            }
            if !self.calendar.contains_period(*t) {
                push(entity.clone(), "references a period outside the calendar");
            }
            if !value.is_finite() {
                push(entity, "value is not finite");
            }
        }
        for (q, date, value) in self.features.iter() {
            let entity = format!("feature ({q}, {date})");
            if !self.hierarchy.is_small(q.as_str()) {
                push(entity.clone(), "references an unknown small area");
            }
            if !self.calendar.contains(date) {
                push(entity.clone(), "is dated outside the calendar");
            }
            if !(value.is_finite() && value >= 0.0) {
                push(entity, "visit count must be finite and non-negative");
            }
        }
        out
    }
}
