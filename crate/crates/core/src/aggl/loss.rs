use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::MfAglModel;
use crate::error::{Error, Result};
use crate::regions::{AreaId, LabelView, MixedFrequencyPanel, RegionHierarchy};

/// Weighted sum `Σ_{q∈p} ω_q · prediction(q)` over the children of `p`.
pub fn aggregate(predictions: &BTreeMap<AreaId, f64>, hierarchy: &RegionHierarchy, p: &str) -> Result<f64> {
    let mut total = 0.0;
    for q in hierarchy.children(p)? {
        let value = predictions
            .get(q)
            .ok_or_else(|| Error::MissingPrediction(q.to_string()))?;
        total += hierarchy.weight_of(q.as_str())? * value;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSummary {
    pub total: f64,
    /// Number of squared residuals summed: one per labeled `(p, t)` and day of `t`.
    pub terms: usize,
}

/// The aggregate squared loss for an arbitrary granular predictor.
///
/// Every visible label `y_t^p` is compared once per calendar day `τ` of
/// `t` against `Σ_q ω_q predict(q, τ)`.
pub fn aggregate_loss<L, F>(panel: &MixedFrequencyPanel, labels: &L, mut predict: F) -> Result<LossSummary>
where
    L: LabelView,
    F: FnMut(&AreaId, NaiveDate) -> Result<f64>,
{
    let keys = labels.keys();
    if keys.is_empty() {
        return Err(Error::NoLabels);
    }
    let mut total = 0.0;
    let mut terms = 0;
    for (p, t) in keys {
        let Some(y) = labels.value(&p, t) else { continue };
        let children = panel.hierarchy.children(p.as_str())?;
        for &tau in panel.calendar.ticks_in(t) {
            let mut agg = 0.0;
            for q in children {
                agg += panel.hierarchy.weight_of(q.as_str())? * predict(q, tau)?;
            }
            let r = y - agg;
            total += r * r;
            terms += 1;
        }
    }
    Ok(LossSummary { total, terms })
}

/// Aggregate loss of a trained model on the panel's labels.
pub fn loss(panel: &MixedFrequencyPanel, model: &MfAglModel) -> Result<f64> {
    aggregate_loss(panel, &panel.labels, |q, tau| {
        model.predict_at(&panel.features, q.as_str(), tau)
    })
    .map(|s| s.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::{Features, FrequencyCalendar, Labels, Period};

    fn h(entries: &[(&str, &str, Option<f64>)]) -> RegionHierarchy {
        RegionHierarchy::new(entries.iter().copied()).unwrap()
    }

    fn preds(entries: &[(&str, f64)]) -> BTreeMap<AreaId, f64> {
        entries.iter().map(|(q, v)| (AreaId::new(*q), *v)).collect()
    }

    #[test]
    fn unit_weight_sum() {
        let hier = h(&[("q1", "P", None), ("q2", "P", None)]);
        assert_eq!(aggregate(&preds(&[("q1", 2.0), ("q2", 3.0)]), &hier, "P").unwrap(), 5.0);
    }

    #[test]
    fn single_child_is_identity() {
        let hier = h(&[("q", "P", Some(1.0))]);
        assert_eq!(aggregate(&preds(&[("q", 7.3)]), &hier, "P").unwrap(), 7.3);
    }

    #[test]
    fn half_weights() {
        let hier = h(&[("q1", "P", Some(0.5)), ("q2", "P", Some(0.5))]);
        assert_eq!(aggregate(&preds(&[("q1", 10.0), ("q2", 20.0)]), &hier, "P").unwrap(), 15.0);
    }

    #[test]
    fn missing_child_is_named() {
        let hier = h(&[("q1", "P", None), ("q2", "P", None)]);
        let err = aggregate(&preds(&[("q1", 1.0)]), &hier, "P").unwrap_err();
        assert!(matches!(err, Error::MissingPrediction(ref q) if q == "q2"));
    }

    fn two_tick_panel() -> MixedFrequencyPanel {
        let hier = h(&[("q1", "P", None), ("q2", "P", None)]);
        let d1 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        let calendar = FrequencyCalendar::from_ticks([d1, d2]).unwrap();
        let mut labels = Labels::new();
        labels.insert(("P".into(), Period::new(2020, 1).unwrap()), 10.0);
        MixedFrequencyPanel::new(hier, calendar, Features::new(), labels)
    }

    #[test]
    fn two_ticks_with_aggregates_9_and_11() {
        let panel = two_tick_panel();
        let s = aggregate_loss(&panel, &panel.labels, |q, tau| {
            // q1 + q2 = 9 on day 1 and 11 on day 2.
            Ok(match (q.as_str(), tau.format("%d").to_string().as_str()) {
                ("q1", "01") => 4.0,
                ("q2", "01") => 5.0,
                ("q1", _) => 6.0,
                _ => 5.0,
            })
        })
        .unwrap();
        assert_eq!(s.total, 2.0);
        assert_eq!(s.terms, 2);
    }

    #[test]
    fn exact_fit_has_zero_loss() {
        let panel = two_tick_panel();
        let s = aggregate_loss(&panel, &panel.labels, |_, _| Ok(5.0)).unwrap();
        assert_eq!(s.total, 0.0);
    }

    #[test]
    fn no_labels_is_an_error() {
        let mut panel = two_tick_panel();
        panel.labels.clear();
        assert!(matches!(
            aggregate_loss(&panel, &panel.labels, |_, _| Ok(1.0)),
            Err(Error::NoLabels)
        ));
    }
}
