//! Synthetic worlds with known granular truth.
//!
//! Each small area has a latent monthly value `y_t^q` driven by an
//! area-specific base level, a seasonal cycle and a step shock. Daily
//! features are a noisy proportional signal of the latent value; coarse
//! labels are the exact weighted sums over children. Only the features
//! carry noise, so any error in recovering `y_t^q` is estimator error.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::aggl::aggregate;
use crate::error::{Error, Result};
use crate::harness::metrics::{mape_values, pearson};
use crate::regions::io::{read_rows, write_panel, write_rows};
use crate::regions::{AreaId, Features, FrequencyCalendar, Labels, MixedFrequencyPanel, Period, RegionHierarchy};

pub const TRUTH_FILE: &str = "truth.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n_large_areas: usize,
    pub children_per_large: usize,
    pub n_months: usize,
    /// First month of the calendar.
    pub start: Period,
    pub seed: u64,
    /// Base levels are drawn uniformly from this range.
    pub base_min: f64,
    pub base_max: f64,
    /// Relative amplitude of the 12-month cycle.
    pub seasonal_amplitude: f64,
    /// Largest per-area shift of the seasonal phase, in months.
    pub phase_jitter_months: f64,
    /// 0-based month index at which the step shock starts; none if past the end.
    pub shock_month: usize,
    /// Mean relative jump at the shock; each area draws from `[0.5, 1.5]` times this.
    pub shock_magnitude: f64,
    /// Relative noise of the latent monthly values.
    pub latent_noise: f64,
    /// Daily visits per unit of the monthly latent value, before dividing by month length.
    pub visits_per_unit: f64,
    /// Relative noise of each daily feature.
    pub feature_noise: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_large_areas: 3,
            children_per_large: 4,
            n_months: 24,
            start: Period::new(2018, 11).expect("valid"),
            seed: 0,
            base_min: 50.0,
            base_max: 300.0,
            seasonal_amplitude: 0.15,
            phase_jitter_months: 1.5,
            shock_month: 17,
            shock_magnitude: 0.3,
            latent_noise: 0.02,
            visits_per_unit: 1.0,
            feature_noise: 0.05,
        }
    }
}

impl WorldConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_owned()));
        if self.n_large_areas == 0 || self.children_per_large == 0 || self.n_months == 0 {
            return bad("area and month counts must be at least 1");
        }
        if !(self.base_min > 0.0 && self.base_max >= self.base_min && self.base_max.is_finite()) {
            return bad("need 0 < base_min <= base_max");
        }
        if self.latent_noise < 0.0 || self.feature_noise < 0.0 || !(self.visits_per_unit > 0.0) {
            return bad("noise levels must be >= 0 and visits_per_unit > 0");
        }
        if !(0.0..1.0).contains(&self.seasonal_amplitude) {
            return bad("seasonal_amplitude must lie in [0, 1)");
        }
        if self.shock_magnitude <= -0.5 {
            return bad("shock_magnitude must exceed -0.5");
        }
        Ok(())
    }

    pub fn last_period(&self) -> Period {
        self.start.add_months(self.n_months as i32 - 1)
    }
}

/// A panel plus the latent granular values it was generated from.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWorld {
    pub panel: MixedFrequencyPanel,
    pub truth: BTreeMap<(AreaId, Period), f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate_world(config: &WorldConfig) -> Result<SyntheticWorld> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut entries = Vec::new();
    for i in 0..config.n_large_areas {
        let p = format!("P{:02}", i + 1);
        for j in 0..config.children_per_large {
            entries.push((format!("{p}-Q{:02}", j + 1), p.clone(), None));
        }
    }
    let hierarchy = RegionHierarchy::new(entries)?;
    let calendar = FrequencyCalendar::monthly(config.start, config.last_period())?;

    struct AreaTraits {
        base: f64,
        phase: f64,
        shock: f64,
    }
    let traits: Vec<AreaTraits> = hierarchy
        .small_areas()
        .iter()
        .map(|_| AreaTraits {
            base: rng.gen_range(config.base_min..=config.base_max),
            phase: rng.gen_range(-1.0..=1.0) * config.phase_jitter_months,
            shock: config.shock_magnitude * rng.gen_range(0.5..=1.5),
        })
        .collect();

    let mut truth = BTreeMap::new();
    let mut features = Features::new();
    for (k, &t) in calendar.periods().iter().enumerate() {
        for (q, a) in hierarchy.small_areas().iter().zip(&traits) {
            let angle = 2.0 * PI * (t.month() as f64 - 1.0 + a.phase) / 12.0;
            let seasonal = 1.0 + config.seasonal_amplitude * angle.sin();
            let shock = if k >= config.shock_month { 1.0 + a.shock } else { 1.0 };
            let noise = (1.0 + config.latent_noise * normal(&mut rng)).max(0.05);
            let y = a.base * seasonal * shock * noise;
            truth.insert((q.clone(), t), y);

            let days = calendar.ticks_in(t);
            let daily = config.visits_per_unit * y / days.len() as f64;
            for &day in days {
                let x = daily * (1.0 + config.feature_noise * normal(&mut rng));
                features.insert(q.clone(), day, x.max(0.0));
            }
        }
    }

    let mut labels = Labels::new();
    for &t in calendar.periods() {
        for p in hierarchy.large_areas() {
            let children: BTreeMap<AreaId, f64> = hierarchy
                .children(p.as_str())?
                .iter()
                .map(|q| (q.clone(), truth[&(q.clone(), t)]))
                .collect();
            labels.insert((p.clone(), t), aggregate(&children, &hierarchy, p.as_str())?);
        }
    }

    Ok(SyntheticWorld {
        panel: MixedFrequencyPanel::new(hierarchy, calendar, features, labels),
        truth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruthMetric {
    /// Mean absolute percentage error, in percent.
    Mape,
    Pearson,
}

/// Compare granular predictions against the latent truth over the
/// prediction keys.
pub fn truth_error(
    world: &SyntheticWorld,
    predictions: &BTreeMap<(AreaId, Period), f64>,
    metric: TruthMetric,
) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty("no predictions to evaluate".into()));
    }
    let mut actual = Vec::with_capacity(predictions.len());
    let mut predicted = Vec::with_capacity(predictions.len());
    for ((q, t), v) in predictions {
        let y = world
            .truth
            .get(&(q.clone(), *t))
            .ok_or_else(|| Error::InvalidArgument(format!("no truth for ({q}, {t})")))?;
        actual.push(*y);
        predicted.push(*v);
    }
    match metric {
        TruthMetric::Mape => mape_values(&actual, &predicted),
        TruthMetric::Pearson => pearson(&actual, &predicted),
    }
}

#[derive(Serialize, Deserialize)]
struct TruthRow {
    period: String,
    small_area_id: String,
    value: f64,
}

pub fn write_truth(path: &Path, truth: &BTreeMap<(AreaId, Period), f64>) -> Result<()> {
    write_rows(
        path,
        truth.iter().map(|((q, t), v)| TruthRow {
            period: t.to_string(),
            small_area_id: q.to_string(),
            value: *v,
        }),
    )
}

pub fn read_truth(path: &Path) -> Result<BTreeMap<(AreaId, Period), f64>> {
    let rows: Vec<TruthRow> = read_rows(path)?;
    rows.into_iter()
        .map(|r| {
            let t: Period = r.period.parse().map_err(|e: Error| Error::parse(path, e.to_string()))?;
            Ok(((AreaId::new(r.small_area_id), t), r.value))
        })
        .collect()
}

/// Write the panel CSVs and `truth.csv` into `dir`.
pub fn write_world(dir: &Path, world: &SyntheticWorld) -> Result<()> {
    write_panel(dir, &world.panel)?;
    write_truth(&dir.join(TRUTH_FILE), &world.truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_world() {
        let c = WorldConfig {
            n_months: 3,
            ..WorldConfig::default()
        };
        assert_eq!(generate_world(&c).unwrap(), generate_world(&c).unwrap());
        let other = generate_world(&WorldConfig { seed: 8, ..c.clone() }).unwrap();
        assert_ne!(generate_world(&c).unwrap().truth, other.truth);
    }

    #[test]
    fn noiseless_features_sum_to_truth() {
        let c = WorldConfig {
            n_months: 4,
            latent_noise: 0.0,
            feature_noise: 0.0,
            visits_per_unit: 1.0,
            ..WorldConfig::default()
        };
        let w = generate_world(&c).unwrap();
        for ((q, t), y) in &w.truth {
            let total: f64 = w.panel.calendar.ticks_in(*t).iter().map(|d| w.panel.features.get(q.as_str(), *d).unwrap()).sum();
            assert!((total - y).abs() <= 1e-12 * y, "{q} {t}: {total} vs {y}");
        }
    }

    #[test]
    fn default_world_shape() {
        let w = generate_world(&WorldConfig::default()).unwrap();
        let panel = &w.panel;
        assert_eq!(panel.hierarchy.small_areas().len(), 12);
        assert_eq!(panel.hierarchy.large_areas().len(), 3);
        for p in panel.hierarchy.large_areas() {
            assert_eq!(panel.labels.keys().filter(|(a, _)| a == p).count(), 24);
        }
        // Nov 2018 through Oct 2020.
        let days = panel.calendar.ticks().len();
        assert_eq!(days, 731);
        assert_eq!(panel.features.area("P01-Q01").unwrap().len(), days);
        assert!(panel.validate().is_empty());
    }

    #[test]
    fn labels_are_exact_child_sums() {
        let w = generate_world(&WorldConfig::default()).unwrap();
        let h = &w.panel.hierarchy;
        for ((p, t), label) in &w.panel.labels {
            let mut sum = 0.0;
            for q in h.children(p.as_str()).unwrap() {
                sum += h.weight_of(q.as_str()).unwrap() * w.truth[&(q.clone(), *t)];
            }
            assert_eq!(label.to_bits(), sum.to_bits());
        }
    }

    #[test]
    fn features_are_non_negative() {
        let w = generate_world(&WorldConfig {
            feature_noise: 3.0,
            n_months: 2,
            ..WorldConfig::default()
        })
        .unwrap();
        assert!(w.panel.features.iter().all(|(_, _, v)| v >= 0.0));
    }

    #[test]
    fn truth_error_metrics() {
        let w = generate_world(&WorldConfig {
            n_months: 2,
            ..WorldConfig::default()
        })
        .unwrap();
        let exact = w.truth.clone();
        assert_eq!(truth_error(&w, &exact, TruthMetric::Mape).unwrap(), 0.0);
        assert!((truth_error(&w, &exact, TruthMetric::Pearson).unwrap() - 1.0).abs() < 1e-12);

        let doubled: BTreeMap<_, _> = w.truth.iter().map(|(k, v)| (k.clone(), 2.0 * v)).collect();
        assert!((truth_error(&w, &doubled, TruthMetric::Mape).unwrap() - 100.0).abs() < 1e-9);

        let flat: BTreeMap<_, _> = w.truth.keys().map(|k| (k.clone(), 5.0)).collect();
        assert!(matches!(truth_error(&w, &flat, TruthMetric::Pearson), Err(Error::Undefined(_))));
        assert!(truth_error(&w, &BTreeMap::new(), TruthMetric::Mape).is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(generate_world(&WorldConfig {
            n_months: 0,
            ..WorldConfig::default()
        })
        .is_err());
        assert!(generate_world(&WorldConfig {
            feature_noise: -1.0,
            ..WorldConfig::default()
        })
        .is_err());
    }
}
