#![allow(dead_code)]

pub mod criteria;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use mfagl::aggl::TrainConfig;
use mfagl::regions::{AreaId, Features, FrequencyCalendar, Labels, MixedFrequencyPanel, Period, RegionHierarchy};
use rand::Rng;

/// Plain description of a panel, kept next to it so oracles never have to
/// ask the library how the panel is laid out.
pub struct Layout {
    /// Large area, then its children with weights.
    pub areas: Vec<(String, Vec<(String, f64)>)>,
    /// Month, then its days.
    pub months: Vec<(Period, Vec<NaiveDate>)>,
    pub labels: Vec<(String, Period, f64)>,
}

/// ≤ 3 large areas, ≤ 4 children each, ≤ 3 months, ≤ 10 days per month.
pub fn random_small_panel(rng: &mut impl Rng, unit_weights: bool) -> (MixedFrequencyPanel, Layout) {
    let n_large = rng.gen_range(1..=3);
    let mut areas: Vec<(String, Vec<(String, f64)>)> = Vec::new();
    for p in 0..n_large {
        let kids = (0..rng.gen_range(1..=4))
            .map(|q| {
                let w = if unit_weights { 1.0 } else { rng.gen_range(0.1..=1.0) };
                (format!("L{p}S{q}"), w)
            })
            .collect();
        areas.push((format!("L{p}"), kids));
    }
    let start = Period::new(2019, rng.gen_range(1..=12)).unwrap();
    let mut months = Vec::new();
    for k in 0..rng.gen_range(1..=3) {
        let t = start.add_months(k);
        let mut days: Vec<u32> = (1..=t.days()).collect();
        let n = rng.gen_range(1..=10);
        for i in 0..n {
            let j = rng.gen_range(i..days.len());
            days.swap(i, j);
        }
        let mut picked: Vec<NaiveDate> = days[..n]
            .iter()
            .map(|&d| NaiveDate::from_ymd_opt(t.year(), t.month(), d).unwrap())
            .collect();
        picked.sort();
        months.push((t, picked));
    }
    let mut features = Features::new();
    for (_, kids) in &areas {
        for (q, _) in kids.iter() {
            for (_, days) in &months {
                for &d in days {
                    if rng.gen_bool(0.9) {
                        features.insert(AreaId::new(q.as_str()), d, rng.gen_range(0.0..50.0_f64).round());
                    }
                }
            }
        }
    }
    let mut labels = Vec::new();
    for (p, _) in &areas {
        for (t, _) in &months {
            labels.push((p.clone(), *t, rng.gen_range(10.0..500.0)));
        }
    }
    let hierarchy = RegionHierarchy::new(
        areas
            .iter()
            .flat_map(|(p, kids)| kids.iter().map(move |(q, w)| (q.clone(), p.clone(), Some(*w)))),
    )
    .unwrap();
    let calendar = FrequencyCalendar::from_ticks(months.iter().flat_map(|(_, d)| d.iter().copied())).unwrap();
    let label_map: Labels = labels.iter().map(|(p, t, y)| ((AreaId::new(p.as_str()), *t), *y)).collect();
    let panel = MixedFrequencyPanel::new(hierarchy, calendar, features, label_map);
    (panel, Layout { areas, months, labels })
}

pub fn small_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        lag_days: 5,
        hidden_size: 4,
        mlp_hidden: vec![4],
        epochs: 0,
        seed,
        ..TrainConfig::default()
    }
}

/// Relative difference with a floor on the scale.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn by_area(pairs: &[(&str, f64)]) -> BTreeMap<AreaId, f64> {
    pairs.iter().map(|(k, v)| (AreaId::new(*k), *v)).collect()
}
