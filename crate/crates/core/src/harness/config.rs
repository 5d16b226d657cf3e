//! Run configuration: a TOML file plus `key=value` overrides.
//!
//! ```toml
//! seed = 42
//! epochs = 600
//! lag_order = 11
//!
//! [rf]
//! n_trees = 100
//! max_depth = 8
//! ```
//!
//! Dotted override keys address sections: `rf.n_trees=50`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::BaselineConfig;
use super::schedule::{ReleaseSchedule, ScheduleConfig};
use crate::aggl::TrainConfig;
use crate::baselines::ForestConfig;
use crate::error::{Error, Result};
use crate::geofeatures::{FeatureConfig, ThresholdRule};
use crate::netcore::AdamConfig;
use crate::regions::DayEncoding;
use crate::synth::WorldConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfSection {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for RfSection {
    fn default() -> Self {
        let f = ForestConfig::default();
        RfSection {
            n_trees: f.n_trees,
            max_depth: f.max_depth,
            min_leaf: f.min_leaf,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArSection {
    pub per_area: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoSection {
    #[serde(flatten)]
    pub features: FeatureConfig,
    /// Threshold rule: records inside the building needed for a visit.
    pub min_inside_building: u64,
}

impl Default for GeoSection {
    fn default() -> Self {
        GeoSection {
            features: FeatureConfig::default(),
            min_inside_building: ThresholdRule::default().min_inside_building,
        }
    }
}

/// Every setting of a CLI run. `seed` drives all randomness, including the
/// synthetic world and the forest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub lag_days: usize,
    pub hidden_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub standardize: bool,
    pub day_encoding: DayEncoding,
    pub lag_order: usize,
    pub release_lag_days: i64,
    pub rf: RfSection,
    pub ar: ArSection,
    /// Synthetic world shape; its seed is `seed`.
    pub world: WorldConfig,
    pub geo: GeoSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        RunConfig {
            seed: 0,
            lag_days: train.lag_days,
            hidden_size: train.hidden_size,
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.adam.lr,
            beta1: train.adam.beta1,
            beta2: train.adam.beta2,
            eps: train.adam.eps,
            standardize: train.standardize,
            day_encoding: train.day_encoding,
            lag_order: BaselineConfig::default().lag_order,
            release_lag_days: ReleaseSchedule::default().release_lag_days,
            rf: RfSection::default(),
            ar: ArSection::default(),
            world: WorldConfig::default(),
            geo: GeoSection::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidArgument(format!("bad override key `{key}`")));
    }
    let last = parts.pop().expect("non-empty");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::InvalidArgument(format!("`{p}` in `{key}` is not a section")))?;
    }
    cur.insert(last.to_owned(), value);
    Ok(())
}

impl RunConfig {
    /// Parse TOML text, then apply `key=value` overrides in order.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {}", e.message())))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("override `{o}` is not key=value")))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        if table.get("world").and_then(|w| w.get("seed")).is_some() {
            return Err(Error::InvalidArgument("set the top-level `seed`, not `world.seed`".into()));
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("config: {}", e.message())))?;
        config.world.seed = config.seed;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn check(&self) -> Result<()> {
        self.train_config().check()?;
        self.world_config().check()?;
        self.geo.features.check()?;
        if self.lag_order == 0 {
            return Err(Error::InvalidArgument("lag_order must be at least 1".into()));
        }
        if self.rf.n_trees == 0 || self.rf.min_leaf == 0 {
            return Err(Error::InvalidArgument("rf.n_trees and rf.min_leaf must be at least 1".into()));
        }
        Ok(())
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        let mut v = toml::Value::try_from(self).expect("config serializes");
        if let Some(w) = v.get_mut("world").and_then(toml::Value::as_table_mut) {
            w.remove("seed");
        }
        toml::to_string(&v).expect("config serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lag_days: self.lag_days,
            hidden_size: self.hidden_size,
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
            seed: self.seed,
            standardize: self.standardize,
            day_encoding: self.day_encoding,
            ..TrainConfig::default()
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            lag_order: self.lag_order,
            ar_per_area: self.ar.per_area,
            rf: ForestConfig {
                n_trees: self.rf.n_trees,
                max_depth: self.rf.max_depth,
                min_leaf: self.rf.min_leaf,
                seed: self.seed,
                ..ForestConfig::default()
            },
        }
    }

    pub fn schedule_config(&self) -> ScheduleConfig {
        ScheduleConfig {
            release: ReleaseSchedule {
                release_lag_days: self.release_lag_days,
            },
            baselines: self.baseline_config(),
        }
    }

    pub fn world_config(&self) -> WorldConfig {
        WorldConfig {
            seed: self.seed,
            ..self.world.clone()
        }
    }

    pub fn visit_rule(&self) -> ThresholdRule {
        ThresholdRule {
            min_inside_building: self.geo.min_inside_building,
        }
    }
}
