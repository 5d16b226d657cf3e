use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Activation, AdamConfig, Network, NetworkConfig};
use crate::regions::{AreaId, DayEncoding, FeatureWindow, Features, MixedFrequencyPanel, Period, RegionHierarchy, Vocabulary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lag_days: usize,
    pub hidden_size: usize,
    pub mlp_hidden: Vec<usize>,
    pub output: Activation,
    pub day_encoding: DayEncoding,
    pub epochs: usize,
    /// Only 1 is supported.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Rescale inputs and outputs by panel-level magnitudes (see [`Scaling`]).
    /// Off by default: on small panels the rescaled net converges fast enough
    /// to fit the labels through the calendar dummies alone and stops
    /// telling children apart.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lag_days: 31,
            hidden_size: 32,
            mlp_hidden: vec![32],
            output: Activation::Softplus,
            day_encoding: DayEncoding::DayOfMonth,
            epochs: 600,
            batch_size: 1,
            adam: AdamConfig::default(),
            seed: 0,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_owned()));
        if self.lag_days == 0 {
            return bad("lag_days must be at least 1");
        }
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1");
        }
        if self.batch_size != 1 {
            return bad("only batch_size = 1 is supported");
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && a.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2)) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(a.eps > 0.0) {
            return bad("eps must be positive");
        }
        Ok(())
    }
}

/// Fixed magnitudes frozen at training time.
///
/// Visit counts are divided by `feature` before entering the network and
/// the network output is multiplied by `target`, so the net itself works
/// on order-one numbers whatever the units of the panel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub feature: f64,
    pub target: f64,
}

impl Scaling {
    pub const IDENTITY: Scaling = Scaling {
        feature: 1.0,
        target: 1.0,
    };

    /// Mean positive feature value, and mean label per unit of child weight.
    pub fn from_panel(panel: &MixedFrequencyPanel) -> Self {
        let (sum, n) = panel
            .features
            .iter()
            .filter(|(_, _, v)| *v > 0.0)
            .fold((0.0, 0usize), |(s, n), (_, _, v)| (s + v, n + 1));
        let feature = if n > 0 { sum / n as f64 } else { 1.0 };

        let mut total = 0.0;
        let mut count = 0usize;
        for ((p, _), y) in &panel.labels {
            let Ok(children) = panel.hierarchy.children(p.as_str()) else { continue };
            let mass: f64 = children
                .iter()
                .map(|q| panel.hierarchy.weight_of(q.as_str()).unwrap_or(1.0))
                .sum();
            if mass > 0.0 && y.is_finite() {
                total += y.abs() / mass;
                count += 1;
            }
        }
        let target = if count > 0 && total > 0.0 { total / count as f64 } else { 1.0 };
        Scaling { feature, target }
    }
}

/// Granular nowcast of `y_t^q` made on day `as_of`.
#[derive(Clone, Debug, PartialEq)]
pub struct GranularPrediction {
    pub small_area: AreaId,
    pub as_of: NaiveDate,
    pub period: Period,
    pub value: f64,
}

/// A trained granular predictor with everything needed to use it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfAglModel {
    pub network: Network,
    pub vocabulary: Vocabulary,
    pub hierarchy: RegionHierarchy,
    pub scaling: Scaling,
    pub config: TrainConfig,
}

impl MfAglModel {
    /// Untrained model with vocabularies frozen from `panel`.
    pub fn init(panel: &MixedFrequencyPanel, config: &TrainConfig) -> Result<Self> {
        config.check()?;
        let vocabulary = panel.vocabulary().with_day_encoding(config.day_encoding);
        let net_config = NetworkConfig {
            input_size: 1,
            hidden_size: config.hidden_size,
            extra_size: vocabulary.dummy_len(),
            mlp_hidden: config.mlp_hidden.clone(),
            mlp_activation: Activation::Tanh,
            output: config.output,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let network = Network::init(&net_config, &mut rng)?;
        let scaling = if config.standardize {
            Scaling::from_panel(panel)
        } else {
            Scaling::IDENTITY
        };
        Ok(MfAglModel {
            network,
            vocabulary,
            hierarchy: panel.hierarchy.clone(),
            scaling,
            config: config.clone(),
        })
    }

    pub fn lag_days(&self) -> usize {
        self.config.lag_days
    }

    pub fn window(&self, features: &Features, q: &str, date: NaiveDate) -> Result<FeatureWindow> {
        FeatureWindow::build(features, &self.vocabulary, &self.hierarchy, q, date, self.config.lag_days)
    }

    /// Network inputs for a window: scaled lag sequence and dummies.
    pub(crate) fn encode(&self, window: &FeatureWindow) -> (Vec<f64>, Vec<f64>) {
        let seq = window.visit_lags.iter().map(|v| v / self.scaling.feature).collect();
        (seq, window.dummies())
    }

    pub fn predict_window(&self, window: &FeatureWindow) -> Result<f64> {
        let (seq, extra) = self.encode(window);
        Ok(self.scaling.target * self.network.predict(&seq, &extra)?)
    }

    /// `f(x_τ^q, φ_τ^q)` using only features dated on or before `date`.
    pub fn predict_at(&self, features: &Features, q: &str, date: NaiveDate) -> Result<f64> {
        self.predict_window(&self.window(features, q, date)?)
    }

    pub fn predict_granular(&self, features: &Features, q: &str, as_of: NaiveDate) -> Result<GranularPrediction> {
        let value = self.predict_at(features, q, as_of)?;
        Ok(GranularPrediction {
            small_area: AreaId::new(q),
            as_of,
            period: Period::of(as_of),
            value,
        })
    }

    /// Nowcasts for every small area in the hierarchy.
    pub fn nowcast_all(&self, features: &Features, as_of: NaiveDate) -> Result<Vec<GranularPrediction>> {
        self.hierarchy
            .small_areas()
            .iter()
            .map(|q| self.predict_granular(features, q.as_str(), as_of))
            .collect()
    }

    /// Change of the nowcast at `as_of` against the nowcast for the same
    /// day one year earlier, both from this model.
    pub fn year_over_year(&self, features: &Features, q: &str, as_of: NaiveDate) -> Result<f64> {
        let prior_day = Period::shift_date(as_of, -12)
            .ok_or_else(|| Error::InvalidArgument(format!("no date one year before {as_of}")))?;
        let current = self.window(features, q, as_of)?;
        let prior = self.window(features, q, prior_day)?;
        for (w, day) in [(&current, as_of), (&prior, prior_day)] {
            if w.is_fully_padded() {
                return Err(Error::InsufficientHistory(format!(
                    "no features for `{q}` in the {} days up to {day}",
                    self.config.lag_days
                )));
            }
        }
        Ok(super::yoy_change(self.predict_window(&current)?, self.predict_window(&prior)?))
    }
}
