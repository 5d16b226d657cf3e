use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{absolute_percentage_errors, standard_error, Percent};
use crate::aggl::{aggregate, train, EpochLoss, MfAglModel, TrainConfig};
use crate::baselines::{
    fit_ar, fit_ar_per_area, fit_rf, predict_ar, predict_rf, recursive_forecast, series_for, ForestConfig, LagSchema,
};
use crate::error::{Error, Result};
use crate::regions::{AreaId, Features, Labels, MixedFrequencyPanel, Period, RegionHierarchy};

pub const MODEL_AR: &str = "AR";
pub const MODEL_RF: &str = "RF";
pub const MODEL_MFAGL: &str = "MF-AGL";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub lag_order: usize,
    /// One AR model per large area instead of a pooled one.
    pub ar_per_area: bool,
    pub rf: ForestConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            lag_order: 11,
            ar_per_area: false,
            rf: ForestConfig::default(),
        }
    }
}

/// AR forecasts of `target` for each area, chaining through any months
/// between the newest label and `target`.
pub fn forecast_ar(
    labels: &Labels,
    areas: &[AreaId],
    target: Period,
    config: &BaselineConfig,
) -> Result<BTreeMap<AreaId, f64>> {
    let k = config.lag_order;
    let mut out = BTreeMap::new();
    if config.ar_per_area {
        let models = fit_ar_per_area(labels, k)?;
        for p in areas {
            let model = models
                .get(p)
                .ok_or_else(|| Error::InsufficientHistory(format!("no AR({k}) model for `{p}`")))?;
            let y = recursive_forecast(&series_for(labels, p.as_str()), target, k, |_, lags| predict_ar(model, lags))?;
            out.insert(p.clone(), y);
        }
    } else {
        let model = fit_ar(labels, k)?;
        for p in areas {
            let y = recursive_forecast(&series_for(labels, p.as_str()), target, k, |_, lags| predict_ar(&model, lags))?;
            out.insert(p.clone(), y);
        }
    }
    Ok(out)
}

/// Random-forest forecasts of `target`, fitted on every complete lag window
/// in `labels`.
pub fn forecast_rf(
    labels: &Labels,
    schema: &LagSchema,
    target: Period,
    config: &BaselineConfig,
) -> Result<BTreeMap<AreaId, f64>> {
    let (rows, targets) = schema.training_table(labels)?;
    let forest = fit_rf(&schema.names(), &rows, &targets, &config.rf)?;
    let mut out = BTreeMap::new();
    for p in &schema.large_areas {
        let y = recursive_forecast(&series_for(labels, p.as_str()), target, schema.lag_order, |t, lags| {
            predict_rf(&forest, &schema.row(p.as_str(), t, lags)?)
        })?;
        out.insert(p.clone(), y);
    }
    Ok(out)
}

/// MF-AGL granular nowcasts at `as_of`, summed up to each large area.
pub fn mfagl_aggregate(
    model: &MfAglModel,
    features: &Features,
    hierarchy: &RegionHierarchy,
    as_of: chrono::NaiveDate,
) -> Result<(BTreeMap<AreaId, f64>, BTreeMap<AreaId, f64>)> {
    let features = features.truncated(as_of);
    let granular: BTreeMap<AreaId, f64> = model
        .nowcast_all(&features, as_of)?
        .into_iter()
        .map(|g| (g.small_area, g.value))
        .collect();
    let mut totals = BTreeMap::new();
    for p in hierarchy.large_areas() {
        totals.insert(p.clone(), aggregate(&granular, hierarchy, p.as_str())?);
    }
    Ok((granular, totals))
}

/// Scores of one model on the holdout month.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelScore {
    pub model: String,
    pub mape: Percent,
    /// Standard error of the mean of the per-area errors.
    pub se: f64,
    pub n: usize,
    /// Absolute percentage error per large area.
    pub area_errors: BTreeMap<AreaId, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub holdout: Period,
    pub rows: Vec<ModelScore>,
}

impl EvaluationReport {
    pub fn row(&self, model: &str) -> Option<&ModelScore> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// `model,mape_pct,se,n`, two decimals for both percentages.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,mape_pct,se,n\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.2},{}", r.model, r.mape, r.se, r.n);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Per-area errors as `model,large_area_id,ape_pct`.
    pub fn area_errors_csv(&self) -> String {
        let mut s = String::from("model,large_area_id,ape_pct\n");
        for r in &self.rows {
            for (p, e) in &r.area_errors {
                let _ = writeln!(s, "{},{},{:.2}", r.model, p, e);
            }
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!("holdout {}\n{:<8} {:>9} {:>7} {:>4}\n", self.holdout, "model", "MAPE (%)", "SE", "N");
        for r in &self.rows {
            let _ = writeln!(s, "{:<8} {:>9} {:>7.2} {:>4}", r.model, r.mape.to_string(), r.se, r.n);
        }
        s
    }
}

/// Score each model's large-area predictions against `actual`. Every model
/// must cover exactly the areas of `actual`.
pub fn score_models(
    holdout: Period,
    actual: &BTreeMap<AreaId, f64>,
    predictions: &[(&str, BTreeMap<AreaId, f64>)],
) -> Result<EvaluationReport> {
    let keys: Vec<&AreaId> = actual.keys().collect();
    let y: Vec<f64> = actual.values().copied().collect();
    let mut rows = Vec::with_capacity(predictions.len());
    for (name, pred) in predictions {
        if pred.keys().collect::<Vec<_>>() != keys {
            return Err(Error::InvalidArgument(format!("{name} does not predict exactly the scored areas")));
        }
        let yhat: Vec<f64> = pred.values().copied().collect();
        let apes = absolute_percentage_errors(&y, &yhat)?;
        rows.push(ModelScore {
            model: (*name).to_owned(),
            mape: Percent(apes.iter().sum::<f64>() / apes.len() as f64),
            se: standard_error(&apes),
            n: apes.len(),
            area_errors: keys.iter().map(|&p| p.clone()).zip(apes).collect(),
        });
    }
    Ok(EvaluationReport { holdout, rows })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub baselines: BaselineConfig,
    /// Month to hold out; the newest labeled month when absent.
    pub holdout: Option<Period>,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub model: MfAglModel,
    pub history: Vec<EpochLoss>,
    /// MF-AGL granular nowcasts for the holdout month.
    pub granular: BTreeMap<AreaId, f64>,
}

/// Holdout month and its labels. Every large area must be labeled there.
pub fn holdout_actuals(panel: &MixedFrequencyPanel, holdout: Option<Period>) -> Result<(Period, BTreeMap<AreaId, f64>)> {
    let holdout = match holdout {
        Some(t) => t,
        None => *panel.labeled_periods().last().ok_or(Error::NoLabels)?,
    };
    let mut actual = BTreeMap::new();
    for p in panel.hierarchy.large_areas() {
        let y = panel
            .labels
            .get(&(p.clone(), holdout))
            .ok_or_else(|| Error::InvalidArgument(format!("holdout {holdout} has no label for `{p}`")))?;
        actual.insert(p.clone(), *y);
    }
    Ok((holdout, actual))
}

/// Train MF-AGL, AR and RF on the months before the holdout and score
/// their large-area predictions for it.
pub fn evaluate_models(panel: &MixedFrequencyPanel, config: &EvalConfig) -> Result<Evaluation> {
    let (holdout, actual) = holdout_actuals(panel, config.holdout)?;
    let train_panel = panel.without_labels_from(holdout);
    let areas = panel.hierarchy.large_areas().to_vec();
    let schema = LagSchema::from_panel(panel, config.baselines.lag_order);

    let (trained, (ar, rf)) = rayon::join(
        || train(&train_panel, &config.train),
        || {
            rayon::join(
                || forecast_ar(&train_panel.labels, &areas, holdout, &config.baselines),
                || forecast_rf(&train_panel.labels, &schema, holdout, &config.baselines),
            )
        },
    );
    let trained = trained?;
    let (granular, mfagl) = mfagl_aggregate(&trained.model, &panel.features, &panel.hierarchy, holdout.last_day())?;
    let report = score_models(holdout, &actual, &[(MODEL_AR, ar?), (MODEL_RF, rf?), (MODEL_MFAGL, mfagl)])?;
    Ok(Evaluation {
        report,
        model: trained.model,
        history: trained.history,
        granular,
    })
}
