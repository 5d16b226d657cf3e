use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{AreaId, Labels, Period};

/// Autoregressive model `y_t = c + sum_i a_i y_{t-i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub intercept: f64,
    /// `coefficients[0]` multiplies lag 1 (the newest value).
    pub coefficients: Vec<f64>,
}

impl ArModel {
    pub fn lag_order(&self) -> usize {
        self.coefficients.len()
    }
}

/// Labels of one large area as a period-indexed series.
pub(crate) fn series_of(labels: &Labels) -> BTreeMap<AreaId, BTreeMap<Period, f64>> {
    let mut out: BTreeMap<AreaId, BTreeMap<Period, f64>> = BTreeMap::new();
    for ((p, t), &y) in labels {
        out.entry(p.clone()).or_default().insert(*t, y);
    }
    out
}

/// The `k` values before `t`, newest last, if all are present.
pub(crate) fn lags_before(series: &BTreeMap<Period, f64>, t: Period, k: usize) -> Option<Vec<f64>> {
    (1..=k as i32)
        .rev()
        .map(|i| series.get(&t.add_months(-i)).copied())
        .collect()
}

/// Longest run of consecutive labeled periods in any series.
fn longest_run(series: &BTreeMap<AreaId, BTreeMap<Period, f64>>) -> usize {
    let mut best = 0;
    for s in series.values() {
        let mut run = 0;
        let mut prev: Option<Period> = None;
        for &t in s.keys() {
            run = if prev.map(|p| p.next()) == Some(t) { run + 1 } else { 1 };
            best = best.max(run);
            prev = Some(t);
        }
    }
    best
}

/// Regression rows `(y_t, [y_{t-1}, ..., y_{t-k}])` from every area.
fn stacked_rows(series: &BTreeMap<AreaId, BTreeMap<Period, f64>>, k: usize) -> Vec<(f64, Vec<f64>)> {
    let mut rows = Vec::new();
    for s in series.values() {
        for (&t, &y) in s {
            if let Some(mut lags) = lags_before(s, t, k) {
                lags.reverse();
                rows.push((y, lags));
            }
        }
    }
    rows
}

fn least_squares(rows: &[(f64, Vec<f64>)], k: usize) -> Result<ArModel> {
    let x = DMatrix::from_fn(rows.len(), k + 1, |i, j| if j == 0 { 1.0 } else { rows[i].1[j - 1] });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.0));
    let gram = x.transpose() * &x;
    let rhs = x.transpose() * y;
    let beta = match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => {
            let ridged = gram + DMatrix::identity(k + 1, k + 1) * 1e-8;
            ridged
                .cholesky()
                .ok_or_else(|| Error::Undefined("autoregression normal equations are singular".into()))?
                .solve(&rhs)
        }
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Undefined("autoregression produced non-finite coefficients".into()));
    }
    Ok(ArModel {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
    })
}

fn check_history(series: &BTreeMap<AreaId, BTreeMap<Period, f64>>, lag_order: usize) -> Result<()> {
    if lag_order == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    let run = longest_run(series);
    if run < lag_order + 1 {
        return Err(Error::InsufficientHistory(format!(
            "AR({lag_order}) needs {} consecutive labeled months for some area; the longest run is {run}",
            lag_order + 1
        )));
    }
    Ok(())
}

/// Ordinary least squares pooled across all large areas, with intercept.
pub fn fit_ar(labels: &Labels, lag_order: usize) -> Result<ArModel> {
    let series = series_of(labels);
    check_history(&series, lag_order)?;
    least_squares(&stacked_rows(&series, lag_order), lag_order)
}

/// One model per large area; areas without enough history are skipped.
pub fn fit_ar_per_area(labels: &Labels, lag_order: usize) -> Result<BTreeMap<AreaId, ArModel>> {
    let series = series_of(labels);
    check_history(&series, lag_order)?;
    let mut out = BTreeMap::new();
    for (p, s) in series {
        let one = BTreeMap::from([(p.clone(), s)]);
        if longest_run(&one) > lag_order {
            out.insert(p, least_squares(&stacked_rows(&one, lag_order), lag_order)?);
        }
    }
    Ok(out)
}

/// One-step prediction from the `lag_order` most recent values, newest last.
pub fn predict_ar(model: &ArModel, recent: &[f64]) -> Result<f64> {
    if recent.len() != model.lag_order() {
        return Err(Error::Shape(format!(
            "AR({}) needs {} recent values, got {}",
            model.lag_order(),
            model.lag_order(),
            recent.len()
        )));
    }
    Ok(model.intercept + model.coefficients.iter().zip(recent.iter().rev()).map(|(a, y)| a * y).sum::<f64>())
}
