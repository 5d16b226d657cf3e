use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::regions::AreaId;

/// A percentage, displayed with two decimals (`10.00`).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Percent(pub f64);

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

/// Absolute percentage errors `100 |y - ŷ| / y`, one per pair.
pub fn absolute_percentage_errors(actual: &[f64], predicted: &[f64]) -> Result<Vec<f64>> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Empty("no values to score".into()));
    }
    actual
        .iter()
        .zip(predicted)
        .map(|(&y, &yhat)| {
            if y == 0.0 {
                Err(Error::Undefined("percentage error of a zero actual value".into()))
            } else {
                Ok(100.0 * (y - yhat).abs() / y)
            }
        })
        .collect()
}

/// Mean absolute percentage error over paired slices, in percent.
pub fn mape_values(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let apes = absolute_percentage_errors(actual, predicted)?;
    Ok(apes.iter().sum::<f64>() / apes.len() as f64)
}

/// Mean absolute percentage error over areas. Both maps must have the
/// same keys and no actual value may be zero.
pub fn mape(actual: &BTreeMap<AreaId, f64>, predicted: &BTreeMap<AreaId, f64>) -> Result<Percent> {
    if actual.len() != predicted.len() || actual.keys().zip(predicted.keys()).any(|(a, b)| a != b) {
        return Err(Error::InvalidArgument("actual and predicted cover different areas".into()));
    }
    let a: Vec<f64> = actual.values().copied().collect();
    let p: Vec<f64> = predicted.values().copied().collect();
    mape_values(&a, &p).map(Percent)
}

/// Standard error of the mean, using the `n - 1` sample variance.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Pearson correlation; undefined when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape("correlation of unequal-length series".into()));
    }
    if x.len() < 2 {
        return Err(Error::Undefined("correlation needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(v: &[(&str, f64)]) -> BTreeMap<AreaId, f64> {
        v.iter().map(|(k, x)| (AreaId::new(*k), *x)).collect()
    }

    #[test]
    fn perfect_prediction() {
        let a = m(&[("A", 3.0), ("B", 9.0)]);
        assert_eq!(mape(&a, &a).unwrap().to_string(), "0.00");
    }

    #[test]
    fn ten_percent_fixture() {
        let got = mape(&m(&[("A", 100.0), ("B", 200.0)]), &m(&[("A", 110.0), ("B", 180.0)])).unwrap();
        assert!((got.0 - 10.0).abs() < 1e-12);
        assert_eq!(got.to_string(), "10.00");
    }

    #[test]
    fn fifty_percent_fixture() {
        let got = mape(&m(&[("A", 50.0)]), &m(&[("A", 75.0)])).unwrap();
        assert_eq!(got.to_string(), "50.00");
    }

    #[test]
    fn zero_actual_and_key_mismatch() {
        assert!(matches!(mape(&m(&[("A", 0.0)]), &m(&[("A", 1.0)])), Err(Error::Undefined(_))));
        assert!(mape(&m(&[("A", 1.0)]), &m(&[("B", 1.0)])).is_err());
        assert!(mape(&m(&[("A", 1.0)]), &m(&[("A", 1.0), ("B", 1.0)])).is_err());
    }

    #[test]
    fn standard_error_of_known_sample() {
        // sd of {1,2,3,4} is sqrt(5/3); se = sd / 2.
        let se = standard_error(&[1.0, 2.0, 3.0, 4.0]);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mape_matches_one_line_recomputation(
            pairs in prop::collection::vec((0.1f64..1e4, 0.0f64..2e4), 1..40)
        ) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let got = mape_values(&a, &p).unwrap();
            let want = a.iter().zip(&p).map(|(y, f)| ((y - f) / y).abs()).sum::<f64>() / a.len() as f64 * 100.0;
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300) || got == want);
        }

        #[test]
        fn pearson_is_bounded(xy in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..30)) {
            let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
            if let Ok(r) = pearson(&x, &y) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            }
        }
    }
}
