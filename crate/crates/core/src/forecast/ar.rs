//! Ridge-regularized linear autoregression with one joint direct multistep map.

use alloc::vec::Vec;

use super::{ForecastSpec, Forecaster};
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::linkbudget::{BandId, Quantity};
use crate::trace::{Scaling, SupervisedWindowSet};

pub const AR_RIDGE: f64 = 1e-6;

/// Linear map from `[1, x_1 .. x_lookback]` (normalized) to `horizon` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ArForecaster {
    spec: ForecastSpec,
    scaling: Scaling,
    /// `(lookback + 1) × horizon`, row 0 is the intercept.
    weights: Vec<f64>,
}

/// Least squares on the training windows via the ridge normal equations.
pub fn ar_fit(train: &SupervisedWindowSet, mode: Quantity, band: BandId) -> Result<ArForecaster> {
    let lookback = train.lookback();
    let k = train.horizon();
    if train.len() < lookback + 1 {
        return Err(Error::InsufficientData(alloc::format!(
            "autoregression needs at least {} training windows, got {}",
            lookback + 1,
            train.len()
        )));
    }
    let p = lookback + 1;
    let mut gram = alloc::vec![0.0; p * p];
    let mut rhs = alloc::vec![0.0; p * k];
    let mut row = alloc::vec![0.0; p];
    for i in 0..train.len() {
        row[0] = 1.0;
        row[1..].copy_from_slice(&train.input(i));
        let target = train.target(i);
        for a in 0..p {
            for b in a..p {
                gram[a * p + b] += row[a] * row[b];
            }
            for (j, t) in target.iter().enumerate() {
                rhs[a * k + j] += row[a] * t;
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
        gram[a * p + a] += AR_RIDGE;
    }
    if !cholesky_solve(&gram, p, &mut rhs, k) {
        return Err(Error::InsufficientData("normal equations are not positive definite".into()));
    }
    Ok(ArForecaster {
        spec: ForecastSpec {
            mode,
            band,
            lookback,
            horizon: k,
        },
        scaling: train.scaling(),
        weights: rhs,
    })
}

impl ArForecaster {
    pub fn from_parts(spec: ForecastSpec, scaling: Scaling, weights: Vec<f64>) -> Result<ArForecaster> {
        let expected = (spec.lookback + 1) * spec.horizon;
        if weights.len() != expected {
            return Err(Error::Shape {
                what: "autoregression weights",
                expected,
                actual: weights.len(),
            });
        }
        Ok(ArForecaster {
            spec,
            scaling,
            weights,
        })
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Forecaster for ArForecaster {
    fn spec(&self) -> &ForecastSpec {
        &self.spec
    }

    fn forecast(&self, window: &[f64]) -> Result<Vec<f64>> {
        let lookback = self.spec.lookback;
        if window.len() != lookback {
            return Err(Error::Shape {
                what: "forecast window",
                expected: lookback,
                actual: window.len(),
            });
        }
        let k = self.spec.horizon;
        let mut out = self.weights[..k].to_vec();
        for (a, &x) in window.iter().enumerate() {
            let xn = self.scaling.normalize(x);
            let w = &self.weights[(a + 1) * k..(a + 2) * k];
            for (o, wj) in out.iter_mut().zip(w) {
                *o += wj * xn;
            }
        }
        Ok(out.into_iter().map(|v| self.scaling.denormalize(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::predict_multistep;
    use crate::trace::{make_supervised_windows, ScalingMode};
    use rand::{Rng, SeedableRng};

    #[test]
    fn ramp_is_extrapolated_exactly() {
        let series: Vec<f64> = (0..200).map(|t| t as f64).collect();
        let w = make_supervised_windows(&series, 15, 2, ScalingMode::Fit).unwrap();
        let f = ar_fit(&w, Quantity::Rate, BandId::Sub6).unwrap();
        let window: Vec<f64> = (185..200).map(|t| t as f64).collect();
        let p = predict_multistep(&f, &window).unwrap();
        assert!((p[0] - 200.0).abs() < 1e-6, "{p:?}");
        assert!((p[1] - 201.0).abs() < 1e-6, "{p:?}");
    }

    #[test]
    fn constant_series_predicts_constant() {
        let w = make_supervised_windows(&[4.2; 80], 15, 3, ScalingMode::Fit).unwrap();
        let f = ar_fit(&w, Quantity::Channel, BandId::Thz).unwrap();
        assert_eq!(predict_multistep(&f, &[4.2; 15]).unwrap(), alloc::vec![4.2; 3]);
    }

    #[test]
    fn white_noise_predictions_shrink() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let series: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let w = make_supervised_windows(&series, 15, 1, ScalingMode::Fit).unwrap();
        let f = ar_fit(&w, Quantity::Rate, BandId::Sub6).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let preds: Vec<f64> = (0..w.len()).map(|i| f.forecast(w.raw_input(i)).unwrap()[0]).collect();
        assert!(var(&preds) <= var(&series));
    }

    #[test]
    fn too_few_windows() {
        let series: Vec<f64> = (0..30).map(|t| t as f64).collect();
        let w = make_supervised_windows(&series, 15, 2, ScalingMode::Fit).unwrap();
        assert_eq!(w.len(), 14);
        assert!(matches!(ar_fit(&w, Quantity::Rate, BandId::Sub6), Err(Error::InsufficientData(_))));
    }
}
