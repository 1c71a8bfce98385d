//! Direct multistep forecasters.
//!
//! Every forecaster maps a lookback window (physical units) to `horizon`
//! future values in one shot; no prediction is fed back as an input.
//! Forecasters are built per (band, quantity, horizon).

mod ar;
pub mod lstm;
mod train;

pub use self::ar::{ar_fit, ArForecaster, AR_RIDGE};
pub use self::lstm::{gradient_check, CellActivation, ForwardCache, LstmArch, LstmModel};
pub use self::train::{
    adam_step, mse, train_forecaster, train_lstm, AdamState, LstmForecaster, TrainConfig, TrainReport,
};

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linkbudget::{BandId, Quantity};
use crate::metrics::{error_report, ErrorReport};
use crate::trace::SupervisedWindowSet;

/// What a forecaster was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastSpec {
    pub mode: Quantity,
    pub band: BandId,
    pub lookback: usize,
    pub horizon: usize,
}

pub trait Forecaster: Send + Sync {
    fn spec(&self) -> &ForecastSpec;

    /// Raw `horizon`-step forecast in physical units, before any clamping.
    fn forecast(&self, window: &[f64]) -> Result<Vec<f64>>;

    /// Forecasts for many windows at once. Implementations may batch.
    fn forecast_batch(&self, windows: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        windows.iter().map(|w| self.forecast(w)).collect()
    }
}

fn finish_prediction(spec: &ForecastSpec, mut out: Vec<f64>) -> Result<Vec<f64>> {
    if out.len() != spec.horizon {
        return Err(Error::Shape {
            what: "forecast output",
            expected: spec.horizon,
            actual: out.len(),
        });
    }
    if spec.mode == Quantity::Channel {
        for v in &mut out {
            *v = v.max(0.0);
        }
    }
    Ok(out)
}

/// Forecast in physical units; channel-mode outputs are clamped at 0.
pub fn predict_multistep(forecaster: &dyn Forecaster, window: &[f64]) -> Result<Vec<f64>> {
    let raw = forecaster.forecast(window)?;
    finish_prediction(forecaster.spec(), raw)
}

pub fn predict_multistep_batch(
    forecaster: &dyn Forecaster,
    windows: &[&[f64]],
) -> Result<Vec<Vec<f64>>> {
    let spec = *forecaster.spec();
    forecaster
        .forecast_batch(windows)?
        .into_iter()
        .map(|p| finish_prediction(&spec, p))
        .collect()
}

/// Repeats the window's last value `k` times.
pub fn current_value_forecast(window: &[f64], k: usize) -> Result<Vec<f64>> {
    let last = *window.last().ok_or(Error::Empty("forecast window"))?;
    Ok(alloc::vec![last; k])
}

/// The current-slot value used as the forecast for every future slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentValue {
    spec: ForecastSpec,
}

impl CurrentValue {
    pub fn new(mode: Quantity, band: BandId, horizon: usize) -> CurrentValue {
        CurrentValue {
            spec: ForecastSpec {
                mode,
                band,
                lookback: 1,
                horizon,
            },
        }
    }
}

impl Forecaster for CurrentValue {
    fn spec(&self) -> &ForecastSpec {
        &self.spec
    }

    fn forecast(&self, window: &[f64]) -> Result<Vec<f64>> {
        current_value_forecast(window, self.spec.horizon)
    }
}

/// THz reliability discount for the prediction `step` slots ahead (1-based).
///
/// 0.85, 0.80, 0.75, 0.70 for steps 1 to 4, continuing in steps of 0.05 down
/// to a floor of 0.5.
pub fn thz_discount_factor(step: usize) -> f64 {
    const FACTORS: [f64; 4] = [0.85, 0.8, 0.75, 0.7];
    match step {
        0 => 1.0,
        1..=4 => FACTORS[step - 1],
        _ => (0.85 - 0.05 * (step - 1) as f64).max(0.5),
    }
}

/// Scales THz predictions by the per-step discount; identity on other bands.
pub fn apply_thz_discount(predictions: &[f64], band: BandId) -> Vec<f64> {
    if band != BandId::Thz {
        return predictions.to_vec();
    }
    predictions
        .iter()
        .enumerate()
        .map(|(j, &v)| v * thz_discount_factor(j + 1))
        .collect()
}

/// Per-step NRMSE and NMAE over a test set, in physical units.
pub fn evaluate_forecaster(
    forecaster: &dyn Forecaster,
    test: &SupervisedWindowSet,
) -> Result<ErrorReport> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let k = forecaster.spec().horizon;
    if test.horizon() < k {
        return Err(Error::Shape {
            what: "test window horizon",
            expected: k,
            actual: test.horizon(),
        });
    }
    let lookback = forecaster.spec().lookback;
    let windows: Vec<&[f64]> = (0..test.len())
        .map(|i| {
            let w = test.raw_input(i);
            &w[w.len() - lookback.min(w.len())..]
        })
        .collect();
    let preds = predict_multistep_batch(forecaster, &windows)?;
    let mut truth = alloc::vec![Vec::with_capacity(test.len()); k];
    let mut pred = alloc::vec![Vec::with_capacity(test.len()); k];
    for (i, p) in preds.iter().enumerate() {
        let t = test.raw_target(i);
        for j in 0..k {
            truth[j].push(t[j]);
            pred[j].push(p[j]);
        }
    }
    error_report(&truth, &pred)
}

/// Forecasters keyed by (band, horizon), all in one quantity mode.
pub struct ForecastBank {
    mode: Quantity,
    models: BTreeMap<(BandId, usize), Box<dyn Forecaster>>,
}

impl ForecastBank {
    pub fn new(mode: Quantity) -> ForecastBank {
        ForecastBank {
            mode,
            models: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> Quantity {
        self.mode
    }

    pub fn insert(&mut self, forecaster: Box<dyn Forecaster>) -> Result<()> {
        let spec = *forecaster.spec();
        if spec.mode != self.mode {
            return Err(crate::error::invalid(
                "mode",
                alloc::format!("bank holds {} forecasters, got {}", self.mode, spec.mode),
            ));
        }
        self.models.insert((spec.band, spec.horizon), forecaster);
        Ok(())
    }

    pub fn get(&self, band: BandId, horizon: usize) -> Result<&dyn Forecaster> {
        self.models
            .get(&(band, horizon))
            .map(|b| b.as_ref())
            .ok_or(Error::MissingForecaster { band, horizon })
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Forecaster> {
        self.models.values().map(|b| b.as_ref())
    }

    /// Current-value forecasters for every radio band and horizons `1..=max_horizon`.
    pub fn current_value(mode: Quantity, max_horizon: usize) -> ForecastBank {
        let mut bank = ForecastBank::new(mode);
        for band in BandId::RADIO {
            for h in 1..=max_horizon {
                bank.models
                    .insert((band, h), Box::new(CurrentValue::new(mode, band, h)));
            }
        }
        bank
    }
}
