//! Mini-batch Adam training of [`LstmModel`] on supervised windows.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lstm::{LstmArch, LstmModel};
use super::{ForecastSpec, Forecaster};
use crate::error::{invalid, Error, Result};
use crate::linkbudget::{BandId, Quantity};
use crate::trace::{Scaling, SupervisedWindowSet};

/// Windows per forward pass when scoring a validation or prediction set.
const EVAL_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds initialization, shuffling and dropout.
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Learning rate 1e-4, batch 64, 50 epochs, Adam (0.9, 0.999, 1e-8).
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 64,
            epochs: 50,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive and finite"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(invalid("beta", "Adam decay rates must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// First and second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(params: usize) -> AdamState {
        AdamState {
            m: vec![0.0; params],
            v: vec![0.0; params],
        }
    }
}

/// One bias-corrected Adam update. `step` counts updates from 1.
pub fn adam_step(
    params: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    cfg: &TrainConfig,
    step: u64,
) -> Result<()> {
    if step < 1 {
        return Err(invalid("step", "Adam step index starts at 1"));
    }
    let n = params.len();
    if grad.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::Shape {
            what: "Adam buffers",
            expected: n,
            actual: grad.len(),
        });
    }
    let t = step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..n {
        let g = grad[i];
        let m = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        params[i] -= cfg.learning_rate * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss over each epoch's batches (train mode, dropout on).
    pub train_mse: Vec<f64>,
    /// Eval-mode validation loss after each epoch; empty without a validation set.
    pub val_mse: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

fn gather(set: &SupervisedWindowSet, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(idx.len() * set.lookback());
    let mut y = Vec::with_capacity(idx.len() * set.horizon());
    for &i in idx {
        x.extend(set.input(i));
        y.extend(set.target(i));
    }
    (x, y)
}

/// Eval-mode MSE in normalized units over a whole window set.
pub fn mse(model: &LstmModel, set: &SupervisedWindowSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Empty("window set"));
    }
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut total = 0.0;
    for chunk in idx.chunks(EVAL_CHUNK) {
        let (x, y) = gather(set, chunk);
        let cache = model.forward(&x, chunk.len(), false, 0)?;
        total += LstmModel::loss(&cache, &y)? * y.len() as f64;
    }
    Ok(total / (set.len() * set.horizon()) as f64)
}

/// Trains a fresh model. The horizon of `arch` must match the windows.
pub fn train_lstm(
    arch: LstmArch,
    train: &SupervisedWindowSet,
    val: Option<&SupervisedWindowSet>,
    cfg: &TrainConfig,
) -> Result<(LstmModel, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if arch.horizon != train.horizon() || arch.input_size != 1 {
        return Err(invalid("arch", "model must take scalar inputs and match the window horizon"));
    }
    let val = val.filter(|v| !v.is_empty());

    let mut model = LstmModel::init(arch, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(model.param_count());
    let mut grad = vec![0.0; model.param_count()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0u64;

    let mut report = TrainReport {
        train_mse: Vec::with_capacity(cfg.epochs),
        val_mse: Vec::new(),
        best_epoch: cfg.epochs,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (x, y) = gather(train, batch);
            let cache = model.forward(&x, batch.len(), true, rng.random())?;
            let loss = model.backward(&cache, &y, &mut grad)?;
            loss_sum += loss * batch.len() as f64;
            step += 1;
            adam_step(model.params_mut(), &grad, &mut adam, cfg, step)?;
        }
        report.train_mse.push(loss_sum / train.len() as f64);

        if let Some(val) = val {
            let v = mse(&model, val)?;
            report.val_mse.push(v);
            if best.as_ref().map_or(true, |(b, _)| v < *b) {
                best = Some((v, model.params().to_vec()));
                report.best_epoch = epoch;
            }
        }
    }
    if let Some((_, params)) = best {
        model.params_mut().copy_from_slice(&params);
    }
    Ok((model, report))
}

/// A trained LSTM with the scaling of its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmForecaster {
    spec: ForecastSpec,
    scaling: Scaling,
    model: LstmModel,
}

impl LstmForecaster {
    pub fn new(spec: ForecastSpec, scaling: Scaling, model: LstmModel) -> Result<LstmForecaster> {
        if model.arch().horizon != spec.horizon || model.arch().input_size != 1 {
            return Err(invalid("model", "architecture does not match the forecast spec"));
        }
        Ok(LstmForecaster {
            spec,
            scaling,
            model,
        })
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn model(&self) -> &LstmModel {
        &self.model
    }
}

impl Forecaster for LstmForecaster {
    fn spec(&self) -> &ForecastSpec {
        &self.spec
    }

    fn forecast(&self, window: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forecast_batch(&[window])?.remove(0))
    }

    fn forecast_batch(&self, windows: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let lookback = self.spec.lookback;
        let k = self.spec.horizon;
        let mut out = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(EVAL_CHUNK) {
            let mut x = Vec::with_capacity(chunk.len() * lookback);
            for w in chunk {
                if w.len() != lookback {
                    return Err(Error::Shape {
                        what: "forecast window",
                        expected: lookback,
                        actual: w.len(),
                    });
                }
                x.extend(w.iter().map(|&v| self.scaling.normalize(v)));
            }
            let cache = self.model.forward(&x, chunk.len(), false, 0)?;
            out.extend(
                cache
                    .output()
                    .chunks_exact(k)
                    .map(|row| row.iter().map(|&v| self.scaling.denormalize(v)).collect()),
            );
        }
        Ok(out)
    }
}

/// Trains an LSTM forecaster for one (mode, band) on windows whose horizon
/// sets the forecaster's horizon.
pub fn train_forecaster(
    mode: Quantity,
    band: BandId,
    arch: LstmArch,
    train: &SupervisedWindowSet,
    val: Option<&SupervisedWindowSet>,
    cfg: &TrainConfig,
) -> Result<(LstmForecaster, TrainReport)> {
    let (model, report) = train_lstm(arch, train, val, cfg)?;
    let spec = ForecastSpec {
        mode,
        band,
        lookback: train.lookback(),
        horizon: train.horizon(),
    };
    Ok((LstmForecaster::new(spec, train.scaling(), model)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::CellActivation;
    use crate::trace::{make_supervised_windows, ScalingMode};

    fn small_arch(horizon: usize) -> LstmArch {
        LstmArch {
            input_size: 1,
            hidden: vec![8, 6],
            horizon,
            dropout: 0.1,
            cell_activation: CellActivation::Tanh,
            relu_between_layers: true,
        }
    }

    fn sinusoid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| (2.0 * core::f64::consts::PI * t as f64 / 100.0).sin())
            .collect()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![0.5, -1.0, 2.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, &TrainConfig::default(), 1).unwrap();
        assert_eq!(p, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn first_adam_step_closed_form() {
        let cfg = TrainConfig {
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let g = [0.3, -2.0, 1e-9, 0.0];
        let mut p = [0.0; 4];
        let mut s = AdamState::new(4);
        adam_step(&mut p, &g, &mut s, &cfg, 1).unwrap();
        for (d, g) in p.iter().zip(g) {
            let want = -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((d - want).abs() <= 1e-15 + 1e-12 * want.abs(), "{d} vs {want}");
        }
        assert!(adam_step(&mut p, &g, &mut s, &cfg, 0).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let w = make_supervised_windows(&sinusoid(40), 15, 2, ScalingMode::Fit).unwrap();
        for cfg in [
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
        ] {
            assert!(train_lstm(small_arch(2), &w, None, &cfg).is_err());
        }
        assert!(train_lstm(small_arch(3), &w, None, &TrainConfig::default()).is_err());
    }

    #[test]
    fn loss_decreases_and_training_is_reproducible() {
        let w = make_supervised_windows(&sinusoid(600), 15, 4, ScalingMode::Fit).unwrap();
        let cfg = TrainConfig {
            learning_rate: 3e-3,
            batch_size: 32,
            epochs: 8,
            seed: 21,
            ..TrainConfig::default()
        };
        let (a, report) = train_lstm(small_arch(4), &w, Some(&w), &cfg).unwrap();
        assert!(report.train_mse.last().unwrap() < &report.train_mse[0], "{report:?}");
        assert_eq!(report.val_mse.len(), 8);
        let best = report.val_mse.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(report.val_mse[report.best_epoch - 1], best);
        assert_eq!(mse(&a, &w).unwrap(), best);

        let (b, _) = train_lstm(small_arch(4), &w, Some(&w), &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn forecaster_denormalizes_and_batches() {
        let series: Vec<f64> = sinusoid(300).iter().map(|v| 50.0 + 10.0 * v).collect();
        let w = make_supervised_windows(&series, 15, 2, ScalingMode::Fit).unwrap();
        let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
        let (f, _) = train_forecaster(Quantity::Rate, BandId::Sub6, small_arch(2), &w, None, &cfg).unwrap();
        assert_eq!(f.spec().lookback, 15);
        let wins: Vec<&[f64]> = (0..5).map(|i| w.raw_input(i)).collect();
        let batch = f.forecast_batch(&wins).unwrap();
        for (i, row) in batch.iter().enumerate() {
            let norm = f.model().predict(&w.input(i)).unwrap();
            for (p, n) in row.iter().zip(norm) {
                assert!((p - w.scaling().denormalize(n)).abs() < 1e-9);
            }
        }
        assert!(f.forecast(&[1.0; 3]).is_err());
    }
}
