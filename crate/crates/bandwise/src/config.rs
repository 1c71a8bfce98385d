//! Experiment configuration as flat `section.key = value` text.
//!
//! Unknown keys are rejected. [`ExperimentConfig::to_text`] writes every key,
//! so a saved config reproduces the run without relying on defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use bandwise_core::forecast::{CellActivation, LstmArch, TrainConfig};
use bandwise_core::trace::{SplitSpec, SyntheticScenario};
use bandwise_core::{BandConfig, BandId, BandSet, Quantity};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyKind {
    ProposedLstm,
    ProposedAr,
    ProposedCurrent,
    Greedy,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::ProposedLstm,
        PolicyKind::ProposedAr,
        PolicyKind::ProposedCurrent,
        PolicyKind::Greedy,
        PolicyKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ProposedLstm => "proposed-lstm",
            PolicyKind::ProposedAr => "proposed-ar",
            PolicyKind::ProposedCurrent => "proposed-current",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<PolicyKind> {
        PolicyKind::ALL.into_iter().find(|p| p.name() == name)
    }

    /// The trained model family this policy needs, if any.
    pub fn model(self) -> Option<ModelKind> {
        match self {
            PolicyKind::ProposedLstm => Some(ModelKind::Lstm),
            PolicyKind::ProposedAr => Some(ModelKind::Ar),
            _ => None,
        }
    }
}

/// Families of trained forecasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelKind {
    Lstm,
    Ar,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Ar => "ar",
        }
    }

    pub fn from_name(name: &str) -> Option<ModelKind> {
        match name {
            "lstm" => Some(ModelKind::Lstm),
            "ar" => Some(ModelKind::Ar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed_trace: u64,
    pub seed_train: u64,
    /// Recorded for provenance; every policy is deterministic given its inputs.
    pub seed_run: u64,
    pub scenario: SyntheticScenario,
    pub bands: BandSet,
    pub frame_slots: usize,
    pub target_rates: Vec<f64>,
    pub switching_cost: f64,
    pub discount: bool,
    pub penalize_plan: bool,
    pub policies: Vec<PolicyKind>,
    pub mode: Quantity,
    /// Also train the other quantity mode at the largest horizon, for the error table.
    pub compare_modes: bool,
    pub lookback: usize,
    pub split_train: usize,
    pub split_val: usize,
    pub split_test: usize,
    pub lstm_hidden: Vec<usize>,
    pub lstm_dropout: f64,
    pub lstm_cell: CellActivation,
    pub lstm_inter_relu: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let arch = LstmArch::standard(1);
        let train = TrainConfig::default();
        ExperimentConfig {
            seed_trace: 1,
            seed_train: 7,
            seed_run: 0,
            scenario: SyntheticScenario::default(),
            bands: BandSet::default(),
            frame_slots: 5,
            target_rates: (1..=10).map(|i| i as f64 * 0.25e9).collect(),
            switching_cost: 0.05,
            discount: true,
            penalize_plan: true,
            policies: vec![PolicyKind::ProposedLstm, PolicyKind::Greedy, PolicyKind::Oracle],
            mode: Quantity::Rate,
            compare_modes: true,
            lookback: 15,
            split_train: 6000,
            split_val: 500,
            split_test: 1150,
            lstm_hidden: arch.hidden,
            lstm_dropout: arch.dropout,
            lstm_cell: arch.cell_activation,
            lstm_inter_relu: arch.relu_between_layers,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(HarnessError::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_point(key: &str, value: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = parse_list(key, value)?;
    v.try_into()
        .map_err(|_| HarnessError::Config(format!("`{key}`: expected three comma-separated numbers")))
}

pub fn parse_policies(value: &str) -> Result<Vec<PolicyKind>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            PolicyKind::from_name(s).ok_or_else(|| {
                let known: Vec<_> = PolicyKind::ALL.iter().map(|p| p.name()).collect();
                HarnessError::Config(format!("unknown policy `{s}` (known: {})", known.join(", ")))
            })
        })
        .collect()
}

pub fn parse_mode(value: &str) -> Result<Quantity> {
    Quantity::from_name(value)
        .ok_or_else(|| HarnessError::Config(format!("unknown mode `{value}` (expected rate or channel)")))
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn arch(&self, horizon: usize) -> LstmArch {
        LstmArch {
            input_size: 1,
            hidden: self.lstm_hidden.clone(),
            horizon,
            dropout: self.lstm_dropout,
            cell_activation: self.lstm_cell,
            relu_between_layers: self.lstm_inter_relu,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn split(&self, horizon: usize) -> SplitSpec {
        SplitSpec {
            train: self.split_train,
            gap: self.lookback + horizon,
            val: self.split_val,
            test: self.split_test,
            leakage_guard: true,
        }
    }

    /// Largest forecast horizon the receding-horizon policy asks for.
    pub fn max_horizon(&self) -> usize {
        self.frame_slots - 1
    }

    /// Model families required by the configured policies.
    pub fn model_kinds(&self) -> Vec<ModelKind> {
        let mut kinds: Vec<ModelKind> = self.policies.iter().filter_map(|p| p.model()).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }

    /// The scenario with its seed and carriers taken from this config.
    pub fn scenario(&self) -> SyntheticScenario {
        let mut s = self.scenario.clone();
        s.seed = self.seed_trace;
        for band in BandId::RADIO {
            *s.carrier_hz.get_mut(band).unwrap() = self.bands.get(band).carrier_hz;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.frame_slots < 2 {
            return fail(format!("frame.slots must be at least 2, got {}", self.frame_slots));
        }
        if self.frame_slots > bandwise_core::assign::ENUMERATION_CAP {
            return fail(format!(
                "frame.slots = {} exceeds the enumeration cap of {}",
                self.frame_slots,
                bandwise_core::assign::ENUMERATION_CAP
            ));
        }
        if !(0.0..1.0).contains(&self.switching_cost) {
            return fail(format!("frame.switching_cost must lie in [0, 1), got {}", self.switching_cost));
        }
        if self.target_rates.is_empty() {
            return fail("frame.target_rates is empty".into());
        }
        if let Some(m) = self.target_rates.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return fail(format!("target rates must be positive and finite, got {m}"));
        }
        if self.policies.is_empty() {
            return fail("policy.list is empty".into());
        }
        let mut sorted = self.policies.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.policies.len() {
            return fail("policy.list names a policy twice".into());
        }
        if self.lookback == 0 {
            return fail("forecast.lookback must be at least 1".into());
        }
        if self.split_train == 0 || self.split_test < self.frame_slots {
            return fail("split.train must be positive and split.test must hold at least one frame".into());
        }
        self.arch(1).validate()?;
        self.train_config(0).validate()?;
        self.scenario().validate()?;
        let configs = BandId::ALL.map(|b| *self.bands.get(b));
        BandSet::new(configs)?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {}", n + 1, e.message())))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        ExperimentConfig::from_text(&text)
    }

    /// Sets one key. Keys mirror the lines of [`ExperimentConfig::to_text`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(rest) = key.strip_prefix("band.") {
            return self.set_band(key, rest, value);
        }
        if let Some(rest) = key.strip_prefix("blockage.") {
            return self.set_blockage(key, rest, value);
        }
        let s = &mut self.scenario;
        match key {
            "seed.trace" => self.seed_trace = parse_value(key, value)?,
            "seed.train" => self.seed_train = parse_value(key, value)?,
            "seed.run" => self.seed_run = parse_value(key, value)?,
            "trace.bs_position" => s.bs_position = parse_point(key, value)?,
            "trace.ue_start" => s.ue_start = parse_point(key, value)?,
            "trace.ue_end" => s.ue_end = parse_point(key, value)?,
            "trace.ue_speed" => s.ue_speed = parse_value(key, value)?,
            "trace.ue_count" => s.ue_count = parse_value(key, value)?,
            "trace.ue_spacing" => s.ue_spacing = parse_value(key, value)?,
            "trace.sample_spacing" => s.sample_spacing = parse_value(key, value)?,
            "trace.paths_per_band" => s.paths_per_band = parse_value(key, value)?,
            "trace.direction_spread" => s.direction_spread = parse_value(key, value)?,
            "trace.shadowing_std_db" => s.shadowing_std_db = parse_value(key, value)?,
            "trace.shadowing_corr_length" => s.shadowing_corr_length = parse_value(key, value)?,
            "frame.slots" => self.frame_slots = parse_value(key, value)?,
            "frame.target_rates" => self.target_rates = parse_list(key, value)?,
            "frame.switching_cost" => self.switching_cost = parse_value(key, value)?,
            "frame.discount" => self.discount = parse_bool(key, value)?,
            "frame.penalize_plan" => self.penalize_plan = parse_bool(key, value)?,
            "policy.list" => self.policies = parse_policies(value)?,
            "forecast.mode" => self.mode = parse_mode(value)?,
            "forecast.compare_modes" => self.compare_modes = parse_bool(key, value)?,
            "forecast.lookback" => self.lookback = parse_value(key, value)?,
            "split.train" => self.split_train = parse_value(key, value)?,
            "split.val" => self.split_val = parse_value(key, value)?,
            "split.test" => self.split_test = parse_value(key, value)?,
            "lstm.hidden" => self.lstm_hidden = parse_list(key, value)?,
            "lstm.dropout" => self.lstm_dropout = parse_value(key, value)?,
            "lstm.cell" => {
                self.lstm_cell = CellActivation::from_name(value)
                    .ok_or_else(|| HarnessError::Config(format!("`{key}`: expected tanh or relu")))?
            }
            "lstm.inter_relu" => self.lstm_inter_relu = parse_bool(key, value)?,
            "train.epochs" => self.epochs = parse_value(key, value)?,
            "train.batch_size" => self.batch_size = parse_value(key, value)?,
            "train.learning_rate" => self.learning_rate = parse_value(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn set_band(&mut self, key: &str, rest: &str, value: &str) -> Result<()> {
        let (name, field) = rest
            .split_once('.')
            .ok_or_else(|| HarnessError::Config(format!("unknown key `{key}`")))?;
        let band = BandId::from_name(name)
            .filter(|b| *b != BandId::NoTx)
            .ok_or_else(|| HarnessError::Config(format!("`{key}`: unknown band `{name}`")))?;
        let mut configs = BandId::ALL.map(|b| *self.bands.get(b));
        let c: &mut BandConfig = &mut configs[band.index()];
        match field {
            "carrier_hz" => c.carrier_hz = parse_value(key, value)?,
            "bandwidth_hz" => c.bandwidth_hz = parse_value(key, value)?,
            "n_rx" => c.n_rx = parse_value(key, value)?,
            "tx_power_w" => c.tx_power_w = parse_value(key, value)?,
            "noise_figure_db" => c.noise_figure_db = parse_value(key, value)?,
            "temperature_k" => c.temperature_k = parse_value(key, value)?,
            "rf_power_mw" => c.rf_power_mw = parse_value(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        self.bands = BandSet::new(configs)?;
        Ok(())
    }

    fn set_blockage(&mut self, key: &str, rest: &str, value: &str) -> Result<()> {
        let (name, field) = rest
            .split_once('.')
            .ok_or_else(|| HarnessError::Config(format!("unknown key `{key}`")))?;
        let band = BandId::from_name(name)
            .filter(|b| matches!(b, BandId::MmWave | BandId::Thz))
            .ok_or_else(|| HarnessError::Config(format!("`{key}`: blockage applies to mmwave and thz only")))?;
        let b = self.scenario.blockage.get_mut(band).unwrap();
        match field {
            "rate_per_meter" => b.rate_per_meter = parse_value(key, value)?,
            "length_m" => b.length_m = parse_value(key, value)?,
            "loss_db" => b.loss_db = parse_value(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key, one per line, in a fixed order.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("seed.trace", self.seed_trace.to_string());
        put("seed.train", self.seed_train.to_string());
        put("seed.run", self.seed_run.to_string());
        put("trace.bs_position", join(&s.bs_position));
        put("trace.ue_start", join(&s.ue_start));
        put("trace.ue_end", join(&s.ue_end));
        put("trace.ue_speed", s.ue_speed.to_string());
        put("trace.ue_count", s.ue_count.to_string());
        put("trace.ue_spacing", s.ue_spacing.to_string());
        put("trace.sample_spacing", s.sample_spacing.to_string());
        put("trace.paths_per_band", s.paths_per_band.to_string());
        put("trace.direction_spread", s.direction_spread.to_string());
        put("trace.shadowing_std_db", s.shadowing_std_db.to_string());
        put("trace.shadowing_corr_length", s.shadowing_corr_length.to_string());
        for band in [BandId::MmWave, BandId::Thz] {
            let b = s.blockage.get(band).unwrap();
            put(&format!("blockage.{band}.rate_per_meter"), b.rate_per_meter.to_string());
            put(&format!("blockage.{band}.length_m"), b.length_m.to_string());
            put(&format!("blockage.{band}.loss_db"), b.loss_db.to_string());
        }
        for band in BandId::RADIO {
            let c = self.bands.get(band);
            put(&format!("band.{band}.carrier_hz"), c.carrier_hz.to_string());
            put(&format!("band.{band}.bandwidth_hz"), c.bandwidth_hz.to_string());
            put(&format!("band.{band}.n_rx"), c.n_rx.to_string());
            put(&format!("band.{band}.tx_power_w"), c.tx_power_w.to_string());
            put(&format!("band.{band}.noise_figure_db"), c.noise_figure_db.to_string());
            put(&format!("band.{band}.temperature_k"), c.temperature_k.to_string());
            put(&format!("band.{band}.rf_power_mw"), c.rf_power_mw.to_string());
        }
        put("frame.slots", self.frame_slots.to_string());
        put("frame.target_rates", join(&self.target_rates));
        put("frame.switching_cost", self.switching_cost.to_string());
        put("frame.discount", self.discount.to_string());
        put("frame.penalize_plan", self.penalize_plan.to_string());
        let names: Vec<&str> = self.policies.iter().map(|p| p.name()).collect();
        put("policy.list", names.join(","));
        put("forecast.mode", self.mode.name().to_string());
        put("forecast.compare_modes", self.compare_modes.to_string());
        put("forecast.lookback", self.lookback.to_string());
        put("split.train", self.split_train.to_string());
        put("split.val", self.split_val.to_string());
        put("split.test", self.split_test.to_string());
        put("lstm.hidden", join(&self.lstm_hidden));
        put("lstm.dropout", self.lstm_dropout.to_string());
        put("lstm.cell", self.lstm_cell.name().to_string());
        put("lstm.inter_relu", self.lstm_inter_relu.to_string());
        put("train.epochs", self.epochs.to_string());
        put("train.batch_size", self.batch_size.to_string());
        put("train.learning_rate", self.learning_rate.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("frame.target_rates", "1e9, 2.5e9").unwrap();
        cfg.set("band.thz.bandwidth_hz", "2e9").unwrap();
        cfg.set("blockage.thz.loss_db", "30").unwrap();
        cfg.set("policy.list", "oracle,proposed-ar").unwrap();
        let text = cfg.to_text();
        let back = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.target_rates.len(), 10);
        assert_eq!(cfg.target_rates[9], 2.5e9);
    }

    #[test]
    fn validation_messages() {
        let bad = |k: &str, v: &str| {
            let mut cfg = ExperimentConfig::default();
            cfg.set(k, v).and_then(|_| cfg.validate()).unwrap_err().to_string()
        };
        assert!(bad("frame.target_rates", "1e9,0").contains("positive"));
        assert!(bad("frame.slots", "1").contains("at least 2"));
        assert!(bad("frame.switching_cost", "1").contains("[0, 1)"));
        assert!(bad("policy.list", "oracle,oracle").contains("twice"));
        assert!(bad("policy.list", "magic").contains("unknown policy"));
        assert!(bad("train.epochs", "0").contains("epochs"));
        assert!(bad("nope.key", "1").contains("unknown key"));
        assert!(bad("band.notx.n_rx", "1").contains("unknown band"));
    }

    #[test]
    fn comments_and_line_numbers() {
        let cfg = ExperimentConfig::from_text("# header\nframe.slots = 4 # four\n\n").unwrap();
        assert_eq!(cfg.frame_slots, 4);
        let err = ExperimentConfig::from_text("frame.slots = 4\nbroken line\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
