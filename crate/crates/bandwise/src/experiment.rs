//! The generate → train → run → report pipeline.
//!
//! Every stage reads its inputs from and writes its outputs to one directory,
//! so stages can be rerun alone. The seeds in the config determine every
//! byte written.

use std::path::{Path, PathBuf};

use bandwise_core::assign::{
    run_policy_over_trace, ForecastPredictor, FrameConfig, FrameResult, Policy, RateMatrix,
};
use bandwise_core::forecast::{
    ar_fit, evaluate_forecaster, train_forecaster, ArForecaster, CurrentValue, ForecastBank, LstmForecaster,
    TrainReport,
};
use bandwise_core::linkbudget::rate;
use bandwise_core::metrics::{empirical_cdf, policy_metrics, ErrorReport};
use bandwise_core::trace::{
    concatenate_ue_series, generate_trace, make_supervised_windows, split_dataset, ChannelTrace,
    DatasetSplit, ScalingMode,
};
use bandwise_core::{BandId, Quantity};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModelKind, PolicyKind};
use crate::error::{read_text, write_atomic, HarnessError, Result};
use crate::model_file::{load_model_expecting, model_file_name, save_model, ModelExpectation, SavedModel};
use crate::trace_csv::{csv_writer, finish, load_trace, save_trace};

pub const CONFIG_FILE: &str = "config.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const MODEL_DIR: &str = "models";
pub const TRAINING_FILE: &str = "training.csv";
pub const ERRORS_FILE: &str = "forecast_errors.csv";
pub const FRAMES_FILE: &str = "frames.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CDF_FILE: &str = "cdf.csv";

/// One row of the forecast error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub mode: Quantity,
    pub band: BandId,
    pub model: &'static str,
    pub report: ErrorReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub mode: Quantity,
    pub band: BandId,
    pub horizon: usize,
    pub report: TrainReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub policy: PolicyKind,
    pub target: f64,
    pub frames: Vec<FrameResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: PolicyKind,
    pub target: f64,
    pub avg_power_mw: f64,
    pub miss_fraction: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub errors: Vec<ErrorRow>,
    pub training: Vec<TrainingRow>,
    pub runs: Vec<PolicyRun>,
    pub summary: Vec<SummaryRow>,
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

fn write_config(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    write_atomic(&out.join(CONFIG_FILE), cfg.to_text().as_bytes())
}

/// Synthesizes the trace and writes it with the config.
pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<ChannelTrace> {
    cfg.validate()?;
    write_config(cfg, out)?;
    let trace = generate_trace(&cfg.scenario())?;
    save_trace(&out.join(TRACE_FILE), &trace)?;
    Ok(trace)
}

pub fn read_trace(cfg: &ExperimentConfig, out: &Path) -> Result<ChannelTrace> {
    load_trace(&out.join(TRACE_FILE), cfg.scenario().slot_duration())
}

/// The concatenated series of every radio band in one quantity.
fn band_series(cfg: &ExperimentConfig, trace: &ChannelTrace, mode: Quantity) -> Result<[Vec<f64>; 3]> {
    let mut out: [Vec<f64>; 3] = Default::default();
    for band in BandId::RADIO {
        out[band.radio_index().unwrap()] = concatenate_ue_series(trace, band, mode, cfg.bands.get(band))?;
    }
    Ok(out)
}

fn split_for(cfg: &ExperimentConfig, series: &[f64], horizon: usize) -> Result<DatasetSplit> {
    let windows = make_supervised_windows(series, cfg.lookback, horizon, ScalingMode::Fit)?;
    Ok(split_dataset(&windows, cfg.split(horizon))?)
}

/// Independent stream per trained model.
fn model_seed(seed: u64, mode: Quantity, band: BandId, horizon: usize) -> u64 {
    let tag = ((mode as u64) << 40) | ((band.index() as u64) << 32) | horizon as u64;
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn models_dir(out: &Path) -> PathBuf {
    out.join(MODEL_DIR)
}

/// Everything fitted for one (mode, band, horizon).
struct FitOutput {
    mode: Quantity,
    band: BandId,
    horizon: usize,
    ar: ArForecaster,
    lstm: Option<(LstmForecaster, TrainReport)>,
    /// Error rows when this is the largest horizon.
    errors: Vec<ErrorRow>,
}

fn fit_one(cfg: &ExperimentConfig, series: &[f64], mode: Quantity, band: BandId, h: usize, with_lstm: bool) -> Result<FitOutput> {
    let split = split_for(cfg, series, h)?;
    let ar = ar_fit(&split.train, mode, band)?;
    let lstm = if with_lstm {
        let tc = cfg.train_config(model_seed(cfg.seed_train, mode, band, h));
        let (lstm, report) = train_forecaster(mode, band, cfg.arch(h), &split.train, Some(&split.val), &tc)?;
        log::info!(
            "trained lstm {mode} {band} h{h}: train mse {:.3e}, best epoch {}",
            report.train_mse.last().copied().unwrap_or(f64::NAN),
            report.best_epoch
        );
        Some((lstm, report))
    } else {
        None
    };
    let mut errors = Vec::new();
    if h == cfg.max_horizon() {
        let row = |model, report| ErrorRow { mode, band, model, report };
        if let Some((lstm, _)) = &lstm {
            errors.push(row("lstm", evaluate_forecaster(lstm, &split.test)?));
        }
        errors.push(row("ar", evaluate_forecaster(&ar, &split.test)?));
        let current = CurrentValue::new(mode, band, h);
        errors.push(row("current", evaluate_forecaster(&current, &split.test)?));
    }
    Ok(FitOutput {
        mode,
        band,
        horizon: h,
        ar,
        lstm,
        errors,
    })
}

/// Fits the forecasters every configured policy needs, saves them, and
/// writes the error table for the largest horizon.
///
/// Autoregressions are always fitted since they are cheap. The LSTM is
/// trained when a policy uses it. With `compare_modes`, the other quantity
/// mode is also fitted at the largest horizon, for the error table only.
/// Fits run in parallel; each has its own seed, so results do not depend on
/// scheduling.
pub fn train(cfg: &ExperimentConfig, out: &Path) -> Result<(Vec<ErrorRow>, Vec<TrainingRow>)> {
    cfg.validate()?;
    write_config(cfg, out)?;
    let trace = read_trace(cfg, out)?;
    let dir = models_dir(out);
    ensure_dir(&dir)?;
    let with_lstm = cfg.model_kinds().contains(&ModelKind::Lstm);
    let k = cfg.max_horizon();
    let other = match cfg.mode {
        Quantity::Rate => Quantity::Channel,
        Quantity::Channel => Quantity::Rate,
    };
    let mut modes = vec![(cfg.mode, (1..=k).collect::<Vec<_>>())];
    if cfg.compare_modes {
        modes.push((other, vec![k]));
    }
    let mut jobs = Vec::new();
    for (mode, horizons) in modes {
        let series = std::sync::Arc::new(band_series(cfg, &trace, mode)?);
        for band in BandId::RADIO {
            for &h in &horizons {
                jobs.push((series.clone(), mode, band, h));
            }
        }
    }
    let fits = jobs
        .par_iter()
        .map(|(series, mode, band, h)| fit_one(cfg, &series[band.radio_index().unwrap()], *mode, *band, *h, with_lstm))
        .collect::<Result<Vec<_>>>()?;

    let mut errors = Vec::new();
    let mut training = Vec::new();
    for fit in fits {
        let (mode, band, h) = (fit.mode, fit.band, fit.horizon);
        save_model(&dir.join(model_file_name(ModelKind::Ar, mode, band, h)), &SavedModel::Ar(fit.ar))?;
        if let Some((lstm, report)) = fit.lstm {
            save_model(&dir.join(model_file_name(ModelKind::Lstm, mode, band, h)), &SavedModel::Lstm(lstm))?;
            training.push(TrainingRow {
                mode,
                band,
                horizon: h,
                report,
            });
        }
        errors.extend(fit.errors);
    }
    write_atomic(&out.join(ERRORS_FILE), &errors_csv(&errors, k))?;
    write_atomic(&out.join(TRAINING_FILE), &training_csv(&training))?;
    Ok((errors, training))
}

fn errors_csv(rows: &[ErrorRow], k: usize) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["mode".to_string(), "band".into(), "model".into()];
    header.extend((1..=k).map(|j| format!("nrmse_step{j}")));
    header.extend((1..=k).map(|j| format!("nmae_step{j}")));
    w.write_record(&header).unwrap();
    for r in rows {
        let mut rec = vec![r.mode.name().to_string(), r.band.name().to_string(), r.model.to_string()];
        rec.extend(r.report.per_step.iter().map(|s| s.nrmse.to_string()));
        rec.extend(r.report.per_step.iter().map(|s| s.nmae.to_string()));
        w.write_record(&rec).unwrap();
    }
    finish(w)
}

fn training_csv(rows: &[TrainingRow]) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(["mode", "band", "horizon", "epoch", "train_mse", "val_mse", "best"]).unwrap();
    for r in rows {
        for (e, t) in r.report.train_mse.iter().enumerate() {
            let val = r.report.val_mse.get(e).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                r.mode.name().to_string(),
                r.band.name().to_string(),
                r.horizon.to_string(),
                (e + 1).to_string(),
                t.to_string(),
                val,
                (e + 1 == r.report.best_epoch).to_string(),
            ])
            .unwrap();
        }
    }
    finish(w)
}

/// Where policies are evaluated: the slots after the last held-out window
/// inputs of the largest horizon begin, covering `split.test` slots.
pub fn evaluation_region(cfg: &ExperimentConfig) -> (usize, usize) {
    (cfg.split(cfg.max_horizon()).test_start() + cfg.lookback, cfg.split_test)
}

fn load_bank(cfg: &ExperimentConfig, out: &Path, kind: ModelKind) -> Result<ForecastBank> {
    let mut bank = ForecastBank::new(cfg.mode);
    for band in BandId::RADIO {
        for h in 1..=cfg.max_horizon() {
            let path = models_dir(out).join(model_file_name(kind, cfg.mode, band, h));
            let expect = ModelExpectation {
                kind,
                mode: cfg.mode,
                band,
                horizon: h,
                lookback: cfg.lookback,
            };
            bank.insert(load_model_expecting(&path, expect)?.into_forecaster())?;
        }
    }
    Ok(bank)
}

/// True rates in bit/s over the evaluation region.
pub fn evaluation_rates(cfg: &ExperimentConfig, trace: &ChannelTrace) -> Result<RateMatrix> {
    let (start, len) = evaluation_region(cfg);
    let gains = band_series(cfg, trace, Quantity::Channel)?;
    if start + len > gains[0].len() {
        return Err(HarnessError::Config(format!(
            "evaluation region {start}..{} runs past the {}-slot series",
            start + len,
            gains[0].len()
        )));
    }
    let mut rows: [Vec<f64>; 3] = Default::default();
    for band in BandId::RADIO {
        let i = band.radio_index().unwrap();
        rows[i] = gains[i][start..start + len]
            .iter()
            .map(|&g| rate(cfg.bands.get(band), g))
            .collect::<bandwise_core::Result<_>>()?;
    }
    Ok(RateMatrix::from_radio_rows(&rows[0], &rows[1], &rows[2])?)
}

/// The per-frame settings of one target rate.
pub fn frame_config(cfg: &ExperimentConfig, target: f64) -> FrameConfig {
    FrameConfig {
        penalize_plan: cfg.penalize_plan,
        discount: cfg.discount,
        power: cfg.bands.power_table(),
        ..FrameConfig::new(cfg.frame_slots, target, cfg.switching_cost)
    }
}

/// Runs every configured policy at every target over the evaluation region
/// and writes the per-frame table.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PolicyRun>> {
    cfg.validate()?;
    write_config(cfg, out)?;
    let trace = read_trace(cfg, out)?;
    let (start, len) = evaluation_region(cfg);
    let rates = evaluation_rates(cfg, &trace)?;
    let quantity = band_series(cfg, &trace, cfg.mode)?;
    let k = cfg.max_horizon();
    let mut runs = Vec::new();
    for &policy in &cfg.policies {
        let predictor = match policy {
            PolicyKind::ProposedLstm => Some(load_bank(cfg, out, ModelKind::Lstm)?),
            PolicyKind::ProposedAr => Some(load_bank(cfg, out, ModelKind::Ar)?),
            PolicyKind::ProposedCurrent => Some(ForecastBank::current_value(cfg.mode, k)),
            PolicyKind::Greedy | PolicyKind::Oracle => None,
        }
        .map(|bank| ForecastPredictor::build(&bank, &cfg.bands, &quantity, start, len, k))
        .transpose()?;
        for &target in &cfg.target_rates {
            let fc = frame_config(cfg, target);
            let p = match (&predictor, policy) {
                (Some(pred), _) => Policy::Proposed(pred),
                (None, PolicyKind::Oracle) => Policy::Oracle,
                (None, _) => Policy::Greedy,
            };
            runs.push(PolicyRun {
                policy,
                target,
                frames: run_policy_over_trace(&rates, p, &fc)?,
            });
        }
    }
    write_atomic(&out.join(FRAMES_FILE), &frames_csv(&runs, cfg.frame_slots))?;
    Ok(runs)
}

fn frames_csv(runs: &[PolicyRun], slots: usize) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["frame".to_string(), "policy".into(), "target_bps".into()];
    header.extend((1..=slots).map(|t| format!("band_t{t}")));
    header.extend(["sum_rate_bps", "power_mw", "target_met", "switches"].map(String::from));
    w.write_record(&header).unwrap();
    for run in runs {
        for (i, f) in run.frames.iter().enumerate() {
            let mut rec = vec![i.to_string(), run.policy.name().to_string(), run.target.to_string()];
            rec.extend(f.bands.iter().map(|b| b.name().to_string()));
            rec.extend([
                f.sum_rate.to_string(),
                f.power_mw.to_string(),
                f.target_met.to_string(),
                f.switches.to_string(),
            ]);
            w.write_record(&rec).unwrap();
        }
    }
    finish(w)
}

/// Parses a frames table back into runs. Per-slot rates are not stored, so
/// `realized_rates` comes back empty.
pub fn read_frames(path: &Path) -> Result<Vec<PolicyRun>> {
    let text = read_text(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| HarnessError::parse(path, 1, e.to_string()))?
        .clone();
    let slots = header.iter().filter(|h| h.starts_with("band_t")).count();
    if slots == 0 || header.len() != slots + 7 || &header[0] != "frame" {
        return Err(HarnessError::parse(path, 1, "not a frames table"));
    }
    let mut runs: Vec<PolicyRun> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| HarnessError::parse(path, line, e.to_string()))?;
        let bad = |what: &str, v: &str| HarnessError::parse(path, line, format!("bad {what} `{v}`"));
        let policy = PolicyKind::from_name(&rec[1]).ok_or_else(|| bad("policy", &rec[1]))?;
        let target: f64 = rec[2].parse().map_err(|_| bad("target", &rec[2]))?;
        let bands = (0..slots)
            .map(|t| BandId::from_name(&rec[3 + t]).ok_or_else(|| bad("band", &rec[3 + t])))
            .collect::<Result<Vec<_>>>()?;
        let at = 3 + slots;
        let sum_rate: f64 = rec[at].parse().map_err(|_| bad("sum rate", &rec[at]))?;
        let power_mw: f64 = rec[at + 1].parse().map_err(|_| bad("power", &rec[at + 1]))?;
        let target_met: bool = rec[at + 2].parse().map_err(|_| bad("target_met", &rec[at + 2]))?;
        let switches: usize = rec[at + 3].parse().map_err(|_| bad("switches", &rec[at + 3]))?;
        let frame = FrameResult {
            bands,
            realized_rates: Vec::new(),
            sum_rate,
            power_mw,
            target_met,
            switches,
            remaining_target: target - sum_rate,
        };
        match runs.last_mut() {
            Some(r) if r.policy == policy && r.target == target => r.frames.push(frame),
            _ => runs.push(PolicyRun {
                policy,
                target,
                frames: vec![frame],
            }),
        }
    }
    Ok(runs)
}

pub fn summarize(runs: &[PolicyRun]) -> Result<Vec<SummaryRow>> {
    runs.iter()
        .map(|r| {
            let m = policy_metrics(&r.frames, r.target)?;
            Ok(SummaryRow {
                policy: r.policy,
                target: r.target,
                avg_power_mw: m.avg_power_mw_per_frame,
                miss_fraction: m.miss_fraction,
                frames: m.frames,
            })
        })
        .collect()
}

/// Reads the frames table and writes the power summary and rate CDFs.
pub fn report(out: &Path) -> Result<Vec<SummaryRow>> {
    let runs = read_frames(&out.join(FRAMES_FILE))?;
    let summary = summarize(&runs)?;
    let mut w = csv_writer();
    w.write_record(["policy", "target_bps", "avg_power_mw", "miss_fraction", "frames"]).unwrap();
    for s in &summary {
        w.write_record([
            s.policy.name().to_string(),
            s.target.to_string(),
            s.avg_power_mw.to_string(),
            s.miss_fraction.to_string(),
            s.frames.to_string(),
        ])
        .unwrap();
    }
    write_atomic(&out.join(SUMMARY_FILE), &finish(w))?;
    let mut w = csv_writer();
    w.write_record(["policy", "target_bps", "sum_rate_bps", "probability"]).unwrap();
    for r in &runs {
        let samples: Vec<f64> = r.frames.iter().map(|f| f.sum_rate).collect();
        for (v, p) in empirical_cdf(&samples)? {
            w.write_record([r.policy.name().to_string(), r.target.to_string(), v.to_string(), p.to_string()])
                .unwrap();
        }
    }
    write_atomic(&out.join(CDF_FILE), &finish(w))?;
    Ok(summary)
}

/// All four stages in order.
pub fn run_all(cfg: &ExperimentConfig, out: &Path) -> Result<PipelineOutput> {
    generate(cfg, out)?;
    let (errors, training) = train(cfg, out)?;
    let runs = run(cfg, out)?;
    let summary = report(out)?;
    Ok(PipelineOutput {
        errors,
        training,
        runs,
        summary,
    })
}
