//! Plain-text forecaster files.
//!
//! A `key value` header is followed by named row-major blocks. LSTM kernels
//! are split per gate (input, forget, candidate, output). Values carry 17
//! significant digits, so a load reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use bandwise_core::forecast::{
    ArForecaster, CellActivation, ForecastSpec, Forecaster, LstmArch, LstmForecaster, LstmModel,
};
use bandwise_core::trace::Scaling;
use bandwise_core::{BandId, Quantity};

use crate::config::ModelKind;
use crate::error::{read_text, write_atomic, HarnessError, Result};

const MAGIC: &str = "bandwise-model v1";
const GATES: [&str; 4] = ["input", "forget", "candidate", "output"];

#[derive(Debug, Clone)]
pub enum SavedModel {
    Lstm(LstmForecaster),
    Ar(ArForecaster),
}

impl SavedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SavedModel::Lstm(_) => ModelKind::Lstm,
            SavedModel::Ar(_) => ModelKind::Ar,
        }
    }

    pub fn spec(&self) -> &ForecastSpec {
        match self {
            SavedModel::Lstm(m) => m.spec(),
            SavedModel::Ar(m) => m.spec(),
        }
    }

    pub fn into_forecaster(self) -> Box<dyn Forecaster> {
        match self {
            SavedModel::Lstm(m) => Box::new(m),
            SavedModel::Ar(m) => Box::new(m),
        }
    }
}

/// What a run expects to find in a model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelExpectation {
    pub kind: ModelKind,
    pub mode: Quantity,
    pub band: BandId,
    pub horizon: usize,
    pub lookback: usize,
}

pub fn model_file_name(kind: ModelKind, mode: Quantity, band: BandId, horizon: usize) -> String {
    format!("{}_{}_{}_h{}.txt", kind.name(), mode.name(), band.name(), horizon)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn put_block(out: &mut String, name: &str, rows: usize, cols: usize, value: impl Fn(usize, usize) -> f64) {
    let _ = writeln!(out, "block {name} {rows} {cols}");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| num(value(r, c))).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

fn header(out: &mut String, kind: ModelKind, spec: &ForecastSpec, scaling: Scaling) {
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "kind {}", kind.name());
    let _ = writeln!(out, "mode {}", spec.mode.name());
    let _ = writeln!(out, "band {}", spec.band.name());
    let _ = writeln!(out, "lookback {}", spec.lookback);
    let _ = writeln!(out, "horizon {}", spec.horizon);
    let _ = writeln!(out, "scaling {} {}", num(scaling.min), num(scaling.max));
}

pub fn model_to_text(model: &SavedModel) -> String {
    let mut out = String::new();
    match model {
        SavedModel::Ar(m) => {
            header(&mut out, ModelKind::Ar, m.spec(), m.scaling());
            let k = m.spec().horizon;
            let w = m.weights();
            put_block(&mut out, "weights", w.len() / k, k, |r, c| w[r * k + c]);
        }
        SavedModel::Lstm(m) => {
            header(&mut out, ModelKind::Lstm, m.spec(), m.scaling());
            let lstm = m.model();
            let arch = lstm.arch();
            let hidden: Vec<String> = arch.hidden.iter().map(|h| h.to_string()).collect();
            let _ = writeln!(out, "hidden {}", hidden.join(","));
            let _ = writeln!(out, "dropout {}", arch.dropout);
            let _ = writeln!(out, "cell {}", arch.cell_activation.name());
            let _ = writeln!(out, "inter_relu {}", arch.relu_between_layers);
            for (name, (rows, cols), data) in lstm.blocks() {
                if let Some(layer) = name.strip_prefix("layer").and_then(|s| s.split('.').next()) {
                    let l: usize = layer.parse().expect("block names are generated");
                    let part = name.rsplit('.').next().unwrap();
                    for (g, gate) in GATES.iter().enumerate() {
                        let range = lstm.gate_columns(l, g);
                        put_block(&mut out, &format!("layer{l}.{gate}.{part}"), rows, range.len(), |r, c| {
                            data[r * cols + range.start + c]
                        });
                    }
                } else {
                    put_block(&mut out, &name, rows, cols, |r, c| data[r * cols + c]);
                }
            }
        }
    }
    out
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<()> {
    write_atomic(path, model_to_text(model).as_bytes())
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        let (i, l) = self
            .inner
            .next()
            .ok_or_else(|| HarnessError::format(self.path, "unexpected end of file"))?;
        self.line = i + 1;
        Ok(l)
    }

    fn err(&self, msg: impl Into<String>) -> HarnessError {
        HarnessError::parse(self.path, self.line, msg)
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected `{key} ...`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.err(format!("cannot parse {key} `{v}`")))
    }

    fn number(&self, s: &str) -> Result<f64> {
        s.parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }

    /// Reads a block header and its rows into `dest(r, c, value)`.
    fn block(&mut self, name: &str, rows: usize, cols: usize, mut dest: impl FnMut(usize, usize, f64)) -> Result<()> {
        let expected = format!("block {name} {rows} {cols}");
        if self.next_line()? != expected {
            return Err(self.err(format!("expected `{expected}`")));
        }
        for r in 0..rows {
            let l = self.next_line()?;
            let vals: Vec<&str> = l.split(' ').collect();
            if vals.len() != cols {
                return Err(self.err(format!("expected {cols} values, found {}", vals.len())));
            }
            for (c, v) in vals.into_iter().enumerate() {
                dest(r, c, self.number(v)?);
            }
        }
        Ok(())
    }
}

pub fn model_from_text(path: &Path, text: &str) -> Result<SavedModel> {
    let mut lines = Lines {
        path,
        inner: text.lines().enumerate(),
        line: 0,
    };
    let magic = lines.next_line()?;
    if magic != MAGIC {
        return Err(lines.err(format!("unsupported model header `{magic}`, expected `{MAGIC}`")));
    }
    let kind_name = lines.field("kind")?;
    let kind = ModelKind::from_name(kind_name).ok_or_else(|| lines.err(format!("unknown kind `{kind_name}`")))?;
    let mode_name = lines.field("mode")?;
    let mode = Quantity::from_name(mode_name).ok_or_else(|| lines.err(format!("unknown mode `{mode_name}`")))?;
    let band_name = lines.field("band")?;
    let band = BandId::from_name(band_name)
        .filter(|b| *b != BandId::NoTx)
        .ok_or_else(|| lines.err(format!("unknown band `{band_name}`")))?;
    let lookback: usize = lines.parsed("lookback")?;
    let horizon: usize = lines.parsed("horizon")?;
    let scaling_text = lines.field("scaling")?;
    let (lo, hi) = scaling_text
        .split_once(' ')
        .ok_or_else(|| lines.err("expected `scaling min max`"))?;
    let scaling = Scaling {
        min: lines.number(lo)?,
        max: lines.number(hi)?,
    };
    let spec = ForecastSpec {
        mode,
        band,
        lookback,
        horizon,
    };
    let model = match kind {
        ModelKind::Ar => {
            let mut w = vec![0.0; (lookback + 1) * horizon];
            lines.block("weights", lookback + 1, horizon, |r, c, v| w[r * horizon + c] = v)?;
            SavedModel::Ar(ArForecaster::from_parts(spec, scaling, w)?)
        }
        ModelKind::Lstm => {
            let hidden_text = lines.field("hidden")?;
            let hidden = hidden_text
                .split(',')
                .map(|h| h.parse().map_err(|_| lines.err(format!("bad layer size `{h}`"))))
                .collect::<Result<Vec<usize>>>()?;
            let dropout: f64 = lines.parsed("dropout")?;
            let cell_name = lines.field("cell")?;
            let cell = CellActivation::from_name(cell_name)
                .ok_or_else(|| lines.err(format!("unknown cell activation `{cell_name}`")))?;
            let inter_relu: bool = lines.parsed("inter_relu")?;
            let arch = LstmArch {
                input_size: 1,
                hidden,
                horizon,
                dropout,
                cell_activation: cell,
                relu_between_layers: inter_relu,
            };
            let mut model = LstmModel::zeroed(arch)?;
            let shapes: Vec<(String, (usize, usize))> =
                model.blocks().into_iter().map(|(n, s, _)| (n, s)).collect();
            let gate_ranges: Vec<Vec<std::ops::Range<usize>>> = (0..model.arch().hidden.len())
                .map(|l| (0..4).map(|g| model.gate_columns(l, g)).collect())
                .collect();
            let params = model.params_mut();
            let mut offset = 0;
            for (name, (rows, cols)) in shapes {
                let dest = &mut params[offset..offset + rows * cols];
                if let Some(layer) = name.strip_prefix("layer").and_then(|s| s.split('.').next()) {
                    let l: usize = layer.parse().expect("block names are generated");
                    let part = name.rsplit('.').next().unwrap();
                    for (g, gate) in GATES.iter().enumerate() {
                        let range = gate_ranges[l][g].clone();
                        lines.block(&format!("layer{l}.{gate}.{part}"), rows, range.len(), |r, c, v| {
                            dest[r * cols + range.start + c] = v
                        })?;
                    }
                } else {
                    lines.block(&name, rows, cols, |r, c, v| dest[r * cols + c] = v)?;
                }
                offset += rows * cols;
            }
            SavedModel::Lstm(LstmForecaster::new(spec, scaling, model)?)
        }
    };
    if let Some((i, l)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(HarnessError::parse(path, i + 1, format!("trailing content `{l}`")));
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    model_from_text(path, &read_text(path)?)
}

/// Loads a model and rejects it unless it was built for `expect`.
pub fn load_model_expecting(path: &Path, expect: ModelExpectation) -> Result<SavedModel> {
    let model = load_model(path)?;
    let spec = model.spec();
    let mismatch = |what: &str, found: String, wanted: String| {
        Err(HarnessError::format(path, format!("model {what} is {found}, this run needs {wanted}")))
    };
    if model.kind() != expect.kind {
        return mismatch("kind", model.kind().name().into(), expect.kind.name().into());
    }
    if spec.mode != expect.mode {
        return mismatch("mode", spec.mode.name().into(), expect.mode.name().into());
    }
    if spec.band != expect.band {
        return mismatch("band", spec.band.name().into(), expect.band.name().into());
    }
    if spec.horizon != expect.horizon {
        return mismatch("horizon", spec.horizon.to_string(), expect.horizon.to_string());
    }
    if spec.lookback != expect.lookback {
        return mismatch("lookback", spec.lookback.to_string(), expect.lookback.to_string());
    }
    Ok(model)
}
