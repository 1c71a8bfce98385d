//! Trace CSV: header `ue,band,slot,gain`, linear gains, 0-based UE and slot.

use std::path::Path;

use bandwise_core::trace::ChannelTrace;
use bandwise_core::BandId;

use crate::error::{write_atomic, HarnessError, Result};

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    writer()
}

/// Rows ordered by UE, band, slot. `{:e}` prints the shortest exact decimal.
pub fn trace_to_csv(trace: &ChannelTrace) -> Vec<u8> {
    let mut w = writer();
    w.write_record(["ue", "band", "slot", "gain"]).unwrap();
    for ue in 0..trace.ue_count() {
        for band in BandId::RADIO {
            let series = trace.series(ue, band).expect("indices are in range");
            for (slot, g) in series.iter().enumerate() {
                w.write_record([ue.to_string(), band.name().to_string(), slot.to_string(), format!("{g:e}")])
                    .unwrap();
            }
        }
    }
    finish(w)
}

pub fn save_trace(path: &Path, trace: &ChannelTrace) -> Result<()> {
    write_atomic(path, &trace_to_csv(trace))
}

/// Parses a trace. Rows may come in any order but must cover every
/// (ue, band, slot) cell exactly once.
pub fn trace_from_csv(path: &Path, text: &str, slot_duration: f64) -> Result<ChannelTrace> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| HarnessError::parse(path, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["ue", "band", "slot", "gain"] {
        return Err(HarnessError::parse(path, 1, "expected header `ue,band,slot,gain`"));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| HarnessError::parse(path, line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(HarnessError::parse(path, line, "expected 4 fields"));
        }
        let ue: usize = rec[0]
            .parse()
            .map_err(|_| HarnessError::parse(path, line, format!("bad ue `{}`", &rec[0])))?;
        let band = BandId::from_name(&rec[1])
            .and_then(|b| b.radio_index())
            .ok_or_else(|| HarnessError::parse(path, line, format!("bad band `{}`", &rec[1])))?;
        let slot: usize = rec[2]
            .parse()
            .map_err(|_| HarnessError::parse(path, line, format!("bad slot `{}`", &rec[2])))?;
        let gain: f64 = rec[3]
            .parse()
            .map_err(|_| HarnessError::parse(path, line, format!("bad gain `{}`", &rec[3])))?;
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(HarnessError::parse(path, line, format!("gain must be nonnegative and finite, got {gain}")));
        }
        rows.push((line, ue, band, slot, gain));
    }
    if rows.is_empty() {
        return Err(HarnessError::format(path, "trace has no rows"));
    }
    let ue_count = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let slots = rows.iter().map(|r| r.3).max().unwrap() + 1;
    let cells = ue_count * 3 * slots;
    if rows.len() != cells {
        return Err(HarnessError::format(
            path,
            format!("{ue_count} UEs × 3 bands × {slots} slots needs {cells} rows, found {}", rows.len()),
        ));
    }
    let mut gains = vec![f64::NAN; cells];
    for (line, ue, band, slot, gain) in rows {
        let idx = (ue * 3 + band) * slots + slot;
        if !gains[idx].is_nan() {
            return Err(HarnessError::parse(path, line, "duplicate (ue, band, slot)"));
        }
        gains[idx] = gain;
    }
    Ok(ChannelTrace::new(ue_count, slots, slot_duration, gains)?)
}

pub fn load_trace(path: &Path, slot_duration: f64) -> Result<ChannelTrace> {
    let text = crate::error::read_text(path)?;
    trace_from_csv(path, &text, slot_duration)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_slot_file() {
        let text = "ue,band,slot,gain\n0,sub6,0,1e-9\n0,mmwave,0,2.5e-12\n0,thz,0,0e0\n";
        let t = trace_from_csv(Path::new("t.csv"), text, 0.02).unwrap();
        assert_eq!((t.ue_count(), t.slots_per_ue()), (1, 1));
        assert_eq!(t.gain(0, BandId::MmWave, 0).unwrap(), 2.5e-12);
        assert_eq!(trace_to_csv(&t), text.as_bytes());
    }

    #[test]
    fn negative_gain_names_the_line() {
        let text = "ue,band,slot,gain\n0,sub6,0,1e-9\n0,mmwave,0,-1.0\n0,thz,0,0\n";
        let err = trace_from_csv(Path::new("t.csv"), text, 0.02).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("nonnegative"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let p = Path::new("t.csv");
        assert!(trace_from_csv(p, "a,b,c,d\n", 0.02).unwrap_err().to_string().contains("header"));
        let missing = "ue,band,slot,gain\n0,sub6,0,1\n0,thz,0,1\n";
        assert!(trace_from_csv(p, missing, 0.02).unwrap_err().to_string().contains("needs 3 rows"));
        let dup = "ue,band,slot,gain\n0,sub6,0,1\n0,sub6,0,1\n0,thz,0,1\n";
        assert!(trace_from_csv(p, dup, 0.02).unwrap_err().to_string().contains("line 3"));
        let band = "ue,band,slot,gain\n0,notx,0,1\n";
        assert!(trace_from_csv(p, band, 0.02).unwrap_err().to_string().contains("bad band"));
    }
}
