//! Channel traces and the supervised datasets built from them.

mod synthetic;
mod windows;

pub use self::synthetic::{generate_trace, Blockage, SyntheticScenario};
pub use self::windows::{
    make_supervised_windows, split_dataset, DatasetSplit, Scaling, ScalingMode, SplitSpec,
    SupervisedWindowSet,
};

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linkbudget::{quantity_from_gain, BandConfig, BandId, Quantity};

/// Per-slot effective channel gain `|h|²` of every UE on each radio band.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    ue_count: usize,
    slots_per_ue: usize,
    slot_duration: f64,
    /// Indexed `(ue * 3 + radio_band) * slots_per_ue + slot`.
    gains: Vec<f64>,
}

impl ChannelTrace {
    pub fn new(
        ue_count: usize,
        slots_per_ue: usize,
        slot_duration: f64,
        gains: Vec<f64>,
    ) -> Result<ChannelTrace> {
        if ue_count == 0 || slots_per_ue == 0 {
            return Err(Error::Empty("trace"));
        }
        if !(slot_duration > 0.0 && slot_duration.is_finite()) {
            return Err(invalid("slot_duration", "must be positive"));
        }
        let expected = ue_count * 3 * slots_per_ue;
        if gains.len() != expected {
            return Err(Error::Shape {
                what: "trace gains",
                expected,
                actual: gains.len(),
            });
        }
        if let Some(&g) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::Negative {
                what: "channel gain",
                value: g,
            });
        }
        Ok(ChannelTrace {
            ue_count,
            slots_per_ue,
            slot_duration,
            gains,
        })
    }

    pub fn ue_count(&self) -> usize {
        self.ue_count
    }

    pub fn slots_per_ue(&self) -> usize {
        self.slots_per_ue
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Gain sequence of one UE (0-based) on one radio band.
    pub fn series(&self, ue: usize, band: BandId) -> Result<&[f64]> {
        let radio = band.radio_index().ok_or(Error::NoReceiveChain(band))?;
        if ue >= self.ue_count {
            return Err(invalid("ue", "index out of range"));
        }
        let start = (ue * 3 + radio) * self.slots_per_ue;
        Ok(&self.gains[start..start + self.slots_per_ue])
    }

    pub fn gain(&self, ue: usize, band: BandId, slot: usize) -> Result<f64> {
        self.series(ue, band)?
            .get(slot)
            .copied()
            .ok_or_else(|| invalid("slot", "index out of range"))
    }
}

/// Concatenates the three UEs' series of one band as UE3, UE2, UE1, in the
/// requested quantity. Rejects traces that do not have exactly three UEs.
pub fn concatenate_ue_series(
    trace: &ChannelTrace,
    band: BandId,
    quantity: Quantity,
    cfg: &BandConfig,
) -> Result<Vec<f64>> {
    if trace.ue_count() != 3 {
        return Err(invalid(
            "ue_count",
            alloc::format!("expected 3 UEs, trace has {}", trace.ue_count()),
        ));
    }
    concatenate_reversed(trace, band, quantity, cfg)
}

/// Concatenation for any UE count: last UE first, UE1 last.
pub fn concatenate_reversed(
    trace: &ChannelTrace,
    band: BandId,
    quantity: Quantity,
    cfg: &BandConfig,
) -> Result<Vec<f64>> {
    if cfg.band != band {
        return Err(invalid("band", "band config does not match requested band"));
    }
    let mut out = Vec::with_capacity(trace.ue_count() * trace.slots_per_ue());
    for ue in (0..trace.ue_count()).rev() {
        for &g in trace.series(ue, band)? {
            out.push(quantity_from_gain(cfg, quantity, g)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn per_ue_constant(values: [f64; 3], slots: usize) -> ChannelTrace {
        let mut gains = Vec::new();
        for v in values {
            gains.extend(core::iter::repeat_n(v, 3 * slots));
        }
        ChannelTrace::new(3, slots, 0.02, gains).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            ChannelTrace::new(1, 2, 0.02, vec![0.0; 5]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            ChannelTrace::new(1, 1, 0.02, vec![0.0, -1.0, 0.0]),
            Err(Error::Negative { .. })
        ));
        assert!(ChannelTrace::new(1, 1, 0.0, vec![0.0; 3]).is_err());
    }

    #[test]
    fn concatenation_orders_ue3_ue2_ue1() {
        let trace = per_ue_constant([1.0, 2.0, 3.0], 4);
        let cfg = BandConfig::defaults(BandId::MmWave);
        let s = concatenate_ue_series(&trace, BandId::MmWave, Quantity::Channel, &cfg).unwrap();
        assert_eq!(s, [vec![3.0; 4], vec![2.0; 4], vec![1.0; 4]].concat());
    }

    #[test]
    fn constant_trace_gives_constant_channel_series() {
        let trace = per_ue_constant([0.5; 3], 7);
        let cfg = BandConfig::defaults(BandId::Sub6);
        let s = concatenate_ue_series(&trace, BandId::Sub6, Quantity::Channel, &cfg).unwrap();
        assert_eq!(s.len(), 21);
        assert!(s.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn concatenation_requires_three_ues() {
        let trace = ChannelTrace::new(2, 1, 0.02, vec![1.0; 6]).unwrap();
        let cfg = BandConfig::defaults(BandId::Sub6);
        assert!(concatenate_ue_series(&trace, BandId::Sub6, Quantity::Rate, &cfg).is_err());
        let s = concatenate_reversed(&trace, BandId::Sub6, Quantity::Channel, &cfg).unwrap();
        assert_eq!(s.len(), 2);
        assert!(concatenate_ue_series(&trace, BandId::NoTx, Quantity::Rate, &cfg).is_err());
    }

    #[test]
    fn channel_mode_ignores_link_parameters() {
        let trace = per_ue_constant([1e-9, 2e-9, 3e-9], 3);
        let a = BandConfig::defaults(BandId::Thz);
        let mut b = a;
        b.bandwidth_hz *= 3.0;
        b.tx_power_w = 7.0;
        let sa = concatenate_ue_series(&trace, BandId::Thz, Quantity::Channel, &a).unwrap();
        let sb = concatenate_ue_series(&trace, BandId::Thz, Quantity::Channel, &b).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn rate_mode_yields_spectral_efficiency() {
        let cfg = BandConfig::defaults(BandId::Sub6);
        let unit = crate::linkbudget::noise_variance(&cfg).unwrap() / cfg.tx_power_w;
        let trace = per_ue_constant([unit; 3], 2);
        let s = concatenate_ue_series(&trace, BandId::Sub6, Quantity::Rate, &cfg).unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
