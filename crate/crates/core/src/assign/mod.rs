//! Per-slot band assignment under a per-frame sum-rate target.
//!
//! A slot whose band differs from the previous slot's band delivers only a
//! `1 - nu` fraction of its rate. Plans are compared by total RF power, then
//! by predicted sum rate, then lexicographically with
//! `NoTx < Sub6 < MmWave < Thz`.

mod optimal;
mod policy;

pub use self::optimal::{optimal_band_assignment, ENUMERATION_CAP};
pub use self::policy::{
    run_greedy_frame, run_oracle_frame, run_policy_over_trace, run_proposed_frame, ForecastPredictor,
    FrameConfig, PerfectForesight, Policy, RatePredictor,
};

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linkbudget::BandId;

/// Rates in bit/s for every band over `slots` consecutive slots. The NoTx row
/// is identically 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    slots: usize,
    /// Band-major, `4 × slots`.
    values: Vec<f64>,
}

fn check_rate(value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Negative { what: "rate", value })
    }
}

impl RateMatrix {
    pub fn zeros(slots: usize) -> RateMatrix {
        RateMatrix {
            slots,
            values: alloc::vec![0.0; 4 * slots],
        }
    }

    /// Builds from the Sub6, MmWave and Thz rows, which must share a length.
    pub fn from_radio_rows(sub6: &[f64], mmwave: &[f64], thz: &[f64]) -> Result<RateMatrix> {
        let slots = sub6.len();
        let mut m = RateMatrix::zeros(slots);
        for (band, row) in BandId::RADIO.into_iter().zip([sub6, mmwave, thz]) {
            if row.len() != slots {
                return Err(Error::Shape {
                    what: "rate row",
                    expected: slots,
                    actual: row.len(),
                });
            }
            for (slot, &v) in row.iter().enumerate() {
                m.set(band, slot, v)?;
            }
        }
        Ok(m)
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn get(&self, band: BandId, slot: usize) -> f64 {
        self.values[band.index() * self.slots + slot]
    }

    pub fn row(&self, band: BandId) -> &[f64] {
        let i = band.index() * self.slots;
        &self.values[i..i + self.slots]
    }

    pub fn set(&mut self, band: BandId, slot: usize, value: f64) -> Result<()> {
        if slot >= self.slots {
            return Err(invalid("slot", alloc::format!("{slot} is outside 0..{}", self.slots)));
        }
        if band == BandId::NoTx {
            return if value == 0.0 {
                Ok(())
            } else {
                Err(invalid("rate", "NoTx carries no rate"))
            };
        }
        check_rate(value)?;
        self.values[band.index() * self.slots + slot] = value;
        Ok(())
    }

    /// Slots `range` as a new matrix.
    pub fn window(&self, start: usize, len: usize) -> Result<RateMatrix> {
        if start + len > self.slots {
            return Err(invalid("window", "extends past the last slot"));
        }
        let mut m = RateMatrix::zeros(len);
        for band in BandId::RADIO {
            let src = &self.row(band)[start..start + len];
            let i = band.index() * len;
            m.values[i..i + len].copy_from_slice(src);
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPlan {
    pub bands: Vec<BandId>,
    /// Switching-adjusted when the search penalized switches.
    pub predicted_sum_rate: f64,
    pub total_power_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub bands: Vec<BandId>,
    /// Switching-adjusted rates actually delivered.
    pub realized_rates: Vec<f64>,
    pub sum_rate: f64,
    pub power_mw: f64,
    pub target_met: bool,
    pub switches: usize,
    /// Target minus everything delivered, in delivery order. Negative after over-achievement.
    pub remaining_target: f64,
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if (0.0..1.0).contains(&nu) {
        Ok(())
    } else {
        Err(invalid("nu", "switching cost must lie in [0, 1)"))
    }
}

/// Rate delivered in a slot using `band` after `prev`. `prev = None` marks
/// the first slot of a run, which pays no switching cost.
pub fn realized_rate(band: BandId, prev: Option<BandId>, true_rate: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    check_rate(true_rate)?;
    Ok(adjusted(band, prev, true_rate, nu))
}

#[inline]
pub(crate) fn adjusted(band: BandId, prev: Option<BandId>, rate: f64, nu: f64) -> f64 {
    match (band, prev) {
        (BandId::NoTx, _) => 0.0,
        (b, Some(p)) if p != b => (1.0 - nu) * rate,
        _ => rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realized_rate_examples() {
        assert_eq!(realized_rate(BandId::Sub6, Some(BandId::Sub6), 100.0, 0.05).unwrap(), 100.0);
        assert_eq!(realized_rate(BandId::MmWave, Some(BandId::Sub6), 100.0, 0.05).unwrap(), 95.0);
        assert_eq!(realized_rate(BandId::NoTx, Some(BandId::Sub6), 100.0, 0.05).unwrap(), 0.0);
        assert_eq!(realized_rate(BandId::Thz, None, 100.0, 0.05).unwrap(), 100.0);
        assert!(realized_rate(BandId::Thz, None, 100.0, 1.0).is_err());
        assert!(realized_rate(BandId::Thz, None, -1.0, 0.0).is_err());
    }

    #[test]
    fn rate_matrix_rules() {
        let mut m = RateMatrix::zeros(2);
        assert!(m.set(BandId::NoTx, 0, 1.0).is_err());
        assert!(m.set(BandId::Sub6, 2, 1.0).is_err());
        assert!(m.set(BandId::Sub6, 0, f64::NAN).is_err());
        m.set(BandId::Thz, 1, 7.0).unwrap();
        assert_eq!(m.row(BandId::Thz), &[0.0, 7.0]);
        assert_eq!(m.window(1, 1).unwrap().get(BandId::Thz, 0), 7.0);
        assert!(RateMatrix::from_radio_rows(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
    }
}
