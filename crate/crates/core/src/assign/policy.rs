//! Frame-level policies: receding-horizon (proposed), greedy and oracle.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{adjusted, check_nu, optimal_band_assignment, FrameResult, RateMatrix, ENUMERATION_CAP};
use crate::error::{invalid, Error, Result};
use crate::forecast::{apply_thz_discount, predict_multistep_batch, ForecastBank};
use crate::linkbudget::{quantity_to_rate, BandId, BandSet, PowerTable, Quantity};

/// Rates a causal policy expects in future slots.
pub trait RatePredictor {
    /// Predicted rates in bit/s for `band` in slots `slot + 1 ..= slot + steps`,
    /// using observations up to and including `slot`. With `discount`, THz
    /// forecasts are scaled by the per-step reliability factors.
    fn predict(&self, band: BandId, slot: usize, steps: usize, discount: bool) -> Result<Vec<f64>>;
}

/// Reads the true future rates.
#[derive(Debug, Clone)]
pub struct PerfectForesight<'a> {
    rates: &'a RateMatrix,
}

impl<'a> PerfectForesight<'a> {
    pub fn new(rates: &'a RateMatrix) -> Self {
        PerfectForesight { rates }
    }
}

impl RatePredictor for PerfectForesight<'_> {
    fn predict(&self, band: BandId, slot: usize, steps: usize, discount: bool) -> Result<Vec<f64>> {
        if slot + steps >= self.rates.slots() {
            return Err(invalid("slot", "prediction runs past the end of the rates"));
        }
        let future = &self.rates.row(band)[slot + 1..slot + 1 + steps];
        Ok(if discount {
            apply_thz_discount(future, band)
        } else {
            future.to_vec()
        })
    }
}

/// Forecasts precomputed for every slot of an evaluation region.
///
/// Slot `s` of the region is index `region_start + s` of the per-band
/// forecast-quantity series; its window is the `lookback` values ending there.
#[derive(Debug, Clone)]
pub struct ForecastPredictor {
    mode: Quantity,
    bands: BandSet,
    /// `(band, horizon)` to per-slot forecasts in the forecast quantity.
    forecasts: BTreeMap<(BandId, usize), Vec<Vec<f64>>>,
}

impl ForecastPredictor {
    /// `series[radio_index]` is the full forecast-quantity series of each radio band.
    pub fn build(
        bank: &ForecastBank,
        bands: &BandSet,
        series: &[Vec<f64>; 3],
        region_start: usize,
        region_len: usize,
        max_horizon: usize,
    ) -> Result<ForecastPredictor> {
        let mut forecasts = BTreeMap::new();
        for band in BandId::RADIO {
            let s = &series[band.radio_index().expect("radio band")];
            if region_start + region_len > s.len() {
                return Err(invalid("region", "extends past the end of the series"));
            }
            for h in 1..=max_horizon {
                let f = bank.get(band, h)?;
                let lookback = f.spec().lookback;
                if region_start + 1 < lookback {
                    return Err(Error::InsufficientData(alloc::format!(
                        "region starts at {region_start}, before a full lookback of {lookback}"
                    )));
                }
                let windows: Vec<&[f64]> = (region_start..region_start + region_len)
                    .map(|abs| &s[abs + 1 - lookback..=abs])
                    .collect();
                forecasts.insert((band, h), predict_multistep_batch(f, &windows)?);
            }
        }
        Ok(ForecastPredictor {
            mode: bank.mode(),
            bands: bands.clone(),
            forecasts,
        })
    }
}

impl RatePredictor for ForecastPredictor {
    fn predict(&self, band: BandId, slot: usize, steps: usize, discount: bool) -> Result<Vec<f64>> {
        let per_slot = self
            .forecasts
            .get(&(band, steps))
            .ok_or(Error::MissingForecaster { band, horizon: steps })?;
        let values = per_slot
            .get(slot)
            .ok_or_else(|| invalid("slot", "outside the precomputed region"))?;
        let values = if discount {
            apply_thz_discount(values, band)
        } else {
            values.clone()
        };
        let cfg = self.bands.get(band);
        values.iter().map(|&v| quantity_to_rate(cfg, self.mode, v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    /// Slots per frame.
    pub slots: usize,
    /// Target sum rate per frame in bit/s.
    pub target: f64,
    /// Switching cost.
    pub nu: f64,
    /// Whether the proposed policy's plan evaluation applies switching costs.
    pub penalize_plan: bool,
    /// Whether THz forecasts are discounted.
    pub discount: bool,
    pub power: PowerTable,
}

impl FrameConfig {
    pub fn new(slots: usize, target: f64, nu: f64) -> FrameConfig {
        FrameConfig {
            slots,
            target,
            nu,
            penalize_plan: true,
            discount: true,
            power: PowerTable::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(invalid("slots", "a frame needs at least one slot"));
        }
        if self.slots > ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                slots: self.slots,
                cap: ENUMERATION_CAP,
            });
        }
        if !(self.target >= 0.0 && self.target.is_finite()) {
            return Err(Error::Negative {
                what: "target rate",
                value: self.target,
            });
        }
        check_nu(self.nu)
    }

    fn check_frame(&self, rates: &RateMatrix) -> Result<()> {
        self.validate()?;
        if rates.slots() != self.slots {
            return Err(Error::Shape {
                what: "frame rates",
                expected: self.slots,
                actual: rates.slots(),
            });
        }
        Ok(())
    }
}

/// Accumulates committed bands and what they deliver.
struct Ledger<'a> {
    cfg: &'a FrameConfig,
    prev: Option<BandId>,
    bands: Vec<BandId>,
    realized: Vec<f64>,
    remaining: f64,
    switches: usize,
}

impl<'a> Ledger<'a> {
    fn new(cfg: &'a FrameConfig, prev: Option<BandId>) -> Self {
        Ledger {
            cfg,
            prev,
            bands: Vec::with_capacity(cfg.slots),
            realized: Vec::with_capacity(cfg.slots),
            remaining: cfg.target,
            switches: 0,
        }
    }

    fn commit(&mut self, band: BandId, true_rate: f64) {
        let r = adjusted(band, self.prev, true_rate, self.cfg.nu);
        if self.prev.is_some_and(|p| p != band) {
            self.switches += 1;
        }
        self.bands.push(band);
        self.realized.push(r);
        self.remaining -= r;
        self.prev = Some(band);
    }

    fn finish(self) -> FrameResult {
        let sum_rate: f64 = self.realized.iter().sum();
        FrameResult {
            power_mw: self.cfg.power.total(&self.bands),
            target_met: sum_rate >= self.cfg.target,
            bands: self.bands,
            realized_rates: self.realized,
            sum_rate,
            switches: self.switches,
            remaining_target: self.remaining,
        }
    }
}

/// Receding-horizon policy: at each slot, re-solve the rest of the frame on
/// the true current rates plus forecasts and commit only the first band.
///
/// `origin` is the predictor slot index of the frame's first slot.
pub fn run_proposed_frame(
    true_rates: &RateMatrix,
    origin: usize,
    predictor: &dyn RatePredictor,
    cfg: &FrameConfig,
    prev: Option<BandId>,
) -> Result<FrameResult> {
    cfg.check_frame(true_rates)?;
    let t = cfg.slots;
    let mut ledger = Ledger::new(cfg, prev);
    for i in 0..t {
        let rest = t - i;
        let mut m = RateMatrix::zeros(rest);
        for band in BandId::RADIO {
            m.set(band, 0, true_rates.get(band, i))?;
            if rest > 1 {
                let p = predictor.predict(band, origin + i, rest - 1, cfg.discount)?;
                if p.len() != rest - 1 {
                    return Err(Error::Shape {
                        what: "predicted rates",
                        expected: rest - 1,
                        actual: p.len(),
                    });
                }
                for (j, v) in p.into_iter().enumerate() {
                    m.set(band, j + 1, v)?;
                }
            }
        }
        let plan = optimal_band_assignment(
            &m,
            ledger.remaining,
            ledger.prev,
            cfg.nu,
            cfg.penalize_plan,
            &cfg.power,
        )?;
        ledger.commit(plan.bands[0], true_rates.get(plan.bands[0], i));
    }
    Ok(ledger.finish())
}

/// Per slot: the cheapest band that finishes the remaining target in this
/// slot, else the highest-rate band (cheaper band on ties).
pub fn run_greedy_frame(true_rates: &RateMatrix, cfg: &FrameConfig, prev: Option<BandId>) -> Result<FrameResult> {
    cfg.check_frame(true_rates)?;
    let mut ledger = Ledger::new(cfg, prev);
    for i in 0..cfg.slots {
        let rate_of = |b: BandId| adjusted(b, ledger.prev, true_rates.get(b, i), cfg.nu);
        let cheapest_finishing = BandId::ALL
            .into_iter()
            .filter(|&b| rate_of(b) >= ledger.remaining)
            .fold(None, |best: Option<BandId>, b| match best {
                Some(x) if cfg.power.get(x) <= cfg.power.get(b) => Some(x),
                _ => Some(b),
            });
        let band = cheapest_finishing.unwrap_or_else(|| {
            BandId::ALL.into_iter().fold(BandId::NoTx, |best, b| {
                let (rb, rx) = (rate_of(b), rate_of(best));
                if rb > rx || (rb == rx && cfg.power.get(b) < cfg.power.get(best)) {
                    b
                } else {
                    best
                }
            })
        });
        ledger.commit(band, true_rates.get(band, i));
    }
    Ok(ledger.finish())
}

/// Non-causal exhaustive search on the true rates of the whole frame.
pub fn run_oracle_frame(true_rates: &RateMatrix, cfg: &FrameConfig, prev: Option<BandId>) -> Result<FrameResult> {
    cfg.check_frame(true_rates)?;
    let plan = optimal_band_assignment(true_rates, cfg.target, prev, cfg.nu, true, &cfg.power)?;
    let mut ledger = Ledger::new(cfg, prev);
    for (i, &b) in plan.bands.iter().enumerate() {
        ledger.commit(b, true_rates.get(b, i));
    }
    Ok(ledger.finish())
}

#[derive(Clone, Copy)]
pub enum Policy<'a> {
    Greedy,
    Oracle,
    Proposed(&'a dyn RatePredictor),
}

/// Runs `policy` over consecutive disjoint frames of `cfg.slots` slots.
/// Trailing slots that do not fill a frame are dropped. The band in use
/// carries across frames; the very first slot pays no switching cost.
pub fn run_policy_over_trace(rates: &RateMatrix, policy: Policy<'_>, cfg: &FrameConfig) -> Result<Vec<FrameResult>> {
    cfg.validate()?;
    let frames = rates.slots() / cfg.slots;
    if frames == 0 {
        return Err(Error::InsufficientData(alloc::format!(
            "{} slots cannot fill one frame of {}",
            rates.slots(),
            cfg.slots
        )));
    }
    let mut prev = None;
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let origin = f * cfg.slots;
        let frame = rates.window(origin, cfg.slots)?;
        let result = match policy {
            Policy::Greedy => run_greedy_frame(&frame, cfg, prev)?,
            Policy::Oracle => run_oracle_frame(&frame, cfg, prev)?,
            Policy::Proposed(p) => run_proposed_frame(&frame, origin, p, cfg, prev)?,
        };
        prev = result.bands.last().copied();
        out.push(result);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat(l: usize, sub6: f64, mm: f64, thz: f64) -> RateMatrix {
        RateMatrix::from_radio_rows(&vec![sub6; l], &vec![mm; l], &vec![thz; l]).unwrap()
    }

    /// Rates with occasional outages so that every band is sometimes best.
    fn random_rates(slots: usize, seed: u64) -> RateMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |scale: f64, outage: f64| -> Vec<f64> {
            (0..slots)
                .map(|_| if rng.random::<f64>() < outage { 0.0 } else { scale * rng.random::<f64>() })
                .collect()
        };
        let (a, b, c) = (draw(2e8, 0.05), draw(1e9, 0.2), draw(6e9, 0.4));
        RateMatrix::from_radio_rows(&a, &b, &c).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let cfg = FrameConfig::new(2, 80e6, 0.0);
        let r = run_greedy_frame(&flat(2, 100e6, 400e6, 3000e6), &cfg, Some(BandId::NoTx)).unwrap();
        assert_eq!(r.bands, vec![BandId::Sub6, BandId::NoTx]);
        assert!((r.power_mw - 85.60).abs() < 1e-12);

        let huge = FrameConfig::new(3, 1e12, 0.05);
        let r = run_greedy_frame(&flat(3, 100e6, 400e6, 3000e6), &huge, None).unwrap();
        assert_eq!(r.bands, vec![BandId::Thz; 3]);

        let r = run_greedy_frame(&RateMatrix::zeros(2), &FrameConfig::new(2, 5.0, 0.0), None).unwrap();
        assert_eq!(r.bands, vec![BandId::NoTx; 2]);
        assert!(!r.target_met);
    }

    #[test]
    fn degenerate_frames() {
        let zeros = RateMatrix::zeros(5);
        let perfect = PerfectForesight::new(&zeros);
        let cfg = FrameConfig::new(5, 1e9, 0.05);
        let r = run_proposed_frame(&zeros, 0, &perfect, &FrameConfig { slots: 4, ..cfg }, None);
        assert!(r.is_err(), "frame length must match the config");

        let rates = random_rates(10, 3);
        let perfect = PerfectForesight::new(&rates);
        let frame = rates.window(0, 5).unwrap();
        let r = run_proposed_frame(&frame, 0, &perfect, &FrameConfig::new(5, 0.0, 0.05), None).unwrap();
        assert_eq!(r.bands, vec![BandId::NoTx; 5]);
        assert_eq!(r.power_mw, 0.0);
        let r = run_oracle_frame(&frame, &FrameConfig::new(5, 0.0, 0.05), None).unwrap();
        assert_eq!(r.bands, vec![BandId::NoTx; 5]);
    }

    #[test]
    fn all_zero_channels_miss_the_target() {
        let zeros = RateMatrix::zeros(10);
        let perfect = PerfectForesight::new(&zeros);
        let cfg = FrameConfig::new(5, 1e6, 0.05);
        let r = run_policy_over_trace(&zeros, Policy::Proposed(&perfect), &cfg).unwrap();
        assert!(r.iter().all(|f| !f.target_met && f.sum_rate == 0.0));
    }

    #[test]
    fn single_slot_oracle_picks_the_only_feasible_band() {
        let r = RateMatrix::from_radio_rows(&[10.0], &[0.0], &[0.0]).unwrap();
        let res = run_oracle_frame(&r, &FrameConfig::new(1, 5.0, 0.0), None).unwrap();
        assert_eq!(res.bands, vec![BandId::Sub6]);
    }

    #[test]
    fn frame_segmentation() {
        let rates = random_rates(1153, 1);
        let cfg = FrameConfig::new(5, 1e9, 0.05);
        assert_eq!(run_policy_over_trace(&rates, Policy::Greedy, &cfg).unwrap().len(), 230);
        assert!(run_policy_over_trace(&random_rates(4, 1), Policy::Oracle, &cfg).is_err());
    }

    #[test]
    fn perfect_forecasts_reproduce_the_oracle() {
        let rates = random_rates(1000, 9);
        let perfect = PerfectForesight::new(&rates);
        for target in [2e8, 8e8, 1.5e9, 3e9] {
            let cfg = FrameConfig {
                discount: false,
                ..FrameConfig::new(5, target, 0.0)
            };
            let oracle = run_policy_over_trace(&rates, Policy::Oracle, &cfg).unwrap();
            let proposed = run_policy_over_trace(&rates, Policy::Proposed(&perfect), &cfg).unwrap();
            assert_eq!(oracle.len(), 200);
            for (o, p) in oracle.iter().zip(&proposed) {
                assert_eq!(o.power_mw, p.power_mw);
            }
        }
    }

    #[test]
    fn oracle_dominates_and_accounting_holds() {
        let rates = random_rates(1150, 5);
        let perfect = PerfectForesight::new(&rates);
        for target in [5e8, 1.5e9, 4e9] {
            let cfg = FrameConfig::new(5, target, 0.05);
            let oracle = run_policy_over_trace(&rates, Policy::Oracle, &cfg).unwrap();
            for policy in [Policy::Greedy, Policy::Proposed(&perfect)] {
                let res = run_policy_over_trace(&rates, policy, &cfg).unwrap();
                for (o, r) in oracle.iter().zip(&res) {
                    if r.target_met {
                        assert!(o.power_mw <= r.power_mw);
                    }
                    let delivered = target - r.remaining_target;
                    assert!((delivered - r.sum_rate).abs() <= 1e-9 * r.sum_rate.max(1.0));
                    assert_eq!(r.target_met, r.sum_rate >= target);
                    assert_eq!(r.bands.len(), 5);
                }
            }
        }
    }

    #[test]
    fn zero_switching_cost_ignores_the_carried_band() {
        let rates = random_rates(5, 12);
        let cfg = FrameConfig::new(5, 1.2e9, 0.0);
        let perfect = PerfectForesight::new(&rates);
        for prev in [None, Some(BandId::Thz), Some(BandId::Sub6)] {
            let a = run_greedy_frame(&rates, &cfg, prev).unwrap();
            let b = run_oracle_frame(&rates, &cfg, prev).unwrap();
            let c = run_proposed_frame(&rates, 0, &perfect, &cfg, prev).unwrap();
            assert_eq!(a.bands, run_greedy_frame(&rates, &cfg, None).unwrap().bands);
            assert_eq!(b.bands, run_oracle_frame(&rates, &cfg, None).unwrap().bands);
            assert_eq!(c.bands, run_proposed_frame(&rates, 0, &perfect, &cfg, None).unwrap().bands);
        }
    }

    #[test]
    fn forecast_predictor_uses_windows_ending_at_the_slot() {
        let series: [Vec<f64>; 3] = [
            (0..40).map(|i| i as f64).collect(),
            (0..40).map(|i| 2.0 * i as f64).collect(),
            (0..40).map(|i| 3.0 * i as f64).collect(),
        ];
        let bank = ForecastBank::current_value(Quantity::Rate, 3);
        let bands = BandSet::default();
        let p = ForecastPredictor::build(&bank, &bands, &series, 20, 10, 3).unwrap();
        let bw = bands.get(BandId::Thz).bandwidth_hz;
        let got = p.predict(BandId::Thz, 2, 2, true).unwrap();
        // Slot 2 of the region is series index 22; the current value is 66.
        assert_eq!(got, vec![66.0 * 0.85 * bw, 66.0 * 0.8 * bw]);
        let plain = p.predict(BandId::Sub6, 0, 3, true).unwrap();
        let bw6 = bands.get(BandId::Sub6).bandwidth_hz;
        assert_eq!(plain, vec![20.0 * bw6; 3]);
        assert!(p.predict(BandId::Sub6, 0, 4, true).is_err());
        assert!(ForecastPredictor::build(&bank, &bands, &series, 35, 10, 3).is_err());
    }
}
