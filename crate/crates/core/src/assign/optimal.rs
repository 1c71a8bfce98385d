//! Exhaustive search over all `4^L` band sequences.


use super::{adjusted, check_nu, AssignmentPlan, RateMatrix};
use crate::error::{invalid, Error, Result};
use crate::linkbudget::{BandId, PowerTable};

/// Longest plan the search will enumerate (`4^12 ≈ 1.7e7` sequences).
pub const ENUMERATION_CAP: usize = 12;

#[derive(Clone, Copy)]
struct Candidate {
    bands: [BandId; ENUMERATION_CAP],
    sum: f64,
    power: f64,
    feasible: bool,
}

impl Candidate {
    /// Feasible beats infeasible; among feasible, lower power then higher
    /// sum; among infeasible, higher sum then lower power. Full ties keep the
    /// incumbent, which was visited first in lexicographic order.
    fn beats(&self, other: &Candidate) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.power < other.power || (self.power == other.power && self.sum > other.sum),
            (false, false) => self.sum > other.sum || (self.sum == other.sum && self.power < other.power),
        }
    }
}

struct Search<'a> {
    rates: &'a RateMatrix,
    target: f64,
    nu: f64,
    penalize: bool,
    power: &'a PowerTable,
    current: [BandId; ENUMERATION_CAP],
    counts: [u32; 4],
    best: Option<Candidate>,
}

impl Search<'_> {
    fn visit(&mut self, slot: usize, prev: Option<BandId>, sum: f64) {
        let slots = self.rates.slots();
        if slot == slots {
            let cand = Candidate {
                bands: self.current,
                sum,
                power: self.power.total_from_counts(self.counts),
                feasible: self.target <= 0.0 || sum >= self.target,
            };
            if self.best.as_ref().map_or(true, |b| cand.beats(b)) {
                self.best = Some(cand);
            }
            return;
        }
        for band in BandId::ALL {
            let rate = self.rates.get(band, slot);
            let r = if self.penalize {
                adjusted(band, prev, rate, self.nu)
            } else {
                adjusted(band, None, rate, self.nu)
            };
            self.current[slot] = band;
            self.counts[band.index()] += 1;
            self.visit(slot + 1, Some(band), sum + r);
            self.counts[band.index()] -= 1;
        }
    }
}

/// Minimum-power band sequence over all slots of `rates` whose predicted sum
/// rate reaches `target`, or the maximum-sum sequence when none does. A
/// nonpositive target is met by every sequence.
///
/// With `penalize_switches`, slot rates are switching-adjusted starting from
/// `prev`; otherwise plain rates are summed.
pub fn optimal_band_assignment(
    rates: &RateMatrix,
    target: f64,
    prev: Option<BandId>,
    nu: f64,
    penalize_switches: bool,
    power: &PowerTable,
) -> Result<AssignmentPlan> {
    let slots = rates.slots();
    if slots == 0 {
        return Err(Error::Empty("rate matrix"));
    }
    if slots > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            slots,
            cap: ENUMERATION_CAP,
        });
    }
    if target.is_nan() {
        return Err(invalid("target", "must be a number"));
    }
    check_nu(nu)?;
    let mut search = Search {
        rates,
        target,
        nu,
        penalize: penalize_switches,
        power,
        current: [BandId::NoTx; ENUMERATION_CAP],
        counts: [0; 4],
        best: None,
    };
    search.visit(0, prev, 0.0);
    let best = search.best.expect("at least one sequence is enumerated");
    Ok(AssignmentPlan {
        bands: best.bands[..slots].to_vec(),
        predicted_sum_rate: best.sum,
        total_power_mw: best.power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Power in hundredths of a milliwatt so that ties are decided exactly.
    fn centi_mw(b: BandId) -> u64 {
        [0, 8_560, 25_490, 389_358][b.index()]
    }

    /// Independent brute force: decode each code into a sequence, score it,
    /// and keep the best under the same total order.
    fn brute_force(rates: &RateMatrix, target: f64, prev: Option<BandId>, nu: f64) -> Vec<BandId> {
        let l = rates.slots();
        let mut best: Option<(Vec<BandId>, bool, u64, f64)> = None;
        for code in 0..4usize.pow(l as u32) {
            let seq: Vec<BandId> = (0..l)
                .map(|s| BandId::from_index((code / 4usize.pow((l - 1 - s) as u32)) % 4).unwrap())
                .collect();
            let mut sum = 0.0;
            let mut last = prev;
            for (s, &b) in seq.iter().enumerate() {
                let r = if b == BandId::NoTx {
                    0.0
                } else if last.is_some() && last != Some(b) {
                    (1.0 - nu) * rates.get(b, s)
                } else {
                    rates.get(b, s)
                };
                sum += r;
                last = Some(b);
            }
            let power: u64 = seq.iter().map(|&b| centi_mw(b)).sum();
            let ok = target <= 0.0 || sum >= target;
            let better = match &best {
                None => true,
                Some((_, bok, bp, bs)) => match (ok, *bok) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => power < *bp || (power == *bp && sum > *bs),
                    (false, false) => sum > *bs || (sum == *bs && power < *bp),
                },
            };
            if better {
                best = Some((seq, ok, power, sum));
            }
        }
        best.unwrap().0
    }

    fn flat(l: usize, sub6: f64, mm: f64, thz: f64) -> RateMatrix {
        RateMatrix::from_radio_rows(&vec![sub6; l], &vec![mm; l], &vec![thz; l]).unwrap()
    }

    #[test]
    fn zero_target_sends_nothing() {
        let p = optimal_band_assignment(&flat(1, 5.0, 6.0, 7.0), 0.0, None, 0.05, true, &PowerTable::default())
            .unwrap();
        assert_eq!(p.bands, vec![BandId::NoTx]);
        assert_eq!(p.total_power_mw, 0.0);
    }

    #[test]
    fn two_slot_examples() {
        let r = flat(2, 60e6, 600e6, 5000e6);
        let pt = PowerTable::default();
        let p = optimal_band_assignment(&r, 1000e6, None, 0.0, true, &pt).unwrap();
        assert_eq!(p.bands, vec![BandId::MmWave, BandId::MmWave]);
        assert!((p.total_power_mw - 509.80).abs() < 1e-9);
        let p = optimal_band_assignment(&r, 20000e6, None, 0.0, true, &pt).unwrap();
        assert_eq!(p.bands, vec![BandId::Thz, BandId::Thz]);
        assert_eq!(p.predicted_sum_rate, 10000e6);
    }

    #[test]
    fn switching_penalty_shapes_the_plan() {
        // From Sub6, one mmWave slot at 0.5 loss cannot reach 100; two Sub6 slots can.
        let r = flat(2, 50.0, 100.0, 0.0);
        let pt = PowerTable::default();
        let p = optimal_band_assignment(&r, 100.0, Some(BandId::Sub6), 0.5, true, &pt).unwrap();
        assert_eq!(p.bands, vec![BandId::Sub6, BandId::Sub6]);
        let plain = optimal_band_assignment(&r, 100.0, Some(BandId::Sub6), 0.5, false, &pt).unwrap();
        assert_eq!(plain.bands, vec![BandId::Sub6, BandId::Sub6]);
        assert_eq!(plain.predicted_sum_rate, 100.0);
    }

    #[test]
    fn rejections() {
        let pt = PowerTable::default();
        assert!(matches!(
            optimal_band_assignment(&RateMatrix::zeros(13), 1.0, None, 0.0, true, &pt),
            Err(Error::EnumerationCap { slots: 13, cap: 12 })
        ));
        assert!(optimal_band_assignment(&RateMatrix::zeros(0), 1.0, None, 0.0, true, &pt).is_err());
        assert!(optimal_band_assignment(&RateMatrix::zeros(1), 1.0, None, 1.5, true, &pt).is_err());
    }

    fn instance() -> impl Strategy<Value = (RateMatrix, f64, Option<BandId>, f64)> {
        (1usize..=4).prop_flat_map(|l| {
            (
                prop::collection::vec(0.0f64..1e9, l),
                prop::collection::vec(0.0f64..2e9, l),
                prop::collection::vec(0.0f64..6e9, l),
                0.0f64..1.2e10,
                prop::option::of(0usize..4),
                prop::bool::ANY,
            )
                .prop_map(|(a, b, c, m, prev, pen)| {
                    let r = RateMatrix::from_radio_rows(&a, &b, &c).unwrap();
                    (r, m, prev.and_then(BandId::from_index), if pen { 0.05 } else { 0.0 })
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matches_brute_force((rates, target, prev, nu) in instance()) {
            let pt = PowerTable::default();
            let plan = optimal_band_assignment(&rates, target, prev, nu, true, &pt).unwrap();
            prop_assert_eq!(plan.bands.clone(), brute_force(&rates, target, prev, nu));
            prop_assert!((plan.total_power_mw - pt.total(&plan.bands)).abs() < 1e-9);
        }

        #[test]
        fn power_is_monotone_in_target((rates, _t, prev, nu) in instance(), a in 0.0f64..1e10, b in 0.0f64..1e10) {
            let pt = PowerTable::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p_lo = optimal_band_assignment(&rates, lo, prev, nu, true, &pt).unwrap();
            let p_hi = optimal_band_assignment(&rates, hi, prev, nu, true, &pt).unwrap();
            if p_hi.predicted_sum_rate >= hi {
                prop_assert!(p_lo.total_power_mw <= p_hi.total_power_mw);
            }
        }
    }
}
