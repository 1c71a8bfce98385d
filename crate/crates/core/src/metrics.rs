//! Forecast error metrics and per-policy summaries.
//!
//! NRMSE and NMAE are normalized by the range `max - min` of the true values.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::assign::FrameResult;
use crate::error::{invalid, Error, Result};

/// Errors at one forecast step. `degenerate_range` marks a constant truth
/// with nonzero error, where both metrics are `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepError {
    pub nrmse: f64,
    pub nmae: f64,
    pub degenerate_range: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub per_step: Vec<StepError>,
    pub n_samples: usize,
}

fn check_pair(truth: &[f64], pred: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Empty("metric input"));
    }
    if truth.len() != pred.len() {
        return Err(Error::Shape {
            what: "predictions",
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    Ok(())
}

fn normalized(err: f64, truth: &[f64]) -> (f64, bool) {
    let (lo, hi) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range > 0.0 {
        (err / range, false)
    } else if err == 0.0 {
        (0.0, false)
    } else {
        (f64::INFINITY, true)
    }
}

pub fn step_error(truth: &[f64], pred: &[f64]) -> Result<StepError> {
    check_pair(truth, pred)?;
    let n = truth.len() as f64;
    let (sq, abs) = truth.iter().zip(pred).fold((0.0, 0.0), |(sq, abs), (t, p)| {
        let e = p - t;
        (sq + e * e, abs + e.abs())
    });
    let (nrmse, degenerate) = normalized((sq / n).sqrt(), truth);
    let (nmae, _) = normalized(abs / n, truth);
    Ok(StepError {
        nrmse,
        nmae,
        degenerate_range: degenerate,
    })
}

pub fn nrmse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    Ok(step_error(truth, pred)?.nrmse)
}

pub fn nmae(truth: &[f64], pred: &[f64]) -> Result<f64> {
    Ok(step_error(truth, pred)?.nmae)
}

/// Per-step errors; `truth_by_step[j]` and `pred_by_step[j]` hold every test
/// sample's value at step `j + 1`.
pub fn error_report(truth_by_step: &[Vec<f64>], pred_by_step: &[Vec<f64>]) -> Result<ErrorReport> {
    if truth_by_step.is_empty() {
        return Err(Error::Empty("forecast steps"));
    }
    if truth_by_step.len() != pred_by_step.len() {
        return Err(Error::Shape {
            what: "forecast steps",
            expected: truth_by_step.len(),
            actual: pred_by_step.len(),
        });
    }
    let n = truth_by_step[0].len();
    if truth_by_step.iter().any(|t| t.len() != n) {
        return Err(invalid("truth", "every step needs the same sample count"));
    }
    let per_step = truth_by_step
        .iter()
        .zip(pred_by_step)
        .map(|(t, p)| step_error(t, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport { per_step, n_samples: n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReport {
    pub avg_power_mw_per_frame: f64,
    /// Fraction of frames whose realized sum rate fell below the target.
    pub miss_fraction: f64,
    pub rate_samples: Vec<f64>,
    pub frames: usize,
}

pub fn policy_metrics(results: &[FrameResult], target_bps: f64) -> Result<PolicyReport> {
    if results.is_empty() {
        return Err(Error::Empty("frame results"));
    }
    let n = results.len() as f64;
    let total_power: f64 = results.iter().map(|r| r.power_mw).sum();
    let misses = results.iter().filter(|r| r.sum_rate < target_bps).count();
    Ok(PolicyReport {
        avg_power_mw_per_frame: total_power / n,
        miss_fraction: misses as f64 / n,
        rate_samples: results.iter().map(|r| r.sum_rate).collect(),
        frames: results.len(),
    })
}

/// Right-continuous empirical CDF as `(value, P[X <= value])` at each
/// distinct sample value, ascending. The last probability is exactly 1.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Empty("cdf samples"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(invalid("samples", "NaN has no place in a CDF"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if i + 1 < n && sorted[i + 1] == v {
            continue;
        }
        out.push((v, (i + 1) as f64 / n as f64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::BandId;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_errors() {
        let e = step_error(&[0.0, 1.0, 2.0], &[0.0, 1.0, 3.0]).unwrap();
        assert!((e.nrmse - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!((e.nmae - 1.0 / 6.0).abs() < 1e-15);
        assert!(!e.degenerate_range);
        let same = step_error(&[4.0, 2.0], &[4.0, 2.0]).unwrap();
        assert_eq!((same.nrmse, same.nmae), (0.0, 0.0));
    }

    #[test]
    fn degenerate_range() {
        let e = step_error(&[5.0; 3], &[6.0; 3]).unwrap();
        assert!(e.degenerate_range && e.nrmse.is_infinite() && e.nmae.is_infinite());
        let ok = step_error(&[5.0; 3], &[5.0; 3]).unwrap();
        assert!(!ok.degenerate_range && ok.nrmse == 0.0);
    }

    #[test]
    fn metric_input_errors() {
        assert_eq!(nrmse(&[], &[]), Err(Error::Empty("metric input")));
        assert!(nmae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(error_report(&[vec![1.0]], &[]).is_err());
    }

    fn frame(sum_rate: f64, power_mw: f64) -> FrameResult {
        FrameResult {
            bands: vec![BandId::Sub6],
            realized_rates: vec![sum_rate],
            sum_rate,
            power_mw,
            target_met: false,
            switches: 0,
            remaining_target: 0.0,
        }
    }

    #[test]
    fn policy_examples() {
        let r = policy_metrics(&[frame(900e6, 100.0), frame(1100e6, 300.0)], 1000e6).unwrap();
        assert_eq!(r.avg_power_mw_per_frame, 200.0);
        assert_eq!(r.miss_fraction, 0.5);
        assert_eq!(r.frames, 2);
        let all = policy_metrics(&vec![frame(2e9, 1.0); 3], 1e9).unwrap();
        assert_eq!(all.miss_fraction, 0.0);
        assert!(policy_metrics(&[], 1.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[3.0]).unwrap(), vec![(3.0, 1.0)]);
        let c = empirical_cdf(&[4.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!(c, vec![(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]);
        assert!(empirical_cdf(&[]).is_err());
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_ends_at_one(xs in prop::collection::vec(-1e3f64..1e3, 1..60)) {
            let c = empirical_cdf(&xs).unwrap();
            prop_assert_eq!(c.last().unwrap().1, 1.0);
            for w in c.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
            }
            prop_assert!(c.iter().all(|&(_, p)| p > 0.0 && p <= 1.0));
        }

        #[test]
        fn errors_are_affine_invariant(
            pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..40),
            shift in -100.0f64..100.0,
            scale in 0.1f64..10.0,
        ) {
            let (t, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = step_error(&t, &p).unwrap();
            prop_assume!(!base.degenerate_range);
            prop_assert!(base.nrmse >= 0.0 && base.nmae >= 0.0);
            let ts: Vec<f64> = t.iter().map(|v| v * scale + shift).collect();
            let ps: Vec<f64> = p.iter().map(|v| v * scale + shift).collect();
            let moved = step_error(&ts, &ps).unwrap();
            prop_assert!((moved.nrmse - base.nrmse).abs() <= 1e-9 * (1.0 + base.nrmse));
            prop_assert!((moved.nmae - base.nmae).abs() <= 1e-9 * (1.0 + base.nmae));
            let exact = step_error(&t, &t).unwrap();
            prop_assert_eq!((exact.nrmse, exact.nmae), (0.0, 0.0));
        }
    }
}
