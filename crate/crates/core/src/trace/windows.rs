//! Sliding-window supervised datasets and leakage-guarded splits.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Min-max statistics used to map a series into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub min: f64,
    pub max: f64,
}

impl Scaling {
    pub fn fit(values: &[f64]) -> Result<Scaling> {
        if values.is_empty() {
            return Err(Error::Empty("scaling input"));
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(Scaling { min, max })
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    /// A degenerate range maps everything to 0.
    pub fn normalize(&self, v: f64) -> f64 {
        let r = self.range();
        if r > 0.0 {
            (v - self.min) / r
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        let r = self.range();
        if r > 0.0 {
            self.min + v * r
        } else {
            self.min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingMode {
    /// Fit min/max on the series passed in.
    Fit,
    Apply(Scaling),
}

/// Stride-1 windows over one series: `lookback` inputs followed by `horizon`
/// targets. Values are kept in physical units and normalized on access.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedWindowSet {
    series: Vec<f64>,
    starts: Vec<usize>,
    lookback: usize,
    horizon: usize,
    scaling: Scaling,
}

pub fn make_supervised_windows(
    series: &[f64],
    lookback: usize,
    horizon: usize,
    scaling: ScalingMode,
) -> Result<SupervisedWindowSet> {
    if lookback == 0 || horizon == 0 {
        return Err(invalid("lookback/horizon", "must be at least 1"));
    }
    let span = lookback + horizon;
    if series.len() < span {
        return Err(Error::InsufficientData(alloc::format!(
            "series of length {} is shorter than lookback {} + horizon {}",
            series.len(),
            lookback,
            horizon
        )));
    }
    let scaling = match scaling {
        ScalingMode::Fit => Scaling::fit(series)?,
        ScalingMode::Apply(s) => s,
    };
    Ok(SupervisedWindowSet {
        series: series.to_vec(),
        starts: (0..=series.len() - span).collect(),
        lookback,
        horizon,
        scaling,
    })
}

impl SupervisedWindowSet {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    /// Index into the source series of window `i`'s first input.
    pub fn start(&self, i: usize) -> usize {
        self.starts[i]
    }

    pub fn raw_input(&self, i: usize) -> &[f64] {
        let s = self.starts[i];
        &self.series[s..s + self.lookback]
    }

    pub fn raw_target(&self, i: usize) -> &[f64] {
        let s = self.starts[i] + self.lookback;
        &self.series[s..s + self.horizon]
    }

    pub fn input(&self, i: usize) -> Vec<f64> {
        self.raw_input(i).iter().map(|&v| self.scaling.normalize(v)).collect()
    }

    pub fn target(&self, i: usize) -> Vec<f64> {
        self.raw_target(i).iter().map(|&v| self.scaling.normalize(v)).collect()
    }

    fn subset(&self, range: core::ops::Range<usize>, scaling: Scaling) -> SupervisedWindowSet {
        SupervisedWindowSet {
            series: self.series.clone(),
            starts: self.starts[range].to_vec(),
            lookback: self.lookback,
            horizon: self.horizon,
            scaling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: usize,
    /// Windows skipped between train/val and between val/test.
    pub gap: usize,
    pub val: usize,
    pub test: usize,
    /// Require `gap >= lookback + horizon` so no held-out input overlaps a training target.
    pub leakage_guard: bool,
}

impl SplitSpec {
    /// 6000 / 500 / 1150 windows with a gap of `lookback + horizon`.
    pub fn standard(lookback: usize, horizon: usize) -> SplitSpec {
        SplitSpec {
            train: 6000,
            gap: lookback + horizon,
            val: 500,
            test: 1150,
            leakage_guard: true,
        }
    }

    pub fn val_start(&self) -> usize {
        self.train + self.gap
    }

    pub fn test_start(&self) -> usize {
        self.val_start() + self.val + self.gap
    }

    pub fn required(&self) -> usize {
        self.test_start() + self.test
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: SupervisedWindowSet,
    pub val: SupervisedWindowSet,
    pub test: SupervisedWindowSet,
}

/// Contiguous train / val / test ranges in window order. Scaling is refit on
/// the part of the series the training windows cover and applied to all three.
pub fn split_dataset(windows: &SupervisedWindowSet, spec: SplitSpec) -> Result<DatasetSplit> {
    if spec.train == 0 || spec.test == 0 {
        return Err(invalid("split", "train and test counts must be positive"));
    }
    let min_gap = windows.lookback + windows.horizon;
    if spec.leakage_guard && spec.gap < min_gap {
        return Err(invalid(
            "gap",
            alloc::format!("leakage guard needs a gap of at least {min_gap} windows"),
        ));
    }
    if spec.required() > windows.len() {
        return Err(Error::InsufficientData(alloc::format!(
            "split needs {} windows, only {} available",
            spec.required(),
            windows.len()
        )));
    }
    let first = windows.starts[0];
    let last = windows.starts[spec.train - 1] + windows.lookback + windows.horizon;
    let scaling = Scaling::fit(&windows.series[first..last])?;
    let val_start = spec.val_start();
    let test_start = spec.test_start();
    Ok(DatasetSplit {
        train: windows.subset(0..spec.train, scaling),
        val: windows.subset(val_start..val_start + spec.val, scaling),
        test: windows.subset(test_start..test_start + spec.test, scaling),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn window_count_examples() {
        let w = make_supervised_windows(&ramp(20), 15, 4, ScalingMode::Fit).unwrap();
        assert_eq!(w.len(), 2);
        let w = make_supervised_windows(&ramp(8253), 15, 4, ScalingMode::Fit).unwrap();
        assert_eq!(w.len(), 8235);
        assert_eq!(w.raw_input(3), &ramp(18)[3..]);
        assert_eq!(w.raw_target(3), &[18.0, 19.0, 20.0, 21.0]);
    }

    #[test]
    fn too_short_series_is_rejected() {
        assert!(matches!(
            make_supervised_windows(&ramp(18), 15, 4, ScalingMode::Fit),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn constant_series_normalizes_to_zero() {
        let w = make_supervised_windows(&[2.5; 30], 15, 4, ScalingMode::Fit).unwrap();
        for i in 0..w.len() {
            assert!(w.input(i).iter().chain(w.target(i).iter()).all(|&v| v == 0.0));
        }
        assert_eq!(w.scaling().denormalize(0.0), 2.5);
    }

    #[test]
    fn applied_scaling_is_kept() {
        let s = Scaling { min: -1.0, max: 1.0 };
        let w = make_supervised_windows(&ramp(25), 15, 4, ScalingMode::Apply(s)).unwrap();
        assert_eq!(w.scaling(), s);
        assert_eq!(w.input(0)[1], 1.0);
    }

    #[test]
    fn paper_sized_split_is_valid() {
        let w = make_supervised_windows(&ramp(8253), 15, 4, ScalingMode::Fit).unwrap();
        let spec = SplitSpec::standard(15, 4);
        assert_eq!(spec.gap, 19);
        assert_eq!(spec.required(), 7688);
        let split = split_dataset(&w, spec).unwrap();
        assert_eq!((split.train.len(), split.val.len(), split.test.len()), (6000, 500, 1150));
        assert_eq!(split.val.start(0), 6019);
        assert_eq!(split.test.start(0), 6538);
        // Training windows cover series indices 0..=6017.
        assert_eq!(split.train.scaling(), Scaling { min: 0.0, max: 6017.0 });
        assert_eq!(split.test.scaling(), split.train.scaling());
    }

    #[test]
    fn split_rejections() {
        let w = make_supervised_windows(&ramp(200), 15, 4, ScalingMode::Fit).unwrap();
        let total = w.len();
        let all_train = SplitSpec { train: total, gap: 19, val: 0, test: 1, leakage_guard: true };
        assert!(split_dataset(&w, all_train).is_err());
        let no_gap = SplitSpec { train: 10, gap: 0, val: 5, test: 5, leakage_guard: true };
        assert!(matches!(split_dataset(&w, no_gap), Err(Error::InvalidParameter { name: "gap", .. })));
        let unguarded = SplitSpec { leakage_guard: false, ..no_gap };
        assert!(split_dataset(&w, unguarded).is_ok());
    }

    proptest::proptest! {
        #[test]
        fn window_count_formula(len in 2usize..300, lookback in 1usize..40, horizon in 1usize..10) {
            let series = vec![1.0; len];
            let res = make_supervised_windows(&series, lookback, horizon, ScalingMode::Fit);
            if len >= lookback + horizon {
                let w = res.unwrap();
                proptest::prop_assert_eq!(w.len(), len - lookback - horizon + 1);
                for i in 0..w.len() {
                    proptest::prop_assert_eq!(w.raw_input(i).len(), lookback);
                    proptest::prop_assert_eq!(w.raw_target(i).len(), horizon);
                }
            } else {
                proptest::prop_assert!(res.is_err());
            }
        }

        #[test]
        fn guarded_splits_never_leak(
            lookback in 1usize..20, horizon in 1usize..6,
            train in 1usize..50, extra_gap in 0usize..5, val in 0usize..30, test in 1usize..30,
        ) {
            let gap = lookback + horizon + extra_gap;
            let spec = SplitSpec { train, gap, val, test, leakage_guard: true };
            let len = spec.required() + lookback + horizon - 1;
            let w = make_supervised_windows(&ramp(len), lookback, horizon, ScalingMode::Fit).unwrap();
            let split = split_dataset(&w, spec).unwrap();
            let train_end = split.train.start(split.train.len() - 1) + lookback + horizon;
            for held in [&split.val, &split.test] {
                for i in 0..held.len() {
                    proptest::prop_assert!(held.start(i) >= train_end);
                }
            }
            if val > 0 {
                proptest::prop_assert!(split.val.start(val - 1) < split.test.start(0));
            }
        }
    }
}
