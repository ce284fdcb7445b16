use super::{make_windows, RawSeries, WindowShape, WindowedSample};
use crate::error::{Error, Result};

const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score statistics taken from the training frames.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn from_series(series: &RawSeries) -> Self {
        let f = series.num_features();
        let count = (series.num_frames() * series.num_nodes()) as f64;
        let mut mean = vec![0.0; f];
        for (i, v) in series.values().iter().enumerate() {
            mean[i % f] += v;
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; f];
        for (i, v) in series.values().iter().enumerate() {
            let d = v - mean[i % f];
            var[i % f] += d * d;
        }
        let std = var
            .iter()
            .map(|v| (v / count).sqrt().max(STD_FLOOR))
            .collect();
        Self { mean, std }
    }

    pub fn normalize(&self, values: &mut [f64]) {
        let f = self.mean.len();
        for (i, v) in values.iter_mut().enumerate() {
            *v = (*v - self.mean[i % f]) / self.std[i % f];
        }
    }

    pub fn denormalize(&self, values: &mut [f64]) {
        let f = self.mean.len();
        for (i, v) in values.iter_mut().enumerate() {
            *v = *v * self.std[i % f] + self.mean[i % f];
        }
    }
}

/// Chronological train/val/test windows. Inputs are z-scored with the train
/// statistics; targets stay in original units.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub shape: WindowShape,
    pub train: Vec<WindowedSample>,
    pub val: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
    pub stats: NormStats,
    /// Frame boundaries `[0, b1)`, `[b1, b2)`, `[b2, frames)`.
    pub boundaries: (usize, usize),
}

impl DatasetSplit {
    /// Mean dynamic intensity over the training windows.
    pub fn mean_train_intensity(&self) -> f64 {
        self.train.iter().map(|s| s.intensity).sum::<f64>() / self.train.len() as f64
    }
}

pub fn chrono_split(
    series: &RawSeries,
    ratios: (f64, f64, f64),
    input_len: usize,
    horizon: usize,
) -> Result<DatasetSplit> {
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {a}:{b}:{c} must be non-negative and sum to 1"
        )));
    }
    let frames = series.num_frames();
    let b1 = (a * frames as f64 + 1e-9).floor() as usize;
    let b2 = ((a + b) * frames as f64 + 1e-9).floor() as usize;
    let need = input_len + horizon;
    for (name, len) in [("train", b1), ("val", b2 - b1), ("test", frames - b2)] {
        if len < need {
            return Err(Error::InvalidArgument(format!(
                "{name} portion has {len} frames, needs at least {need}"
            )));
        }
    }

    let train_series = series.slice_frames(0, b1)?;
    let stats = NormStats::from_series(&train_series);
    let build = |part: &RawSeries| -> Result<(WindowShape, Vec<WindowedSample>)> {
        let (shape, mut samples) = make_windows(part, input_len, horizon)?;
        for s in &mut samples {
            stats.normalize(&mut s.x);
        }
        Ok((shape, samples))
    };
    let (shape, train) = build(&train_series)?;
    let (_, val) = build(&series.slice_frames(b1, b2)?)?;
    let (_, test) = build(&series.slice_frames(b2, frames)?)?;
    Ok(DatasetSplit {
        shape,
        train,
        val,
        test,
        stats,
        boundaries: (b1, b2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(frames: usize) -> RawSeries {
        let values = (0..frames * 2)
            .map(|i| (i as f64 * 0.37).sin() * 10.0 + 50.0)
            .collect();
        RawSeries::new(2, frames, 1, values).unwrap()
    }

    #[test]
    fn boundaries_follow_floor_arithmetic() {
        let split = chrono_split(&series(100), (0.6, 0.2, 0.2), 4, 4).unwrap();
        assert_eq!(split.boundaries, (60, 80));
        assert_eq!(split.train.len(), 60 - 8 + 1);
        assert_eq!(split.val.len(), 20 - 8 + 1);
        assert_eq!(split.test.len(), 20 - 8 + 1);
        assert_eq!(split.val[0].start_frame, 60);
        assert_eq!(split.test[0].start_frame, 80);
        // no window crosses a boundary
        assert!(split.train.iter().all(|s| s.start_frame + 8 <= 60));
        assert!(split.val.iter().all(|s| s.start_frame + 8 <= 80));
    }

    #[test]
    fn targets_stay_raw_and_inputs_roundtrip() {
        let raw = series(100);
        let split = chrono_split(&raw, (0.6, 0.2, 0.2), 4, 4).unwrap();
        let s = &split.test[3];
        let node1_first_target = raw.value(s.start_frame + 4, 1, 0);
        assert_eq!(s.y[4], node1_first_target);
        let mut x = s.x.clone();
        split.stats.denormalize(&mut x);
        assert!((x[0] - raw.value(s.start_frame, 0, 0)).abs() < 1e-9);
    }

    #[test]
    fn constant_train_portion_normalizes_to_zero() {
        let mut values = vec![3.0; 2 * 60];
        values.extend((0..2 * 40).map(|i| i as f64));
        let raw = RawSeries::new(2, 100, 1, values).unwrap();
        let split = chrono_split(&raw, (0.6, 0.2, 0.2), 4, 4).unwrap();
        assert!(split.train.iter().all(|s| s.x.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_bad_ratios_and_short_portions() {
        assert!(chrono_split(&series(100), (0.6, 0.2, 0.3), 4, 4).is_err());
        assert!(chrono_split(&series(100), (0.6, 0.3, 0.1), 6, 6).is_err());
        assert!(chrono_split(&series(30), (0.6, 0.2, 0.2), 4, 4).is_err());
    }
}
