use super::RawSeries;
use crate::error::{Error, Result};
use crate::numerics::pop_var;

/// Dimensions shared by every sample of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowShape {
    pub nodes: usize,
    pub input_len: usize,
    pub horizon: usize,
    pub features: usize,
}

impl WindowShape {
    pub fn input_size(&self) -> usize {
        self.nodes * self.input_len * self.features
    }

    pub fn target_size(&self) -> usize {
        self.nodes * self.horizon * self.features
    }
}

/// One sliding-window pair. `x` is `[N, T_p, F]` and `y` is `[N, T_f, F]`,
/// both node-major (`x[(n * T_p + t) * F + f]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub index: usize,
    /// Absolute frame index of the first input frame.
    pub start_frame: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Mean over (node, feature) of the population variance of each target series.
    pub intensity: f64,
}

impl WindowedSample {
    /// Absolute frame index of the last observed (input) frame.
    pub fn last_input_frame(&self, shape: &WindowShape) -> usize {
        self.start_frame + shape.input_len - 1
    }
}

/// Mean over (node, feature) of the temporal population variance of `y`.
pub fn dynamic_intensity(y: &[f64], shape: &WindowShape) -> f64 {
    let (h, f) = (shape.horizon, shape.features);
    let mut series = vec![0.0; h];
    let mut total = 0.0;
    for n in 0..shape.nodes {
        for feat in 0..f {
            for (t, s) in series.iter_mut().enumerate() {
                *s = y[(n * h + t) * f + feat];
            }
            total += pop_var(&series).unwrap_or(0.0);
        }
    }
    total / (shape.nodes * f) as f64
}

pub fn make_windows(
    series: &RawSeries,
    input_len: usize,
    horizon: usize,
) -> Result<(WindowShape, Vec<WindowedSample>)> {
    if input_len == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "input length and horizon must be positive".into(),
        ));
    }
    let frames = series.num_frames();
    if frames < input_len + horizon {
        return Err(Error::InvalidArgument(format!(
            "{frames} frames cannot hold a window of {input_len}+{horizon}"
        )));
    }
    let shape = WindowShape {
        nodes: series.num_nodes(),
        input_len,
        horizon,
        features: series.num_features(),
    };
    let count = frames - input_len - horizon + 1;
    let samples = (0..count)
        .map(|i| {
            let x = gather(series, i, input_len);
            let y = gather(series, i + input_len, horizon);
            let intensity = dynamic_intensity(&y, &shape);
            WindowedSample {
                index: i,
                start_frame: series.first_frame() + i,
                x,
                y,
                intensity,
            }
        })
        .collect();
    Ok((shape, samples))
}

fn gather(series: &RawSeries, start: usize, len: usize) -> Vec<f64> {
    let (n, f) = (series.num_nodes(), series.num_features());
    let mut out = Vec::with_capacity(n * len * f);
    for node in 0..n {
        for t in start..start + len {
            for feat in 0..f {
                out.push(series.value(t, node, feat));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(frames: usize, nodes: usize) -> RawSeries {
        let values = (0..frames * nodes).map(|i| i as f64).collect();
        RawSeries::new(nodes, frames, 1, values).unwrap()
    }

    #[test]
    fn window_counts() {
        let (_, w) = make_windows(&ramp(24, 2), 12, 12).unwrap();
        assert_eq!(w.len(), 1);
        let (_, w) = make_windows(&ramp(25, 2), 12, 12).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].start_frame, 1);
        // Node 0 series is 0, 2, 4, ...; second window is shifted by one frame.
        assert_eq!(w[1].x[0], w[0].x[1]);
        assert_eq!(w[1].y[0], 2.0 * 13.0);
        assert!(make_windows(&ramp(23, 2), 12, 12).is_err());
    }

    #[test]
    fn constant_series_has_zero_intensity() {
        let s = RawSeries::new(3, 30, 1, vec![7.0; 90]).unwrap();
        let (_, w) = make_windows(&s, 4, 4).unwrap();
        assert!(w.iter().all(|s| s.intensity == 0.0));
    }

    #[test]
    fn intensity_matches_hand_value() {
        // one node, targets [0, 2, 0, 2] -> variance 1
        let s = RawSeries::new(1, 6, 1, vec![9.0, 9.0, 0.0, 2.0, 0.0, 2.0]).unwrap();
        let (_, w) = make_windows(&s, 2, 4).unwrap();
        assert_eq!(w[0].intensity, 1.0);
    }
}
