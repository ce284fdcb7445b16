use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Node-by-time measurements stored frame-major: `values[(frame * N + node) * F + feature]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    num_nodes: usize,
    num_frames: usize,
    num_features: usize,
    values: Vec<f64>,
    /// Absolute index of frame 0 (non-zero for sub-ranges of a longer series).
    first_frame: usize,
    distances: Option<DenseMatrix>,
}

impl RawSeries {
    pub fn new(
        num_nodes: usize,
        num_frames: usize,
        num_features: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if num_nodes == 0 || num_features == 0 {
            return Err(Error::InvalidArgument(
                "series needs at least one node and one feature".into(),
            ));
        }
        if values.len() != num_nodes * num_frames * num_features {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {num_frames} frames x {num_nodes} nodes x {num_features} features",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {v} in series"
            )));
        }
        Ok(Self {
            num_nodes,
            num_frames,
            num_features,
            values,
            first_frame: 0,
            distances: None,
        })
    }

    pub fn with_distances(mut self, distances: DenseMatrix) -> Result<Self> {
        if distances.rows() != self.num_nodes || distances.cols() != self.num_nodes {
            return Err(Error::ShapeMismatch(format!(
                "distance matrix is {}x{} for {} nodes",
                distances.rows(),
                distances.cols(),
                self.num_nodes
            )));
        }
        self.distances = Some(distances);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn first_frame(&self) -> usize {
        self.first_frame
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn distances(&self) -> Option<&DenseMatrix> {
        self.distances.as_ref()
    }

    #[inline]
    pub fn value(&self, frame: usize, node: usize, feature: usize) -> f64 {
        self.values[(frame * self.num_nodes + node) * self.num_features + feature]
    }

    /// The time series of one node and feature.
    pub fn node_series(&self, node: usize, feature: usize) -> Vec<f64> {
        (0..self.num_frames)
            .map(|t| self.value(t, node, feature))
            .collect()
    }

    /// Frames `[start, end)` as a new series that remembers its absolute offset.
    pub fn slice_frames(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.num_frames {
            return Err(Error::InvalidArgument(format!(
                "frame range {start}..{end} outside 0..{}",
                self.num_frames
            )));
        }
        let stride = self.num_nodes * self.num_features;
        Ok(Self {
            num_nodes: self.num_nodes,
            num_frames: end - start,
            num_features: self.num_features,
            values: self.values[start * stride..end * stride].to_vec(),
            first_frame: self.first_frame + start,
            distances: self.distances.clone(),
        })
    }
}
