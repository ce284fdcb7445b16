use crate::error::{Error, Result};
use crate::numerics::{pop_std, DenseMatrix};

/// Thresholded Gaussian-kernel graph prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    pub weights: DenseMatrix,
    pub threshold: f64,
    pub kernel_width: f64,
}

impl Adjacency {
    pub fn edge_count(&self) -> usize {
        self.weights.as_slice().iter().filter(|&&w| w > 0.0).count()
    }
}

/// `A_ij = exp(-d_ij^2 / sigma^2)` when that is at least `threshold` and
/// `i != j`, else 0. `sigma` is the population std of all off-diagonal distances.
pub fn build_adjacency(distances: &DenseMatrix, threshold: f64) -> Result<Adjacency> {
    if !distances.is_square() {
        return Err(Error::ShapeMismatch(
            "distance matrix must be square".into(),
        ));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    let n = distances.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "adjacency needs at least two nodes".into(),
        ));
    }
    if distances
        .as_slice()
        .iter()
        .any(|&d| !d.is_finite() || d < 0.0)
    {
        return Err(Error::InvalidArgument(
            "distances must be finite and non-negative".into(),
        ));
    }
    if (0..n).any(|i| distances[(i, i)] != 0.0) {
        return Err(Error::InvalidArgument(
            "distance diagonal must be zero".into(),
        ));
    }
    let scale = distances.as_slice().iter().fold(1.0f64, |m, v| m.max(*v));
    if distances.max_asymmetry() > 1e-9 * scale {
        return Err(Error::NotSymmetric(distances.max_asymmetry()));
    }

    let off_diag: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| distances[(i, j)])
        .collect();
    let sigma = pop_std(&off_diag)?;
    if sigma == 0.0 {
        return Err(Error::DegenerateSeries("degenerate distances".into()));
    }

    let mut weights = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = distances[(i, j)];
            let w = (-(d * d) / (sigma * sigma)).exp();
            if w >= threshold {
                weights[(i, j)] = w;
            }
        }
    }
    Ok(Adjacency {
        weights,
        threshold,
        kernel_width: sigma,
    })
}
