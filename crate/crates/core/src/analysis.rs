//! Redundancy statistics over raw series and windowed samples.

use std::io::Write;
use std::path::Path;

use log::warn;

use crate::dataset::{RawSeries, WindowedSample};
use crate::error::{Error, Result};
use crate::numerics::{pearson, pop_var, sym_eig, DenseMatrix};

/// Correlations among the non-constant nodes of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    /// Node ids backing the rows and columns of `matrix`.
    pub nodes: Vec<usize>,
    /// Constant nodes, reported as missing.
    pub excluded: Vec<usize>,
    pub matrix: DenseMatrix,
}

impl CorrelationMatrix {
    /// Correlation between two original node ids, `None` if either is constant.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        let ia = self.nodes.iter().position(|&n| n == a)?;
        let ib = self.nodes.iter().position(|&n| n == b)?;
        Some(self.matrix[(ia, ib)])
    }

    /// Share of off-diagonal pairs with correlation at or above `level`.
    pub fn frac_pairs_at_least(&self, level: f64) -> f64 {
        let n = self.nodes.len();
        let total = n * n.saturating_sub(1) / 2;
        if total == 0 {
            return 0.0;
        }
        let hits = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.matrix[(i, j)] >= level)
            .count();
        hits as f64 / total as f64
    }
}

pub fn correlation_matrix(series: &RawSeries, feature: usize) -> Result<CorrelationMatrix> {
    check_feature(series, feature)?;
    if series.num_frames() < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two frames".into(),
        ));
    }
    let mut nodes = Vec::new();
    let mut excluded = Vec::new();
    let mut columns = Vec::new();
    for n in 0..series.num_nodes() {
        let s = series.node_series(n, feature);
        if pop_var(&s)? == 0.0 {
            excluded.push(n);
        } else {
            nodes.push(n);
            columns.push(s);
        }
    }
    if nodes.is_empty() {
        return Err(Error::DegenerateSeries("every node is constant".into()));
    }
    if !excluded.is_empty() {
        warn!("constant nodes excluded from correlation: {excluded:?}");
    }
    let k = nodes.len();
    let mut matrix = DenseMatrix::identity(k);
    for i in 0..k {
        for j in i + 1..k {
            let c = pearson(&columns[i], &columns[j])?;
            matrix[(i, j)] = c;
            matrix[(j, i)] = c;
        }
    }
    Ok(CorrelationMatrix {
        nodes,
        excluded,
        matrix,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaAxis {
    /// Nodes are the variables, frames the observations.
    Spatial,
    /// Time-of-day slots are the variables, node-days the observations.
    Temporal { period: usize },
}

/// Cumulative explained-variance fractions, one per component.
pub fn pca_explained(series: &RawSeries, feature: usize, axis: PcaAxis) -> Result<Vec<f64>> {
    check_feature(series, feature)?;
    let rows: Vec<Vec<f64>> = match axis {
        PcaAxis::Spatial => {
            if series.num_nodes() < 2 {
                return Err(Error::InvalidArgument(
                    "spatial PCA needs at least two nodes".into(),
                ));
            }
            (0..series.num_frames())
                .map(|t| {
                    (0..series.num_nodes())
                        .map(|n| series.value(t, n, feature))
                        .collect()
                })
                .collect()
        }
        PcaAxis::Temporal { period } => day_profiles(series, feature, period)?,
    };
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(
            "PCA needs at least two observations".into(),
        ));
    }
    let cov = covariance(&rows);
    let total = cov.trace();
    if total <= 0.0 {
        return Err(Error::DegenerateSeries("zero total variance".into()));
    }
    let (eigenvalues, _) = sym_eig(&cov)?;
    let clipped: Vec<f64> = eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    let mut acc = 0.0;
    Ok(clipped
        .iter()
        .map(|v| {
            acc += v;
            (acc / sum).min(1.0)
        })
        .collect())
}

/// Whole days of each node, aligned to absolute frame 0 of the day cycle.
fn day_profiles(series: &RawSeries, feature: usize, period: usize) -> Result<Vec<Vec<f64>>> {
    if period < 2 {
        return Err(Error::InvalidArgument(
            "temporal PCA needs a period of at least two frames".into(),
        ));
    }
    let offset = (period - series.first_frame() % period) % period;
    let days = series.num_frames().saturating_sub(offset) / period;
    if days == 0 {
        return Err(Error::InvalidArgument(format!(
            "series of {} frames holds no whole day of {period} frames",
            series.num_frames()
        )));
    }
    let mut rows = Vec::with_capacity(days * series.num_nodes());
    for n in 0..series.num_nodes() {
        for d in 0..days {
            let start = offset + d * period;
            rows.push(
                (start..start + period)
                    .map(|t| series.value(t, n, feature))
                    .collect(),
            );
        }
    }
    Ok(rows)
}

/// Centred population covariance of the columns of `rows`.
fn covariance(rows: &[Vec<f64>]) -> DenseMatrix {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let means: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut cov = DenseMatrix::zeros(p, p);
    for r in rows {
        let d: Vec<f64> = r.iter().zip(&means).map(|(v, m)| v - m).collect();
        for i in 0..p {
            for j in i..p {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins over `[0, max intensity]`; the top edge is inclusive.
pub fn intensity_histogram(samples: &[WindowedSample], bins: usize) -> Result<Vec<HistogramBin>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1".into()));
    }
    let max = samples.iter().map(|s| s.intensity).fold(0.0f64, f64::max);
    if max == 0.0 {
        return Ok(vec![HistogramBin {
            lo: 0.0,
            hi: 0.0,
            count: samples.len(),
        }]);
    }
    let width = max / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: b as f64 * width,
            hi: if b + 1 == bins {
                max
            } else {
                (b + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for s in samples {
        let b = ((s.intensity / width) as usize).min(bins - 1);
        out[b].count += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyReport {
    pub num_nodes: usize,
    pub correlation: CorrelationMatrix,
    pub frac_pairs_ge_08: f64,
    pub spatial_explained: Vec<f64>,
    pub temporal_explained: Vec<f64>,
    pub intensity_histogram: Vec<HistogramBin>,
}

pub fn redundancy_report(
    series: &RawSeries,
    samples: &[WindowedSample],
    feature: usize,
    period: usize,
    bins: usize,
) -> Result<RedundancyReport> {
    let correlation = correlation_matrix(series, feature)?;
    Ok(RedundancyReport {
        num_nodes: series.num_nodes(),
        frac_pairs_ge_08: correlation.frac_pairs_at_least(0.8),
        correlation,
        spatial_explained: pca_explained(series, feature, PcaAxis::Spatial)
            .map_err(|e| e.context("spatial PCA"))?,
        temporal_explained: pca_explained(series, feature, PcaAxis::Temporal { period })
            .map_err(|e| e.context("temporal PCA"))?,
        intensity_histogram: intensity_histogram(samples, bins)?,
    })
}

impl RedundancyReport {
    /// Long-format table `statistic,index,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "statistic,index,value")?;
        for a in 0..self.num_nodes {
            for b in 0..self.num_nodes {
                match self.correlation.get(a, b) {
                    Some(c) => writeln!(out, "corr,{a}:{b},{c}")?,
                    None => writeln!(out, "corr,{a}:{b},NA")?,
                }
            }
        }
        writeln!(out, "frac_pairs_ge_08,0,{}", self.frac_pairs_ge_08)?;
        for (k, v) in self.spatial_explained.iter().enumerate() {
            writeln!(out, "spatial_explained,{},{v}", k + 1)?;
        }
        for (k, v) in self.temporal_explained.iter().enumerate() {
            writeln!(out, "temporal_explained,{},{v}", k + 1)?;
        }
        for (b, bin) in self.intensity_histogram.iter().enumerate() {
            writeln!(out, "intensity_bin_lo,{b},{}", bin.lo)?;
            writeln!(out, "intensity_bin_hi,{b},{}", bin.hi)?;
            writeln!(out, "intensity_count,{b},{}", bin.count)?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn check_feature(series: &RawSeries, feature: usize) -> Result<()> {
    if feature >= series.num_features() {
        return Err(Error::InvalidArgument(format!(
            "feature {feature} out of range for {} features",
            series.num_features()
        )));
    }
    Ok(())
}
