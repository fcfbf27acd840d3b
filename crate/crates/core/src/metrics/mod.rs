//! Cluster-quality scores.

use crate::clustering::FeatureMatrix;
use crate::numerics::{pairwise_distances, squared_euclidean, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("silhouette undefined for one cluster")]
    SingleCluster,
    #[error("{labels} labels for {rows} rows")]
    LengthMismatch { labels: usize, rows: usize },
    #[error("label {label} at row {row} has no centroid (k = {k})")]
    LabelOutOfRange { row: usize, label: usize, k: usize },
    #[error("centroids have {found} columns, features have {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteReport {
    pub per_point: Vec<f64>,
    pub mean: f64,
    /// Mean silhouette per label value `0..=max_label`; labels with no
    /// members report 0.
    pub per_cluster_mean: Vec<f64>,
}

/// Rousseeuw silhouette with Euclidean distances.
///
/// Members of singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette(x: &FeatureMatrix, labels: &[usize]) -> Result<SilhouetteReport, MetricsError> {
    let n = x.n();
    if labels.len() != n {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            rows: n,
        });
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(MetricsError::SingleCluster);
    }
    let dist = pairwise_distances(x.values());
    let mut per_point = Vec::with_capacity(n);
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            sums[labels[j]] += dist.get(i, j);
        }
        let own = labels[i];
        if sizes[own] == 1 {
            per_point.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        per_point.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = per_point.iter().sum::<f64>() / n as f64;
    let mut per_cluster_mean = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        per_cluster_mean[l] += per_point[i];
    }
    for (m, &s) in per_cluster_mean.iter_mut().zip(&sizes) {
        if s > 0 {
            *m /= s as f64;
        }
    }
    Ok(SilhouetteReport {
        per_point,
        mean,
        per_cluster_mean,
    })
}

/// Sum of squared distances from each row to its labelled centroid.
pub fn sse(x: &FeatureMatrix, labels: &[usize], centroids: &Matrix) -> Result<f64, MetricsError> {
    if labels.len() != x.n() {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            rows: x.n(),
        });
    }
    if centroids.cols() != x.d() {
        return Err(MetricsError::DimensionMismatch {
            expected: x.d(),
            found: centroids.cols(),
        });
    }
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        if l >= centroids.rows() {
            return Err(MetricsError::LabelOutOfRange {
                row: i,
                label: l,
                k: centroids.rows(),
            });
        }
        total += squared_euclidean(x.row(i), centroids.row(l));
    }
    Ok(total)
}
