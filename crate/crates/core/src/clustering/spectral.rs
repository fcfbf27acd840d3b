use super::kmeans::kmeans_matrix;
use super::{ClusterConfig, ClusterError, ClusterModel, ClusterResult, FeatureMatrix};
use crate::numerics::{median_off_diagonal, pairwise_squared_distances, sym_eigen, Matrix, SymMatrix};

/// Diagnostics of a spectral run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInfo {
    pub sigma: f64,
    /// Rows whose affinity degree was zero.
    pub isolated: Vec<usize>,
    /// The `k` smallest Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

/// `W_ij = exp(-|x_i - x_j|^2 / (2 sigma^2))` with a zero diagonal.
pub fn rbf_affinity(x: &Matrix, sigma: f64) -> SymMatrix {
    let d2 = pairwise_squared_distances(x);
    let n = x.rows();
    let denom = 2.0 * sigma * sigma;
    let mut w = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            w.set(i, j, (-d2.get(i, j) / denom).exp());
        }
    }
    w
}

/// `L = I - D^{-1/2} W D^{-1/2}`; zero-degree rows use `D^{-1/2} = 0`.
///
/// Returns the Laplacian and the indices of the zero-degree rows.
pub fn normalized_laplacian(w: &SymMatrix) -> (SymMatrix, Vec<usize>) {
    let n = w.n();
    let mut isolated = Vec::new();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = (0..n).map(|j| w.get(i, j)).sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                isolated.push(i);
                0.0
            }
        })
        .collect();
    let mut l = SymMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            l.set(i, j, -inv_sqrt[i] * w.get(i, j) * inv_sqrt[j]);
        }
    }
    (l, isolated)
}

/// Spectral clustering with an RBF affinity.
///
/// Embeds each point with the eigenvectors of the `k` smallest eigenvalues
/// of the symmetric normalized Laplacian (the `k` largest of the normalized
/// affinity), normalizes rows to unit length and clusters them with K-Means.
pub fn spectral(x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    cfg.validate(x.n())?;
    check_cap(x.n(), cfg)?;
    let sigma = match cfg.rbf_sigma {
        Some(s) => s,
        None => {
            let d = crate::numerics::pairwise_distances(x.values());
            match median_off_diagonal(&d) {
                Some(m) if m > 0.0 => m,
                _ => 1.0,
            }
        }
    };
    let w = rbf_affinity(x.values(), sigma);
    spectral_from_affinity(&w, sigma, cfg)
}

fn check_cap(n: usize, cfg: &ClusterConfig) -> Result<(), ClusterError> {
    if n > cfg.spectral_cap {
        return Err(ClusterError::Config(format!(
            "spectral clustering is limited to {} samples, got {n}",
            cfg.spectral_cap
        )));
    }
    Ok(())
}

/// Spectral clustering from a precomputed affinity matrix.
pub fn spectral_from_affinity(w: &SymMatrix, sigma: f64, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let n = w.n();
    cfg.validate(n)?;
    check_cap(n, cfg)?;
    let (lap, isolated) = normalized_laplacian(w);
    let eig = sym_eigen(&lap)?;
    let k = cfg.k;
    let mut embedding = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            embedding[(i, j)] = eig.vectors[(i, j)];
        }
        let norm = embedding.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            embedding.row_mut(i).iter_mut().for_each(|v| *v /= norm);
        }
    }
    let mut result = kmeans_matrix(&embedding, cfg)?;
    result.centroids = None;
    result.model = Some(ClusterModel::Spectral(SpectralInfo {
        sigma,
        isolated,
        eigenvalues: eig.values[..k].to_vec(),
    }));
    Ok(result)
}
