//! The nine clustering variants: K-Means, Mini-Batch K-Means, spectral,
//! agglomerative (Ward and average linkage), BIRCH, and Gaussian mixtures
//! with tied, diagonal and full covariances.

mod agglomerative;
mod birch;
mod gmm;
mod kmeans;
mod minibatch;
mod spectral;

use std::fmt;
use std::str::FromStr;

pub use agglomerative::{agglomerative, Dendrogram, Linkage, Merge};
pub use birch::{birch, default_birch_threshold, CfEntry, CfTreeStats};
pub use gmm::{gmm, responsibilities, CovarianceMode, Covariances, GmmModel};
pub use kmeans::{kmeans, kmeans_matrix};
pub use minibatch::minibatch_kmeans;
pub use spectral::{normalized_laplacian, rbf_affinity, spectral, spectral_from_affinity, SpectralInfo};

use crate::numerics::{Matrix, NumericsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid feature matrix: {0}")]
    Features(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] NumericsError),
    #[error("degenerate component {component}: covariance not positive definite after regularization {reg:e}")]
    DegenerateComponent { component: usize, reg: f64 },
}

impl ClusterError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, ClusterError::Numeric(_) | ClusterError::DegenerateComponent { .. })
    }
}

/// `n x d` samples with one identifier per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    values: Matrix,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, values: Matrix) -> Result<Self, ClusterError> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(ClusterError::Features("need at least one row and one column".into()));
        }
        if ids.len() != values.rows() {
            return Err(ClusterError::Features(format!(
                "{} ids for {} rows",
                ids.len(),
                values.rows()
            )));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(ClusterError::Features(format!(
                "non-finite value in row {}",
                pos / values.cols()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(ClusterError::Features(format!("duplicate id {id:?}")));
            }
        }
        Ok(Self { ids, values })
    }

    /// Rows get ids `"0"`, `"1"`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ClusterError> {
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(ClusterError::Features("ragged rows".into()));
        }
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, Matrix::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Copy with `offset` added to every row.
    pub fn translated(&self, offset: &[f64]) -> FeatureMatrix {
        let mut values = self.values.clone();
        for i in 0..values.rows() {
            for (v, o) in values.row_mut(i).iter_mut().zip(offset) {
                *v += o;
            }
        }
        FeatureMatrix {
            ids: self.ids.clone(),
            values,
        }
    }
}

/// K-Means seeding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KMeansInit {
    /// The first `k` rows become the initial centroids.
    #[default]
    FirstK,
    /// Seeded k-means++ (D² sampling).
    PlusPlus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Relative SSE change for K-Means, center movement for Mini-Batch,
    /// mean log-likelihood gain for GMM.
    pub tol: f64,
    pub init: KMeansInit,
    /// Restarts for K-Means; only meaningful with [`KMeansInit::PlusPlus`].
    pub n_init: usize,
    pub batch_size: usize,
    /// RBF bandwidth; `None` means the median pairwise distance.
    pub rbf_sigma: Option<f64>,
    pub spectral_cap: usize,
    /// CF radius threshold; `None` means the seeded-subsample default.
    pub birch_threshold: Option<f64>,
    pub birch_branching: usize,
    pub covariance_mode: CovarianceMode,
    pub covariance_reg: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            max_iters: 300,
            tol: 1e-4,
            init: KMeansInit::FirstK,
            n_init: 1,
            batch_size: 100,
            rbf_sigma: None,
            spectral_cap: 2000,
            birch_threshold: None,
            birch_branching: 50,
            covariance_mode: CovarianceMode::Full,
            covariance_reg: 1e-6,
        }
    }
}

impl ClusterConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), ClusterError> {
        let bad = |msg: String| Err(ClusterError::Config(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.k > n {
            return bad(format!("k = {} exceeds the number of samples ({n})", self.k));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.n_init == 0 {
            return bad("n_init must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if let Some(s) = self.rbf_sigma {
            if !(s > 0.0) || !s.is_finite() {
                return bad(format!("rbf_sigma must be positive, got {s}"));
            }
        }
        if let Some(t) = self.birch_threshold {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("birch_threshold must be positive, got {t}"));
            }
        }
        if self.birch_branching < 2 {
            return bad("birch_branching must be at least 2".into());
        }
        if !(self.covariance_reg > 0.0) {
            return bad("covariance_reg must be positive".into());
        }
        Ok(())
    }
}

/// Algorithm-specific by-products of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum ClusterModel {
    Gmm(GmmModel),
    Dendrogram(Dendrogram),
    CfTree(CfTreeStats),
    Spectral(SpectralInfo),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub centroids: Option<Matrix>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub model: Option<ClusterModel>,
}

impl ClusterResult {
    pub fn cluster_count(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// The nine variants, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    KMeans,
    MiniBatchKMeans,
    Spectral,
    AgglomerativeWard,
    AgglomerativeAverage,
    Birch,
    GmmTied,
    GmmDiag,
    GmmFull,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::KMeans,
        Algorithm::MiniBatchKMeans,
        Algorithm::Spectral,
        Algorithm::AgglomerativeWard,
        Algorithm::AgglomerativeAverage,
        Algorithm::Birch,
        Algorithm::GmmTied,
        Algorithm::GmmDiag,
        Algorithm::GmmFull,
    ];

    /// Row label used in reports and charts.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "K-Means",
            Algorithm::MiniBatchKMeans => "Mini batch K-means",
            Algorithm::Spectral => "Spectral clustering",
            Algorithm::AgglomerativeWard => "Agglomerative Ward clustering",
            Algorithm::AgglomerativeAverage => "Agglomerative average clustering",
            Algorithm::Birch => "Birch clustering",
            Algorithm::GmmTied => "Gaussian mixture (Tied)",
            Algorithm::GmmDiag => "Gaussian mixture (Diag)",
            Algorithm::GmmFull => "Gaussian mixture (Full)",
        }
    }

    /// Short name accepted on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::MiniBatchKMeans => "minibatch",
            Algorithm::Spectral => "spectral",
            Algorithm::AgglomerativeWard => "ward",
            Algorithm::AgglomerativeAverage => "average",
            Algorithm::Birch => "birch",
            Algorithm::GmmTied => "gmm-tied",
            Algorithm::GmmDiag => "gmm-diag",
            Algorithm::GmmFull => "gmm-full",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).expect("listed")
    }

    pub fn run(self, x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
        match self {
            Algorithm::KMeans => kmeans(x, cfg),
            Algorithm::MiniBatchKMeans => minibatch_kmeans(x, cfg),
            Algorithm::Spectral => spectral(x, cfg),
            Algorithm::AgglomerativeWard => agglomerative(x, cfg, Linkage::Ward),
            Algorithm::AgglomerativeAverage => agglomerative(x, cfg, Linkage::Average),
            Algorithm::Birch => birch(x, cfg),
            Algorithm::GmmTied => gmm(x, cfg, CovarianceMode::Tied),
            Algorithm::GmmDiag => gmm(x, cfg, CovarianceMode::Diag),
            Algorithm::GmmFull => gmm(x, cfg, CovarianceMode::Full),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm {0:?}; valid names: {names}", names = valid_algorithm_names())]
pub struct UnknownAlgorithm(pub String);

/// Comma-separated short names, for diagnostics.
pub fn valid_algorithm_names() -> String {
    Algorithm::ALL.map(|a| a.cli_name()).join(", ")
}

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.cli_name().eq_ignore_ascii_case(s) || a.display_name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// Index of the nearest row of `centroids` to `point`; ties go to the lowest index.
pub(crate) fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = crate::numerics::squared_euclidean(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Renumbers labels so clusters appear in order of their first member.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}
