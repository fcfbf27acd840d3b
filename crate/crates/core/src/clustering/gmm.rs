//! Gaussian mixtures fitted by expectation–maximization.

use super::kmeans::kmeans_matrix;
use super::{ClusterConfig, ClusterError, ClusterModel, ClusterResult, FeatureMatrix};
use crate::numerics::{cholesky, forward_substitute, log_det_from_cholesky, Matrix, SymMatrix};

const MAX_REG: f64 = 1e-2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMode {
    /// One covariance shared by every component.
    Tied,
    /// Per-component diagonal covariances.
    Diag,
    /// Per-component full covariances.
    #[default]
    Full,
}

impl std::str::FromStr for CovarianceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tied" => Ok(Self::Tied),
            "diag" => Ok(Self::Diag),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown covariance mode {other:?} (expected tied, diag or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Covariances {
    Full(Vec<Matrix>),
    /// Row `c` holds component `c`'s variances.
    Diag(Matrix),
    Tied(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Matrix,
    pub covariances: Covariances,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// Dense covariance of component `c`.
    pub fn component_covariance(&self, c: usize) -> Matrix {
        match &self.covariances {
            Covariances::Full(v) => v[c].clone(),
            Covariances::Tied(m) => m.clone(),
            Covariances::Diag(vars) => {
                let d = vars.cols();
                let mut m = Matrix::zeros(d, d);
                for j in 0..d {
                    m[(j, j)] = vars[(c, j)];
                }
                m
            }
        }
    }
}

/// Precomputed per-component quantities for evaluating log densities.
enum Factor {
    Chol { l: Matrix, log_det: f64 },
    Diag { inv_var: Vec<f64>, log_det: f64 },
}

impl Factor {
    fn log_density(&self, x: &[f64], mean: &[f64]) -> f64 {
        let d = x.len() as f64;
        let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
        let (maha, log_det) = match self {
            Factor::Chol { l, log_det } => {
                let y = forward_substitute(l, &diff);
                (y.iter().map(|v| v * v).sum::<f64>(), *log_det)
            }
            Factor::Diag { inv_var, log_det } => {
                (diff.iter().zip(inv_var).map(|(v, iv)| v * v * iv).sum::<f64>(), *log_det)
            }
        };
        -0.5 * (d * LN_2PI + log_det + maha)
    }
}

/// Adds `reg` to the diagonal and factors; escalates `reg` by 10x up to
/// 1e-2 before reporting the component as degenerate.
fn regularized_cholesky(scatter: &Matrix, reg: f64, component: usize) -> Result<(Matrix, Matrix), ClusterError> {
    let mut r = reg;
    loop {
        let mut cov = scatter.clone();
        for j in 0..cov.rows() {
            cov[(j, j)] += r;
        }
        let sym = SymMatrix::new(cov);
        match cholesky(&sym) {
            Ok(l) => return Ok((sym.into_matrix(), l)),
            Err(_) if r < MAX_REG => r = (r * 10.0).min(MAX_REG),
            Err(_) => return Err(ClusterError::DegenerateComponent { component, reg: r }),
        }
    }
}

fn regularized_variances(vars: &mut [f64], reg: f64, component: usize) -> Result<(), ClusterError> {
    for v in vars.iter_mut() {
        *v += reg;
    }
    if vars.iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Ok(());
    }
    let mut r = reg;
    while r < MAX_REG {
        let bump = (r * 10.0).min(MAX_REG) - r;
        r += bump;
        for v in vars.iter_mut() {
            *v += bump;
        }
        if vars.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Ok(());
        }
    }
    Err(ClusterError::DegenerateComponent { component, reg: r })
}

struct Params {
    weights: Vec<f64>,
    means: Matrix,
    covariances: Covariances,
    factors: Vec<Factor>,
}

fn factorize(covariances: Covariances, k: usize) -> Result<(Covariances, Vec<Factor>), ClusterError> {
    // Covariances arriving here are already regularized; this only factors.
    let factors = match &covariances {
        Covariances::Full(covs) => covs
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let l = cholesky(&SymMatrix::new(m.clone()))
                    .map_err(|_| ClusterError::DegenerateComponent { component: c, reg: MAX_REG })?;
                Ok(Factor::Chol {
                    log_det: log_det_from_cholesky(&l),
                    l,
                })
            })
            .collect::<Result<Vec<_>, ClusterError>>()?,
        Covariances::Tied(m) => {
            let l = cholesky(&SymMatrix::new(m.clone()))
                .map_err(|_| ClusterError::DegenerateComponent { component: 0, reg: MAX_REG })?;
            let log_det = log_det_from_cholesky(&l);
            (0..k).map(|_| Factor::Chol { l: l.clone(), log_det }).collect()
        }
        Covariances::Diag(vars) => (0..k)
            .map(|c| {
                let row = vars.row(c);
                Factor::Diag {
                    inv_var: row.iter().map(|v| 1.0 / v).collect(),
                    log_det: row.iter().map(|v| v.ln()).sum(),
                }
            })
            .collect(),
    };
    Ok((covariances, factors))
}

/// Responsibilities and mean log-likelihood.
fn e_step(x: &Matrix, p: &Params) -> (Matrix, f64) {
    let n = x.rows();
    let k = p.weights.len();
    let log_w: Vec<f64> = p.weights.iter().map(|w| w.ln()).collect();
    let mut resp = Matrix::zeros(n, k);
    let mut total = 0.0;
    for i in 0..n {
        let row = resp.row_mut(i);
        for c in 0..k {
            row[c] = log_w[c] + p.factors[c].log_density(x.row(i), p.means.row(c));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse;
        for v in row.iter_mut() {
            *v = (*v - lse).exp();
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    (resp, total / n as f64)
}

fn m_step(x: &Matrix, resp: &Matrix, mode: CovarianceMode, reg: f64) -> Result<Params, ClusterError> {
    let (n, d) = (x.rows(), x.cols());
    let k = resp.cols();
    let nk: Vec<f64> = (0..k)
        .map(|c| (0..n).map(|i| resp[(i, c)]).sum::<f64>() + 10.0 * f64::EPSILON)
        .collect();
    let total: f64 = nk.iter().sum();
    let weights: Vec<f64> = nk.iter().map(|v| v / total).collect();
    let mut means = Matrix::zeros(k, d);
    for i in 0..n {
        for c in 0..k {
            let r = resp[(i, c)];
            if r == 0.0 {
                continue;
            }
            for (m, v) in means.row_mut(c).iter_mut().zip(x.row(i)) {
                *m += r * v;
            }
        }
    }
    for c in 0..k {
        means.row_mut(c).iter_mut().for_each(|m| *m /= nk[c]);
    }

    let scatter = |c: usize| {
        let mut s = Matrix::zeros(d, d);
        for i in 0..n {
            let r = resp[(i, c)];
            if r == 0.0 {
                continue;
            }
            let diff: Vec<f64> = x.row(i).iter().zip(means.row(c)).map(|(a, b)| a - b).collect();
            for a in 0..d {
                let ra = r * diff[a];
                for b in a..d {
                    s[(a, b)] += ra * diff[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                s[(a, b)] = s[(b, a)];
            }
        }
        s
    };

    let covariances = match mode {
        CovarianceMode::Full => {
            let mut covs = Vec::with_capacity(k);
            for c in 0..k {
                let mut s = scatter(c);
                for a in 0..d {
                    for b in 0..d {
                        s[(a, b)] /= nk[c];
                    }
                }
                covs.push(regularized_cholesky(&s, reg, c)?.0);
            }
            Covariances::Full(covs)
        }
        CovarianceMode::Tied => {
            let mut pooled = Matrix::zeros(d, d);
            for c in 0..k {
                let s = scatter(c);
                for a in 0..d {
                    for b in 0..d {
                        pooled[(a, b)] += s[(a, b)];
                    }
                }
            }
            for a in 0..d {
                for b in 0..d {
                    pooled[(a, b)] /= n as f64;
                }
            }
            Covariances::Tied(regularized_cholesky(&pooled, reg, 0)?.0)
        }
        CovarianceMode::Diag => {
            let mut vars = Matrix::zeros(k, d);
            for c in 0..k {
                let row = vars.row_mut(c);
                for i in 0..n {
                    let r = resp[(i, c)];
                    for (j, v) in row.iter_mut().enumerate() {
                        let diff = x[(i, j)] - means[(c, j)];
                        *v += r * diff * diff;
                    }
                }
                row.iter_mut().for_each(|v| *v /= nk[c]);
                regularized_variances(row, reg, c)?;
            }
            Covariances::Diag(vars)
        }
    };
    let (covariances, factors) = factorize(covariances, k)?;
    Ok(Params {
        weights,
        means,
        covariances,
        factors,
    })
}

fn initial_params(x: &Matrix, cfg: &ClusterConfig, mode: CovarianceMode) -> Result<Params, ClusterError> {
    let (n, d) = (x.rows(), x.cols());
    let k = cfg.k;
    let km = kmeans_matrix(x, cfg)?;
    let means = km.centroids.expect("kmeans yields centroids");
    let mut global_mean = vec![0.0; d];
    for i in 0..n {
        for (g, v) in global_mean.iter_mut().zip(x.row(i)) {
            *g += v / n as f64;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let diff: Vec<f64> = x.row(i).iter().zip(&global_mean).map(|(a, b)| a - b).collect();
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += diff[a] * diff[b] / n as f64;
            }
        }
    }
    let covariances = match mode {
        CovarianceMode::Full => {
            let (c, _) = regularized_cholesky(&cov, cfg.covariance_reg, 0)?;
            Covariances::Full(vec![c; k])
        }
        CovarianceMode::Tied => Covariances::Tied(regularized_cholesky(&cov, cfg.covariance_reg, 0)?.0),
        CovarianceMode::Diag => {
            let mut vars = Matrix::zeros(k, d);
            let mut diag: Vec<f64> = (0..d).map(|j| cov[(j, j)]).collect();
            regularized_variances(&mut diag, cfg.covariance_reg, 0)?;
            for c in 0..k {
                vars.row_mut(c).copy_from_slice(&diag);
            }
            Covariances::Diag(vars)
        }
    };
    let (covariances, factors) = factorize(covariances, k)?;
    Ok(Params {
        weights: vec![1.0 / k as f64; k],
        means,
        covariances,
        factors,
    })
}

/// Fits a `k`-component mixture and labels each point by its most
/// responsible component (ties: lowest component).
///
/// The objective trace holds the mean log-likelihood evaluated at each
/// E-step; iteration stops once it improves by at most `tol`.
pub fn gmm(x: &FeatureMatrix, cfg: &ClusterConfig, mode: CovarianceMode) -> Result<ClusterResult, ClusterError> {
    cfg.validate(x.n())?;
    let data = x.values();
    let mut params = initial_params(data, cfg, mode)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut resp;
    loop {
        let (r, ll) = e_step(data, &params);
        resp = r;
        let improved = trace.last().map(|&prev| ll - prev);
        trace.push(ll);
        if improved.is_some_and(|gain| gain.abs() <= cfg.tol) {
            converged = true;
            break;
        }
        if trace.len() >= cfg.max_iters {
            break;
        }
        params = m_step(data, &resp, mode, cfg.covariance_reg)?;
    }

    let labels = (0..x.n())
        .map(|i| {
            let row = resp.row(i);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let model = GmmModel {
        weights: params.weights,
        means: params.means.clone(),
        covariances: params.covariances,
    };
    Ok(ClusterResult {
        labels,
        centroids: Some(params.means),
        iterations: trace.len(),
        objective_trace: trace,
        converged,
        model: Some(ClusterModel::Gmm(model)),
    })
}

/// Responsibilities of a fitted model for `x` (rows sum to one).
pub fn responsibilities(x: &Matrix, model: &GmmModel) -> Result<(Matrix, f64), ClusterError> {
    let (covariances, factors) = factorize(model.covariances.clone(), model.k())?;
    let p = Params {
        weights: model.weights.clone(),
        means: model.means.clone(),
        covariances,
        factors,
    };
    Ok(e_step(x, &p))
}
