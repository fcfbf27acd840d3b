//! The algorithm x k grid.

use std::time::Instant;

use rayon::prelude::*;

use crate::clustering::{Algorithm, ClusterConfig, FeatureMatrix};
use crate::metrics::silhouette;
use crate::numerics::derive_seed;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub algorithms: Vec<Algorithm>,
    pub ks: Vec<usize>,
    pub seed: u64,
    /// Knobs shared by every cell; `k` and `seed` are overwritten per cell.
    pub base: ClusterConfig,
    /// Record wall-clock time per cell. Off by default so reports stay reproducible.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            ks: (2..=6).collect(),
            seed: 0,
            base: ClusterConfig::default(),
            timing: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self, n: usize) -> Result<(), PipelineError> {
        if self.algorithms.is_empty() {
            return Err(PipelineError::Config("algorithm list is empty".into()));
        }
        if self.ks.is_empty() {
            return Err(PipelineError::Config("k range is empty".into()));
        }
        for &k in &self.ks {
            if k < 2 {
                return Err(PipelineError::Config(format!("k = {k}: silhouette needs at least 2 clusters")));
            }
            if k > n {
                return Err(PipelineError::Config(format!("k = {k} exceeds the number of samples ({n})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub silhouette: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Seed for one cell, independent of execution order.
pub fn cell_seed(seed: u64, algorithm: Algorithm, k: usize) -> u64 {
    derive_seed(seed, &[algorithm.index() as u64, k as u64])
}

fn run_cell(fm: &FeatureMatrix, cfg: &SweepConfig, algorithm: Algorithm, k: usize) -> SweepRow {
    let cell_cfg = ClusterConfig {
        k,
        seed: cell_seed(cfg.seed, algorithm, k),
        ..cfg.base.clone()
    };
    let start = Instant::now();
    let outcome = algorithm.run(fm, &cell_cfg);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let (silhouette, converged) = match outcome {
        Ok(r) => (silhouette(fm, &r.labels).ok().map(|s| s.mean), r.converged),
        Err(_) => (None, false),
    };
    SweepRow {
        algorithm,
        k,
        silhouette,
        runtime_ms: cfg.timing.then_some(elapsed),
        converged,
    }
}

/// Runs every cell in parallel; rows come back in algorithm order, then k ascending.
pub fn sweep(fm: &FeatureMatrix, cfg: &SweepConfig) -> Result<SweepReport, PipelineError> {
    cfg.validate(fm.n())?;
    let mut algorithms = cfg.algorithms.clone();
    algorithms.sort_by_key(|a| a.index());
    algorithms.dedup();
    let mut ks = cfg.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let cells: Vec<(Algorithm, usize)> = algorithms
        .iter()
        .flat_map(|&a| ks.iter().map(move |&k| (a, k)))
        .collect();
    let rows = cells.par_iter().map(|&(a, k)| run_cell(fm, cfg, a, k)).collect();
    Ok(SweepReport { rows })
}

/// Parses an inclusive range `a..b`, or a single value.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid k value {t:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty k range {s:?}"));
    }
    Ok((lo..=hi).collect())
}

/// `all` or a comma list of short names.
pub fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>, String> {
    if s.trim() == "all" {
        return Ok(Algorithm::ALL.to_vec());
    }
    s.split(',').map(|t| t.trim().parse::<Algorithm>().map_err(|e| e.to_string())).collect()
}
