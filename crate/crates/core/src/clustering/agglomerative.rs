use super::{canonical_labels, ClusterConfig, ClusterError, ClusterModel, ClusterResult, FeatureMatrix};
use crate::numerics::{pairwise_distances, pairwise_squared_distances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    /// Mean pairwise Euclidean distance between members.
    Average,
    /// Increase in within-cluster sum of squares caused by the merge.
    Ward,
}

/// One merge step. Singletons are ids `0..n`; merge `t` creates id `n + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: f64,
    pub merged_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
}

/// Agglomerative clustering with Lance–Williams distance updates.
///
/// All `n - 1` merges are recorded in the dendrogram; labels come from the
/// state after `n - k` merges. Ties pick the lexicographically smallest
/// `(i, j)` pair, where a cluster is indexed by its lowest member row.
pub fn agglomerative(x: &FeatureMatrix, cfg: &ClusterConfig, linkage: Linkage) -> Result<ClusterResult, ClusterError> {
    let n = x.n();
    cfg.validate(n)?;
    let mut dist = match linkage {
        Linkage::Average => pairwise_distances(x.values()).into_matrix(),
        Linkage::Ward => {
            let mut d = pairwise_squared_distances(x.values()).into_matrix();
            for i in 0..n {
                for j in 0..n {
                    d[(i, j)] *= 0.5;
                }
            }
            d
        }
    };
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut slot_of: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut labels = if cfg.k == n { Some((0..n).collect::<Vec<_>>()) } else { None };

    for step in 0..n.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && dist[(i, j)] < best.2 {
                    best = (i, j, dist[(i, j)]);
                }
            }
        }
        let (i, j, height) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for m in 0..n {
            if !active[m] || m == i || m == j {
                continue;
            }
            let updated = match linkage {
                Linkage::Average => (ni * dist[(m, i)] + nj * dist[(m, j)]) / (ni + nj),
                Linkage::Ward => {
                    let nm = size[m] as f64;
                    ((ni + nm) * dist[(m, i)] + (nj + nm) * dist[(m, j)] - nm * dist[(i, j)]) / (ni + nj + nm)
                }
            };
            dist[(m, i)] = updated;
            dist[(i, m)] = updated;
        }
        active[j] = false;
        size[i] += size[j];
        merges.push(Merge {
            cluster_a: cluster_id[i],
            cluster_b: cluster_id[j],
            height,
            merged_size: size[i],
        });
        cluster_id[i] = n + step;
        for s in slot_of.iter_mut() {
            if *s == j {
                *s = i;
            }
        }
        if n - (step + 1) == cfg.k {
            labels = Some(canonical_labels(&slot_of));
        }
    }

    let heights: Vec<f64> = merges.iter().map(|m| m.height).collect();
    Ok(ClusterResult {
        labels: labels.expect("k in 1..=n is reached"),
        centroids: None,
        objective_trace: heights[..n - cfg.k].to_vec(),
        iterations: n - cfg.k,
        converged: true,
        model: Some(ClusterModel::Dendrogram(Dendrogram { merges })),
    })
}
