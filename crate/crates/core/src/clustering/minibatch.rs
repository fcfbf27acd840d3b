use super::kmeans::{assign, first_k, plus_plus, repair_empty};
use super::{nearest, ClusterConfig, ClusterError, ClusterResult, FeatureMatrix, KMeansInit};
use crate::numerics::{derive_seed, make_rng, squared_euclidean};

const SAMPLING_STREAM: u64 = 0x6d62;

/// Mini-Batch K-Means with per-center learning rate `1 / count`.
///
/// Each iteration draws `batch_size` distinct rows (all rows when the batch
/// is at least `n`), assigns them to the current centers, then moves each
/// center toward its points in sampling order. Counts accumulate across
/// iterations. Convergence is checked once per full pass over the data
/// (`ceil(n / batch_size)` iterations) against the largest center movement.
pub fn minibatch_kmeans(x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let n = x.n();
    cfg.validate(n)?;
    let data = x.values();
    let k = cfg.k;
    let mut centers = match cfg.init {
        KMeansInit::FirstK => first_k(data, k),
        KMeansInit::PlusPlus => plus_plus(data, k, &mut make_rng(derive_seed(cfg.seed, &[0]))),
    };
    let mut rng = make_rng(derive_seed(cfg.seed, &[SAMPLING_STREAM]));
    let batch = cfg.batch_size.min(n);
    let iters_per_pass = n.div_ceil(batch);

    let mut counts = vec![0u64; k];
    let mut order: Vec<usize> = (0..n).collect();
    let mut pass_start = centers.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut batch_labels = vec![0usize; batch];

    while iterations < cfg.max_iters {
        iterations += 1;
        // Partial Fisher–Yates: the first `batch` slots become the sample.
        for i in 0..batch {
            let j = i + rng.next_below(n - i);
            order.swap(i, j);
        }
        let mut inertia = 0.0;
        for (slot, &i) in order[..batch].iter().enumerate() {
            let (c, d) = nearest(data.row(i), &centers);
            batch_labels[slot] = c;
            inertia += d;
        }
        trace.push(inertia / batch as f64);
        for (slot, &i) in order[..batch].iter().enumerate() {
            let c = batch_labels[slot];
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            for (cv, xv) in centers.row_mut(c).iter_mut().zip(data.row(i)) {
                *cv += eta * (xv - *cv);
            }
        }
        if iterations % iters_per_pass == 0 {
            let movement = (0..k)
                .map(|c| squared_euclidean(centers.row(c), pass_start.row(c)).sqrt())
                .fold(0.0, f64::max);
            if movement <= cfg.tol {
                converged = true;
                break;
            }
            pass_start = centers.clone();
        }
    }

    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0; n];
    assign(data, &centers, &mut labels, &mut dists);
    // A repaired point becomes its new cluster's center.
    for (i, c) in repair_empty(k, &mut labels, &mut dists) {
        centers.row_mut(c).copy_from_slice(data.row(i));
    }
    Ok(ClusterResult {
        labels,
        centroids: Some(centers),
        objective_trace: trace,
        iterations,
        converged,
        model: None,
    })
}
