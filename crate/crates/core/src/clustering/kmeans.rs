use super::{nearest, ClusterConfig, ClusterError, ClusterResult, FeatureMatrix, KMeansInit};
use crate::numerics::{derive_seed, make_rng, squared_euclidean, Matrix, RngStream};

/// Lloyd's algorithm on a feature matrix.
pub fn kmeans(x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    kmeans_matrix(x.values(), cfg)
}

/// Lloyd's algorithm on raw rows; used directly by the spectral and BIRCH
/// global phases.
pub fn kmeans_matrix(x: &Matrix, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    cfg.validate(x.rows())?;
    match cfg.init {
        KMeansInit::FirstK => {
            let init = first_k(x, cfg.k);
            Ok(lloyd(x, init, cfg.max_iters, cfg.tol))
        }
        KMeansInit::PlusPlus => {
            let mut best: Option<ClusterResult> = None;
            for restart in 0..cfg.n_init {
                let mut rng = make_rng(derive_seed(cfg.seed, &[restart as u64]));
                let init = plus_plus(x, cfg.k, &mut rng);
                let run = lloyd(x, init, cfg.max_iters, cfg.tol);
                let better = match &best {
                    None => true,
                    Some(b) => final_objective(&run) < final_objective(b),
                };
                if better {
                    best = Some(run);
                }
            }
            Ok(best.expect("n_init >= 1"))
        }
    }
}

fn final_objective(r: &ClusterResult) -> f64 {
    r.objective_trace.last().copied().unwrap_or(f64::INFINITY)
}

pub(crate) fn first_k(x: &Matrix, k: usize) -> Matrix {
    Matrix::from_vec(k, x.cols(), x.as_slice()[..k * x.cols()].to_vec())
}

/// Greedy k-means++: each new center is the best of `2 + ln k` D²-sampled
/// candidates, judged by the resulting potential.
pub(crate) fn plus_plus(x: &Matrix, k: usize, rng: &mut RngStream) -> Matrix {
    let n = x.rows();
    let trials = 2 + (k as f64).ln() as usize;
    let mut chosen = vec![rng.next_below(n)];
    let mut d2: Vec<f64> = (0..n).map(|i| squared_euclidean(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..trials {
            let candidate = if total > 0.0 {
                sample_d2(&d2, rng.next_uniform() * total)
            } else {
                rng.next_below(n)
            };
            let updated: Vec<f64> = d2
                .iter()
                .enumerate()
                .map(|(i, &d)| d.min(squared_euclidean(x.row(i), x.row(candidate))))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().map_or(true, |b| potential < b.1) {
                best = Some((candidate, potential, updated));
            }
        }
        let (next, _, updated) = best.expect("at least two trials");
        chosen.push(next);
        d2 = updated;
    }
    let mut c = Matrix::zeros(k, x.cols());
    for (r, &i) in chosen.iter().enumerate() {
        c.row_mut(r).copy_from_slice(x.row(i));
    }
    c
}

/// Index whose cumulative weight first exceeds `target`.
fn sample_d2(d2: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in d2.iter().enumerate() {
        acc += w;
        if w > 0.0 && acc > target {
            return i;
        }
    }
    // Rounding can leave target past the final sum.
    d2.iter().rposition(|&w| w > 0.0).expect("positive total")
}

/// Nearest-centroid assignment; returns squared distances alongside.
pub(crate) fn assign(x: &Matrix, centroids: &Matrix, labels: &mut [usize], dists: &mut [f64]) {
    for i in 0..x.rows() {
        let (c, d) = nearest(x.row(i), centroids);
        labels[i] = c;
        dists[i] = d;
    }
}

/// Fills empty clusters by moving the point farthest from its centroid
/// (ties: lowest row) out of any cluster with more than one member.
/// Returns the `(row, cluster)` moves made.
pub(crate) fn repair_empty(k: usize, labels: &mut [usize], dists: &mut [f64]) -> Vec<(usize, usize)> {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut moves = Vec::new();
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] > 1 && donor.map_or(true, |d| dists[i] > dists[d]) {
                donor = Some(i);
            }
        }
        let Some(i) = donor else { break };
        sizes[labels[i]] -= 1;
        sizes[empty] += 1;
        labels[i] = empty;
        dists[i] = 0.0;
        moves.push((i, empty));
    }
    moves
}

pub(crate) fn cluster_means(x: &Matrix, labels: &[usize], k: usize) -> Matrix {
    let d = x.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = 1.0 / count as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
        }
    }
    sums
}

pub(crate) fn total_sse(x: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_euclidean(x.row(i), centroids.row(l)))
        .sum()
}

fn lloyd(x: &Matrix, mut centroids: Matrix, max_iters: usize, tol: f64) -> ClusterResult {
    let n = x.rows();
    let k = centroids.rows();
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0; n];
    assign(x, &centroids, &mut labels, &mut dists);
    repair_empty(k, &mut labels, &mut dists);

    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut next_labels = vec![0usize; n];
    while iterations < max_iters {
        iterations += 1;
        centroids = cluster_means(x, &labels, k);
        let sse = total_sse(x, &labels, &centroids);
        let previous = trace.last().copied();
        trace.push(sse);

        assign(x, &centroids, &mut next_labels, &mut dists);
        repair_empty(k, &mut next_labels, &mut dists);
        if next_labels == labels {
            converged = true;
            break;
        }
        std::mem::swap(&mut labels, &mut next_labels);
        let small_change = previous.is_some_and(|p| p - sse <= tol * p) || sse == 0.0;
        if small_change || iterations == max_iters {
            // Labels now follow the centroids; record the matching objective.
            trace.push(total_sse(x, &labels, &centroids));
            converged = small_change;
            break;
        }
    }
    if hartigan_refine(x, &mut labels, k, max_iters) {
        centroids = cluster_means(x, &labels, k);
        trace.push(total_sse(x, &labels, &centroids));
    }
    ClusterResult {
        labels,
        centroids: Some(centroids),
        objective_trace: trace,
        iterations,
        converged,
        model: None,
    }
}

/// Single-point transfers that lower the SSE once cluster sizes change:
/// moving `x` from `a` to `b` changes the objective by
/// `n_b/(n_b+1)·|x-μ_b|² - n_a/(n_a-1)·|x-μ_a|²`. Every stable state is also a
/// Lloyd fixed point. Returns whether any point moved.
fn hartigan_refine(x: &Matrix, labels: &mut [usize], k: usize, max_passes: usize) -> bool {
    let d = x.cols();
    let mut counts = vec![0usize; k];
    let mut sums = Matrix::zeros(k, d);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let dist_to_mean = |sums: &Matrix, counts: &[usize], c: usize, p: &[f64]| -> f64 {
        let inv = 1.0 / counts[c] as f64;
        p.iter().zip(sums.row(c)).map(|(v, s)| (v - s * inv) * (v - s * inv)).sum()
    };
    let mut any = false;
    for _ in 0..max_passes {
        let mut moved = false;
        for i in 0..x.rows() {
            let a = labels[i];
            if counts[a] < 2 {
                continue;
            }
            let p = x.row(i);
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * dist_to_mean(&sums, &counts, a, p);
            let mut best: Option<(usize, f64)> = None;
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let cost = nb / (nb + 1.0) * dist_to_mean(&sums, &counts, b, p);
                if best.map_or(true, |(_, c)| cost < c) {
                    best = Some((b, cost));
                }
            }
            let Some((b, cost)) = best else { continue };
            if cost < removal * (1.0 - 1e-12) {
                for (j, &v) in p.iter().enumerate() {
                    sums.row_mut(a)[j] -= v;
                    sums.row_mut(b)[j] += v;
                }
                counts[a] -= 1;
                counts[b] += 1;
                labels[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        any = true;
    }
    any
}
