use super::matrix::{squared_euclidean, Matrix, SymMatrix};

/// Euclidean distances between all pairs of rows of `x`.
pub fn pairwise_distances(x: &Matrix) -> SymMatrix {
    let n = x.rows();
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            out.set(i, j, squared_euclidean(x.row(i), x.row(j)).sqrt());
        }
    }
    out
}

/// Squared Euclidean distances between all pairs of rows of `x`.
pub fn pairwise_squared_distances(x: &Matrix) -> SymMatrix {
    let n = x.rows();
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            out.set(i, j, squared_euclidean(x.row(i), x.row(j)));
        }
    }
    out
}

/// Median of the strictly-upper-triangular entries; `None` when `n < 2`.
pub fn median_off_diagonal(d: &SymMatrix) -> Option<f64> {
    let n = d.n();
    let mut vals = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            vals.push(d.get(i, j));
        }
    }
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    let mid = vals.len() / 2;
    Some(if vals.len() % 2 == 1 {
        vals[mid]
    } else {
        0.5 * (vals[mid - 1] + vals[mid])
    })
}
