//! BIRCH: a clustering-feature tree followed by K-Means on leaf centroids.

use super::kmeans::kmeans_matrix;
use super::{ClusterConfig, ClusterError, ClusterModel, ClusterResult, FeatureMatrix};
use crate::numerics::{derive_seed, make_rng, median_off_diagonal, pairwise_distances, squared_euclidean, Matrix};

const SUBSAMPLE: usize = 256;
const SUBSAMPLE_STREAM: u64 = 0x6269;
const MAX_THRESHOLD_HALVINGS: usize = 64;

/// Clustering feature: count, linear sum and scalar sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct CfEntry {
    pub n: usize,
    pub ls: Vec<f64>,
    pub ss: f64,
}

impl CfEntry {
    pub fn from_point(x: &[f64]) -> Self {
        Self {
            n: 1,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).sum(),
        }
    }

    pub fn merge(&mut self, other: &CfEntry) {
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        self.ss += other.ss;
    }

    pub fn merged(&self, other: &CfEntry) -> CfEntry {
        let mut m = self.clone();
        m.merge(other);
        m
    }

    pub fn centroid(&self) -> Vec<f64> {
        let inv = 1.0 / self.n as f64;
        self.ls.iter().map(|v| v * inv).collect()
    }

    /// Root-mean-square distance of the members to the centroid.
    pub fn radius(&self) -> f64 {
        let nf = self.n as f64;
        let c2: f64 = self.ls.iter().map(|v| (v / nf) * (v / nf)).sum();
        (self.ss / nf - c2).max(0.0).sqrt()
    }
}

/// Summary of a built CF tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CfTreeStats {
    pub node_count: usize,
    pub leaf_entry_count: usize,
    pub threshold: f64,
    pub branching: usize,
    /// Leaf entries in creation order.
    pub leaf_entries: Vec<CfEntry>,
}

#[derive(Debug, Clone, Copy)]
enum Link {
    Child(usize),
    Leaf(usize),
}

#[derive(Debug, Clone)]
struct Entry {
    cf: CfEntry,
    link: Link,
}

#[derive(Debug, Clone)]
struct Node {
    leaf: bool,
    entries: Vec<Entry>,
}

struct CfTree {
    nodes: Vec<Node>,
    root: usize,
    threshold: f64,
    branching: usize,
    leaf_count: usize,
}

fn closest_entry(entries: &[Entry], x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        let d = squared_euclidean(&e.cf.centroid(), x);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn node_cf(node: &Node) -> CfEntry {
    let mut it = node.entries.iter();
    let mut cf = it.next().expect("nodes are never empty").cf.clone();
    for e in it {
        cf.merge(&e.cf);
    }
    cf
}

impl CfTree {
    fn new(threshold: f64, branching: usize) -> Self {
        Self {
            nodes: vec![Node {
                leaf: true,
                entries: Vec::new(),
            }],
            root: 0,
            threshold,
            branching,
            leaf_count: 0,
        }
    }

    /// Inserts a point and returns the id of the leaf entry holding it.
    fn insert(&mut self, x: &[f64]) -> usize {
        let (leaf_id, split) = self.insert_at(self.root, x);
        if let Some(sibling) = split {
            let old_root = self.root;
            let entries = vec![
                Entry {
                    cf: node_cf(&self.nodes[old_root]),
                    link: Link::Child(old_root),
                },
                Entry {
                    cf: node_cf(&self.nodes[sibling]),
                    link: Link::Child(sibling),
                },
            ];
            self.nodes.push(Node { leaf: false, entries });
            self.root = self.nodes.len() - 1;
        }
        leaf_id
    }

    /// Returns the leaf id and, if `node` split, the index of its new sibling.
    fn insert_at(&mut self, node: usize, x: &[f64]) -> (usize, Option<usize>) {
        let point = CfEntry::from_point(x);
        if self.nodes[node].leaf {
            if let Some(i) = closest_entry(&self.nodes[node].entries, x) {
                let candidate = self.nodes[node].entries[i].cf.merged(&point);
                if candidate.radius() <= self.threshold {
                    self.nodes[node].entries[i].cf = candidate;
                    let Link::Leaf(id) = self.nodes[node].entries[i].link else {
                        unreachable!("leaf nodes hold leaf entries")
                    };
                    return (id, None);
                }
            }
            let id = self.leaf_count;
            self.leaf_count += 1;
            self.nodes[node].entries.push(Entry {
                cf: point,
                link: Link::Leaf(id),
            });
            return (id, self.split_if_needed(node));
        }

        let i = closest_entry(&self.nodes[node].entries, x).expect("inner nodes are never empty");
        let Link::Child(child) = self.nodes[node].entries[i].link else {
            unreachable!("inner nodes hold child links")
        };
        let (id, child_split) = self.insert_at(child, x);
        match child_split {
            None => self.nodes[node].entries[i].cf.merge(&point),
            Some(sibling) => {
                self.nodes[node].entries[i].cf = node_cf(&self.nodes[child]);
                let sibling_entry = Entry {
                    cf: node_cf(&self.nodes[sibling]),
                    link: Link::Child(sibling),
                };
                self.nodes[node].entries.insert(i + 1, sibling_entry);
            }
        }
        (id, self.split_if_needed(node))
    }

    /// Splits an overfull node around its farthest pair of entries.
    fn split_if_needed(&mut self, node: usize) -> Option<usize> {
        if self.nodes[node].entries.len() <= self.branching {
            return None;
        }
        let entries = std::mem::take(&mut self.nodes[node].entries);
        let centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.cf.centroid()).collect();
        let mut seeds = (0, 1, f64::NEG_INFINITY);
        for a in 0..entries.len() {
            for b in (a + 1)..entries.len() {
                let d = squared_euclidean(&centroids[a], &centroids[b]);
                if d > seeds.2 {
                    seeds = (a, b, d);
                }
            }
        }
        let (sa, sb, _) = seeds;
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, e) in entries.into_iter().enumerate() {
            let to_left = if i == sa {
                true
            } else if i == sb {
                false
            } else {
                squared_euclidean(&centroids[i], &centroids[sa]) <= squared_euclidean(&centroids[i], &centroids[sb])
            };
            if to_left {
                left.push(e);
            } else {
                right.push(e);
            }
        }
        let leaf = self.nodes[node].leaf;
        self.nodes[node].entries = left;
        self.nodes.push(Node { leaf, entries: right });
        Some(self.nodes.len() - 1)
    }

    fn leaf_entries(&self) -> Vec<CfEntry> {
        let mut out: Vec<Option<CfEntry>> = vec![None; self.leaf_count];
        for node in self.nodes.iter().filter(|n| n.leaf) {
            for e in &node.entries {
                if let Link::Leaf(id) = e.link {
                    out[id] = Some(e.cf.clone());
                }
            }
        }
        out.into_iter().map(|e| e.expect("every leaf id is live")).collect()
    }
}

/// Half the median pairwise distance of a seeded subsample of at most 256 rows.
pub fn default_birch_threshold(x: &FeatureMatrix, seed: u64) -> f64 {
    let n = x.n();
    let rows: Vec<usize> = if n <= SUBSAMPLE {
        (0..n).collect()
    } else {
        let mut rng = make_rng(derive_seed(seed, &[SUBSAMPLE_STREAM]));
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..SUBSAMPLE {
            let j = i + rng.next_below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(SUBSAMPLE);
        idx
    };
    let sub = Matrix::from_rows(&rows.iter().map(|&i| x.row(i).to_vec()).collect::<Vec<_>>());
    match median_off_diagonal(&pairwise_distances(&sub)) {
        Some(m) if m > 0.0 => 0.5 * m,
        _ => f64::MIN_POSITIVE,
    }
}

fn build(x: &FeatureMatrix, threshold: f64, branching: usize) -> (CfTree, Vec<usize>) {
    let mut tree = CfTree::new(threshold, branching);
    let point_leaf = (0..x.n()).map(|i| tree.insert(x.row(i))).collect();
    (tree, point_leaf)
}

/// BIRCH clustering.
///
/// If the tree ends with fewer leaf entries than `k`, the threshold is
/// halved and the tree rebuilt; the threshold actually used is reported.
pub fn birch(x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    cfg.validate(x.n())?;
    let mut threshold = cfg.birch_threshold.unwrap_or_else(|| default_birch_threshold(x, cfg.seed));
    let mut attempt = 0;
    let (tree, point_leaf) = loop {
        let (tree, point_leaf) = build(x, threshold, cfg.birch_branching);
        if tree.leaf_count >= cfg.k {
            break (tree, point_leaf);
        }
        attempt += 1;
        if attempt > MAX_THRESHOLD_HALVINGS {
            return Err(ClusterError::Config(format!(
                "only {} distinct CF entries for k = {}",
                tree.leaf_count, cfg.k
            )));
        }
        threshold *= 0.5;
    };

    let leaf_entries = tree.leaf_entries();
    let centroids = Matrix::from_rows(&leaf_entries.iter().map(CfEntry::centroid).collect::<Vec<_>>());
    let global = kmeans_matrix(&centroids, cfg)?;
    let labels = point_leaf.iter().map(|&leaf| global.labels[leaf]).collect();
    Ok(ClusterResult {
        labels,
        centroids: None,
        objective_trace: global.objective_trace,
        iterations: global.iterations,
        converged: global.converged,
        model: Some(ClusterModel::CfTree(CfTreeStats {
            node_count: tree.nodes.len(),
            leaf_entry_count: leaf_entries.len(),
            threshold,
            branching: cfg.birch_branching,
            leaf_entries,
        })),
    })
}
