//! Affinity construction, normalized-cut spectral clustering, and accuracy
//! scoring against ground truth.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gram::decompose_symmetric;

/// Number of k-means restarts inside NCut; best within-cluster sum of
/// squares wins.
const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITERS: usize = 300;

/// Labels, the affinity they were derived from, and (when ground truth is
/// known) the accuracy.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub affinity: DMatrix<f64>,
    pub k: usize,
    pub accuracy: Option<f64>,
}

/// Entrywise (|Z_ij| + |Z_ji|)/2. Symmetric and nonnegative by construction.
pub fn symmetrize_affinity(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    DMatrix::from_fn(n, z.ncols(), |i, j| {
        0.5 * (z[(i, j)].abs() + z[(j, i)].abs())
    })
}

/// Normalized-cut spectral clustering.
///
/// Forms D^{-1/2}·affinity·D^{-1/2} (with 1e-12 added to the affinity
/// diagonal so isolated samples do not divide by zero), embeds each sample
/// as the row of the top-k eigenvector matrix, row-normalizes, and runs
/// seeded k-means.
pub fn ncut_cluster(affinity: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = affinity.nrows();
    if affinity.ncols() != n {
        return Err(Error::Dimension(format!(
            "affinity must be square, got {}×{}",
            n,
            affinity.ncols()
        )));
    }
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n });
    }

    let mut a = affinity.clone();
    for i in 0..n {
        a[(i, i)] += 1e-12;
    }
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|i| 1.0 / a.row(i).sum().sqrt()).collect();
    let normalized = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j]);

    let dec = decompose_symmetric(&normalized)?;
    let mut embedding = dec.eigvecs.columns(0, k).into_owned();
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 1e-12 {
            row /= norm;
        }
    }

    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| embedding.row(i).iter().copied().collect())
        .collect();
    Ok(kmeans(&points, k, seed))
}

/// Seeded k-means with k-means++ initialization and multiple restarts.
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut best_labels = vec![0; points.len()];
    let mut best_wcss = f64::INFINITY;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(restart as u64)),
        );
        let (labels, wcss) = kmeans_once(points, k, &mut rng);
        if wcss < best_wcss {
            best_wcss = wcss;
            best_labels = labels;
        }
    }
    best_labels
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let dim = points[0].len();
    let mut centers = kmeanspp_init(points, k, rng);
    let mut labels = vec![0usize; n];

    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let nearest = (0..k)
                .min_by(|&a, &b| {
                    dist_sq(p, &centers[a])
                        .partial_cmp(&dist_sq(p, &centers[b]))
                        .unwrap()
                })
                .unwrap();
            if labels[i] != nearest {
                labels[i] = nearest;
                changed = true;
            }
        }
        // recompute centers; empty clusters keep their previous center
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, &v) in sums[labels[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (ctr, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *ctr = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let wcss = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| dist_sq(p, &centers[l]))
        .sum();
    (labels, wcss)
}

fn kmeanspp_init(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.gen_range(0..n)].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| dist_sq(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        };
        centers.push(points[next].clone());
    }
    centers
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fraction of points correctly labeled under the best bijection between
/// predicted and true labels, found by Hungarian assignment on the
/// contingency table.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset(0));
    }
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let side = kp.max(kt);
    let mut contingency = vec![vec![0.0f64; side]; side];
    for (&p, &t) in pred.iter().zip(truth) {
        contingency[p][t] += 1.0;
    }
    let assignment = max_assignment(&contingency);
    let matched: f64 = assignment
        .iter()
        .enumerate()
        .map(|(row, &col)| contingency[row][col])
        .sum();
    Ok(matched / pred.len() as f64)
}

/// Maximum-weight perfect assignment on a square matrix, returning for each
/// row its assigned column. Hungarian algorithm with potentials, O(n³).
fn max_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    let big = weights
        .iter()
        .flatten()
        .cloned()
        .fold(0.0f64, f64::max);
    // minimize (big - w)
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(|&w| big - w).collect())
        .collect();

    const INF: f64 = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_to_row = vec![0usize; n + 1]; // 0 = unassigned sentinel
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_to_row[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_to_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_to_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if col_to_row[j] != 0 {
            row_to_col[col_to_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}
