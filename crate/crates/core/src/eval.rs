//! Clustering agreement, parameter recovery, and the k-means baseline.

use itertools::Itertools;
use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::network::RawMultiplex;
use crate::seed::derive_seed;

/// Largest K for which [`aligned_frobenius`] enumerates label permutations.
pub const MAX_ALIGN_K: usize = 8;

fn pairs(x: u64) -> i128 {
    (x as i128) * (x as i128 - 1) / 2
}

/// Adjusted Rand index of two labelings of the same nodes.
///
/// All counts are integers, so the index is one correctly rounded division.
/// Two partitions that are both a single cluster, or both all singletons,
/// score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("labelings of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("ARI needs at least two nodes".into()));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let index: i128 = table.iter().map(|&c| pairs(c)).sum();
    let sa: i128 = rows.iter().map(|&c| pairs(c)).sum();
    let sb: i128 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);
    // (index - sa sb / total) / ((sa + sb) / 2 - sa sb / total), scaled by 2 total
    let num = 2 * (total * index - sa * sb);
    let den = total * (sa + sb) - 2 * sa * sb;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusMetrics {
    /// Mean over layers of `||P - P̂||_F` under the chosen alignment.
    pub frobenius_p: f64,
    /// Mean over layers of `||A - Â||_F` under the chosen alignment.
    pub frobenius_a: f64,
    /// `permutation[k]` is the estimated cluster matched to true cluster `k`.
    pub permutation: Vec<usize>,
}

fn layer_distance(truth: &Array2<f64>, est: &Array2<f64>, perm: &[usize]) -> f64 {
    truth
        .indexed_iter()
        .map(|((k, h), &t)| (t - est[[perm[k], perm[h]]]).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn mean_distance(truth: &[Array2<f64>], est: &[Array2<f64>], perm: &[usize]) -> f64 {
    truth.iter().zip(est).map(|(t, e)| layer_distance(t, e, perm)).sum::<f64>() / truth.len() as f64
}

/// Align estimated clusters to the truth by exhaustive search over the
/// permutation minimizing the summed per-layer distance on `A`, then report
/// per-layer mean Frobenius distances for `P` and `A`.
pub fn aligned_frobenius(truth: &ModelParams, est: &ModelParams) -> Result<FrobeniusMetrics> {
    let k = truth.k();
    if est.k() != k || est.layers() != truth.layers() {
        return Err(Error::DimensionMismatch(format!(
            "truth has K={k}, S={}; estimate has K={}, S={}",
            truth.layers(),
            est.k(),
            est.layers()
        )));
    }
    if k > MAX_ALIGN_K {
        return Err(Error::InvalidParameter(format!("alignment supports K <= {MAX_ALIGN_K}, got {k}")));
    }
    if truth.layers() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in (0..k).permutations(k) {
        let d: f64 = truth.a.iter().zip(&est.a).map(|(t, e)| layer_distance(t, e, &perm)).sum();
        if best.as_ref().is_none_or(|(_, b)| d < *b) {
            best = Some((perm, d));
        }
    }
    let (permutation, _) = best.expect("at least one permutation");
    Ok(FrobeniusMetrics {
        frobenius_p: mean_distance(&truth.p, &est.p, &permutation),
        frobenius_a: mean_distance(&truth.a, &est.a, &permutation),
        permutation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

fn kmeans_pp<R: Rng>(data: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = data.nrows();
    let mut centroids = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(data: &Array2<f64>, mut centroids: Array2<f64>, max_iter: usize) -> KMeansFit {
    let (n, k) = (data.nrows(), centroids.nrows());
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .map(|c| (c, sq_dist(data.row(i), centroids.row(c))))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|(c, _)| c)
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            sums.row_mut(c).scaled_add(1.0, &data.row(i));
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            } else {
                // revive an empty cluster at the point worst served by its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(data.row(a), centroids.row(labels[a]));
                        let db = sq_dist(data.row(b), centroids.row(labels[b]));
                        da.total_cmp(&db)
                    })
                    .unwrap();
                centroids.row_mut(c).assign(&data.row(far));
                labels[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(data.row(i), centroids.row(labels[i]))).sum();
    KMeansFit { labels, centroids, inertia }
}

/// Lloyd's algorithm from `restarts` k-means++ seedings; keeps the lowest inertia.
pub fn kmeans(data: &Array2<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    let n = data.nrows();
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidParameter("K and restarts must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let fit = lloyd(data, kmeans_pp(data, k, &mut rng), 300);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// k-means on raw weights: node `i` is the concatenation of its outgoing rows in every layer.
pub fn kmeans_baseline(raw: &RawMultiplex, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = raw.n();
    let data = Array2::from_shape_fn((n, raw.layers() * n), |(i, col)| raw.weights[col / n][[i, col % n]]);
    Ok(kmeans(&data, k, 10, seed)?.labels)
}
