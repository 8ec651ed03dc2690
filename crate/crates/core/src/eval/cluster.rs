//! k-means with k-means++ seeding, and normalized spectral clustering.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::SimilarityState;
use crate::error::{AgeError, Result};
use crate::spectral::top_m_eigenpairs;

pub const KMEANS_MAX_ITER: usize = 300;
pub const SPECTRAL_RESTARTS: usize = 10;

/// Hard partition of the nodes into `m` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub m: usize,
    /// Set when the input carries no usable structure for `m` clusters
    /// (e.g. a rank-one similarity matrix).
    pub degenerate: bool,
}

impl ClusterResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// A fitted k-means model.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(points: ArrayView2<'_, f64>, m: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::<f64>::zeros((m, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centroids.row(0))).collect();
    for c in 1..m {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn nearest(points: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    points
        .axis_iter(Axis(0))
        .map(|p| {
            let mut best = (0usize, f64::INFINITY);
            for (c, row) in centroids.axis_iter(Axis(0)).enumerate() {
                let d = sq_dist(p, row);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn recompute_centroids(points: ArrayView2<'_, f64>, assign: &[usize], m: usize, prev: &Array2<f64>) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((m, points.ncols()));
    let mut counts = vec![0usize; m];
    for (p, &a) in points.axis_iter(Axis(0)).zip(assign) {
        sums.row_mut(a).scaled_add(1.0, &p);
        counts[a] += 1;
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            sums.row_mut(c).mapv_inplace(|v| v / cnt as f64);
        } else {
            sums.row_mut(c).assign(&prev.row(c));
        }
    }
    sums
}

/// One k-means run from a k-means++ start.
pub fn kmeans_fit(points: ArrayView2<'_, f64>, m: usize, rng: &mut impl Rng, max_iter: usize) -> Result<KMeansFit> {
    let n = points.nrows();
    if m == 0 || m > n {
        return Err(AgeError::Domain(format!("cannot form {m} clusters from {n} points")));
    }
    let mut centroids = plus_plus_init(points, m, rng);
    let mut assign: Vec<usize> = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let (mut next, mut dist) = nearest(points, &centroids);
        // Empty clusters take the point farthest from its centroid, drawn from
        // clusters that can spare one.
        let mut sizes = vec![0usize; m];
        for &a in &next {
            sizes[a] += 1;
        }
        for c in 0..m {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[next[i]] > 1)
                .fold(None::<(usize, f64)>, |best, i| match best {
                    Some((_, d)) if d >= dist[i] => best,
                    _ => Some((i, dist[i])),
                });
            if let Some((i, _)) = donor {
                sizes[next[i]] -= 1;
                next[i] = c;
                sizes[c] = 1;
                dist[i] = 0.0;
            }
        }
        let converged = next == assign;
        assign = next;
        centroids = recompute_centroids(points, &assign, m, &centroids);
        if converged {
            break;
        }
    }
    let inertia = points
        .axis_iter(Axis(0))
        .zip(&assign)
        .map(|(p, &a)| sq_dist(p, centroids.row(a)))
        .sum();
    Ok(KMeansFit {
        assignments: assign,
        centroids,
        inertia,
        iterations,
    })
}

/// k-means with k-means++ seeding and Lloyd iterations.
pub fn kmeans(points: ArrayView2<'_, f64>, m: usize, seed: u64) -> Result<ClusterResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = kmeans_fit(points, m, &mut rng, KMEANS_MAX_ITER)?;
    Ok(ClusterResult {
        assignments: fit.assignments,
        m,
        degenerate: false,
    })
}

/// Best-inertia k-means over several restarts.
pub fn kmeans_restarts(points: ArrayView2<'_, f64>, m: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let fit = kmeans_fit(points, m, &mut rng, KMEANS_MAX_ITER)?;
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn normalize_rows(mut v: Array2<f64>) -> Array2<f64> {
    for mut row in v.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
    v
}

fn finish(embedding: Array2<f64>, values: &Array1<f64>, m: usize, seed: u64) -> Result<ClusterResult> {
    let top = values.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let degenerate = values.get(m - 1).is_none_or(|&v| v.abs() <= 1e-10 * top);
    let fit = kmeans_restarts(normalize_rows(embedding).view(), m, SPECTRAL_RESTARTS, seed)?;
    Ok(ClusterResult {
        assignments: fit.assignments,
        m,
        degenerate,
    })
}

/// Normalized spectral clustering of a dense non-negative similarity matrix:
/// top-`m` eigenvectors of `D^{-1/2} S D^{-1/2}`, row-normalized, then k-means.
pub fn spectral_clustering(s: &SimilarityState, m: usize, seed: u64) -> Result<ClusterResult> {
    let n = s.n();
    if m < 2 || m > n {
        return Err(AgeError::Domain(format!("cannot form {m} clusters from {n} nodes")));
    }
    let deg = s.s.sum_axis(Axis(1));
    if let Some(i) = deg.iter().position(|&d| d <= 0.0) {
        return Err(AgeError::Domain(format!("node {i} has zero similarity degree")));
    }
    let inv = deg.mapv(|d| 1.0 / d.sqrt());
    let mut norm = s.s.clone();
    for ((i, j), v) in norm.indexed_iter_mut() {
        *v *= inv[i] * inv[j];
    }
    let (values, vectors) = top_m_eigenpairs(norm.view(), m, seed)?;
    finish(vectors, &values, m, seed)
}

/// Spectral clustering of `S = UUᵀ` given the row-normalized, non-negative
/// factor `U` (n×h). Works on the h×h Gram matrix when `h < n`, giving the
/// same eigenvectors as the dense route without forming `S`.
pub fn spectral_clustering_factored(u: ArrayView2<'_, f64>, m: usize, seed: u64) -> Result<ClusterResult> {
    let (n, h) = u.dim();
    if h >= n {
        let s = crate::encoder::similarity::gram_similarity(u);
        return spectral_clustering(&s, m, seed);
    }
    if m < 2 || m > n {
        return Err(AgeError::Domain(format!("cannot form {m} clusters from {n} nodes")));
    }
    let deg = u.dot(&u.sum_axis(Axis(0)));
    if let Some(i) = deg.iter().position(|&d| d <= 0.0) {
        return Err(AgeError::Domain(format!("node {i} has zero similarity degree")));
    }
    let mut b = u.to_owned();
    for (mut row, &d) in b.axis_iter_mut(Axis(0)).zip(deg.iter()) {
        row.mapv_inplace(|v| v / d.sqrt());
    }
    let gram = b.t().dot(&b);
    let count = m.min(h);
    let (values, vecs) = top_m_eigenpairs(gram.view(), count, seed)?;
    let mut left = b.dot(&vecs);
    for (j, mut col) in left.axis_iter_mut(Axis(1)).enumerate() {
        let sigma = values[j].max(0.0).sqrt();
        if sigma > 0.0 {
            col.mapv_inplace(|v| v / sigma);
        } else {
            col.fill(0.0);
        }
    }
    let mut full_values = Array1::<f64>::zeros(m);
    full_values.slice_mut(s![..count]).assign(&values);
    let mut embedding = Array2::<f64>::zeros((n, m));
    embedding.slice_mut(s![.., ..count]).assign(&left);
    finish(embedding, &full_values, m, seed)
}
