//! Clustering agreement metrics (ACC, NMI, ARI) and the Davies–Bouldin index.

use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;

use super::ClusterResult;
use crate::error::{AgeError, Result};

/// Normalization of mutual information in NMI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNorm {
    #[default]
    Arithmetic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

/// Dense contingency table with predicted ids on rows and true ids on columns.
pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<Array2<usize>> {
    if pred.len() != truth.len() {
        return Err(AgeError::Domain(format!(
            "label lengths differ: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(AgeError::Domain("no labels to compare".into()));
    }
    let rows = pred.iter().max().map_or(0, |m| m + 1);
    let cols = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = Array2::<usize>::zeros((rows, cols));
    for (&p, &t) in pred.iter().zip(truth) {
        table[[p, t]] += 1;
    }
    Ok(table)
}

/// Minimum-cost perfect assignment on a square matrix (Kuhn–Munkres with
/// potentials, O(n³)). Returns the column chosen for each row.
pub fn hungarian_min(cost: ArrayView2<'_, f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Accuracy under the best one-to-one matching of cluster ids to labels.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let size = table.nrows().max(table.ncols());
    let top = table.iter().copied().max().unwrap_or(0) as f64;
    let mut cost = Array2::<f64>::from_elem((size, size), top);
    for ((r, c), &v) in table.indexed_iter() {
        cost[[r, c]] = top - v as f64;
    }
    let matching = hungarian_min(cost.view());
    let hit: usize = matching
        .iter()
        .enumerate()
        .filter(|&(r, &c)| r < table.nrows() && c < table.ncols())
        .map(|(r, &c)| table[[r, c]])
        .sum();
    Ok(hit as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi(pred: &[usize], truth: &[usize], norm: NmiNorm) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let rows = table.sum_axis(Axis(1));
    let cols = table.sum_axis(Axis(0));
    let mut mi = 0.0;
    for ((r, c), &v) in table.indexed_iter() {
        if v > 0 {
            let v = v as f64;
            mi += v / n * (v * n / (rows[r] as f64 * cols[c] as f64)).ln();
        }
    }
    let hp = entropy(rows.iter().copied(), n);
    let ht = entropy(cols.iter().copied(), n);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let denom = match norm {
        NmiNorm::Arithmetic => 0.5 * (hp + ht),
        NmiNorm::Geometric => (hp * ht).sqrt(),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let index: f64 = table.iter().map(|&v| comb2(v)).sum();
    let a: f64 = table.sum_axis(Axis(1)).iter().map(|&v| comb2(v)).sum();
    let b: f64 = table.sum_axis(Axis(0)).iter().map(|&v| comb2(v)).sum();
    let total = comb2(pred.len());
    if total == 0.0 {
        return Ok(1.0);
    }
    // Multiplied through by `total` so integer-valued terms stay exact.
    let num = index * total - a * b;
    let den = 0.5 * (a + b) * total - a * b;
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(num / den)
}

pub fn clustering_metrics(pred: &[usize], truth: &[usize]) -> Result<ClusteringScores> {
    clustering_metrics_with(pred, truth, NmiNorm::Arithmetic)
}

pub fn clustering_metrics_with(pred: &[usize], truth: &[usize], norm: NmiNorm) -> Result<ClusteringScores> {
    Ok(ClusteringScores {
        acc: accuracy(pred, truth)?,
        nmi: nmi(pred, truth, norm)?,
        ari: ari(pred, truth)?,
    })
}

/// Value returned by [`dbi`] when two clusters share a centroid.
pub const DBI_SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DbiScore {
    pub value: f64,
    /// True when a pair of distinct clusters had coincident centroids.
    pub degenerate: bool,
}

/// Davies–Bouldin index with Euclidean distances. Lower is better.
pub fn dbi(z: ArrayView2<'_, f64>, clusters: &ClusterResult) -> Result<DbiScore> {
    if clusters.assignments.len() != z.nrows() {
        return Err(AgeError::Domain(format!(
            "{} assignments for {} embedding rows",
            clusters.assignments.len(),
            z.nrows()
        )));
    }
    let m = clusters.m;
    let mut centroids = Array2::<f64>::zeros((m, z.ncols()));
    let mut counts = vec![0usize; m];
    for (row, &a) in z.axis_iter(Axis(0)).zip(&clusters.assignments) {
        centroids.row_mut(a).scaled_add(1.0, &row);
        counts[a] += 1;
    }
    let live: Vec<usize> = (0..m).filter(|&c| counts[c] > 0).collect();
    if live.len() < 2 {
        return Err(AgeError::Domain("DBI needs at least two non-empty clusters".into()));
    }
    for &c in &live {
        let cnt = counts[c] as f64;
        centroids.row_mut(c).mapv_inplace(|v| v / cnt);
    }
    let mut scatter = vec![0.0; m];
    for (row, &a) in z.axis_iter(Axis(0)).zip(&clusters.assignments) {
        let diff = &row - &centroids.row(a);
        scatter[a] += diff.dot(&diff).sqrt();
    }
    for &c in &live {
        scatter[c] /= counts[c] as f64;
    }
    let mut degenerate = false;
    let mut total = 0.0;
    for &i in &live {
        let mut worst = 0.0f64;
        for &j in &live {
            if i == j {
                continue;
            }
            let diff = &centroids.row(i) - &centroids.row(j);
            let sep = diff.dot(&diff).sqrt();
            let ratio = if sep > 0.0 {
                (scatter[i] + scatter[j]) / sep
            } else {
                degenerate = true;
                DBI_SENTINEL
            };
            worst = worst.max(ratio);
        }
        total += worst;
    }
    let value = if degenerate {
        DBI_SENTINEL
    } else {
        total / live.len() as f64
    };
    Ok(DbiScore { value, degenerate })
}
