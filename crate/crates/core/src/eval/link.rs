//! Inner-product link decoder and ranking metrics.

use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{AgeError, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// σ(z_i·z_j) for each pair.
pub fn link_scores(z: ArrayView2<'_, f64>, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = z.nrows();
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(AgeError::Input(format!("pair ({i}, {j}) outside {n} nodes")));
            }
            Ok(sigmoid(z.row(i).dot(&z.row(j))))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankingScores {
    pub auc: f64,
    pub ap: f64,
}

/// ROC AUC with ties counted as one half. Computed from sorted scores, which
/// gives the same value as counting all positive/negative pairs.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_sides(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let (mut p, mut q) = (0usize, 0usize);
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        wins += p as f64 * (neg_below as f64 + 0.5 * q as f64);
        neg_below += q;
        i = j;
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

/// Mean precision at each positive in the descending ranking; ties keep the
/// input order with positives listed before negatives.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_sides(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &(_, is_pos)) in all.iter().enumerate() {
        if is_pos {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / pos.len() as f64)
}

pub fn ranking_metrics(pos: &[f64], neg: &[f64]) -> Result<RankingScores> {
    Ok(RankingScores {
        auc: auc(pos, neg)?,
        ap: average_precision(pos, neg)?,
    })
}

fn check_sides(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(AgeError::Domain(format!(
            "ranking needs both sides: {} positive, {} negative scores",
            pos.len(),
            neg.len()
        )));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(AgeError::Domain("NaN score".into()));
    }
    Ok(())
}
