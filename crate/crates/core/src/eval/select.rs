//! Choosing one snapshot out of a training run.

use crate::encoder::{row_normalize, EmbeddingSnapshot};
use crate::error::{AgeError, Result};

use super::{dbi, link_scores, ranking_metrics, spectral_clustering_factored};

/// How snapshots are compared.
#[derive(Debug, Clone)]
pub enum SelectMode<'a> {
    /// Spectral clustering into `clusters` groups, keep the lowest DBI.
    Dbi { clusters: usize, seed: u64 },
    /// Keep the highest AUC on held-out validation pairs.
    ValAuc {
        pos: &'a [(usize, usize)],
        neg: &'a [(usize, usize)],
    },
}

/// Cosine-normalized rows of a snapshot; these are what the similarity
/// matrix and the link decoder consume.
pub fn unit_rows(snapshot: &EmbeddingSnapshot) -> Result<ndarray::Array2<f64>> {
    row_normalize(snapshot.z.view())
}

/// Scores every snapshot (filling `dbi` or `val_auc`) and returns the index
/// of the best one. Ties go to the earliest snapshot.
pub fn select_snapshot(snapshots: &mut [EmbeddingSnapshot], mode: &SelectMode<'_>) -> Result<usize> {
    if snapshots.is_empty() {
        return Err(AgeError::Input("no snapshots to select from".into()));
    }
    if snapshots.len() == 1 {
        return Ok(0);
    }
    for snap in snapshots.iter_mut() {
        match *mode {
            SelectMode::Dbi { clusters, seed } => {
                if snap.dbi.is_none() {
                    let u = unit_rows(snap)?;
                    let part = spectral_clustering_factored(u.view(), clusters, seed)?;
                    snap.dbi = Some(match dbi(snap.z.view(), &part) {
                        Ok(score) => score.value,
                        Err(AgeError::Domain(_)) => f64::INFINITY,
                        Err(e) => return Err(e),
                    });
                }
            }
            SelectMode::ValAuc { pos, neg } => {
                if snap.val_auc.is_none() {
                    let u = unit_rows(snap)?;
                    let ps = link_scores(u.view(), pos)?;
                    let ns = link_scores(u.view(), neg)?;
                    snap.val_auc = Some(ranking_metrics(&ps, &ns)?.auc);
                }
            }
        }
    }
    Ok(best_index(snapshots, mode))
}

fn best_index(snapshots: &[EmbeddingSnapshot], mode: &SelectMode<'_>) -> usize {
    let mut order: Vec<usize> = (0..snapshots.len()).collect();
    order.sort_by_key(|&i| snapshots[i].epoch);
    let key = |i: usize| match mode {
        SelectMode::Dbi { .. } => snapshots[i].dbi.unwrap_or(f64::INFINITY),
        SelectMode::ValAuc { .. } => -snapshots[i].val_auc.unwrap_or(f64::NEG_INFINITY),
    };
    let mut best = order[0];
    for &i in &order[1..] {
        if key(i) < key(best) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn snaps(dbis: &[f64]) -> Vec<EmbeddingSnapshot> {
        dbis.iter()
            .enumerate()
            .map(|(i, &d)| {
                let mut s = EmbeddingSnapshot::new(Array2::ones((3, 2)), i * 10);
                s.dbi = Some(d);
                s
            })
            .collect()
    }

    #[test]
    fn argmin_and_ties() {
        let mode = SelectMode::Dbi { clusters: 2, seed: 0 };
        assert_eq!(select_snapshot(&mut snaps(&[0.8, 0.3, 0.5]), &mode).unwrap(), 1);
        assert_eq!(select_snapshot(&mut snaps(&[0.4, 0.4, 0.4]), &mode).unwrap(), 0);
        assert_eq!(select_snapshot(&mut snaps(&[9.0]), &mode).unwrap(), 0);
        assert!(select_snapshot(&mut [], &mode).is_err());
    }
}
