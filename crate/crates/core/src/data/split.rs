//! Edge hold-out for link prediction.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AgeError, Result};
use crate::graph::Graph;

pub type Edge = (usize, usize);

/// Held-out positives and matched non-edges. All pairs are `(i, j)` with `i < j`.
#[derive(Debug, Clone)]
pub struct LinkSplit {
    pub train_edges: Vec<Edge>,
    pub val_pos: Vec<Edge>,
    pub val_neg: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub test_neg: Vec<Edge>,
    /// All nodes and features, with only the training edges.
    pub residual_graph: Graph,
}

fn count(frac: f64, edges: usize) -> usize {
    (frac * edges as f64).round() as usize
}

/// Removes `round(val_frac·|E|)` and `round(test_frac·|E|)` edges and draws as
/// many non-edges of `g` for each side.
pub fn link_split(g: &Graph, val_frac: f64, test_frac: f64, seed: u64) -> Result<LinkSplit> {
    if !(0.0..1.0).contains(&val_frac) || !(0.0..1.0).contains(&test_frac) || val_frac + test_frac >= 1.0 {
        return Err(AgeError::Config(format!(
            "validation {val_frac} and test {test_frac} fractions must be non-negative and sum below 1"
        )));
    }
    let mut edges = g.edges();
    let n_val = count(val_frac, edges.len());
    let n_test = count(test_frac, edges.len());
    let n = g.node_count() as u64;
    let non_edges = n * (n - 1) / 2 - edges.len() as u64;
    if n_val + n_test > edges.len() || ((n_val + n_test) as u64) > non_edges {
        return Err(AgeError::Config(format!(
            "graph with {} edges and {non_edges} non-edges cannot supply {n_val} validation and {n_test} test pairs",
            edges.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    let test_pos: Vec<Edge> = edges[..n_test].to_vec();
    let val_pos: Vec<Edge> = edges[n_test..n_test + n_val].to_vec();
    let mut train_edges: Vec<Edge> = edges[n_test + n_val..].to_vec();
    train_edges.sort_unstable();

    let negatives = sample_non_edges(g, n_val + n_test, non_edges, &mut rng);
    let test_neg = negatives[..n_test].to_vec();
    let val_neg = negatives[n_test..].to_vec();

    let residual_graph = g.with_edges(&train_edges)?;
    Ok(LinkSplit {
        train_edges,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
        residual_graph,
    })
}

/// `count` distinct unordered non-edges `(i, j)`, `i < j`, drawn uniformly.
fn sample_non_edges(g: &Graph, count: usize, available: u64, rng: &mut impl Rng) -> Vec<Edge> {
    let n = g.node_count();
    if (count as u64) * 4 > available {
        let mut all: Vec<Edge> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        let (picked, _) = all.partial_shuffle(rng, count);
        return picked.to_vec();
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if !g.has_edge(e.0, e.1) && seen.insert(e) {
            out.push(e);
        }
    }
    out
}
