//! Stochastic block model graphs with planted labels.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{AgeError, Result};
use crate::graph::{build_graph, Graph};

/// Independent edges with probability `p_in` inside a block and `p_out`
/// across blocks. Node features are the one-hot block id padded to
/// `feature_dim` columns, plus Gaussian noise of standard deviation
/// `feature_noise`. Labels are block ids.
pub fn generate_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    feature_noise: f64,
    seed: u64,
) -> Result<Graph> {
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(AgeError::Config(format!(
            "need 0 <= p_out < p_in <= 1, got p_in {p_in}, p_out {p_out}"
        )));
    }
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(AgeError::Config("every block needs at least one node".into()));
    }
    if feature_dim < block_sizes.len() {
        return Err(AgeError::Config(format!(
            "feature_dim {feature_dim} cannot hold a one-hot signature for {} blocks",
            block_sizes.len()
        )));
    }
    let noise =
        Normal::new(0.0, feature_noise).map_err(|e| AgeError::Config(format!("feature noise {feature_noise}: {e}")))?;
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let mut x = Array2::<f64>::zeros((n, feature_dim));
    for (i, &l) in labels.iter().enumerate() {
        x[[i, l]] = 1.0;
        for v in x.row_mut(i) {
            *v += noise.sample(&mut rng);
        }
    }
    build_graph(&edges, x, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_edges_give_cliques() {
        let g = generate_sbm(&[3, 4], 1.0, 0.0, 2, 0.0, 1).unwrap();
        assert_eq!(g.edge_count(), 3 + 6);
        assert!(g.has_edge(0, 2) && g.has_edge(3, 6) && !g.has_edge(2, 3));
        assert_eq!(g.labels().unwrap(), &[0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn equal_probabilities_rejected() {
        assert!(generate_sbm(&[5, 5], 0.2, 0.2, 2, 0.1, 0).is_err());
    }
}
