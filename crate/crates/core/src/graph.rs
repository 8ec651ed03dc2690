//! Attributed graphs and their Laplacians.
//!
//! The stored adjacency never carries self-loops. The renormalized matrices
//! `Ã = I + A`, `D̃` and `L̃_sym = D̃^{-1/2}(D̃ - Ã)D̃^{-1/2} = I - D̃^{-1/2}ÃD̃^{-1/2}`
//! are built on demand by [`laplacians`], together with the plain `L = D - A`.

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::error::{AgeError, Result};
use crate::sparse::SparseMatrix;

/// Undirected attributed graph with unit edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: SparseMatrix,
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
    class_count: Option<usize>,
    class_names: Option<Vec<String>>,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_count(&self) -> Option<usize> {
        self.class_count
    }

    /// Original class names, indexed by class id, when the graph was loaded from labelled files.
    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .triplets()
            .filter(|&(i, j, _)| i < j)
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i, j) != 0.0
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.adjacency.row(i).0.len()).collect()
    }

    /// Same nodes, features and labels with a different edge set.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut g = build_graph(edges, self.features.clone(), self.labels.clone())?;
        g.class_count = self.class_count;
        g.class_names = self.class_names.clone();
        Ok(g)
    }

    /// Same topology and labels with replaced features.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Graph> {
        if features.nrows() != self.n {
            return Err(AgeError::Input(format!(
                "feature matrix has {} rows, graph has {} nodes",
                features.nrows(),
                self.n
            )));
        }
        let mut g = self.clone();
        g.features = features;
        Ok(g)
    }

    /// Attaches class names; `names.len()` becomes the class count.
    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Graph> {
        if let Some(labels) = &self.labels {
            if let Some(&bad) = labels.iter().find(|&&l| l >= names.len()) {
                return Err(AgeError::Input(format!(
                    "label {bad} has no class name ({} names given)",
                    names.len()
                )));
            }
        }
        self.class_count = Some(names.len());
        self.class_names = Some(names);
        Ok(self)
    }
}

/// Builds a graph from an edge list over the rows of `features`.
///
/// Edges are symmetrized, duplicates collapse and self-loops are dropped.
pub fn build_graph(edges: &[(usize, usize)], features: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Graph> {
    let n = features.nrows();
    if n == 0 || features.ncols() == 0 {
        return Err(AgeError::Input("feature matrix must be non-empty".into()));
    }
    let mut set = BTreeSet::new();
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(AgeError::Input(format!(
                "edge ({i}, {j}) references a node outside [0, {n})"
            )));
        }
        if i != j {
            set.insert((i, j));
            set.insert((j, i));
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, n, set.into_iter().map(|(i, j)| (i, j, 1.0)))?;

    let class_count = match &labels {
        Some(l) if l.len() != n => return Err(AgeError::Input(format!("{} labels given for {n} nodes", l.len()))),
        Some(l) => Some(l.iter().copied().max().map_or(0, |m| m + 1)),
        None => None,
    };

    Ok(Graph {
        n,
        adjacency,
        features,
        labels,
        class_count,
        class_names: None,
    })
}

/// Adjacency-derived matrices used by the smoothing filter.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    /// `Ã = I + A`.
    pub a_tilde: SparseMatrix,
    /// Row sums of `Ã`; every entry is at least one.
    pub d_tilde: Vec<f64>,
    /// `D̃^{-1/2}(D̃ - Ã)D̃^{-1/2}`.
    pub l_sym: SparseMatrix,
    /// `D - A` on the loop-free adjacency.
    pub l_unnorm: SparseMatrix,
}

pub fn laplacians(g: &Graph) -> LaplacianBundle {
    let n = g.node_count();
    let a = g.adjacency();
    let a_tilde = SparseMatrix::from_triplets(n, n, a.triplets().chain((0..n).map(|i| (i, i, 1.0))))
        .expect("indices come from a valid adjacency");
    let d_tilde = a_tilde.row_sums();
    let inv_sqrt: Vec<f64> = d_tilde.iter().map(|d| 1.0 / d.sqrt()).collect();

    let l_sym = SparseMatrix::from_triplets(
        n,
        n,
        a_tilde.triplets().map(|(i, j, v)| {
            let scaled = v * inv_sqrt[i] * inv_sqrt[j];
            if i == j {
                (i, j, 1.0 - scaled)
            } else {
                (i, j, -scaled)
            }
        }),
    )
    .expect("indices come from a valid adjacency");

    let degrees = a.row_sums();
    let l_unnorm = SparseMatrix::from_triplets(
        n,
        n,
        a.triplets()
            .map(|(i, j, v)| (i, j, -v))
            .chain(degrees.iter().enumerate().map(|(i, &d)| (i, i, d))),
    )
    .expect("indices come from a valid adjacency");

    LaplacianBundle {
        a_tilde,
        d_tilde,
        l_sym,
        l_unnorm,
    }
}

/// `xᵀLx / xᵀx`.
pub fn rayleigh_quotient(l: &SparseMatrix, x: &[f64]) -> Result<f64> {
    if x.len() != l.cols() {
        return Err(AgeError::Domain(format!(
            "signal of length {} for a matrix of order {}",
            x.len(),
            l.cols()
        )));
    }
    let denom: f64 = x.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(AgeError::Domain(
            "rayleigh quotient of the zero vector is undefined".into(),
        ));
    }
    let lx = l.mul_vec(x);
    let num: f64 = lx.iter().zip(x).map(|(a, b)| a * b).sum();
    Ok(num / denom)
}
