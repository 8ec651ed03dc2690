//! Clustering, metrics, link scoring and snapshot selection.

pub mod cluster;
pub mod link;
pub mod metrics;
pub mod select;

pub use cluster::{
    kmeans, kmeans_fit, kmeans_restarts, spectral_clustering, spectral_clustering_factored, ClusterResult, KMeansFit,
};
pub use link::{auc, average_precision, link_scores, ranking_metrics, sigmoid, RankingScores};
pub use metrics::{
    accuracy, ari, clustering_metrics, clustering_metrics_with, contingency, dbi, hungarian_min, nmi, ClusteringScores,
    DbiScore, NmiNorm, DBI_SENTINEL,
};
pub use select::{select_snapshot, unit_rows, SelectMode};
