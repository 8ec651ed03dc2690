//! Dataset files, link splits, synthetic graphs, run configuration and
//! output artifacts.

pub mod artifacts;
pub mod config;
pub mod loader;
pub mod sbm;
pub mod split;

pub use artifacts::{read_snapshot, write_run};
pub use config::{RunConfig, RunMode, Variant};
pub use loader::{
    load_dataset, read_features, save_dataset, write_features_bin, write_features_tsv, DatasetFormat, DatasetSpec,
    FeatureKind, FEATURE_MAGIC,
};
pub use sbm::generate_sbm;
pub use split::{link_split, Edge, LinkSplit};
