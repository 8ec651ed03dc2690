//! End-to-end runs: clustering, link prediction, the ablation ladder,
//! embedding export and spectrum summaries.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::data::{generate_sbm, link_split, load_dataset, DatasetSpec, RunConfig, Variant};
use crate::encoder::{smoothed_features, train_age, train_encoder, EmbeddingSnapshot, TrainOutcome};
use crate::error::{AgeError, Result};
use crate::eval::{
    clustering_metrics, dbi, link_scores, ranking_metrics, select_snapshot, spectral_clustering_factored, unit_rows,
    ClusterResult, SelectMode,
};
use crate::graph::{laplacians, Graph};
use crate::spectral::{spectrum_summary, SpectrumMode, SpectrumSummary, DENSE_CAP};
use crate::variants::{ls_embedding, train_variant, VariantKind};

/// Planted-partition graph used by the `sbm` dataset name.
pub const SBM_BLOCKS: [usize; 3] = [50, 50, 50];
pub const SBM_P_IN: f64 = 0.3;
pub const SBM_P_OUT: f64 = 0.02;
pub const SBM_FEATURE_DIM: usize = 8;
pub const SBM_NOISE: f64 = 0.1;

/// Metrics of one run. Fields that do not apply are omitted from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dbi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_auc: Option<f64>,
    pub epoch: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// Resolves a dataset argument: `sbm`, a directory, or a name under `root`.
pub fn resolve_graph(dataset: &str, root: Option<&Path>, seed: u64) -> Result<Graph> {
    if dataset == "sbm" {
        return generate_sbm(&SBM_BLOCKS, SBM_P_IN, SBM_P_OUT, SBM_FEATURE_DIM, SBM_NOISE, seed);
    }
    load_dataset(&resolve_spec(dataset, root)?)
}

pub fn resolve_spec(dataset: &str, root: Option<&Path>) -> Result<DatasetSpec> {
    let as_path = PathBuf::from(dataset);
    if as_path.is_dir() {
        let name = as_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dataset.to_string());
        if as_path.join(format!("{name}.content")).is_file() {
            return Ok(DatasetSpec::content_cites(&name, &as_path));
        }
        return Ok(DatasetSpec::tsv(&name, &as_path));
    }
    match root {
        Some(r) => DatasetSpec::locate(dataset, r),
        None => Err(AgeError::Input(format!(
            "dataset '{dataset}' is not a directory and no data root is set"
        ))),
    }
}

fn class_count(g: &Graph) -> Result<usize> {
    g.class_count()
        .filter(|&m| m >= 2)
        .ok_or_else(|| AgeError::Config("clustering needs labels with at least two classes".into()))
}

/// Trains whichever model `cfg.variant` names on `g`.
pub fn train(g: &Graph, cfg: &RunConfig) -> Result<TrainOutcome> {
    match cfg.variant {
        Variant::Age => train_age(g, &cfg.filter(), &cfg.encoder()),
        Variant::Ls => train_variant(g, &cfg.filter(), &cfg.variant_config(VariantKind::Ls)),
        Variant::LsRa => train_variant(g, &cfg.filter(), &cfg.variant_config(VariantKind::LsRa)),
        Variant::LsRx => train_variant(g, &cfg.filter(), &cfg.variant_config(VariantKind::LsRx)),
    }
}

/// Spectral clustering of one snapshot's cosine similarity.
pub fn cluster_snapshot(snap: &EmbeddingSnapshot, m: usize, seed: u64) -> Result<ClusterResult> {
    spectral_clustering_factored(unit_rows(snap)?.view(), m, seed)
}

/// DBI-selects a snapshot and scores its clustering against the labels.
pub fn evaluate_clustering(g: &Graph, snapshots: &mut [EmbeddingSnapshot], seed: u64) -> Result<(usize, Metrics)> {
    let m = class_count(g)?;
    let best = select_snapshot(snapshots, &SelectMode::Dbi { clusters: m, seed })?;
    let snap = &snapshots[best];
    let part = cluster_snapshot(snap, m, seed)?;
    let dbi_value = match snap.dbi {
        Some(v) => Some(v),
        None => dbi(snap.z.view(), &part).ok().map(|d| d.value),
    };
    let scores = clustering_metrics(&part.assignments, g.labels().expect("class_count implies labels"))?;
    Ok((
        best,
        Metrics {
            acc: Some(scores.acc),
            nmi: Some(scores.nmi),
            ari: Some(scores.ari),
            dbi: dbi_value,
            epoch: snap.epoch,
            degenerate: part.degenerate,
            ..Metrics::default()
        },
    ))
}

pub struct ClusterRun {
    pub metrics: Metrics,
    pub outcome: TrainOutcome,
    pub selected: usize,
}

pub fn run_cluster(g: &Graph, cfg: &RunConfig) -> Result<ClusterRun> {
    class_count(g)?;
    let mut outcome = train(g, cfg)?;
    let (selected, metrics) = evaluate_clustering(g, &mut outcome.snapshots, cfg.seed)?;
    Ok(ClusterRun {
        metrics,
        outcome,
        selected,
    })
}

/// Hold out edges, train on the rest, pick the snapshot with the best
/// validation AUC and report test AUC/AP.
pub fn run_linkpred(g: &Graph, cfg: &RunConfig) -> Result<Metrics> {
    let split = link_split(g, cfg.val_frac, cfg.test_frac, cfg.seed)?;
    if split.val_pos.is_empty() || split.test_pos.is_empty() {
        return Err(AgeError::Config(
            "validation and test sets must both be non-empty".into(),
        ));
    }
    let mut outcome = train(&split.residual_graph, cfg)?;
    let mode = SelectMode::ValAuc {
        pos: &split.val_pos,
        neg: &split.val_neg,
    };
    let best = select_snapshot(&mut outcome.snapshots, &mode)?;
    let snap = &outcome.snapshots[best];
    let u = unit_rows(snap)?;
    let pos = link_scores(u.view(), &split.test_pos)?;
    let neg = link_scores(u.view(), &split.test_neg)?;
    let r = ranking_metrics(&pos, &neg)?;
    let val_auc = match snap.val_auc {
        Some(v) => v,
        None => {
            ranking_metrics(
                &link_scores(u.view(), &split.val_pos)?,
                &link_scores(u.view(), &split.val_neg)?,
            )?
            .auc
        }
    };
    Ok(Metrics {
        auc: Some(r.auc),
        ap: Some(r.ap),
        val_auc: Some(val_auc),
        epoch: snap.epoch,
        ..Metrics::default()
    })
}

/// The rungs of the ablation ladder, in order.
pub const ABLATION_RUNGS: [&str; 5] = ["raw", "+filter", "+encoder", "+adaptive", "full"];

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

fn ablation_row(name: &str, g: &Graph, mut snaps: Vec<EmbeddingSnapshot>, seed: u64) -> Result<AblationRow> {
    let (_, metrics) = evaluate_clustering(g, &mut snaps, seed)?;
    Ok(AblationRow {
        variant: name.to_string(),
        metrics,
    })
}

/// Raw features, smoothed features, encoder on a fixed training set,
/// adaptive re-selection with fixed thresholds, and the full model.
pub fn run_ablation(g: &Graph, cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    class_count(g)?;
    let mut rows = Vec::with_capacity(ABLATION_RUNGS.len());
    let raw_filter = crate::encoder::FilterConfig { t: 0, ..cfg.filter() };
    rows.push(ablation_row(
        ABLATION_RUNGS[0],
        g,
        vec![ls_embedding(g, &raw_filter)?],
        cfg.seed,
    )?);
    rows.push(ablation_row(
        ABLATION_RUNGS[1],
        g,
        vec![ls_embedding(g, &cfg.filter())?],
        cfg.seed,
    )?);

    let x = smoothed_features(g, &cfg.filter())?;
    for (name, adaptive, update) in [
        (ABLATION_RUNGS[2], false, false),
        (ABLATION_RUNGS[3], true, false),
        (ABLATION_RUNGS[4], true, true),
    ] {
        let mut enc = cfg.encoder();
        enc.adaptive = adaptive;
        enc.update_thresholds = update;
        let out = train_encoder(x.view(), &enc)?;
        rows.push(ablation_row(name, g, out.snapshots, cfg.seed)?);
    }
    Ok(rows)
}

/// The reconstruction baselines LS+RA and LS+RX, scored like the ladder.
pub fn run_reconstruction_variants(g: &Graph, cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    [("ls_ra", VariantKind::LsRa), ("ls_rx", VariantKind::LsRx)]
        .into_iter()
        .map(|(name, kind)| {
            let out = train_variant(g, &cfg.filter(), &cfg.variant_config(kind))?;
            ablation_row(name, g, out.snapshots, cfg.seed)
        })
        .collect()
}

/// Eigenvalue histogram of `L̃_sym`; exact below the dense cap, otherwise
/// only the power-iteration estimate of λ_max.
pub fn run_spectrum(g: &Graph, bins: usize) -> Result<SpectrumSummary> {
    let mode = if g.node_count() <= DENSE_CAP {
        SpectrumMode::Full { cap: DENSE_CAP }
    } else {
        SpectrumMode::EstimateOnly
    };
    spectrum_summary(&laplacians(g).l_sym, bins, mode)
}

/// Aligned text table of ablation rows.
pub fn format_table(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "{:<10} {:>7} {:>7} {:>7} {:>8} {:>6}\n",
        "variant", "acc", "nmi", "ari", "dbi", "epoch"
    );
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:>7} {:>7} {:>7} {:>8} {:>6}\n",
            r.variant,
            f(r.metrics.acc),
            f(r.metrics.nmi),
            f(r.metrics.ari),
            f(r.metrics.dbi),
            r.metrics.epoch
        ));
    }
    out
}
