//! Snapshot files and the run manifest.
//!
//! An output directory holds `snapshot_<epoch>.tsv` (one embedding row per
//! line) and `manifest.json`. Everything is written into a sibling staging
//! directory first and renamed into place, so a failed run leaves nothing
//! behind.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::encoder::EmbeddingSnapshot;
use crate::error::{AgeError, Result};

use super::RunConfig;

#[derive(Debug, Clone, Serialize)]
struct SnapshotEntry {
    epoch: usize,
    file: String,
    dbi: Option<f64>,
    val_auc: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    dataset: &'a str,
    config: &'a RunConfig,
    config_sha256: String,
    selected_epoch: Option<usize>,
    snapshots: Vec<SnapshotEntry>,
}

fn write_matrix(path: &Path, snap: &EmbeddingSnapshot) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| AgeError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in snap.z.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join("\t")).map_err(|e| AgeError::io(path, e))?;
    }
    w.flush().map_err(|e| AgeError::io(path, e))
}

/// Writes all snapshots and the manifest to `out`, replacing nothing on
/// failure. Returns every written path, manifest last.
pub fn write_run(
    out: &Path,
    dataset: &str,
    config: &RunConfig,
    snapshots: &[EmbeddingSnapshot],
    selected: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let name = out
        .file_name()
        .ok_or_else(|| AgeError::Input(format!("output path {} has no final component", out.display())))?;
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| AgeError::io(&parent, e))?;
    let staging = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
    let result = stage(&staging, dataset, config, snapshots, selected).and_then(|files| {
        if out.exists() {
            fs::remove_dir_all(out).map_err(|e| AgeError::io(out, e))?;
        }
        fs::rename(&staging, out).map_err(|e| AgeError::io(out, e))?;
        Ok(files.into_iter().map(|f| out.join(f)).collect())
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

fn stage(
    dir: &Path,
    dataset: &str,
    config: &RunConfig,
    snapshots: &[EmbeddingSnapshot],
    selected: Option<usize>,
) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| AgeError::io(dir, e))?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for snap in snapshots {
        let file = format!("snapshot_{:04}.tsv", snap.epoch);
        write_matrix(&dir.join(&file), snap)?;
        entries.push(SnapshotEntry {
            epoch: snap.epoch,
            file: file.clone(),
            dbi: snap.dbi,
            val_auc: snap.val_auc,
        });
        files.push(file);
    }
    let manifest = Manifest {
        dataset,
        config,
        config_sha256: config.hash(),
        selected_epoch: selected.map(|i| snapshots[i].epoch),
        snapshots: entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| AgeError::io(&path, e))?;
    files.push("manifest.json".into());
    Ok(files)
}

/// Reads a snapshot file written by [`write_run`].
pub fn read_snapshot(path: &Path) -> Result<ndarray::Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| AgeError::io(path, e))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let vals: Vec<f64> = line
            .split('\t')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| AgeError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        if *cols.get_or_insert(vals.len()) != vals.len() {
            return Err(AgeError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "ragged row".into(),
            });
        }
        data.extend(vals);
        rows += 1;
    }
    ndarray::Array2::from_shape_vec((rows, cols.unwrap_or(0)), data).map_err(|e| AgeError::Input(e.to_string()))
}
