//! Baselines sharing the smoothing filter: LS (smoothed features as
//! embeddings), LS+RA (adjacency reconstruction) and LS+RX (feature
//! reconstruction).

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{minmax_columns, AdamParam, EmbeddingSnapshot, EncoderConfig, FilterConfig, TrainOutcome};
use crate::error::{AgeError, Result};
use crate::eval::sigmoid;
use crate::graph::{laplacians, Graph};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Ls,
    LsRa,
    LsRx,
}

/// Reconstruction target of LS+RX.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RxTarget {
    #[default]
    Raw,
    Smoothed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub kind: VariantKind,
    pub h: usize,
    pub lr: f64,
    pub max_iter: usize,
    /// Number of evenly spaced snapshots.
    pub snapshots: u64,
    pub seed: u64,
    pub rx_target: RxTarget,
}

impl VariantConfig {
    /// Width, rate, length and snapshot cadence taken from an encoder config.
    pub fn from_encoder(kind: VariantKind, cfg: &EncoderConfig) -> Self {
        VariantConfig {
            kind,
            h: cfg.h,
            lr: cfg.lr,
            max_iter: cfg.max_iter,
            snapshots: cfg.threshold_updates,
            seed: cfg.seed,
            rx_target: RxTarget::Raw,
        }
    }

    fn period(&self) -> Result<usize> {
        let s = self.snapshots as usize;
        if self.h == 0 || (self.lr.is_nan() || self.lr <= 0.0) || s == 0 || self.max_iter < s {
            return Err(AgeError::Config(format!(
                "invalid variant config: h {}, lr {}, {} snapshots over {} iterations",
                self.h, self.lr, self.snapshots, self.max_iter
            )));
        }
        Ok(self.max_iter / s)
    }
}

/// LS: the column-scaled smoothed features, with no training.
pub fn ls_embedding(g: &Graph, filter: &FilterConfig) -> Result<EmbeddingSnapshot> {
    let x = crate::encoder::smoothed_features(g, filter)?;
    Ok(EmbeddingSnapshot::new(minmax_columns(x.view()).0, 0))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Positive-class weight `(n² − nnz)/nnz` for reconstructing `a`.
pub fn ra_pos_weight(a: &SparseMatrix) -> f64 {
    let n2 = (a.rows() * a.cols()) as f64;
    let nnz = a.nnz() as f64;
    (n2 - nnz) / nnz
}

/// Mean weighted cross-entropy between `σ(ZZᵀ)` and `a`, with `Z = X̃W`, and
/// its gradient with respect to `W`.
pub fn ls_ra_loss_and_gradient(
    w: ArrayView2<'_, f64>,
    x_smooth: ArrayView2<'_, f64>,
    a: &SparseMatrix,
    pos_weight: f64,
) -> Result<(f64, Array2<f64>)> {
    let n = x_smooth.nrows();
    if a.rows() != n || a.cols() != n {
        return Err(AgeError::Domain(format!(
            "target is {}x{}, graph has {n} nodes",
            a.rows(),
            a.cols()
        )));
    }
    if x_smooth.ncols() != w.nrows() {
        return Err(AgeError::Domain(format!(
            "features have {} columns, weights have {} rows",
            x_smooth.ncols(),
            w.nrows()
        )));
    }
    let scale = 1.0 / (n * n) as f64;
    let z = x_smooth.dot(&w);
    let logits = z.dot(&z.t());
    let mut loss = 0.0;
    let mut g = logits.mapv(|l| {
        loss += softplus(l);
        sigmoid(l) * scale
    });
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &av) in cols.iter().zip(vals) {
            let l = logits[[r, c]];
            let s = sigmoid(l);
            loss += pos_weight * av * softplus(-l) - av * softplus(l);
            g[[r, c]] = scale * (pos_weight * av * (s - 1.0) + (1.0 - av) * s);
        }
    }
    // dL/dZ = (G + Gᵀ)Z.
    let gz = g.dot(&z) + g.t().dot(&z);
    Ok((loss * scale, x_smooth.t().dot(&gz)))
}

/// Mean squared error of `X̃WV` against `target`, with gradients for `W` and `V`.
pub fn ls_rx_loss_and_gradient(
    w: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    x_smooth: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    if x_smooth.ncols() != w.nrows() || w.ncols() != v.nrows() || v.ncols() != target.ncols() {
        return Err(AgeError::Domain("encoder/decoder shapes do not chain".into()));
    }
    if target.nrows() != x_smooth.nrows() {
        return Err(AgeError::Domain("target row count differs from features".into()));
    }
    let z = x_smooth.dot(&w);
    let mut resid = z.dot(&v);
    resid -= &target;
    let count = resid.len() as f64;
    let loss = resid.iter().map(|r| r * r).sum::<f64>() / count;
    resid.mapv_inplace(|r| 2.0 * r / count);
    let gv = z.t().dot(&resid);
    let gw = x_smooth.t().dot(&resid.dot(&v.t()));
    Ok((loss, gw, gv))
}

fn snapshot(z: &Array2<f64>, epoch: usize) -> EmbeddingSnapshot {
    EmbeddingSnapshot::new(minmax_columns(z.view()).0, epoch)
}

/// LS+RA training on smoothed features.
pub fn train_ls_ra_features(
    x_smooth: ArrayView2<'_, f64>,
    a_tilde: &SparseMatrix,
    cfg: &VariantConfig,
) -> Result<TrainOutcome> {
    let period = cfg.period()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = AdamParam::glorot(x_smooth.ncols(), cfg.h, &mut rng);
    let pw = ra_pos_weight(a_tilde);
    let mut snapshots = Vec::new();
    let mut losses = Vec::with_capacity(cfg.max_iter);
    for iter in 1..=cfg.max_iter {
        let (loss, grad) = ls_ra_loss_and_gradient(w.value.view(), x_smooth, a_tilde, pw)?;
        losses.push(loss);
        w.step(grad.view(), cfg.lr)?;
        if iter % period == 0 && (snapshots.len() as u64) < cfg.snapshots {
            snapshots.push(snapshot(&x_smooth.dot(&w.value), iter));
        }
    }
    Ok(TrainOutcome { snapshots, losses })
}

/// LS+RX training on smoothed features.
pub fn train_ls_rx_features(
    x_smooth: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    cfg: &VariantConfig,
) -> Result<TrainOutcome> {
    let period = cfg.period()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = AdamParam::glorot(x_smooth.ncols(), cfg.h, &mut rng);
    let mut v = AdamParam::glorot(cfg.h, target.ncols(), &mut rng);
    let mut snapshots = Vec::new();
    let mut losses = Vec::with_capacity(cfg.max_iter);
    for iter in 1..=cfg.max_iter {
        let (loss, gw, gv) = ls_rx_loss_and_gradient(w.value.view(), v.value.view(), x_smooth, target)?;
        losses.push(loss);
        w.step(gw.view(), cfg.lr)?;
        v.step(gv.view(), cfg.lr)?;
        if iter % period == 0 && (snapshots.len() as u64) < cfg.snapshots {
            snapshots.push(snapshot(&x_smooth.dot(&w.value), iter));
        }
    }
    Ok(TrainOutcome { snapshots, losses })
}

pub fn train_ls_ra(g: &Graph, filter: &FilterConfig, cfg: &VariantConfig) -> Result<TrainOutcome> {
    let x = crate::encoder::smoothed_features(g, filter)?;
    train_ls_ra_features(x.view(), &laplacians(g).a_tilde, cfg)
}

pub fn train_ls_rx(g: &Graph, filter: &FilterConfig, cfg: &VariantConfig) -> Result<TrainOutcome> {
    let x = crate::encoder::smoothed_features(g, filter)?;
    match cfg.rx_target {
        RxTarget::Raw => train_ls_rx_features(x.view(), g.features().view(), cfg),
        RxTarget::Smoothed => train_ls_rx_features(x.view(), x.view(), cfg),
    }
}

/// Runs the variant named in `cfg`. LS yields a single snapshot.
pub fn train_variant(g: &Graph, filter: &FilterConfig, cfg: &VariantConfig) -> Result<TrainOutcome> {
    match cfg.kind {
        VariantKind::Ls => Ok(TrainOutcome {
            snapshots: vec![ls_embedding(g, filter)?],
            losses: Vec::new(),
        }),
        VariantKind::LsRa => train_ls_ra(g, filter, cfg),
        VariantKind::LsRx => train_ls_rx(g, filter, cfg),
    }
}
