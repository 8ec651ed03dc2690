use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::loss::loss_and_gradient;
use crate::encoder::scaling::encode_and_scale;
use crate::encoder::selection::{
    balanced_batch_with, select_by_rank, select_streaming, StreamingSelection, ThresholdRatios, ThresholdSchedule,
    TrainingSet,
};
use crate::encoder::similarity::{gram_similarity, row_normalize};
use crate::encoder::state::{adam_step, EncoderState};
use crate::encoder::EmbeddingSnapshot;
use crate::error::{AgeError, Result};
use crate::filter::{build_filter, smooth_features, KMode};
use crate::graph::{laplacians, Graph};

/// Above this many ordered pairs, selection switches to sampled cutoffs.
pub const DEFAULT_PAIR_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Embedding width.
    pub h: usize,
    pub lr: f64,
    pub max_iter: usize,
    /// Number of threshold updates over the run.
    pub threshold_updates: u64,
    pub ratios: ThresholdRatios,
    pub seed: u64,
    /// Re-select training pairs from the current embeddings at every boundary.
    pub adaptive: bool,
    /// Move the thresholds along their schedule at every boundary.
    pub update_thresholds: bool,
    pub pair_budget: u64,
    pub quantile_samples: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            h: 500,
            lr: 0.001,
            max_iter: 400,
            threshold_updates: 40,
            ratios: ThresholdRatios {
                pos_st: 0.0110,
                pos_ed: 0.0010,
                neg_st: 0.1,
                neg_ed: 0.5,
            },
            seed: 0,
            adaptive: true,
            update_thresholds: true,
            pair_budget: DEFAULT_PAIR_BUDGET,
            quantile_samples: 1_000_000,
        }
    }
}

impl EncoderConfig {
    /// Iterations between two threshold updates.
    pub fn update_period(&self) -> Result<usize> {
        let t = self.threshold_updates as usize;
        if t == 0 || self.max_iter < t {
            return Err(AgeError::Config(format!(
                "cannot fit {} threshold updates into {} iterations",
                self.threshold_updates, self.max_iter
            )));
        }
        Ok(self.max_iter / t)
    }

    fn validate(&self) -> Result<()> {
        if self.h == 0 {
            return Err(AgeError::Config("embedding width must be positive".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(AgeError::Config(format!("learning rate {} must be positive", self.lr)));
        }
        self.update_period().map(|_| ())
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// One snapshot per threshold boundary, in epoch order.
    pub snapshots: Vec<EmbeddingSnapshot>,
    /// Loss of every optimizer step.
    pub losses: Vec<f64>,
}

/// Selects training pairs from embeddings (or smoothed features) by cosine rank.
pub fn select_from_embeddings(
    z: ArrayView2<'_, f64>,
    r_pos: u64,
    r_neg: u64,
    cfg: &EncoderConfig,
    generation: usize,
) -> Result<TrainingSet> {
    let n = z.nrows() as u64;
    let u = row_normalize(z)?;
    let mut ts = if n * n <= cfg.pair_budget {
        select_by_rank(&gram_similarity(u.view()), r_pos, r_neg)?
    } else {
        select_streaming(
            u.view(),
            r_pos,
            r_neg,
            StreamingSelection {
                samples: cfg.quantile_samples,
                seed: cfg.seed ^ (generation as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            },
        )?
    };
    ts.generation = generation;
    Ok(ts)
}

/// Runs the adaptive encoder on already smoothed features.
pub fn train_encoder(x_smooth: ArrayView2<'_, f64>, cfg: &EncoderConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = x_smooth.nrows();
    let period = cfg.update_period()?;
    if !cfg.max_iter.is_multiple_of(cfg.threshold_updates as usize) {
        log::warn!(
            "max_iter {} is not a multiple of {} updates; updating every {} iterations",
            cfg.max_iter,
            cfg.threshold_updates,
            period
        );
    }
    let mut sched = ThresholdSchedule::from_ratios(n, cfg.ratios, cfg.threshold_updates)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = EncoderState::new(x_smooth.ncols(), cfg.h, &mut rng);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    batch_rng.set_stream(1);

    let mut ts = select_from_embeddings(x_smooth, sched.r_pos(), sched.r_neg(), cfg, 0)?;
    log::info!(
        "initial training set: {} positives, {} negatives",
        ts.positives.len(),
        ts.negatives.len()
    );

    let mut snapshots = Vec::with_capacity(cfg.threshold_updates as usize);
    let mut losses = Vec::with_capacity(cfg.max_iter);
    for iter in 1..=cfg.max_iter {
        let batch = balanced_batch_with(&ts, &mut batch_rng)?;
        let (loss, grad) = loss_and_gradient(&state, x_smooth, &batch)?;
        losses.push(loss);
        state = adam_step(state, grad.view(), cfg.lr)?;

        if iter % period == 0 && (snapshots.len() as u64) < cfg.threshold_updates {
            if cfg.update_thresholds {
                sched.advance()?;
            }
            let snap = encode_and_scale(&state, x_smooth)?;
            if cfg.adaptive {
                ts = select_from_embeddings(snap.z.view(), sched.r_pos(), sched.r_neg(), cfg, snapshots.len() + 1)?;
            }
            log::debug!(
                "epoch {iter}: loss {loss:.4}, r_pos {}, r_neg {}",
                sched.r_pos(),
                sched.r_neg()
            );
            snapshots.push(snap);
        }
    }
    Ok(TrainOutcome { snapshots, losses })
}

/// Filter settings shared by every pipeline variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub t: usize,
    pub k_mode: KMode,
    /// Divide each raw feature row by its sum before filtering.
    pub row_normalize_features: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            t: 8,
            k_mode: KMode::Auto,
            row_normalize_features: false,
        }
    }
}

/// Smoothed features `H^t X` for a graph.
pub fn smoothed_features(g: &Graph, cfg: &FilterConfig) -> Result<Array2<f64>> {
    let spec = build_filter(&laplacians(g), cfg.k_mode, cfg.t)?;
    log::info!("filter: k = {:.6}, t = {}", spec.k, spec.t);
    let x = if cfg.row_normalize_features {
        row_sum_normalize(g.features())
    } else {
        g.features().clone()
    };
    smooth_features(&spec, x.view())
}

fn row_sum_normalize(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let sum: f64 = row.sum();
        if sum != 0.0 {
            row.mapv_inplace(|v| v / sum);
        }
    }
    out
}

/// Filter, then adaptive encoder: the full pipeline on one graph.
pub fn train_age(g: &Graph, filter: &FilterConfig, cfg: &EncoderConfig) -> Result<TrainOutcome> {
    let x_smooth = smoothed_features(g, filter)?;
    train_encoder(x_smooth.view(), cfg)
}
