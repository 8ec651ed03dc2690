//! Ranked training-pair selection and the curriculum threshold schedule.
//!
//! All `n²` ordered pairs, diagonal included, are ranked by descending
//! similarity with ties broken by ascending `(i, j)`. Pairs ranked at or above
//! `r_pos` are positives and pairs ranked strictly below `r_neg` are negatives.

use std::cmp::Ordering;

use ndarray::{s, ArrayView2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::similarity::SimilarityState;
use crate::error::{AgeError, Result};

/// Linear schedule for the rank cutoffs `r_pos` and `r_neg`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub r_pos_st: u64,
    pub r_pos_ed: u64,
    pub r_neg_st: u64,
    pub r_neg_ed: u64,
    pub total_updates: u64,
    pub updates_done: u64,
}

/// Threshold endpoints as fractions of `n²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRatios {
    pub pos_st: f64,
    pub pos_ed: f64,
    pub neg_st: f64,
    pub neg_ed: f64,
}

impl ThresholdSchedule {
    pub fn new(r_pos_st: u64, r_pos_ed: u64, r_neg_st: u64, r_neg_ed: u64, total_updates: u64) -> Result<Self> {
        if r_pos_ed > r_pos_st {
            return Err(AgeError::Config(format!(
                "positive threshold must not grow: start {r_pos_st} < end {r_pos_ed}"
            )));
        }
        if r_neg_ed < r_neg_st {
            return Err(AgeError::Config(format!(
                "negative threshold must not shrink: start {r_neg_st} > end {r_neg_ed}"
            )));
        }
        if r_pos_st > r_neg_st {
            return Err(AgeError::Config(format!(
                "r_pos ({r_pos_st}) exceeds r_neg ({r_neg_st})"
            )));
        }
        if r_pos_ed == 0 {
            return Err(AgeError::Config("r_pos must stay at least 1".into()));
        }
        if total_updates == 0 {
            return Err(AgeError::Config("threshold schedule needs at least one update".into()));
        }
        Ok(ThresholdSchedule {
            r_pos_st,
            r_pos_ed,
            r_neg_st,
            r_neg_ed,
            total_updates,
            updates_done: 0,
        })
    }

    pub fn from_ratios(n: usize, ratios: ThresholdRatios, total_updates: u64) -> Result<Self> {
        let pairs = (n as f64) * (n as f64);
        for (name, r) in [
            ("pos_st", ratios.pos_st),
            ("pos_ed", ratios.pos_ed),
            ("neg_st", ratios.neg_st),
            ("neg_ed", ratios.neg_ed),
        ] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(AgeError::Config(format!("ratio {name} = {r} is outside (0, 1]")));
            }
        }
        let count = |r: f64| ((r * pairs).round() as u64).max(1);
        ThresholdSchedule::new(
            count(ratios.pos_st),
            count(ratios.pos_ed),
            count(ratios.neg_st),
            count(ratios.neg_ed),
            total_updates,
        )
    }

    fn interpolate(&self, st: u64, ed: u64) -> u64 {
        // st + (ed - st) * k / T, rounded half away from zero, in exact integer arithmetic.
        let t = self.total_updates as i128;
        let num = st as i128 * t + (ed as i128 - st as i128) * self.updates_done as i128;
        let q = if num >= 0 {
            (2 * num + t) / (2 * t)
        } else {
            -((-2 * num + t) / (2 * t))
        };
        q as u64
    }

    pub fn r_pos(&self) -> u64 {
        self.interpolate(self.r_pos_st, self.r_pos_ed)
    }

    pub fn r_neg(&self) -> u64 {
        self.interpolate(self.r_neg_st, self.r_neg_ed)
    }

    pub fn is_finished(&self) -> bool {
        self.updates_done >= self.total_updates
    }

    pub fn advance(&mut self) -> Result<()> {
        if self.is_finished() {
            return Err(AgeError::State(format!(
                "threshold schedule already applied all {} updates",
                self.total_updates
            )));
        }
        self.updates_done += 1;
        Ok(())
    }
}

/// One step of the linear threshold update.
pub fn update_thresholds(sched: &ThresholdSchedule) -> Result<ThresholdSchedule> {
    let mut next = sched.clone();
    next.advance()?;
    Ok(next)
}

/// Node pair `(i, j)`.
pub type Pair = (u32, u32);

/// Labelled pairs produced by one selection round.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainingSet {
    /// Sorted by `(i, j)`.
    pub positives: Vec<Pair>,
    /// Sorted by `(i, j)`.
    pub negatives: Vec<Pair>,
    pub generation: usize,
}

impl TrainingSet {
    /// Pairs present in exactly one of the two sets, over the combined size.
    pub fn symmetric_difference_fraction(&self, other: &TrainingSet) -> f64 {
        let diff =
            sorted_sym_diff(&self.positives, &other.positives) + sorted_sym_diff(&self.negatives, &other.negatives);
        let total = self.positives.len() + self.negatives.len();
        if total == 0 {
            return if diff == 0 { 0.0 } else { 1.0 };
        }
        diff as f64 / total as f64
    }
}

fn sorted_sym_diff(a: &[Pair], b: &[Pair]) -> usize {
    let (mut i, mut j, mut diff) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                diff += 1;
                i += 1;
            }
            Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    diff + (a.len() - i) + (b.len() - j)
}

fn check_ranks(n: usize, r_pos: u64, r_neg: u64) -> Result<u64> {
    let total = (n as u64) * (n as u64);
    if r_pos > r_neg {
        return Err(AgeError::Config(format!("r_pos ({r_pos}) exceeds r_neg ({r_neg})")));
    }
    if r_pos == 0 {
        return Err(AgeError::Config("r_pos must be at least 1".into()));
    }
    if r_neg > total {
        return Err(AgeError::Config(format!(
            "r_neg ({r_neg}) exceeds the {total} available pairs"
        )));
    }
    Ok(total)
}

/// Descending similarity, then ascending linear pair index.
fn rank_order(a: (f64, u64), b: (f64, u64)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn decode(n: usize, idx: u64) -> Pair {
    ((idx / n as u64) as u32, (idx % n as u64) as u32)
}

/// Exact ranking over a materialized similarity matrix.
pub fn select_samples(s: &SimilarityState, sched: &ThresholdSchedule) -> Result<TrainingSet> {
    select_by_rank(s, sched.r_pos(), sched.r_neg())
}

pub fn select_by_rank(s: &SimilarityState, r_pos: u64, r_neg: u64) -> Result<TrainingSet> {
    let n = s.n();
    let total = check_ranks(n, r_pos, r_neg)?;
    if total > u32::MAX as u64 {
        return Err(AgeError::Capacity {
            order: n,
            cap: (u32::MAX as f64).sqrt() as usize,
        });
    }
    let flat =
        s.s.as_slice()
            .map(|v| v.to_vec())
            .unwrap_or_else(|| s.s.iter().copied().collect());
    let mut order: Vec<u32> = (0..total as u32).collect();
    let cmp = |a: &u32, b: &u32| rank_order((flat[*a as usize], *a as u64), (flat[*b as usize], *b as u64));

    let r_pos = r_pos as usize;
    let r_neg = r_neg as usize;
    if r_pos < order.len() {
        order.select_nth_unstable_by(r_pos, cmp);
    }
    let (head, tail) = order.split_at_mut(r_pos);
    let rest_split = r_neg - r_pos;
    if rest_split < tail.len() {
        tail.select_nth_unstable_by(rest_split, cmp);
    }
    let mut positives: Vec<Pair> = head.iter().map(|&i| decode(n, i as u64)).collect();
    let mut negatives: Vec<Pair> = tail[rest_split.min(tail.len())..]
        .iter()
        .map(|&i| decode(n, i as u64))
        .collect();
    positives.sort_unstable();
    negatives.sort_unstable();
    Ok(TrainingSet {
        positives,
        negatives,
        generation: 0,
    })
}

/// Settings for the sampled-cutoff path used on large graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamingSelection {
    /// Number of uniformly sampled pairs used to estimate the cutoffs.
    pub samples: usize,
    pub seed: u64,
}

impl Default for StreamingSelection {
    fn default() -> Self {
        StreamingSelection {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Pair selection from row-normalized embeddings without materializing `S`.
///
/// Similarity cutoffs are estimated from a uniform pair sample, a streaming
/// pass over row blocks of `S = UUᵀ` harvests every pair beyond the cutoffs,
/// and the exact rank order is then applied inside the harvested candidates.
/// When a cutoff turns out too tight the margin widens and the pass repeats.
pub fn select_streaming(
    u: ArrayView2<'_, f64>,
    r_pos: u64,
    r_neg: u64,
    opts: StreamingSelection,
) -> Result<TrainingSet> {
    let n = u.nrows();
    let total = check_ranks(n, r_pos, r_neg)?;
    let neg_count = total - r_neg;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples = opts.samples.max(1);
    let mut sampled: Vec<f64> = (0..samples)
        .map(|_| {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            pair_similarity(u, i, j)
        })
        .collect();
    sampled.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut slack = 4.0;
    loop {
        let pos_cut = sample_cutoff(&sampled, r_pos, total, slack, true);
        let neg_cut = sample_cutoff(&sampled, neg_count, total, slack, false);
        let (mut pos_cand, mut neg_cand) = harvest(u, pos_cut, neg_cut, neg_count > 0);
        if pos_cand.len() as u64 >= r_pos && neg_cand.len() as u64 >= neg_count {
            let positives = take_best(&mut pos_cand, r_pos as usize, n, true);
            let negatives = take_best(&mut neg_cand, neg_count as usize, n, false);
            return Ok(TrainingSet {
                positives,
                negatives,
                generation: 0,
            });
        }
        log::debug!(
            "streaming selection cutoffs too tight ({} / {} positives, {} / {} negatives); widening",
            pos_cand.len(),
            r_pos,
            neg_cand.len(),
            neg_count
        );
        slack *= 4.0;
    }
}

fn pair_similarity(u: ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    let (a, b) = if i >= j { (i, j) } else { (j, i) };
    if a == b {
        1.0
    } else {
        u.row(a).dot(&u.row(b)).min(1.0)
    }
}

/// Similarity cutoff whose sampled tail comfortably covers `count` of `total` pairs.
/// `descending_tail` selects the high end (positives) or the low end (negatives).
fn sample_cutoff(sorted_desc: &[f64], count: u64, total: u64, slack: f64, descending_tail: bool) -> f64 {
    if count == 0 {
        return if descending_tail {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    let m = sorted_desc.len() as f64;
    let expected = m * count as f64 / total as f64;
    let k = (expected + slack * expected.sqrt() + slack * 2.5).ceil() as usize;
    if k >= sorted_desc.len() || slack > 1e6 {
        return if descending_tail {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    if descending_tail {
        sorted_desc[k]
    } else {
        sorted_desc[sorted_desc.len() - 1 - k]
    }
}

type Candidate = (f64, u64);

fn harvest(u: ArrayView2<'_, f64>, pos_cut: f64, neg_cut: f64, want_neg: bool) -> (Vec<Candidate>, Vec<Candidate>) {
    let n = u.nrows();
    let block = (4_000_000 / n.max(1)).clamp(1, n.max(1));
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        // Lower triangle only; each value serves both (i, j) and (j, i).
        let rows = u.slice(s![start..end, ..]).dot(&u.slice(s![..end, ..]).t());
        for (bi, row) in rows.outer_iter().enumerate() {
            let i = start + bi;
            for (j, &raw) in row.iter().enumerate().take(i + 1) {
                let v = if i == j { 1.0 } else { raw.min(1.0) };
                let mut emit = |idx: u64| {
                    if v >= pos_cut {
                        pos.push((v, idx));
                    }
                    if want_neg && v <= neg_cut {
                        neg.push((v, idx));
                    }
                };
                emit((i * n + j) as u64);
                if i != j {
                    emit((j * n + i) as u64);
                }
            }
        }
        start = end;
    }
    (pos, neg)
}

/// Top `count` candidates in rank order (`best = true`) or the bottom `count`.
fn take_best(cand: &mut [Candidate], count: usize, n: usize, best: bool) -> Vec<Pair> {
    if count == 0 {
        return Vec::new();
    }
    let cmp = |a: &Candidate, b: &Candidate| rank_order(*a, *b);
    let chosen: &[Candidate] = if best {
        if count < cand.len() {
            cand.select_nth_unstable_by(count, cmp);
        }
        &cand[..count]
    } else {
        let skip = cand.len() - count;
        if skip > 0 {
            cand.select_nth_unstable_by(skip, cmp);
        }
        &cand[skip..]
    };
    let mut out: Vec<Pair> = chosen.iter().map(|&(_, idx)| decode(n, idx)).collect();
    out.sort_unstable();
    out
}

/// Pair with its training label (1 for positive, 0 for negative).
pub type LabelledPair = (Pair, f64);

/// All positives plus an equal number of negatives drawn uniformly, without
/// replacement when the pool is large enough.
pub fn balanced_batch(ts: &TrainingSet, seed: u64) -> Result<Vec<LabelledPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    balanced_batch_with(ts, &mut rng)
}

pub fn balanced_batch_with(ts: &TrainingSet, rng: &mut impl Rng) -> Result<Vec<LabelledPair>> {
    if ts.negatives.is_empty() {
        return Err(AgeError::Config(
            "negative pool is empty; cannot balance the batch".into(),
        ));
    }
    let want = ts.positives.len();
    let mut batch = Vec::with_capacity(2 * want);
    batch.extend(ts.positives.iter().map(|&p| (p, 1.0)));
    let pool = ts.negatives.len();
    if pool >= want {
        for i in index::sample(rng, pool, want).into_iter() {
            batch.push((ts.negatives[i], 0.0));
        }
    } else {
        for _ in 0..want {
            batch.push((ts.negatives[rng.random_range(0..pool)], 0.0));
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn schedule_interpolates_and_hits_endpoint() {
        let mut s = ThresholdSchedule::new(8000, 1000, 9000, 20000, 10).unwrap();
        s.advance().unwrap();
        assert_eq!(s.r_pos(), 7300);
        for _ in 1..10 {
            s.advance().unwrap();
        }
        assert_eq!(s.r_pos(), 1000);
        assert_eq!(s.r_neg(), 20000);
        assert!(matches!(s.advance(), Err(AgeError::State(_))));
        assert!(update_thresholds(&s).is_err());
    }

    #[test]
    fn schedule_rejects_bad_endpoints() {
        assert!(ThresholdSchedule::new(10, 20, 30, 40, 5).is_err());
        assert!(ThresholdSchedule::new(20, 10, 40, 30, 5).is_err());
        assert!(ThresholdSchedule::new(50, 10, 40, 60, 5).is_err());
    }

    #[test]
    fn cora_default_counts() {
        let n = 2708usize;
        let ratios = ThresholdRatios {
            pos_st: 0.0110,
            pos_ed: 0.0010,
            neg_st: 0.1,
            neg_ed: 0.5,
        };
        let s = ThresholdSchedule::from_ratios(n, ratios, 40).unwrap();
        let pairs = (n * n) as f64;
        assert_eq!(s.r_pos_st, (0.011 * pairs).round() as u64);
        assert_eq!(s.r_pos_ed, (0.001 * pairs).round() as u64);
        assert_eq!(s.r_pos_st, 80_666);
    }

    #[test]
    fn two_node_enumeration() {
        let s = SimilarityState {
            s: array![[1.0, 0.9], [0.9, 1.0]],
        };
        let ts = select_by_rank(&s, 2, 3).unwrap();
        assert_eq!(ts.positives, vec![(0, 0), (1, 1)]);
        assert_eq!(ts.negatives, vec![(1, 0)]);
    }

    #[test]
    fn boundary_all_positive() {
        let s = SimilarityState {
            s: array![[1.0, 0.2], [0.2, 1.0]],
        };
        let ts = select_by_rank(&s, 4, 4).unwrap();
        assert_eq!(ts.positives.len(), 4);
        assert!(ts.negatives.is_empty());
        assert!(matches!(select_by_rank(&s, 3, 2), Err(AgeError::Config(_))));
    }

    #[test]
    fn middle_ranks_are_unlabelled() {
        let s = SimilarityState {
            s: array![[1.0, 0.5, 0.1], [0.5, 1.0, 0.3], [0.1, 0.3, 1.0]],
        };
        let ts = select_by_rank(&s, 3, 5).unwrap();
        let labelled: Vec<Pair> = ts.positives.iter().chain(&ts.negatives).copied().collect();
        assert_eq!(labelled.len(), 3 + 4);
        assert!(!labelled.contains(&(0, 1)) && !labelled.contains(&(1, 0)));
    }

    #[test]
    fn balanced_batch_contracts() {
        let ts = TrainingSet {
            positives: vec![(0, 0), (1, 1), (2, 2)],
            negatives: (0..10).map(|i| (i, 9 - i)).collect(),
            generation: 0,
        };
        let b = balanced_batch(&ts, 4).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(
            b.iter().map(|x| x.1).collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(b, balanced_batch(&ts, 4).unwrap());
        let negs: std::collections::HashSet<_> = b[3..].iter().map(|x| x.0).collect();
        assert_eq!(negs.len(), 3);

        let small = TrainingSet {
            negatives: vec![(0, 1), (1, 0)],
            ..ts.clone()
        };
        let b = balanced_batch(&small, 1).unwrap();
        assert_eq!(b.len(), 6);

        let empty = TrainingSet {
            negatives: vec![],
            ..ts
        };
        assert!(matches!(balanced_batch(&empty, 0), Err(AgeError::Config(_))));
    }

    #[test]
    fn streaming_matches_exact_on_small_input() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = ndarray::Array2::from_shape_fn((40, 6), |_| rng.random_range(0.0..1.0));
        let u = crate::encoder::row_normalize(z.view()).unwrap();
        let exact = select_by_rank(&crate::encoder::similarity::gram_similarity(u.view()), 30, 800).unwrap();
        let streamed = select_streaming(u.view(), 30, 800, StreamingSelection { samples: 500, seed: 2 }).unwrap();
        assert_eq!(exact, streamed);
    }
}
