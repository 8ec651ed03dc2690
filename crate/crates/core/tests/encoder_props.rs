mod common;

use age_core::encoder::{
    adam_step, balanced_batch, encode_and_scale, loss_and_gradient_at, row_normalize, select_by_rank, select_streaming,
    similarity, train_encoder, EncoderConfig, EncoderState, ScalerStats, SimilarityState, StreamingSelection,
    ThresholdRatios, ThresholdSchedule, TrainingSet,
};
use age_core::AgeError;
use common::rng;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

type PairSets = (Vec<(u32, u32)>, Vec<(u32, u32)>);

/// Every ordered pair sorted by descending similarity, ties by (i, j).
fn brute_selection(s: &Array2<f64>, r_pos: usize, r_neg: usize) -> PairSets {
    let n = s.nrows();
    let mut pairs: Vec<(u32, u32)> = (0..n as u32).flat_map(|i| (0..n as u32).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| {
        s[[b.0 as usize, b.1 as usize]]
            .total_cmp(&s[[a.0 as usize, a.1 as usize]])
            .then(a.cmp(b))
    });
    let mut pos = pairs[..r_pos].to_vec();
    let mut neg = pairs[r_neg..].to_vec();
    pos.sort_unstable();
    neg.sort_unstable();
    (pos, neg)
}

fn random_unit_rows(n: usize, h: usize, levels: u32, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let z = Array2::from_shape_fn((n, h), |_| 1.0 + r.random_range(0..levels) as f64);
    row_normalize(z.view()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_stays_ordered_and_lands_on_endpoints(
        pos_ed in 1u64..500,
        pos_gap in 0u64..500,
        neg_gap in 0u64..500,
        neg_growth in 0u64..500,
        total in 1u64..50,
    ) {
        let pos_st = pos_ed + pos_gap;
        let neg_st = pos_st + neg_gap;
        let neg_ed = neg_st + neg_growth;
        let mut s = ThresholdSchedule::new(pos_st, pos_ed, neg_st, neg_ed, total).unwrap();
        let (mut last_pos, mut last_neg) = (s.r_pos(), s.r_neg());
        prop_assert_eq!(last_pos, pos_st);
        prop_assert_eq!(last_neg, neg_st);
        while !s.is_finished() {
            s.advance().unwrap();
            prop_assert!(s.r_pos() <= last_pos && s.r_neg() >= last_neg);
            prop_assert!(s.r_pos() <= s.r_neg());
            last_pos = s.r_pos();
            last_neg = s.r_neg();
        }
        prop_assert_eq!(s.r_pos(), pos_ed);
        prop_assert_eq!(s.r_neg(), neg_ed);
        prop_assert!(matches!(s.advance(), Err(AgeError::State(_))));
    }

    #[test]
    fn exact_selection_matches_full_sort(n in 2usize..12, levels in 1u32..4, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let u = random_unit_rows(n, 3, levels, seed);
        let s = similarity(u.view()).unwrap();
        let total = n * n;
        let r_pos = 1 + (a * (total - 1) as f64) as usize;
        let r_neg = r_pos + (b * (total - r_pos) as f64) as usize;
        let ts = select_by_rank(&s, r_pos as u64, r_neg as u64).unwrap();
        let (pos, neg) = brute_selection(&s.s, r_pos, r_neg);
        prop_assert_eq!(ts.positives.len(), r_pos);
        prop_assert_eq!(ts.negatives.len(), total - r_neg);
        prop_assert!(ts.positives.iter().all(|p| ts.negatives.binary_search(p).is_err()));
        prop_assert_eq!(ts.positives, pos);
        prop_assert_eq!(ts.negatives, neg);
    }

    #[test]
    fn scaled_embeddings_live_in_the_unit_cube(n in 1usize..20, d in 1usize..5, h in 1usize..5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = Array2::from_shape_fn((n, d), |_| r.random_range(-3.0..3.0));
        let state = EncoderState::new(d, h, &mut r);
        let snap = encode_and_scale(&state, x.view()).unwrap();
        prop_assert!(snap.z.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn selection_fixture_from_two_nodes() {
    let s = SimilarityState {
        s: array![[1.0, 0.9], [0.9, 1.0]],
    };
    let ts = select_by_rank(&s, 2, 3).unwrap();
    assert_eq!(ts.positives, vec![(0, 0), (1, 1)]);
    assert_eq!(ts.negatives, vec![(1, 0)]);
    let all = select_by_rank(&s, 4, 4).unwrap();
    assert_eq!(all.positives.len(), 4);
    assert!(all.negatives.is_empty());
    assert!(matches!(select_by_rank(&s, 3, 2), Err(AgeError::Config(_))));
}

#[test]
fn streaming_selection_matches_exact_ranking() {
    for (n, seed) in [(150, 1u64), (600, 2), (2000, 3)] {
        let u = random_unit_rows(n, 6, 1000, seed);
        let total = (n * n) as u64;
        let r_pos = (0.011 * total as f64).round() as u64;
        let r_neg = (0.1 * total as f64).round() as u64;
        let exact = select_by_rank(&similarity(u.view()).unwrap(), r_pos, r_neg).unwrap();
        let stream = select_streaming(u.view(), r_pos, r_neg, StreamingSelection { samples: 20_000, seed }).unwrap();
        assert_eq!(stream.positives.len(), exact.positives.len());
        assert_eq!(stream.negatives.len(), exact.negatives.len());
        let diff = exact.symmetric_difference_fraction(&stream);
        assert!(diff < 0.01, "n {n}: symmetric difference {diff}");
    }
}

#[test]
fn balanced_batches_have_the_promised_shape() {
    let ts = TrainingSet {
        positives: vec![(0, 0), (1, 1), (2, 2)],
        negatives: (0..10).map(|i| (i, 9 - i)).collect(),
        generation: 0,
    };
    let batch = balanced_batch(&ts, 7).unwrap();
    assert_eq!(batch.len(), 6);
    assert_eq!(
        batch.iter().map(|b| b.1).collect::<Vec<_>>(),
        vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]
    );
    let mut negs: Vec<_> = batch[3..].iter().map(|b| b.0).collect();
    negs.sort_unstable();
    negs.dedup();
    assert_eq!(negs.len(), 3);
    assert_eq!(batch, balanced_batch(&ts, 7).unwrap());

    let short = TrainingSet {
        negatives: vec![(0, 1), (1, 0)],
        ..ts.clone()
    };
    let batch = balanced_batch(&short, 1).unwrap();
    assert_eq!(batch.len(), 6);
    assert!(batch[3..].iter().all(|b| short.negatives.contains(&b.0)));

    let empty = TrainingSet {
        negatives: vec![],
        ..ts
    };
    assert!(matches!(balanced_batch(&empty, 1), Err(AgeError::Config(_))));
}

#[test]
fn self_pairs_do_not_move_the_gradient() {
    let mut r = rng(8);
    for _ in 0..10 {
        let x = Array2::from_shape_fn((8, 4), |_| r.random_range(-1.0..1.0));
        let w = Array2::from_shape_fn((4, 3), |_| r.random_range(-1.0..1.0));
        let stats = ScalerStats::of(x.dot(&w).view());
        let off: Vec<_> = [((0, 1), 1.0), ((2, 5), 0.0), ((3, 7), 1.0), ((6, 4), 0.0)].to_vec();
        let mut with_self = off.clone();
        with_self.extend([((0, 0), 1.0), ((5, 5), 1.0)]);
        let (_, g1) = loss_and_gradient_at(w.view(), x.view(), &off, Some(&stats)).unwrap();
        let (_, g2) = loss_and_gradient_at(w.view(), x.view(), &with_self, Some(&stats)).unwrap();
        assert!((&g1 - &g2).iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn loss_closed_forms() {
    // Rows [1,0] and [1,1] after scaling: cosine 1/√2.
    let x = array![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let w = Array2::eye(2);
    let s = 1.0 / 2f64.sqrt();
    let (loss, _) = loss_and_gradient_at(w.view(), x.view(), &[((0, 1), 1.0)], None).unwrap();
    assert!((loss + s.ln()).abs() < 1e-12);
    let (loss, _) = loss_and_gradient_at(w.view(), x.view(), &[((0, 0), 1.0)], None).unwrap();
    assert!(loss < 1e-6);
}

#[test]
fn adam_matches_the_one_step_closed_form() {
    let state = EncoderState::from_weights(array![[0.0]]);
    let next = adam_step(state, array![[1.0]].view(), 0.001).unwrap();
    assert!((next.w()[[0, 0]] + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
    assert_eq!(next.step(), 1);
    let again = adam_step(next.clone(), array![[1.0]].view(), 0.001).unwrap();
    assert!(again.w()[[0, 0]] < next.w()[[0, 0]]);

    let still = adam_step(
        EncoderState::from_weights(array![[0.5, -2.0]]),
        array![[0.0, 0.0]].view(),
        0.1,
    )
    .unwrap();
    assert_eq!(still.w(), &array![[0.5, -2.0]]);
    assert_eq!(still.step(), 1);
}

fn small_config(seed: u64) -> EncoderConfig {
    EncoderConfig {
        h: 8,
        lr: 0.01,
        max_iter: 40,
        threshold_updates: 4,
        ratios: ThresholdRatios {
            pos_st: 0.1,
            pos_ed: 0.05,
            neg_st: 0.4,
            neg_ed: 0.6,
        },
        seed,
        ..EncoderConfig::default()
    }
}

#[test]
fn training_is_deterministic_and_snapshots_every_boundary() {
    let mut r = rng(9);
    let x = Array2::from_shape_fn((30, 5), |_| r.random_range(0.0..1.0));
    let a = train_encoder(x.view(), &small_config(3)).unwrap();
    let b = train_encoder(x.view(), &small_config(3)).unwrap();
    assert_eq!(a.snapshots.len(), 4);
    assert_eq!(
        a.snapshots.iter().map(|s| s.epoch).collect::<Vec<_>>(),
        vec![10, 20, 30, 40]
    );
    for (s, t) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(s.z, t.z);
    }
    assert_eq!(a.losses, b.losses);
    let c = train_encoder(x.view(), &small_config(4)).unwrap();
    assert_ne!(a.losses, c.losses);
}
