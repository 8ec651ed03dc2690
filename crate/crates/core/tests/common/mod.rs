//! Shared helpers for integration tests: random graphs and brute-force
//! metric oracles that share no code with the library.

#![allow(dead_code)]

use std::collections::HashMap;

use age_core::graph::{build_graph, Graph};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with Gaussian-ish features in [-1, 1].
pub fn random_graph(n: usize, p: f64, d: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let x = Array2::from_shape_fn((n, d), |_| r.random_range(-1.0..1.0));
    build_graph(&edges, x, None).unwrap()
}

pub fn random_labels(n: usize, k: usize, r: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..k)).collect()
}

/// P(pos > neg) + ½P(tie) by enumerating every pair.
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for &p in pos {
        for &q in neg {
            s += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

/// Precision at each positive, ranking by descending score with a stable
/// insertion sort over positives-then-negatives.
pub fn brute_ap(pos: &[f64], neg: &[f64]) -> f64 {
    let mut items: Vec<(f64, bool)> = Vec::new();
    for (s, is_pos) in pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))) {
        let at = items.iter().position(|&(t, _)| t < s).unwrap_or(items.len());
        items.insert(at, (s, is_pos));
    }
    let mut hits = 0.0;
    let mut total = 0.0;
    for (k, &(_, is_pos)) in items.iter().enumerate() {
        if is_pos {
            hits += 1.0;
            total += hits / (k + 1) as f64;
        }
    }
    total / pos.len() as f64
}

/// Rand-index counts over all unordered node pairs, adjusted for chance.
pub fn brute_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            if sa && sb {
                both += 1.0;
            }
            if sa {
                in_a += 1.0;
            }
            if sb {
                in_b += 1.0;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = in_a * in_b / pairs;
    let max = 0.5 * (in_a + in_b);
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

fn entropy(labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    let n = labels.len() as f64;
    counts.values().map(|&c| -(c / n) * (c / n).ln()).sum()
}

/// I(A;B) / ((H(A)+H(B))/2), from joint and marginal frequencies.
pub fn brute_nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ma: HashMap<usize, f64> = HashMap::new();
    let mut mb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0 / n;
        *ma.entry(x).or_default() += 1.0 / n;
        *mb.entry(y).or_default() += 1.0 / n;
    }
    let mi: f64 = joint.iter().map(|(&(x, y), &p)| p * (p / (ma[&x] * mb[&y])).ln()).sum();
    let (ha, hb) = (entropy(a), entropy(b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    (mi / (0.5 * (ha + hb))).clamp(0.0, 1.0)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Best accuracy over every one-to-one map from cluster ids to label ids
/// (padding the smaller side with unused ids).
pub fn brute_acc(pred: &[usize], truth: &[usize]) -> f64 {
    let k = pred.iter().chain(truth).max().unwrap() + 1;
    let ids: Vec<usize> = (0..k).collect();
    permutations(&ids)
        .into_iter()
        .map(|perm| pred.iter().zip(truth).filter(|&(&p, &t)| perm[p] == t).count())
        .max()
        .unwrap() as f64
        / pred.len() as f64
}

/// Greedy matching: repeatedly take the largest remaining contingency cell.
pub fn greedy_acc(pred: &[usize], truth: &[usize]) -> f64 {
    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *cells.entry((p, t)).or_default() += 1;
    }
    let mut sorted: Vec<_> = cells.into_iter().collect();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let (mut used_p, mut used_t, mut hit) = (Vec::new(), Vec::new(), 0);
    for ((p, t), c) in sorted {
        if !used_p.contains(&p) && !used_t.contains(&t) {
            used_p.push(p);
            used_t.push(t);
            hit += c;
        }
    }
    hit as f64 / pred.len() as f64
}

/// Area under the ROC polyline by the trapezoid rule, thresholding at every
/// distinct score.
pub fn trapezoid_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = pos.iter().chain(neg).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut prev = (0.0, 0.0);
    let mut area = 0.0;
    for th in thresholds {
        let tpr = pos.iter().filter(|&&s| s >= th).count() as f64 / np;
        let fpr = neg.iter().filter(|&&s| s >= th).count() as f64 / nn;
        area += (fpr - prev.0) * (tpr + prev.1) / 2.0;
        prev = (fpr, tpr);
    }
    area
}

/// Direct Davies–Bouldin evaluation.
pub fn brute_dbi(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let dim = points[0].len();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        for (c, v) in centroids[l].iter_mut().zip(p) {
            *c += v;
        }
        counts[l] += 1.0;
    }
    for (c, n) in centroids.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|v| *v /= n);
    }
    let mut scatter = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        scatter[l] += dist(p, &centroids[l]) / counts[l];
    }
    (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (scatter[i] + scatter[j]) / dist(&centroids[i], &centroids[j]))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / k as f64
}

/// ‖a − b‖ / max(‖a‖, ‖b‖).
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central finite differences of `f` at `w` (step `h`).
pub fn fd_gradient(w: &Array2<f64>, h: f64, mut f: impl FnMut(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut g = Array2::zeros(w.dim());
    let mut probe = w.clone();
    for idx in 0..w.len() {
        let (r, c) = (idx / w.ncols(), idx % w.ncols());
        let orig = probe[[r, c]];
        probe[[r, c]] = orig + h;
        let up = f(&probe);
        probe[[r, c]] = orig - h;
        let down = f(&probe);
        probe[[r, c]] = orig;
        g[[r, c]] = (up - down) / (2.0 * h);
    }
    g
}
