//! Balanced-batch cross-entropy on cosine similarities of scaled embeddings.
//!
//! The gradient treats the per-column scaler statistics as constants for the
//! current step.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::encoder::scaling::ScalerStats;
use crate::encoder::selection::LabelledPair;
use crate::encoder::EncoderState;
use crate::error::{AgeError, Result};

/// Similarities are clamped to `[LOSS_EPS, 1 - LOSS_EPS]` before the logarithm.
pub const LOSS_EPS: f64 = 1e-7;

/// Loss and gradient with respect to `W` at the encoder's current weights.
pub fn loss_and_gradient(
    state: &EncoderState,
    x_smooth: ArrayView2<'_, f64>,
    batch: &[LabelledPair],
) -> Result<(f64, Array2<f64>)> {
    loss_and_gradient_at(state.w().view(), x_smooth, batch, None)
}

/// As [`loss_and_gradient`] for arbitrary weights. With `frozen = Some(stats)`
/// the scaler uses those statistics instead of the ones of `X̃W`.
pub fn loss_and_gradient_at(
    w: ArrayView2<'_, f64>,
    x_smooth: ArrayView2<'_, f64>,
    batch: &[LabelledPair],
    frozen: Option<&ScalerStats>,
) -> Result<(f64, Array2<f64>)> {
    if batch.is_empty() {
        return Err(AgeError::Input("empty training batch".into()));
    }
    if x_smooth.ncols() != w.nrows() {
        return Err(AgeError::Domain(format!(
            "features have {} columns, weights have {} rows",
            x_smooth.ncols(),
            w.nrows()
        )));
    }
    let n = x_smooth.nrows();
    let z = x_smooth.dot(&w);
    let owned;
    let stats = match frozen {
        Some(s) => s,
        None => {
            owned = ScalerStats::of(z.view());
            &owned
        }
    };
    let zhat = stats.apply(z.view());
    let norms: Array1<f64> = zhat.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).collect();
    let mut u = zhat;
    for (mut row, &nrm) in u.axis_iter_mut(Axis(0)).zip(norms.iter()) {
        if nrm > 0.0 {
            row.mapv_inplace(|v| v / nrm);
        }
    }

    let mut grad_u = Array2::<f64>::zeros(u.raw_dim());
    let mut touched = vec![false; n];
    let mut loss = 0.0;
    for &((i, j), label) in batch {
        let (i, j) = (i as usize, j as usize);
        if i >= n || j >= n {
            return Err(AgeError::Input(format!("pair ({i}, {j}) outside {n} nodes")));
        }
        for node in [i, j] {
            if norms[node] == 0.0 {
                return Err(AgeError::Domain(format!(
                    "row {node} of the scaled embedding is all zeros"
                )));
            }
        }
        let s = if i == j { 1.0 } else { u.row(i).dot(&u.row(j)) };
        let clamped = s.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
        loss += -label * clamped.ln() - (1.0 - label) * (1.0 - clamped).ln();
        if s <= LOSS_EPS || s >= 1.0 - LOSS_EPS {
            continue;
        }
        let dl_ds = -label / s + (1.0 - label) / (1.0 - s);
        let uj = u.row(j).to_owned();
        let ui = u.row(i).to_owned();
        grad_u.row_mut(i).scaled_add(dl_ds, &uj);
        grad_u.row_mut(j).scaled_add(dl_ds, &ui);
        touched[i] = true;
        touched[j] = true;
    }

    // Back through the row normalization, then the frozen column scaling.
    let slope = stats.slope();
    for (i, mut g) in grad_u.axis_iter_mut(Axis(0)).enumerate() {
        if !touched[i] {
            continue;
        }
        let ui = u.row(i);
        let radial = g.dot(&ui);
        let inv = 1.0 / norms[i];
        Zip::from(&mut g)
            .and(&ui)
            .and(&slope)
            .for_each(|gv, &uv, &sl| *gv = (*gv - radial * uv) * inv * sl);
    }
    let grad_w = x_smooth.t().dot(&grad_u);
    Ok((loss, grad_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn saturated_positive_has_near_zero_loss() {
        // Identical rows: s = 1, clamped to 1 - eps.
        let x = array![[1.0, 2.0], [1.0, 2.0], [0.0, 1.0]];
        let w = Array2::<f64>::eye(2);
        let (loss, grad) = loss_and_gradient_at(w.view(), x.view(), &[((0, 1), 1.0)], None).unwrap();
        assert!(loss < 1e-6);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn half_similarity_positive_costs_ln2() {
        // Scaled rows: [1,0], [0.5, 0.5]... choose rows giving cos = 0.5 after scaling.
        // Column scaling of [[1,0],[0,1],[r,r']] keeps unit vectors; use a third row to pin ranges.
        let x = array![[1.0, 0.0, 0.0], [0.5, 0.0, 0.8660254037844386], [0.0, 1.0, 1.0]];
        let w = Array2::<f64>::eye(3);
        let stats = ScalerStats {
            min: Array1::zeros(3),
            range: Array1::ones(3),
        };
        let (loss, _) = loss_and_gradient_at(w.view(), x.view(), &[((0, 1), 1.0)], Some(&stats)).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn zero_row_and_empty_batch_are_errors() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]];
        let w = Array2::<f64>::eye(2);
        assert!(loss_and_gradient_at(w.view(), x.view(), &[], None).is_err());
        let err = loss_and_gradient_at(w.view(), x.view(), &[((0, 1), 0.0)], None).unwrap_err();
        assert!(err.to_string().contains("row 0"));
    }
}
