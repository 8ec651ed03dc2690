//! Column-wise min-max scaling of encoder outputs.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::encoder::EmbeddingSnapshot;
use crate::encoder::EncoderState;
use crate::error::{AgeError, Result};

const RANGE_NOISE: f64 = 1e-12;

/// Per-column minimum and range of an embedding matrix. A zero range marks a
/// constant column, which scales to 0.5. Ranges at rounding-noise level
/// relative to the column magnitude are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerStats {
    pub min: Array1<f64>,
    pub range: Array1<f64>,
}

impl ScalerStats {
    pub fn of(z: ArrayView2<'_, f64>) -> Self {
        let h = z.ncols();
        let mut min = Array1::from_elem(h, f64::INFINITY);
        let mut max = Array1::from_elem(h, f64::NEG_INFINITY);
        for row in z.axis_iter(Axis(0)) {
            Zip::from(&mut min).and(&mut max).and(&row).for_each(|lo, hi, &v| {
                *lo = lo.min(v);
                *hi = hi.max(v);
            });
        }
        let range = Zip::from(&min).and(&max).map_collect(|&lo, &hi| {
            let r = hi - lo;
            if r <= RANGE_NOISE * lo.abs().max(hi.abs()) {
                0.0
            } else {
                r
            }
        });
        ScalerStats { min, range }
    }

    /// Applies the stored affine map; constant columns become 0.5.
    pub fn apply(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = z.to_owned();
        for mut row in out.axis_iter_mut(Axis(0)) {
            Zip::from(&mut row)
                .and(&self.min)
                .and(&self.range)
                .for_each(|v, &lo, &r| *v = if r > 0.0 { (*v - lo) / r } else { 0.5 });
        }
        out
    }

    /// `∂ẑ/∂z` per column with the statistics held fixed.
    pub fn slope(&self) -> Array1<f64> {
        self.range.mapv(|r| if r > 0.0 { 1.0 / r } else { 0.0 })
    }
}

/// Maps every column of `z` onto `[0, 1]`.
pub fn minmax_columns(z: ArrayView2<'_, f64>) -> (Array2<f64>, ScalerStats) {
    let stats = ScalerStats::of(z);
    (stats.apply(z), stats)
}

/// `Z = minmax(X̃·W)`, tagged with the optimizer step as its epoch.
pub fn encode_and_scale(state: &EncoderState, x_smooth: ArrayView2<'_, f64>) -> Result<EmbeddingSnapshot> {
    if x_smooth.ncols() != state.w().nrows() {
        return Err(AgeError::Domain(format!(
            "smoothed features have {} columns, encoder expects {}",
            x_smooth.ncols(),
            state.w().nrows()
        )));
    }
    let (z, _) = minmax_columns(x_smooth.dot(state.w()).view());
    Ok(EmbeddingSnapshot::new(z, state.step() as usize))
}
