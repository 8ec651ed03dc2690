use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{AgeError, Result};

/// Dense pairwise cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityState {
    pub s: Array2<f64>,
}

impl SimilarityState {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

/// Divides every row by its Euclidean norm. A zero row is a domain error.
pub fn row_normalize(z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut out = z.to_owned();
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(AgeError::Domain(format!(
                "row {i} has zero norm; cosine similarity is undefined"
            )));
        }
        row.mapv_inplace(|v| v / norm);
    }
    Ok(out)
}

/// `s_ij = ⟨z_i, z_j⟩ / (‖z_i‖‖z_j‖)`, with an exact unit diagonal.
pub fn similarity(z: ArrayView2<'_, f64>) -> Result<SimilarityState> {
    let u = row_normalize(z)?;
    Ok(gram_similarity(u.view()))
}

/// Similarity from already row-normalized embeddings.
pub(crate) fn gram_similarity(u: ArrayView2<'_, f64>) -> SimilarityState {
    let mut s = u.dot(&u.t());
    let n = s.nrows();
    for i in 0..n {
        for j in 0..i {
            // Symmetric to the last bit.
            let v = s[[i, j]].min(1.0);
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
        s[[i, i]] = 1.0;
    }
    SimilarityState { s }
}

/// Cosine similarity of the smoothed features, used before any training.
pub fn init_similarity(x_smooth: ArrayView2<'_, f64>) -> Result<SimilarityState> {
    similarity(x_smooth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cosine_examples() {
        let s = similarity(array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.0]].view()).unwrap();
        assert_eq!(s.s[[0, 1]], 0.0);
        assert_abs_diff_eq!(s.s[[0, 2]], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_eq!(s.s[[0, 3]], 1.0);
        assert_eq!(s.s[[2, 2]], 1.0);
    }

    #[test]
    fn zero_row_names_the_row() {
        let err = similarity(array![[1.0, 0.0], [0.0, 0.0]].view()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn init_examples() {
        let s = init_similarity(array![[3.0, 1.0], [3.0, 1.0]].view()).unwrap();
        assert!(s.s.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let s = init_similarity(Array2::<f64>::eye(3).view()).unwrap();
        assert_eq!(s.s, Array2::<f64>::eye(3));
    }
}
