//! Generalized Laplacian smoothing `H = I - k·L̃_sym`, applied `t` times.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{AgeError, Result};
use crate::graph::LaplacianBundle;
use crate::sparse::SparseMatrix;
use crate::spectral::{lambda_max_power_iteration, POWER_MAX_ITER, POWER_TOL};

/// How the filter coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMode {
    /// `k = 1/λ_max` of the renormalized Laplacian.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct FilterSpec {
    pub k: f64,
    pub t: usize,
    /// Estimated largest eigenvalue of `l_sym`; `None` when `k` was given and no estimate was needed.
    pub lambda_max: Option<f64>,
    pub l_sym: SparseMatrix,
}

/// Seed used for the power-iteration start vector when auto-tuning `k`.
pub const LAMBDA_SEED: u64 = 0x5eed;

pub fn build_filter(bundle: &LaplacianBundle, k_mode: KMode, t: usize) -> Result<FilterSpec> {
    let (k, lambda_max) = match k_mode {
        KMode::Fixed(k) if k > 0.0 && k.is_finite() => (k, None),
        KMode::Fixed(k) => {
            return Err(AgeError::Domain(format!(
                "filter coefficient must be positive, got {k}"
            )))
        }
        KMode::Auto => {
            let est = lambda_max_power_iteration(&bundle.l_sym, POWER_TOL, POWER_MAX_ITER, LAMBDA_SEED)?;
            if !est.converged {
                log::warn!(
                    "power iteration stopped after {} steps; using lambda_max ~ {:.6}",
                    est.iterations,
                    est.lambda
                );
            }
            if est.lambda <= 0.0 {
                // Edgeless graph: L̃_sym = 0 and any k leaves the signal untouched.
                (1.0, Some(est.lambda.max(0.0)))
            } else {
                (1.0 / est.lambda, Some(est.lambda))
            }
        }
    };
    Ok(FilterSpec {
        k,
        t,
        lambda_max,
        l_sym: bundle.l_sym.clone(),
    })
}

/// `H^t X` via `t` sparse products `X ← X − k·L̃_sym X`.
pub fn smooth_features(spec: &FilterSpec, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.nrows() != spec.l_sym.rows() {
        return Err(AgeError::Domain(format!(
            "feature matrix has {} rows, filter expects {}",
            x.nrows(),
            spec.l_sym.rows()
        )));
    }
    let mut out = x.to_owned();
    for _ in 0..spec.t {
        let lx = spec.l_sym.mul_dense(out.view())?;
        out.scaled_add(-spec.k, &lx);
    }
    Ok(out)
}

/// `(1 − kλ)^t`.
pub fn frequency_response(spec: &FilterSpec, lambda: f64) -> f64 {
    (1.0 - spec.k * lambda).powi(spec.t as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, laplacians};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn bundle(edges: &[(usize, usize)], n: usize) -> LaplacianBundle {
        laplacians(&build_graph(edges, Array2::ones((n, 1)), None).unwrap())
    }

    #[test]
    fn auto_k_on_triangle() {
        let spec = build_filter(&bundle(&[(0, 1), (1, 2), (0, 2)], 3), KMode::Auto, 1).unwrap();
        assert_abs_diff_eq!(spec.k, 1.0, epsilon = 1e-6);
        assert!((spec.k * spec.lambda_max.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_k_is_validated() {
        let b = bundle(&[(0, 1)], 2);
        assert_eq!(build_filter(&b, KMode::Fixed(1.0), 2).unwrap().k, 1.0);
        assert!(matches!(
            build_filter(&b, KMode::Fixed(0.0), 1),
            Err(AgeError::Domain(_))
        ));
        assert!(build_filter(&b, KMode::Fixed(-2.0), 1).is_err());
    }

    #[test]
    fn triangle_filter_averages() {
        let spec = build_filter(&bundle(&[(0, 1), (1, 2), (0, 2)], 3), KMode::Fixed(1.0), 1).unwrap();
        let out = smooth_features(&spec, array![[1.0], [2.0], [3.0]].view()).unwrap();
        for v in out.iter() {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn path_filter_and_identity() {
        let b = bundle(&[(0, 1)], 2);
        let spec = build_filter(&b, KMode::Fixed(1.0), 1).unwrap();
        let out = smooth_features(&spec, array![[1.0], [0.0]].view()).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out[[1, 0]], 0.5, epsilon = 1e-12);

        let spec0 = build_filter(&b, KMode::Fixed(0.7), 0).unwrap();
        let x = array![[3.0, -1.0], [2.0, 5.0]];
        assert_eq!(smooth_features(&spec0, x.view()).unwrap(), x);
        assert!(smooth_features(&spec0, array![[1.0]].view()).is_err());
    }

    #[test]
    fn response_values() {
        let b = bundle(&[(0, 1)], 2);
        let mut spec = build_filter(&b, KMode::Auto, 1).unwrap();
        let lmax = spec.lambda_max.unwrap();
        assert_abs_diff_eq!(frequency_response(&spec, lmax), 0.0, epsilon = 1e-6);
        assert_eq!(frequency_response(&spec, 0.0), 1.0);
        spec.k = 2.0 / 3.0;
        spec.t = 8;
        assert_abs_diff_eq!(frequency_response(&spec, 1.5), 0.0, epsilon = 1e-15);
    }
}
