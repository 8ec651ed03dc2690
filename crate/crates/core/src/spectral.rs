//! Eigenvalue machinery for the renormalized Laplacian and for similarity
//! matrices: power iteration for `λ_max`, a dense symmetric eigensolver
//! (Householder tridiagonalization followed by implicit QL), subspace
//! iteration for leading eigenvectors, and spectrum histograms.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{AgeError, Result};
use crate::sparse::SparseMatrix;

/// Largest matrix order handled by the dense solver unless a caller overrides it.
pub const DENSE_CAP: usize = 3000;

pub const POWER_TOL: f64 = 1e-8;
/// Citation graphs with eigengaps near 1e-3 need several thousand steps.
pub const POWER_MAX_ITER: usize = 20_000;

/// Outcome of [`lambda_max_power_iteration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub lambda: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before successive estimates agreed within `tol`.
    pub converged: bool,
}

/// Dominant eigenvalue of a symmetric matrix by shift-free power iteration.
///
/// The start vector is drawn from a seeded generator. Iteration stops once two
/// successive Rayleigh estimates differ by less than `tol` and the geometric
/// tail of the remaining differences, `δ·q/(1−q)` with `q` the ratio of the
/// last two differences, is below `tol` as well.
pub fn lambda_max_power_iteration(m: &SparseMatrix, tol: f64, max_iter: usize, seed: u64) -> Result<PowerEstimate> {
    if m.rows() != m.cols() {
        return Err(AgeError::Domain("power iteration needs a square matrix".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Err(AgeError::Domain("power iteration on an empty matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut x);

    let mut estimate = f64::NAN;
    let mut last_delta = f64::INFINITY;
    for iter in 1..=max_iter.max(1) {
        let y = m.mul_vec(&x);
        let rayleigh: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // x lies in the null space; every eigenvalue it sees is zero.
            return Ok(PowerEstimate {
                lambda: 0.0,
                iterations: iter,
                converged: true,
            });
        }
        let delta = (rayleigh - estimate).abs();
        estimate = rayleigh;
        let q = delta / last_delta;
        let tail = if q < 1.0 { delta * q / (1.0 - q) } else { f64::INFINITY };
        last_delta = delta;
        if delta < tol && (delta == 0.0 || tail < tol) {
            return Ok(PowerEstimate {
                lambda: estimate,
                iterations: iter,
                converged: true,
            });
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    Ok(PowerEstimate {
        lambda: estimate,
        iterations: max_iter,
        converged: false,
    })
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Array1<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Array2<f64>,
}

fn check_dense_symmetric(m: ArrayView2<'_, f64>, cap: usize) -> Result<()> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(AgeError::Domain(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    if n > cap {
        return Err(AgeError::Capacity { order: n, cap });
    }
    let scale = m.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-8 * scale {
                return Err(AgeError::Domain(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Full eigendecomposition of a dense symmetric matrix of order at most `cap`.
pub fn dense_sym_eig_capped(m: ArrayView2<'_, f64>, cap: usize) -> Result<SymEigen> {
    check_dense_symmetric(m, cap)?;
    let (values, vectors) = tridiagonal_ql(m, true)?;
    Ok(SymEigen {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

pub fn dense_sym_eig(m: ArrayView2<'_, f64>) -> Result<SymEigen> {
    dense_sym_eig_capped(m, DENSE_CAP)
}

/// Ascending eigenvalues only; roughly three times cheaper than [`dense_sym_eig`].
pub fn dense_sym_eigenvalues(m: ArrayView2<'_, f64>, cap: usize) -> Result<Array1<f64>> {
    check_dense_symmetric(m, cap)?;
    Ok(tridiagonal_ql(m, false)?.0)
}

/// Householder reduction to tridiagonal form followed by the implicit QL
/// method with Wilkinson-style shifts.
///
/// The working matrix is kept transposed (`vt[j][k]` is the textbook `V[k][j]`)
/// so that every inner loop runs along a contiguous row.
fn tridiagonal_ql(m: ArrayView2<'_, f64>, want_vectors: bool) -> Result<(Array1<f64>, Option<Array2<f64>>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Array1::zeros(0), want_vectors.then(|| Array2::zeros((0, 0)))));
    }
    // Symmetrize exactly so tiny asymmetries cannot leak into the reduction.
    let mut vt = Array2::<f64>::from_shape_fn((n, n), |(i, j)| 0.5 * (m[[i, j]] + m[[j, i]]));
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];

    for j in 0..n {
        d[j] = vt[[j, n - 1]];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|v| v.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = vt[[j, i - 1]];
                vt[[j, i]] = 0.0;
                vt[[i, j]] = 0.0;
            }
        } else {
            for v in d[..i].iter_mut() {
                *v /= scale;
                h += *v * *v;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|v| *v = 0.0);

            for j in 0..i {
                let f = d[j];
                vt[[i, j]] = f;
                let row = vt.row(j);
                let row = row.as_slice().expect("standard layout");
                let mut g = e[j] + row[j] * f;
                for k in (j + 1)..i {
                    g += row[k] * d[k];
                    e[k] += row[k] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                {
                    let mut row = vt.row_mut(j);
                    let row = row.as_slice_mut().expect("standard layout");
                    for k in j..i {
                        row[k] -= f * e[k] + g * d[k];
                    }
                }
                d[j] = vt[[j, i - 1]];
                vt[[j, i]] = 0.0;
            }
        }
        d[i] = h;
    }

    if want_vectors {
        for i in 0..(n - 1) {
            vt[[i, n - 1]] = vt[[i, i]];
            vt[[i, i]] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = vt[[i + 1, k]] / h;
                }
                for j in 0..=i {
                    let g: f64 = (0..=i).map(|k| vt[[i + 1, k]] * vt[[j, k]]).sum();
                    let mut row = vt.row_mut(j);
                    let row = row.as_slice_mut().expect("standard layout");
                    for k in 0..=i {
                        row[k] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                vt[[i + 1, k]] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = vt[[j, n - 1]];
            vt[[j, n - 1]] = 0.0;
        }
        vt[[n - 1, n - 1]] = 1.0;
    } else {
        for j in 0..n {
            d[j] = vt[[j, j]];
        }
    }
    e[0] = 0.0;

    // Implicit QL on the tridiagonal (d, e).
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m_idx = l;
        while m_idx < n {
            if e[m_idx].abs() <= eps * tst1 {
                break;
            }
            m_idx += 1;
        }
        if m_idx > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > 200 {
                    return Err(AgeError::Domain("symmetric QL iteration did not converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for v in d[(l + 2)..].iter_mut() {
                    *v -= h;
                }
                f += h;

                p = d[m_idx];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m_idx).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        let (mut lo, mut hi) = vt.multi_slice_mut((s![i, ..], s![i + 1, ..]));
                        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                            let hv = *b;
                            *b = s * *a + c * hv;
                            *a = c * *a - s * hv;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let vectors = want_vectors.then(|| {
        let mut out = Array2::<f64>::zeros((n, n));
        for (col, &src) in order.iter().enumerate() {
            out.column_mut(col).assign(&vt.row(src));
        }
        out
    });
    Ok((values, vectors))
}

/// Orthonormalizes the columns of `q` in place by twice-applied modified
/// Gram-Schmidt. Columns that collapse numerically are replaced with fresh
/// random directions.
pub(crate) fn orthonormalize_columns(q: &mut Array2<f64>, rng: &mut ChaCha8Rng) {
    let (n, p) = q.dim();
    for j in 0..p {
        let mut attempts = 0;
        loop {
            for _pass in 0..2 {
                for k in 0..j {
                    let proj = q.column(k).dot(&q.column(j));
                    let basis = q.column(k).to_owned();
                    q.column_mut(j).scaled_add(-proj, &basis);
                }
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm > 1e-10 || attempts >= 8 || j >= n {
                if norm > 0.0 {
                    q.column_mut(j).mapv_inplace(|v| v / norm);
                }
                break;
            }
            attempts += 1;
            for v in q.column_mut(j).iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
    }
}

/// Leading `count` eigenvectors (largest eigenvalues first) of a dense
/// symmetric positive semidefinite matrix, by block subspace iteration with a
/// Rayleigh-Ritz projection at every step.
pub fn top_m_eigenvectors(m: ArrayView2<'_, f64>, count: usize, seed: u64) -> Result<Array2<f64>> {
    Ok(top_m_eigenpairs(m, count, seed)?.1)
}

/// Like [`top_m_eigenvectors`] but also returns the Ritz values (descending).
pub fn top_m_eigenpairs(m: ArrayView2<'_, f64>, count: usize, seed: u64) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(AgeError::Domain("eigenvectors of a non-square matrix".into()));
    }
    if count > n {
        return Err(AgeError::Domain(format!(
            "requested {count} eigenvectors of an order-{n} matrix"
        )));
    }
    if count == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((n, 0))));
    }
    let block = (count + count.max(8)).min(n);
    if block == n {
        return top_from_dense(m, count);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Array2::<f64>::from_shape_fn((n, block), |_| rng.random_range(-1.0..1.0));
    orthonormalize_columns(&mut q, &mut rng);
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-11 * scale;

    let mut ritz = Array1::<f64>::zeros(block);
    for _ in 0..10_000 {
        let y = m.dot(&q);
        let h = q.t().dot(&y);
        let eig = dense_sym_eig_capped(h.view(), usize::MAX)?;
        // Descending order.
        let rot = eig.vectors.slice(s![.., ..;-1]).to_owned();
        ritz = eig.values.slice(s![..;-1]).to_owned();
        let qv = q.dot(&rot);
        let yv = y.dot(&rot);
        let mut worst = 0.0f64;
        for j in 0..count {
            let mut r = yv.column(j).to_owned();
            r.scaled_add(-ritz[j], &qv.column(j));
            worst = worst.max(r.dot(&r).sqrt());
        }
        if worst < tol {
            return Ok((ritz.slice(s![..count]).to_owned(), qv.slice(s![.., ..count]).to_owned()));
        }
        q = yv;
        orthonormalize_columns(&mut q, &mut rng);
    }
    log::warn!("subspace iteration hit its iteration cap; using current Ritz vectors");
    let y = m.dot(&q);
    let h = q.t().dot(&y);
    let eig = dense_sym_eig_capped(h.view(), usize::MAX)?;
    let rot = eig.vectors.slice(s![.., ..;-1]).to_owned();
    ritz.assign(&eig.values.slice(s![..;-1]));
    let qv = q.dot(&rot);
    Ok((ritz.slice(s![..count]).to_owned(), qv.slice(s![.., ..count]).to_owned()))
}

fn top_from_dense(m: ArrayView2<'_, f64>, count: usize) -> Result<(Array1<f64>, Array2<f64>)> {
    let eig = dense_sym_eig_capped(m, usize::MAX)?;
    let n = m.nrows();
    let values = eig.values.slice(s![..;-1]).slice(s![..count]).to_owned();
    let vectors = eig.vectors.slice(s![.., (n - count)..;-1]).to_owned();
    Ok((values, vectors))
}

/// How [`spectrum_summary`] obtains the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMode {
    /// Dense eigenvalues and a histogram; order must be within `cap`.
    Full { cap: usize },
    /// Power-iteration estimate of `λ_max` only.
    EstimateOnly,
}

impl Default for SpectrumMode {
    fn default() -> Self {
        SpectrumMode::Full { cap: DENSE_CAP }
    }
}

/// Eigenvalue distribution of a renormalized Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    pub lambda_max: f64,
    /// `(lower, upper, count)`; empty in estimate-only mode.
    pub histogram: Vec<(f64, f64, usize)>,
    pub n: usize,
}

impl Serialize for SpectrumSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("lambda_max", &self.lambda_max)?;
        let bins: Vec<(f64, f64, usize)> = self.histogram.clone();
        map.serialize_entry("bins", &bins)?;
        map.end()
    }
}

pub fn spectrum_summary(l_sym: &SparseMatrix, bins: usize, mode: SpectrumMode) -> Result<SpectrumSummary> {
    let n = l_sym.rows();
    match mode {
        SpectrumMode::EstimateOnly => {
            let est = lambda_max_power_iteration(l_sym, POWER_TOL, POWER_MAX_ITER, 0)?;
            if !est.converged {
                log::warn!("power iteration did not converge; lambda_max is approximate");
            }
            Ok(SpectrumSummary {
                lambda_max: est.lambda,
                histogram: Vec::new(),
                n,
            })
        }
        SpectrumMode::Full { cap } => {
            let dense = l_sym.to_dense();
            let values = dense_sym_eigenvalues(dense.view(), cap)?;
            let lambda_max = values.iter().copied().fold(0.0f64, f64::max);
            Ok(SpectrumSummary {
                lambda_max,
                histogram: histogram(values.as_slice().expect("contiguous"), lambda_max, bins.max(1)),
                n,
            })
        }
    }
}

fn histogram(values: &[f64], top: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    if top <= 0.0 {
        return vec![(0.0, 0.0, values.len())];
    }
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = ((v.max(0.0) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| {
            let lo = b as f64 * width;
            let hi = if b + 1 == bins { top } else { (b + 1) as f64 * width };
            (lo, hi, c)
        })
        .collect()
}

/// Largest principal-angle sine between the column spaces of two matrices with
/// orthonormal columns.
pub fn subspace_distance(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    // ‖(I - AAᵀ)B‖₂ bounded via the Frobenius norm column by column.
    let proj = a.dot(&a.t().dot(&b));
    let resid = &b - &proj;
    resid.axis_iter(Axis(1)).map(|c| c.dot(&c).sqrt()).fold(0.0, f64::max)
}
