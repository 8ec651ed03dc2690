//! Compressed sparse row storage for the adjacency and Laplacian matrices.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{AgeError, Result};

/// Real-valued CSR matrix with sorted column indices within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(AgeError::Input(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    /// Value at `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = (0..self.rows).flat_map(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (c, r, v))
        });
        SparseMatrix::from_triplets(self.cols, self.rows, triplets).expect("transposed coordinates stay in range")
    }

    /// Exact structural and numerical symmetry check within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).all(|(&c, &v)| (self.get(c, r) - v).abs() <= tol)
        })
    }

    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn mul_view(&self, x: ArrayView1<'_, f64>) -> Vec<f64> {
        match x.as_slice() {
            Some(s) => self.mul_vec(s),
            None => self.mul_vec(&x.to_vec()),
        }
    }

    /// `Y = self * X` for a dense right-hand side.
    pub fn mul_dense(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.cols {
            return Err(AgeError::Domain(format!(
                "cannot multiply a {}x{} sparse matrix by a {}x{} dense matrix",
                self.rows,
                self.cols,
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = Array2::<f64>::zeros((self.rows, x.ncols()));
        for (r, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &x.row(c));
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((self.rows, self.cols));
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// Iterator over stored `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }
}
