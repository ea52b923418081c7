use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense column-major matrix. Column access is contiguous, which is what
/// coordinate descent and Householder QR want.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix<F> {
    nrows: usize,
    ncols: usize,
    data: Vec<F>,
}

impl<F: Scalar> ColMatrix<F> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![F::zero(); nrows * ncols],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn from_columns(columns: &[Vec<F>]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        Ok(Self {
            nrows,
            ncols,
            data: columns.concat(),
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[F] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [F] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Copy of the selected rows, preserving column order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.ncols, |i, j| self.get(rows[i], j))
    }

    /// `Xᵀ v`.
    pub fn tr_mul(&self, v: &[F]) -> Vec<F> {
        (0..self.ncols).map(|j| dot(self.col(j), v)).collect()
    }

    /// `X b`.
    pub fn mul(&self, b: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.nrows];
        for (j, &bj) in b.iter().enumerate() {
            if bj != F::zero() {
                axpy(bj, self.col(j), &mut out);
            }
        }
        out
    }

    pub fn cast<G: Scalar>(&self) -> ColMatrix<G> {
        ColMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|&v| G::of(v.as_f64())).collect(),
        }
    }
}

#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += a x`
#[inline]
pub fn axpy<F: Scalar>(a: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
