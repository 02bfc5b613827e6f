use crate::error::{Error, Result};

/// Dense real matrix stored row-major by sample, with a column-major copy
/// built at construction.
///
/// Both layouts are immutable, so they cannot drift apart. Row access
/// streams one sample; column access streams one feature across samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    row_major: Vec<f64>,
    col_major: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance(format!("non-finite matrix entry {bad}")));
        }
        let mut col_major = vec![0.0; data.len()];
        for i in 0..rows {
            for j in 0..cols {
                col_major[j * rows + i] = data[i * cols + j];
            }
        }
        Ok(Self {
            rows,
            cols,
            row_major: data,
            col_major,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row_major[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.row_major[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.col_major[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.row_major
    }

    /// Largest absolute entry, i.e. the elementwise ∞-norm.
    pub fn max_abs(&self) -> f64 {
        self.row_major.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            row_major: self.row_major.iter().map(|v| v * factor).collect(),
            col_major: self.col_major.iter().map(|v| v * factor).collect(),
        }
    }

    /// Divides every entry by `divisor` (exact IEEE division, not a
    /// multiplication by the reciprocal).
    pub fn divided(&self, divisor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            row_major: self.row_major.iter().map(|v| v / divisor).collect(),
            col_major: self.col_major.iter().map(|v| v / divisor).collect(),
        }
    }

    /// ⟨row i, v⟩.
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        dot(self.row(i), v)
    }

    /// Returns the matrix with rows reordered so that new row `k` is old
    /// row `order[k]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Matrix> {
        crate::error::check_len(self.rows, order.len())?;
        let mut data = Vec::with_capacity(self.row_major.len());
        for &i in order {
            if i >= self.rows {
                return Err(Error::Domain(format!("row index {i} out of range")));
            }
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_row_major(self.rows, self.cols, data)
    }
}

/// Inner product accumulated in four interleaved lanes, summed as
/// `(l0 + l1) + (l2 + l3)` plus the tail in order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (a, b) = (&a[..len], &b[..len]);
    let mut lanes = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        lanes[0] += x[0] * y[0];
        lanes[1] += x[1] * y[1];
        lanes[2] += x[2] * y[2];
        lanes[3] += x[3] * y[3];
    }
    let mut total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        total += x * y;
    }
    total
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
