use std::fmt;

use serde::{Deserialize, Serialize};

use super::{elim::MatrixError, Field};

/// Dense row-major matrix over `F_q`.
#[derive(Clone, PartialEq, Eq)]
pub struct FqMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

/// Wire format: `{"rows":r,"cols":c,"q":q,"data":[[...],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub q: u32,
    pub data: Vec<Vec<u32>>,
}

impl FqMatrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        FqMatrix { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds from row vectors; every row must have `cols` entries below `q`.
    pub fn from_rows(field: Field, cols: usize, rows: &[Vec<u8>]) -> Result<Self, MatrixError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                    context: format!("row {i}"),
                });
            }
            if let Some(&bad) = r.iter().find(|&&x| !field.contains(x as u32)) {
                return Err(MatrixError::EntryOutOfRange { value: bad as u32, q: field.q() });
            }
            data.extend_from_slice(r);
        }
        Ok(FqMatrix { field, rows: rows.len(), cols, data })
    }

    /// Builds from column vectors of equal length `rows`.
    pub fn from_cols(field: Field, rows: usize, cols: &[Vec<u8>]) -> Self {
        let mut m = Self::zeros(field, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has wrong length");
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn from_raw(field: Field, rows: usize, cols: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), rows * cols);
        FqMatrix { field, rows, cols, data }
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u8] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<u8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn cols_iter(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0).count()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// # Panics
    /// On incompatible shapes or fields.
    pub fn mul(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.field, other.field);
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0 {
                    let src = other.row(k);
                    f.axpy(&mut out.data[i * other.cols..(i + 1) * other.cols], a, src);
                }
            }
        }
        out
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.cols, "matrix-vector shape mismatch");
        (0..self.rows).map(|i| self.field.dot(self.row(i), v)).collect()
    }

    /// `A^T v`.
    pub fn mul_vec_t(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.rows, "transpose matrix-vector shape mismatch");
        let mut out = vec![0u8; self.cols];
        for (i, &c) in v.iter().enumerate() {
            self.field.axpy(&mut out, c, self.row(i));
        }
        out
    }

    pub fn add(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a ^ b).collect();
        FqMatrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    /// Kronecker product with `self` as the slow index.
    pub fn kron(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.field, other.field);
        let f = self.field;
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Self::zeros(f, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, f.mul(a, other.get(k, l)));
                    }
                }
            }
        }
        out
    }

    pub fn hstack(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Self::zeros(self.field, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        out
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            q: self.field.q(),
            data: (0..self.rows).map(|i| self.row(i).iter().map(|&x| x as u32).collect()).collect(),
        }
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self, MatrixError> {
        let field = Field::new(json.q).map_err(MatrixError::Field)?;
        if json.data.len() != json.rows {
            return Err(MatrixError::DimensionMismatch {
                expected: json.rows,
                found: json.data.len(),
                context: "row count".into(),
            });
        }
        let mut rows = Vec::with_capacity(json.rows);
        for r in &json.data {
            let mut row = Vec::with_capacity(r.len());
            for &x in r {
                if !field.contains(x) {
                    return Err(MatrixError::EntryOutOfRange { value: x, q: field.q() });
                }
                row.push(x as u8);
            }
            rows.push(row);
        }
        Self::from_rows(field, json.cols, &rows)
    }
}

impl fmt::Debug for FqMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FqMatrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for i in 0..self.rows.min(16) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(32)])?;
        }
        Ok(())
    }
}
