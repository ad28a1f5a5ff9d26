//! Gauss-Jordan elimination with lowest-index pivoting.
//!
//! Reduced row echelon form is unique, so kernels and particular solutions
//! read off from it do not depend on the storage engine. Over `F_2` rows are
//! bit-packed; other fields use one byte per entry.

use thiserror::Error;

use super::{Field, FieldError, FqMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize, context: String },
    #[error("entry {value} is not an element of F_{q}")]
    EntryOutOfRange { value: u32, q: u32 },
    #[error("right-hand side is not in the column space")]
    NoSolution,
    #[error("span(B) is not contained in span(Z)")]
    NotSubspace,
    #[error("field mismatch: {0:?} vs {1:?}")]
    FieldMismatch(Field, Field),
    #[error(transparent)]
    Field(#[from] FieldError),
}

trait RowStore {
    fn get(&self, i: usize, c: usize) -> u8;
    fn swap(&mut self, a: usize, b: usize);
    fn scale(&mut self, i: usize, c: u8);
    /// `row[dst] += c * row[src]`, touching only columns `>= from`.
    fn axpy(&mut self, dst: usize, src: usize, c: u8, from: usize);
    fn nrows(&self) -> usize;
}

struct BitRows {
    rows: Vec<Vec<u64>>,
}

impl BitRows {
    fn from_bytes(rows: impl Iterator<Item = impl AsRef<[u8]>>, ncols: usize) -> Self {
        let words = ncols.div_ceil(64);
        let rows = rows
            .map(|r| {
                let mut w = vec![0u64; words];
                for (j, &x) in r.as_ref().iter().enumerate() {
                    if x & 1 == 1 {
                        w[j / 64] |= 1 << (j % 64);
                    }
                }
                w
            })
            .collect();
        BitRows { rows }
    }
}

impl RowStore for BitRows {
    #[inline]
    fn get(&self, i: usize, c: usize) -> u8 {
        (self.rows[i][c / 64] >> (c % 64) & 1) as u8
    }
    fn swap(&mut self, a: usize, b: usize) {
        self.rows.swap(a, b);
    }
    fn scale(&mut self, _i: usize, _c: u8) {}
    fn axpy(&mut self, dst: usize, src: usize, c: u8, from: usize) {
        if c == 0 || dst == src {
            return;
        }
        let (d, s) = if dst < src {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&mut lo[dst], &hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&mut hi[0], &lo[src])
        };
        for w in from / 64..d.len() {
            d[w] ^= s[w];
        }
    }
    fn nrows(&self) -> usize {
        self.rows.len()
    }
}

struct ByteRows {
    field: Field,
    rows: Vec<Vec<u8>>,
}

impl RowStore for ByteRows {
    #[inline]
    fn get(&self, i: usize, c: usize) -> u8 {
        self.rows[i][c]
    }
    fn swap(&mut self, a: usize, b: usize) {
        self.rows.swap(a, b);
    }
    fn scale(&mut self, i: usize, c: u8) {
        let f = self.field;
        self.rows[i].iter_mut().for_each(|x| *x = f.mul(*x, c));
    }
    fn axpy(&mut self, dst: usize, src: usize, c: u8, from: usize) {
        if c == 0 || dst == src {
            return;
        }
        let f = self.field;
        let (d, s) = if dst < src {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&mut lo[dst], &hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&mut hi[0], &lo[src])
        };
        f.axpy(&mut d[from..], c, &s[from..]);
    }
    fn nrows(&self) -> usize {
        self.rows.len()
    }
}

/// Gauss-Jordan over the first `pivot_cols` columns. Returns pivot columns;
/// pivot row `k` ends up as row `k`, normalized to 1 at its pivot.
fn gauss_jordan<R: RowStore>(field: Field, store: &mut R, pivot_cols: usize) -> Vec<usize> {
    let n = store.nrows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| store.get(i, c) != 0) else {
            continue;
        };
        store.swap(r, p);
        let lead = store.get(r, c);
        if lead != 1 {
            store.scale(r, field.inv(lead).expect("nonzero pivot"));
        }
        for i in 0..n {
            if i != r {
                let x = store.get(i, c);
                if x != 0 {
                    store.axpy(i, r, x, c);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

enum Store {
    Bits(BitRows),
    Bytes(ByteRows),
}

impl Store {
    fn new(field: Field, rows: Vec<Vec<u8>>, ncols: usize) -> Store {
        if field.is_binary() {
            Store::Bits(BitRows::from_bytes(rows.iter(), ncols))
        } else {
            Store::Bytes(ByteRows { field, rows })
        }
    }
    fn reduce(&mut self, field: Field, pivot_cols: usize) -> Vec<usize> {
        match self {
            Store::Bits(s) => gauss_jordan(field, s, pivot_cols),
            Store::Bytes(s) => gauss_jordan(field, s, pivot_cols),
        }
    }
    fn get(&self, i: usize, c: usize) -> u8 {
        match self {
            Store::Bits(s) => s.get(i, c),
            Store::Bytes(s) => s.get(i, c),
        }
    }
}

fn matrix_rows(a: &FqMatrix) -> Vec<Vec<u8>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Debug, Clone)]
pub struct Rref {
    pub matrix: FqMatrix,
    pub pivots: Vec<usize>,
}

pub fn rref(a: &FqMatrix) -> Rref {
    let f = a.field();
    let mut store = Store::new(f, matrix_rows(a), a.cols());
    let pivots = store.reduce(f, a.cols());
    let mut m = FqMatrix::zeros(f, a.rows(), a.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            m.set(i, j, store.get(i, j));
        }
    }
    Rref { matrix: m, pivots }
}

pub fn rank(a: &FqMatrix) -> usize {
    let f = a.field();
    let mut store = Store::new(f, matrix_rows(a), a.cols());
    store.reduce(f, a.cols()).len()
}

/// Basis of `{x : Ax = 0}` as the columns of the result, one per free column
/// of the RREF in increasing order.
pub fn kernel(a: &FqMatrix) -> FqMatrix {
    let r = rref(a);
    let n = a.cols();
    let mut is_pivot = vec![false; n];
    r.pivots.iter().for_each(|&p| is_pivot[p] = true);
    let free: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
    let mut k = FqMatrix::zeros(a.field(), n, free.len());
    for (col, &fcol) in free.iter().enumerate() {
        k.set(fcol, col, 1);
        for (i, &p) in r.pivots.iter().enumerate() {
            // x_p + R[i][f] x_f = 0 and -1 = 1 in characteristic 2.
            k.set(p, col, r.matrix.get(i, fcol));
        }
    }
    k
}

/// Reusable solver for `A x = b` with many right-hand sides.
///
/// Stores the transform `E` with `E A = RREF(A)`; the particular solution sets
/// every free variable to zero, which is exactly what elimination on the
/// augmented matrix `[A | b]` produces.
#[derive(Debug, Clone)]
pub struct Solver {
    field: Field,
    rows: usize,
    cols: usize,
    pivots: Vec<usize>,
    transform: FqMatrix,
}

impl Solver {
    pub fn new(a: &FqMatrix) -> Solver {
        let f = a.field();
        let (m, n) = a.shape();
        let aug = a.hstack(&FqMatrix::identity(f, m));
        let mut store = Store::new(f, matrix_rows(&aug), n + m);
        let pivots = store.reduce(f, n);
        let mut transform = FqMatrix::zeros(f, m, m);
        for i in 0..m {
            for j in 0..m {
                transform.set(i, j, store.get(i, n + j));
            }
        }
        Solver { field: f, rows: m, cols: n, pivots, transform }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn solve(&self, b: &[u8]) -> Result<Vec<u8>, MatrixError> {
        if b.len() != self.rows {
            return Err(MatrixError::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
                context: "right-hand side".into(),
            });
        }
        let f = self.field;
        let r = self.rank();
        for i in r..self.rows {
            if f.dot(self.transform.row(i), b) != 0 {
                return Err(MatrixError::NoSolution);
            }
        }
        let mut x = vec![0u8; self.cols];
        for (i, &p) in self.pivots.iter().enumerate() {
            x[p] = f.dot(self.transform.row(i), b);
        }
        Ok(x)
    }

    pub fn is_consistent(&self, b: &[u8]) -> bool {
        self.solve(b).is_ok()
    }
}

/// One particular solution of `A x = b`, free variables set to zero.
pub fn mat_solve(a: &FqMatrix, b: &[u8]) -> Result<Vec<u8>, MatrixError> {
    if b.len() != a.rows() {
        return Err(MatrixError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
            context: "right-hand side".into(),
        });
    }
    let f = a.field();
    let n = a.cols();
    let rows: Vec<Vec<u8>> = (0..a.rows())
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    let mut store = Store::new(f, rows, n + 1);
    let pivots = store.reduce(f, n + 1);
    if pivots.last() == Some(&n) {
        return Err(MatrixError::NoSolution);
    }
    let mut x = vec![0u8; n];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = store.get(i, n);
    }
    Ok(x)
}

/// Columns of `a` at its pivot positions: a basis of the column space.
pub fn column_basis(a: &FqMatrix) -> FqMatrix {
    let r = rref(a);
    let cols: Vec<Vec<u8>> = r.pivots.iter().map(|&j| a.col(j)).collect();
    FqMatrix::from_cols(a.field(), a.rows(), &cols)
}

/// Vectors from `z` (columns) extending a basis of `span(b)` to one of
/// `span(z)`. Their classes form a basis of `span(z) / span(b)`.
pub fn quotient_reps(z: &FqMatrix, b: &FqMatrix) -> Result<FqMatrix, MatrixError> {
    if z.field() != b.field() {
        return Err(MatrixError::FieldMismatch(z.field(), b.field()));
    }
    if z.rows() != b.rows() && b.cols() > 0 {
        return Err(MatrixError::DimensionMismatch {
            expected: z.rows(),
            found: b.rows(),
            context: "ambient dimension".into(),
        });
    }
    let f = z.field();
    let n = z.rows();
    let mut zspan = EchelonBasis::new(f, n);
    for c in z.cols_iter() {
        zspan.insert(&c);
    }
    let mut basis = EchelonBasis::new(f, n);
    for c in b.cols_iter() {
        if !zspan.contains(&c) {
            return Err(MatrixError::NotSubspace);
        }
        basis.insert(&c);
    }
    let mut reps = Vec::new();
    for c in z.cols_iter() {
        if basis.insert(&c) {
            reps.push(c);
        }
    }
    Ok(FqMatrix::from_cols(f, n, &reps))
}

/// Incrementally grown semi-echelon basis supporting membership tests.
///
/// Stored vectors are reduced against every earlier one, so reducing a query
/// in insertion order is exact.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    field: Field,
    len: usize,
    pivots: Vec<usize>,
    bits: Vec<Vec<u64>>,
    bytes: Vec<Vec<u8>>,
}

impl EchelonBasis {
    pub fn new(field: Field, len: usize) -> Self {
        EchelonBasis { field, len, pivots: Vec::new(), bits: Vec::new(), bytes: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn ambient(&self) -> usize {
        self.len
    }

    fn pack(&self, v: &[u8]) -> Vec<u64> {
        let mut w = vec![0u64; self.len.div_ceil(64)];
        for (j, &x) in v.iter().enumerate() {
            if x & 1 == 1 {
                w[j / 64] |= 1 << (j % 64);
            }
        }
        w
    }

    fn reduce_bits(&self, w: &mut [u64]) {
        for (k, &p) in self.pivots.iter().enumerate() {
            if w[p / 64] >> (p % 64) & 1 == 1 {
                for (a, b) in w.iter_mut().zip(&self.bits[k]) {
                    *a ^= b;
                }
            }
        }
    }

    fn reduce_bytes(&self, v: &mut [u8]) {
        for (k, &p) in self.pivots.iter().enumerate() {
            let c = v[p];
            if c != 0 {
                self.field.axpy(v, c, &self.bytes[k]);
            }
        }
    }

    /// Residual of `v` after reduction by the stored basis.
    pub fn reduce(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.len, "vector length mismatch");
        if self.field.is_binary() {
            let mut w = self.pack(v);
            self.reduce_bits(&mut w);
            (0..self.len).map(|j| (w[j / 64] >> (j % 64) & 1) as u8).collect()
        } else {
            let mut r = v.to_vec();
            self.reduce_bytes(&mut r);
            r
        }
    }

    pub fn contains(&self, v: &[u8]) -> bool {
        assert_eq!(v.len(), self.len, "vector length mismatch");
        if self.field.is_binary() {
            let mut w = self.pack(v);
            self.reduce_bits(&mut w);
            w.iter().all(|&x| x == 0)
        } else {
            let mut r = v.to_vec();
            self.reduce_bytes(&mut r);
            r.iter().all(|&x| x == 0)
        }
    }

    /// Adds `v` if independent; returns whether the span grew.
    pub fn insert(&mut self, v: &[u8]) -> bool {
        assert_eq!(v.len(), self.len, "vector length mismatch");
        if self.field.is_binary() {
            let mut w = self.pack(v);
            self.reduce_bits(&mut w);
            let Some(p) = (0..self.len).find(|&j| w[j / 64] >> (j % 64) & 1 == 1) else {
                return false;
            };
            self.pivots.push(p);
            self.bits.push(w);
            true
        } else {
            let mut r = v.to_vec();
            self.reduce_bytes(&mut r);
            let Some(p) = r.iter().position(|&x| x != 0) else {
                return false;
            };
            let inv = self.field.inv(r[p]).expect("nonzero");
            let r = self.field.scale(inv, &r);
            self.pivots.push(p);
            self.bytes.push(r);
            true
        }
    }
}
