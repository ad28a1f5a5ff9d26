use std::collections::BTreeMap;
use std::marker::PhantomData;

use crate::complex::{CellId, CellPoset};
use crate::gfq::{is_zero, Field};

use super::{Sheaf, SheafError};

#[derive(Debug, Clone, Copy)]
pub struct ChainKind;
#[derive(Debug, Clone, Copy)]
pub struct CochainKind;

/// A homogeneous (co)chain: a sparse map from cells (or flags) of one degree
/// to stalk vectors. Zero entries are never stored.
pub struct Graded<K: Ord, Kind> {
    degree: usize,
    support: BTreeMap<K, Vec<u8>>,
    _kind: PhantomData<Kind>,
}

pub type Chain = Graded<CellId, ChainKind>;
pub type Cochain = Graded<CellId, CochainKind>;

impl<K: Ord + Clone, Kind> Clone for Graded<K, Kind> {
    fn clone(&self) -> Self {
        Graded { degree: self.degree, support: self.support.clone(), _kind: PhantomData }
    }
}

impl<K: Ord, Kind> PartialEq for Graded<K, Kind> {
    fn eq(&self, other: &Self) -> bool {
        (self.degree == other.degree || self.support.is_empty() && other.support.is_empty()) && self.support == other.support
    }
}
impl<K: Ord, Kind> Eq for Graded<K, Kind> {}

impl<K: Ord + std::fmt::Debug, Kind> std::fmt::Debug for Graded<K, Kind> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "deg {} ", self.degree)?;
        f.debug_map().entries(self.support.iter()).finish()
    }
}

impl<K: Ord + Clone, Kind> Graded<K, Kind> {
    pub fn zero(degree: usize) -> Self {
        Graded { degree, support: BTreeMap::new(), _kind: PhantomData }
    }

    pub fn from_entries(degree: usize, entries: impl IntoIterator<Item = (K, Vec<u8>)>) -> Self {
        let mut g = Self::zero(degree);
        for (k, v) in entries {
            g.add_at(k, &v);
        }
        g
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn get(&self, k: &K) -> Option<&[u8]> {
        self.support.get(k).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Vec<u8>)> {
        self.support.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.support.keys()
    }

    /// Adds `v` to the entry at `k`.
    pub fn add_at(&mut self, k: K, v: &[u8]) {
        if is_zero(v) {
            return;
        }
        match self.support.get_mut(&k) {
            Some(cur) => {
                debug_assert_eq!(cur.len(), v.len());
                cur.iter_mut().zip(v).for_each(|(a, b)| *a ^= b);
                if is_zero(cur) {
                    self.support.remove(&k);
                }
            }
            None => {
                self.support.insert(k, v.to_vec());
            }
        }
    }

    /// Adds `c * v` to the entry at `k`.
    pub fn axpy_at(&mut self, field: Field, k: K, c: u8, v: &[u8]) {
        if c == 1 {
            self.add_at(k, v);
        } else if c != 0 {
            self.add_at(k, &field.scale(c, v));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, v) in &other.support {
            self.add_at(k.clone(), v);
        }
    }

    pub fn scale(&self, field: Field, c: u8) -> Self {
        Self::from_entries(self.degree, self.support.iter().map(|(k, v)| (k.clone(), field.scale(c, v))))
    }

    pub fn into_entries(self) -> BTreeMap<K, Vec<u8>> {
        self.support
    }
}

impl<Kind> Graded<CellId, Kind> {
    /// Checks cell dimensions and stalk lengths against `f`.
    pub fn validate<S: Sheaf + ?Sized>(&self, f: &S) -> Result<(), SheafError> {
        let x = f.base();
        for (&c, v) in &self.support {
            if c as usize >= x.len() {
                return Err(SheafError::UnknownCell(c));
            }
            if x.dim_of(c) != self.degree {
                return Err(SheafError::WrongCellDim { cell: c, dim: x.dim_of(c), degree: self.degree });
            }
            if v.len() != f.stalk_dim(c) {
                return Err(SheafError::StalkLength { cell: c, expected: f.stalk_dim(c), found: v.len() });
            }
        }
        Ok(())
    }

    /// Sum of stalk Hamming weights.
    pub fn hamming_weight(&self) -> usize {
        self.support.values().map(|v| v.iter().filter(|&&x| x != 0).count()).sum()
    }

    /// Number of cells with a nonzero entry.
    pub fn block_weight(&self) -> usize {
        self.support.len()
    }
}

/// Coordinates of degree-`k` (co)chains as flat vectors: cells in
/// ascending id order, each contributing its stalk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    degree: usize,
    cells: Vec<CellId>,
    offsets: Vec<usize>,
}

impl Layout {
    pub fn new<S: Sheaf + ?Sized>(f: &S, degree: usize) -> Layout {
        let x = f.base();
        let cells: Vec<CellId> = if degree <= x.dim() { x.cells_of_dim(degree).to_vec() } else { Vec::new() };
        let mut offsets = Vec::with_capacity(cells.len() + 1);
        let mut acc = 0;
        for &c in &cells {
            offsets.push(acc);
            acc += f.stalk_dim(c);
        }
        offsets.push(acc);
        Layout { degree, cells, offsets }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    /// Coordinate range of cell `c` (which must have this layout's degree).
    pub fn range(&self, x: &CellPoset, c: CellId) -> std::ops::Range<usize> {
        let i = x.index_in_dim(c);
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Coordinate range of the `i`-th cell of this degree.
    pub fn range_at(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn to_dense<Kind>(&self, x: &CellPoset, g: &Graded<CellId, Kind>) -> Vec<u8> {
        let mut out = vec![0u8; self.total()];
        for (&c, v) in g.iter() {
            out[self.range(x, c)].copy_from_slice(v);
        }
        out
    }

    pub fn from_dense<Kind>(&self, v: &[u8]) -> Graded<CellId, Kind> {
        assert_eq!(v.len(), self.total());
        let mut g = Graded::zero(self.degree);
        for (i, &c) in self.cells.iter().enumerate() {
            g.add_at(c, &v[self.range_at(i)]);
        }
        g
    }

    /// Flat index to `(cell, position in stalk)`.
    pub fn locate(&self, idx: usize) -> (CellId, usize) {
        let i = self.offsets.partition_point(|&o| o <= idx) - 1;
        (self.cells[i], idx - self.offsets[i])
    }
}

/// `(δα)(σ') = Σ_{σ ⋖ σ'} F_{σ,σ'} α(σ)`.
pub fn coboundary<S: Sheaf + ?Sized>(f: &S, a: &Cochain) -> Cochain {
    let x = f.base();
    let mut out = Cochain::zero(a.degree() + 1);
    for (&s, v) in a.iter() {
        for &t in x.cofaces(s) {
            out.add_at(t, &f.restrict(s, t, v));
        }
    }
    out
}

/// `(∂x)(σ) = Σ_{σ ⋖ σ'} F_{σ,σ'}^T x(σ')`; zero in degree 0.
pub fn boundary<S: Sheaf + ?Sized>(f: &S, c: &Chain) -> Chain {
    let x = f.base();
    if c.degree() == 0 {
        return Chain::zero(0);
    }
    let mut out = Chain::zero(c.degree() - 1);
    for (&t, v) in c.iter() {
        for &s in x.faces(t) {
            out.add_at(s, &f.corestrict(s, t, v));
        }
    }
    out
}

/// `⟨α, x⟩ = Σ_σ α(σ) · x(σ)`.
pub fn pairing(field: Field, a: &Cochain, x: &Chain) -> Result<u8, SheafError> {
    if a.is_zero() || x.is_zero() {
        return Ok(0);
    }
    if a.degree() != x.degree() {
        return Err(SheafError::DegreeMismatch { expected: a.degree(), found: x.degree() });
    }
    let mut acc = 0u8;
    for (c, v) in a.iter() {
        if let Some(w) = x.get(c) {
            if v.len() != w.len() {
                return Err(SheafError::StalkLength { cell: *c, expected: v.len(), found: w.len() });
            }
            acc ^= field.dot(v, w);
        }
    }
    Ok(acc)
}
