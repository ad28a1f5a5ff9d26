//! Lazily evaluated sheaves. Restrictions of tensor-structured views are
//! applied factor by factor without forming Kronecker products.

use std::sync::Arc;

use crate::complex::{CellId, CellPoset, OrderMap};
use crate::gfq::{Field, FqMatrix};

use super::{Sheaf, SheafError};

/// Applies `maps[j]` (or its transpose) along axis `j` of `v`, a tensor
/// with axis lengths `dims`, slowest axis first. `None` leaves an axis alone.
pub fn apply_axes(field: Field, v: &[u8], dims: &[usize], maps: &[Option<Arc<FqMatrix>>], transpose: bool) -> Vec<u8> {
    let mut cur = v.to_vec();
    let mut dims = dims.to_vec();
    for (j, m) in maps.iter().enumerate() {
        let Some(m) = m else { continue };
        let (din, dout) = if transpose { (m.rows(), m.cols()) } else { (m.cols(), m.rows()) };
        debug_assert_eq!(dims[j], din);
        let pre: usize = dims[..j].iter().product();
        let post: usize = dims[j + 1..].iter().product();
        let mut out = vec![0u8; pre * dout * post];
        for p in 0..pre {
            for a in 0..din {
                let src = &cur[(p * din + a) * post..(p * din + a + 1) * post];
                if src.iter().all(|&x| x == 0) {
                    continue;
                }
                for b in 0..dout {
                    let c = if transpose { m.get(a, b) } else { m.get(b, a) };
                    if c != 0 {
                        field.axpy(&mut out[(p * dout + b) * post..(p * dout + b + 1) * post], c, src);
                    }
                }
            }
        }
        cur = out;
        dims[j] = dout;
    }
    cur
}

/// `f^* G` without materializing it.
pub struct Pulled<S> {
    base: Arc<CellPoset>,
    map: OrderMap,
    inner: S,
}

impl<S: Sheaf> Pulled<S> {
    pub fn new(base: Arc<CellPoset>, map: OrderMap, inner: S) -> Result<Self, SheafError> {
        map.validate(&base, inner.base())?;
        Ok(Pulled { base, map, inner })
    }

    pub fn map(&self) -> &OrderMap {
        &self.map
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: Sheaf> Sheaf for Pulled<S> {
    fn base(&self) -> &CellPoset {
        &self.base
    }
    fn field(&self) -> Field {
        self.inner.field()
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        self.inner.stalk_dim(self.map.apply(c))
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        let (a, b) = (self.map.apply(lo), self.map.apply(hi));
        if a == b {
            return Arc::new(FqMatrix::identity(self.field(), self.inner.stalk_dim(a)));
        }
        self.inner.restriction(a, b)
    }
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        self.inner.restrict(self.map.apply(lo), self.map.apply(hi), v)
    }
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        self.inner.corestrict(self.map.apply(lo), self.map.apply(hi), v)
    }
}

/// `F ⊗ G` on a shared base, `F` as the slow index.
pub struct TensorView<A, B> {
    a: A,
    b: B,
}

impl<A: Sheaf, B: Sheaf> TensorView<A, B> {
    pub fn new(a: A, b: B) -> Result<Self, SheafError> {
        if a.base() != b.base() {
            return Err(SheafError::BaseMismatch);
        }
        if a.field() != b.field() {
            return Err(SheafError::FieldMismatch(a.field(), b.field()));
        }
        Ok(TensorView { a, b })
    }
}

impl<A: Sheaf, B: Sheaf> Sheaf for TensorView<A, B> {
    fn base(&self) -> &CellPoset {
        self.a.base()
    }
    fn field(&self) -> Field {
        self.a.field()
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        self.a.stalk_dim(c) * self.b.stalk_dim(c)
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        Arc::new(self.a.restriction(lo, hi).kron(&self.b.restriction(lo, hi)))
    }
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi {
            return v.to_vec();
        }
        let dims = [self.a.stalk_dim(lo), self.b.stalk_dim(lo)];
        let maps = [Some(self.a.restriction(lo, hi)), Some(self.b.restriction(lo, hi))];
        apply_axes(self.field(), v, &dims, &maps, false)
    }
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi {
            return v.to_vec();
        }
        let dims = [self.a.stalk_dim(hi), self.b.stalk_dim(hi)];
        let maps = [Some(self.a.restriction(lo, hi)), Some(self.b.restriction(lo, hi))];
        apply_axes(self.field(), v, &dims, &maps, true)
    }
}

/// `F^{⊗k}`; `k = 0` is the constant sheaf `F_q`.
pub struct TensorPower<S> {
    inner: S,
    k: usize,
}

impl<S: Sheaf> TensorPower<S> {
    pub fn new(inner: S, k: usize) -> Self {
        TensorPower { inner, k }
    }

    pub fn power(&self) -> usize {
        self.k
    }
}

impl<S: Sheaf> Sheaf for TensorPower<S> {
    fn base(&self) -> &CellPoset {
        self.inner.base()
    }
    fn field(&self) -> Field {
        self.inner.field()
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        self.inner.stalk_dim(c).pow(self.k as u32)
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        let r = self.inner.restriction(lo, hi);
        let mut acc = FqMatrix::identity(self.field(), 1);
        for _ in 0..self.k {
            acc = acc.kron(&r);
        }
        Arc::new(acc)
    }
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi || self.k == 0 {
            return v.to_vec();
        }
        let r = Some(self.inner.restriction(lo, hi));
        let dims = vec![self.inner.stalk_dim(lo); self.k];
        apply_axes(self.field(), v, &dims, &vec![r; self.k], false)
    }
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi || self.k == 0 {
            return v.to_vec();
        }
        let r = Some(self.inner.restriction(lo, hi));
        let dims = vec![self.inner.stalk_dim(hi); self.k];
        apply_axes(self.field(), v, &dims, &vec![r; self.k], true)
    }
}

/// `F_1 ⊠ ... ⊠ F_t` on `X_1 × ... × X_t`, cells numbered in mixed radix
/// with the first factor slowest (the numbering of iterated
/// [`product_complex`](crate::complex::product_complex)).
pub struct ProductSheaf {
    base: Arc<CellPoset>,
    factors: Vec<Arc<dyn Sheaf>>,
    sizes: Vec<usize>,
}

impl ProductSheaf {
    pub fn new(base: Arc<CellPoset>, factors: Vec<Arc<dyn Sheaf>>) -> Result<Self, SheafError> {
        let sizes: Vec<usize> = factors.iter().map(|f| f.base().len()).collect();
        let field = factors.first().map(|f| f.field()).ok_or(SheafError::BaseMismatch)?;
        if let Some(g) = factors.iter().find(|g| g.field() != field) {
            return Err(SheafError::FieldMismatch(field, g.field()));
        }
        if sizes.iter().product::<usize>() != base.len() {
            return Err(SheafError::BaseMismatch);
        }
        Ok(ProductSheaf { base, factors, sizes })
    }

    pub fn factors(&self) -> &[Arc<dyn Sheaf>] {
        &self.factors
    }

    pub fn base_arc(&self) -> &Arc<CellPoset> {
        &self.base
    }

    /// Factor cells of a product cell.
    pub fn decode(&self, c: CellId) -> Vec<CellId> {
        let mut c = c as usize;
        let mut out = vec![0; self.sizes.len()];
        for j in (0..self.sizes.len()).rev() {
            out[j] = (c % self.sizes[j]) as CellId;
            c /= self.sizes[j];
        }
        out
    }

    pub fn encode(&self, cells: &[CellId]) -> CellId {
        cells.iter().zip(&self.sizes).fold(0usize, |acc, (&c, &n)| acc * n + c as usize) as CellId
    }

    fn axis_maps(&self, lo: &[CellId], hi: &[CellId]) -> Vec<Option<Arc<FqMatrix>>> {
        self.factors
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(f, (&a, &b))| if a == b { None } else { Some(f.restriction(a, b)) })
            .collect()
    }
}

impl Sheaf for ProductSheaf {
    fn base(&self) -> &CellPoset {
        &self.base
    }
    fn field(&self) -> Field {
        self.factors[0].field()
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        self.decode(c).iter().zip(&self.factors).map(|(&x, f)| f.stalk_dim(x)).product()
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        let (l, h) = (self.decode(lo), self.decode(hi));
        let mut acc = FqMatrix::identity(self.field(), 1);
        for (j, f) in self.factors.iter().enumerate() {
            let r = if l[j] == h[j] { Arc::new(FqMatrix::identity(self.field(), f.stalk_dim(l[j]))) } else { f.restriction(l[j], h[j]) };
            acc = acc.kron(&r);
        }
        Arc::new(acc)
    }
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi {
            return v.to_vec();
        }
        let (l, h) = (self.decode(lo), self.decode(hi));
        let dims: Vec<usize> = l.iter().zip(&self.factors).map(|(&x, f)| f.stalk_dim(x)).collect();
        apply_axes(self.field(), v, &dims, &self.axis_maps(&l, &h), false)
    }
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi {
            return v.to_vec();
        }
        let (l, h) = (self.decode(lo), self.decode(hi));
        let dims: Vec<usize> = h.iter().zip(&self.factors).map(|(&x, f)| f.stalk_dim(x)).collect();
        apply_axes(self.field(), v, &dims, &self.axis_maps(&l, &h), true)
    }
}
