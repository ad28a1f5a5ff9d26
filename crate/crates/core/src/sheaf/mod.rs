//! Sheaves on cell posets and their (co)chain complexes.
//!
//! A sheaf is anything implementing [`Sheaf`]: stalk dimensions plus
//! composite restriction maps `F_{σ,σ'}` for `σ ≤ σ'`. [`SheafData`] stores
//! generator maps on cover relations and composes the rest on demand; the
//! views in [`views`] compute pullbacks and tensor products lazily so large
//! products never store per-cover matrices.

mod chains;
mod homology;
pub mod views;

pub use chains::{boundary, coboundary, pairing, Chain, ChainKind, Cochain, CochainKind, Graded, Layout};
pub use homology::{
    boundary_matrix, coboundary_matrix, cohomology, epsilon_map, homology, is_boundary, is_coboundary,
    is_cocycle, is_cycle, solve_boundary, solve_coboundary, HomologyData,
};

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{product_complex, product_projections, CellId, CellPoset, ComplexError, OrderMap};
use crate::gfq::{Field, FqMatrix, MatrixError, MatrixJson};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SheafError {
    #[error("no restriction map given for cover ({lo},{hi})")]
    MissingMap { lo: CellId, hi: CellId },
    #[error("map on ({lo},{hi}) has shape {found:?}, expected {expected:?}")]
    ShapeMismatch { lo: CellId, hi: CellId, expected: (usize, usize), found: (usize, usize) },
    #[error("({lo},{hi}) is not a cover relation")]
    NotACover { lo: CellId, hi: CellId },
    #[error("cover ({lo},{hi}) is listed more than once; sheaves need a regular base")]
    RepeatedCover { lo: CellId, hi: CellId },
    #[error("diamond {sigma} < {tau1},{tau2} < {pi} does not commute")]
    FunctorialityViolation { sigma: CellId, tau1: CellId, tau2: CellId, pi: CellId },
    #[error("sheaves live on different base complexes")]
    BaseMismatch,
    #[error("field mismatch: {0:?} vs {1:?}")]
    FieldMismatch(Field, Field),
    #[error("stalk table has {found} entries, base has {expected} cells")]
    StalkCount { expected: usize, found: usize },
    #[error("expected degree {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("cell {cell} has dimension {dim}, chain has degree {degree}")]
    WrongCellDim { cell: CellId, dim: usize, degree: usize },
    #[error("vector at cell {cell} has length {found}, stalk has dimension {expected}")]
    StalkLength { cell: CellId, expected: usize, found: usize },
    #[error("cell {0} is not in the base complex")]
    UnknownCell(CellId),
    #[error("entry {value} is not an element of F_{q}")]
    EntryOutOfRange { value: u32, q: u32 },
    #[error("epsilon map undefined: {0}")]
    WrongBase(String),
    #[error("no solution")]
    NoSolution,
    #[error("malformed key {0:?}")]
    BadKey(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Stalks and composite restriction maps over a fixed base poset.
pub trait Sheaf: Send + Sync {
    fn base(&self) -> &CellPoset;
    fn field(&self) -> Field;
    fn stalk_dim(&self, c: CellId) -> usize;

    /// `F_{lo,hi}` as a `stalk(hi) x stalk(lo)` matrix; requires `lo ≤ hi`.
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix>;

    /// `F_{lo,hi}(v)`.
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi {
            return v.to_vec();
        }
        self.restriction(lo, hi).mul_vec(v)
    }

    /// `F_{lo,hi}^T(v)`, from the stalk at `hi` back to the stalk at `lo`.
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        if lo == hi {
            return v.to_vec();
        }
        self.restriction(lo, hi).mul_vec_t(v)
    }
}

impl<S: Sheaf + ?Sized> Sheaf for &S {
    fn base(&self) -> &CellPoset {
        (**self).base()
    }
    fn field(&self) -> Field {
        (**self).field()
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        (**self).stalk_dim(c)
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        (**self).restriction(lo, hi)
    }
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        (**self).restrict(lo, hi, v)
    }
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        (**self).corestrict(lo, hi, v)
    }
}

impl<S: Sheaf + ?Sized> Sheaf for Arc<S> {
    fn base(&self) -> &CellPoset {
        (**self).base()
    }
    fn field(&self) -> Field {
        (**self).field()
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        (**self).stalk_dim(c)
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        (**self).restriction(lo, hi)
    }
    fn restrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        (**self).restrict(lo, hi, v)
    }
    fn corestrict(&self, lo: CellId, hi: CellId, v: &[u8]) -> Vec<u8> {
        (**self).corestrict(lo, hi, v)
    }
}

/// Composes `F_{lo,hi}` from cover maps along the lowest-id path through
/// faces of `hi`, memoizing every intermediate composite.
fn compose_path(
    base: &CellPoset,
    cache: &RwLock<HashMap<(CellId, CellId), Arc<FqMatrix>>>,
    lo: CellId,
    hi: CellId,
    cover_map: &dyn Fn(CellId, CellId) -> Arc<FqMatrix>,
    identity: &dyn Fn(CellId) -> Arc<FqMatrix>,
) -> Arc<FqMatrix> {
    if lo == hi {
        return identity(lo);
    }
    if base.is_cover(lo, hi) {
        return cover_map(lo, hi);
    }
    if let Some(m) = cache.read().unwrap().get(&(lo, hi)) {
        return m.clone();
    }
    let mid = base
        .faces(hi)
        .iter()
        .copied()
        .find(|&t| base.leq(lo, t))
        .unwrap_or_else(|| panic!("restriction requested for {lo} not below {hi}"));
    let below = compose_path(base, cache, lo, mid, cover_map, identity);
    let m = Arc::new(cover_map(mid, hi).mul(&below));
    cache.write().unwrap().insert((lo, hi), m.clone());
    m
}

/// A sheaf stored by its maps on cover relations.
pub struct SheafData {
    base: Arc<CellPoset>,
    field: Field,
    stalks: Vec<usize>,
    /// Indexed like the base's `(hi, face)` adjacency.
    gen: Vec<Arc<FqMatrix>>,
    gen_off: Vec<usize>,
    composites: RwLock<HashMap<(CellId, CellId), Arc<FqMatrix>>>,
}

impl std::fmt::Debug for SheafData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SheafData {{ base: {:?}, field: {:?} }}", self.base, self.field)
    }
}

impl Clone for SheafData {
    fn clone(&self) -> Self {
        SheafData {
            base: self.base.clone(),
            field: self.field,
            stalks: self.stalks.clone(),
            gen: self.gen.clone(),
            gen_off: self.gen_off.clone(),
            composites: RwLock::new(HashMap::new()),
        }
    }
}

impl PartialEq for SheafData {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && *self.base == *other.base
            && self.stalks == other.stalks
            && self.gen.iter().zip(&other.gen).all(|(a, b)| a == b)
    }
}

impl SheafData {
    /// Validates shapes and diamond commutation, then builds.
    pub fn build(
        base: Arc<CellPoset>,
        field: Field,
        stalks: Vec<usize>,
        maps: HashMap<(CellId, CellId), FqMatrix>,
    ) -> Result<SheafData, SheafError> {
        if stalks.len() != base.len() {
            return Err(SheafError::StalkCount { expected: base.len(), found: stalks.len() });
        }
        for &(lo, hi) in maps.keys() {
            if lo as usize >= base.len() || hi as usize >= base.len() || !base.is_cover(lo, hi) {
                return Err(SheafError::NotACover { lo, hi });
            }
        }
        let mut gen = Vec::with_capacity(base.num_covers());
        let mut gen_off = Vec::with_capacity(base.len() + 1);
        for hi in base.cells() {
            gen_off.push(gen.len());
            let faces = base.faces(hi);
            for (k, &lo) in faces.iter().enumerate() {
                if k > 0 && faces[k - 1] == lo {
                    return Err(SheafError::RepeatedCover { lo, hi });
                }
                let m = maps.get(&(lo, hi)).ok_or(SheafError::MissingMap { lo, hi })?;
                if m.field() != field {
                    return Err(SheafError::FieldMismatch(field, m.field()));
                }
                let expected = (stalks[hi as usize], stalks[lo as usize]);
                if m.shape() != expected {
                    return Err(SheafError::ShapeMismatch { lo, hi, expected, found: m.shape() });
                }
                gen.push(Arc::new(m.clone()));
            }
        }
        gen_off.push(gen.len());
        let sheaf = SheafData { base, field, stalks, gen, gen_off, composites: RwLock::new(HashMap::new()) };
        sheaf.check_functoriality()?;
        Ok(sheaf)
    }

    /// Builds from trusted generator maps in adjacency order.
    fn from_gen(base: Arc<CellPoset>, field: Field, stalks: Vec<usize>, gen: Vec<Arc<FqMatrix>>) -> SheafData {
        let mut gen_off = Vec::with_capacity(base.len() + 1);
        let mut k = 0;
        for hi in base.cells() {
            gen_off.push(k);
            k += base.faces(hi).len();
        }
        gen_off.push(k);
        SheafData { base, field, stalks, gen, gen_off, composites: RwLock::new(HashMap::new()) }
    }

    /// The constant sheaf `F_q^dim` with identity restrictions.
    pub fn constant(base: Arc<CellPoset>, field: Field, dim: usize) -> SheafData {
        let id = Arc::new(FqMatrix::identity(field, dim));
        let gen = vec![id; base.num_covers()];
        let stalks = vec![dim; base.len()];
        SheafData::from_gen(base, field, stalks, gen)
    }

    pub fn base_arc(&self) -> &Arc<CellPoset> {
        &self.base
    }

    pub fn stalks(&self) -> &[usize] {
        &self.stalks
    }

    /// Generator map on the cover `lo ⋖ hi`.
    pub fn cover_map(&self, lo: CellId, hi: CellId) -> &Arc<FqMatrix> {
        let faces = self.base.faces(hi);
        let k = faces.binary_search(&lo).unwrap_or_else(|_| panic!("({lo},{hi}) is not a cover"));
        &self.gen[self.gen_off[hi as usize] + k]
    }

    fn check_functoriality(&self) -> Result<(), SheafError> {
        let base = &self.base;
        for pi in base.cells() {
            let d = base.dim_of(pi);
            if d < 2 {
                continue;
            }
            for sigma in base.downset_of_dim(pi, d - 2) {
                let mids: Vec<CellId> =
                    base.faces(pi).iter().copied().filter(|&t| base.is_cover(sigma, t)).collect();
                let first = self.cover_map(mids[0], pi).mul(self.cover_map(sigma, mids[0]));
                for &t in &mids[1..] {
                    if self.cover_map(t, pi).mul(self.cover_map(sigma, t)) != first {
                        return Err(SheafError::FunctorialityViolation { sigma, tau1: mids[0], tau2: t, pi });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self, base_ref: &str) -> SheafJson {
        SheafJson {
            base: base_ref.to_owned(),
            q: self.field.q(),
            stalks: self.base.cells().map(|c| (c.to_string(), self.stalks[c as usize])).collect(),
            maps: self
                .base
                .covers()
                .map(|(lo, hi)| (format!("{lo}->{hi}"), self.cover_map(lo, hi).to_json()))
                .collect(),
        }
    }

    /// Reads a sheaf over an already loaded base complex.
    pub fn from_json(json: &SheafJson, base: Arc<CellPoset>) -> Result<SheafData, SheafError> {
        let field = Field::new(json.q).map_err(MatrixError::from)?;
        let mut stalks = vec![0usize; base.len()];
        let mut seen = vec![false; base.len()];
        for (k, &d) in &json.stalks {
            let c: CellId = k.parse().map_err(|_| SheafError::BadKey(k.clone()))?;
            if c as usize >= base.len() {
                return Err(SheafError::UnknownCell(c));
            }
            stalks[c as usize] = d;
            seen[c as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(SheafError::StalkCount {
                expected: base.len(),
                found: seen.iter().filter(|&&s| s).count(),
            });
        }
        let mut maps = HashMap::new();
        for (k, m) in &json.maps {
            let (lo, hi) = k.split_once("->").ok_or_else(|| SheafError::BadKey(k.clone()))?;
            let lo: CellId = lo.trim().parse().map_err(|_| SheafError::BadKey(k.clone()))?;
            let hi: CellId = hi.trim().parse().map_err(|_| SheafError::BadKey(k.clone()))?;
            let m = FqMatrix::from_json(m)?;
            maps.insert((lo, hi), m);
        }
        SheafData::build(base, field, stalks, maps)
    }
}

impl Sheaf for SheafData {
    fn base(&self) -> &CellPoset {
        &self.base
    }
    fn field(&self) -> Field {
        self.field
    }
    fn stalk_dim(&self, c: CellId) -> usize {
        self.stalks[c as usize]
    }
    fn restriction(&self, lo: CellId, hi: CellId) -> Arc<FqMatrix> {
        let cover = |l: CellId, h: CellId| self.cover_map(l, h).clone();
        let identity = |c: CellId| Arc::new(FqMatrix::identity(self.field, self.stalks[c as usize]));
        compose_path(&self.base, &self.composites, lo, hi, &cover, &identity)
    }
}

/// Wire format: `{"base":ref,"q":q,"stalks":{"id":dim},"maps":{"lo->hi":matrix}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SheafJson {
    pub base: String,
    pub q: u32,
    pub stalks: std::collections::BTreeMap<String, usize>,
    pub maps: std::collections::BTreeMap<String, MatrixJson>,
}

/// `(f*G)_σ = G_{f(σ)}` on `source`.
pub fn pullback<S: Sheaf + ?Sized>(f: &OrderMap, source: Arc<CellPoset>, g: &S) -> Result<SheafData, SheafError> {
    f.validate(&source, g.base())?;
    let stalks: Vec<usize> = source.cells().map(|c| g.stalk_dim(f.apply(c))).collect();
    let mut gen = Vec::with_capacity(source.num_covers());
    for hi in source.cells() {
        for &lo in source.faces(hi) {
            let (a, b) = (f.apply(lo), f.apply(hi));
            gen.push(if a == b {
                Arc::new(FqMatrix::identity(g.field(), g.stalk_dim(a)))
            } else {
                g.restriction(a, b)
            });
        }
    }
    Ok(SheafData::from_gen(source, g.field(), stalks, gen))
}

/// `(F⊗G)_σ = F_σ ⊗ G_σ` with Kronecker restriction maps, `F` as slow index.
pub fn tensor<A: Sheaf + ?Sized, B: Sheaf + ?Sized>(
    f: &A,
    g: &B,
    base: Arc<CellPoset>,
) -> Result<SheafData, SheafError> {
    if f.base() != g.base() || *base != *f.base() {
        return Err(SheafError::BaseMismatch);
    }
    if f.field() != g.field() {
        return Err(SheafError::FieldMismatch(f.field(), g.field()));
    }
    let stalks: Vec<usize> = base.cells().map(|c| f.stalk_dim(c) * g.stalk_dim(c)).collect();
    let mut gen = Vec::with_capacity(base.num_covers());
    for hi in base.cells() {
        for &lo in base.faces(hi) {
            gen.push(Arc::new(f.restriction(lo, hi).kron(&g.restriction(lo, hi))));
        }
    }
    Ok(SheafData::from_gen(base, f.field(), stalks, gen))
}

/// `p_X^* F ⊗ p_Y^* G` on `X × Y` (cell `(a, b)` has id `a * |Y| + b`).
pub fn external_tensor(f: &SheafData, g: &SheafData) -> Result<SheafData, SheafError> {
    if f.field() != g.field() {
        return Err(SheafError::FieldMismatch(f.field(), g.field()));
    }
    let base = Arc::new(product_complex(f.base(), g.base()));
    let (px, py) = product_projections(f.base(), g.base());
    let fx = pullback(&px, base.clone(), f)?;
    let gy = pullback(&py, base.clone(), g)?;
    tensor(&fx, &gy, base)
}
