//! Cell posets: cells with dimensions and cover relations `lo ⋖ hi`.
//!
//! Covers are stored in both directions as compressed adjacency arrays, with
//! multiplicity, so a poset with millions of cells stays compact. Downsets
//! and upsets are computed on demand by walking covers.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type CellId = u32;

/// Products with more cells than this are built without labels.
const LABEL_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("complex has no cells")]
    Empty,
    #[error("cover references unknown cell {0}")]
    UnknownCell(u64),
    #[error("cell id {0} appears twice")]
    DuplicateId(u64),
    #[error("cover ({lo},{hi}) joins dimensions {dim_lo} and {dim_hi}")]
    DimSkip { lo: CellId, hi: CellId, dim_lo: u8, dim_hi: u8 },
    #[error("cover relations contain a cycle through cell {0}")]
    CycleDetected(CellId),
    #[error("cell {0} has positive dimension but no faces")]
    MissingFaces(CellId),
    #[error("cell {cell} is not a simplex: {reason}")]
    NotSimplicial { cell: CellId, reason: String },
    #[error("map is not order-preserving on cover ({lo},{hi})")]
    NotOrderPreserving { lo: CellId, hi: CellId },
    #[error("map has {found} entries, source has {expected} cells")]
    SizeMismatch { expected: usize, found: usize },
    #[error("cell {cell} maps to {target}, outside a target with {len} cells")]
    TargetOutOfRange { cell: CellId, target: CellId, len: usize },
}

/// Finite graded poset given by its cover relations.
#[derive(Clone)]
pub struct CellPoset {
    dims: Vec<u8>,
    labels: Vec<Option<String>>,
    down_off: Vec<u32>,
    down: Vec<CellId>,
    up_off: Vec<u32>,
    up: Vec<CellId>,
    by_dim: Vec<Vec<CellId>>,
    pos_in_dim: Vec<u32>,
}

impl std::fmt::Debug for CellPoset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let counts: Vec<usize> = self.by_dim.iter().map(Vec::len).collect();
        write!(f, "CellPoset {{ cells per dim: {counts:?} }}")
    }
}

impl PartialEq for CellPoset {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.down_off == other.down_off && self.down == other.down
    }
}
impl Eq for CellPoset {}

fn csr(n: usize, pairs: impl Iterator<Item = (CellId, CellId)> + Clone) -> (Vec<u32>, Vec<CellId>) {
    let mut off = vec![0u32; n + 1];
    for (k, _) in pairs.clone() {
        off[k as usize + 1] += 1;
    }
    for i in 0..n {
        off[i + 1] += off[i];
    }
    let mut fill = off.clone();
    let mut adj = vec![0; off[n] as usize];
    for (k, v) in pairs {
        adj[fill[k as usize] as usize] = v;
        fill[k as usize] += 1;
    }
    for i in 0..n {
        adj[off[i] as usize..off[i + 1] as usize].sort_unstable();
    }
    (off, adj)
}

impl CellPoset {
    /// Validates and builds a poset on cells `0..dims.len()`.
    pub fn build(
        dims: Vec<u8>,
        covers: &[(CellId, CellId)],
        labels: Vec<Option<String>>,
    ) -> Result<CellPoset, ComplexError> {
        let n = dims.len();
        if n == 0 {
            return Err(ComplexError::Empty);
        }
        for &(lo, hi) in covers {
            for c in [lo, hi] {
                if c as usize >= n {
                    return Err(ComplexError::UnknownCell(c as u64));
                }
            }
        }
        if let Some(cell) = find_cycle(n, covers) {
            return Err(ComplexError::CycleDetected(cell));
        }
        for &(lo, hi) in covers {
            if dims[hi as usize] != dims[lo as usize] + 1 {
                return Err(ComplexError::DimSkip {
                    lo,
                    hi,
                    dim_lo: dims[lo as usize],
                    dim_hi: dims[hi as usize],
                });
            }
        }
        let p = Self::from_parts(dims, covers, labels);
        for c in 0..n as CellId {
            if p.dim_of(c) > 0 && p.faces(c).is_empty() {
                return Err(ComplexError::MissingFaces(c));
            }
        }
        Ok(p)
    }

    /// Builds without validation; callers guarantee the cover invariants.
    pub(crate) fn from_parts(
        dims: Vec<u8>,
        covers: &[(CellId, CellId)],
        labels: Vec<Option<String>>,
    ) -> CellPoset {
        let n = dims.len();
        debug_assert!(covers.iter().all(|&(l, h)| dims[h as usize] == dims[l as usize] + 1));
        let (down_off, down) = csr(n, covers.iter().map(|&(l, h)| (h, l)));
        let (up_off, up) = csr(n, covers.iter().copied());
        let top = dims.iter().copied().max().unwrap_or(0) as usize;
        let mut by_dim = vec![Vec::new(); top + 1];
        let mut pos_in_dim = vec![0u32; n];
        for (c, &d) in dims.iter().enumerate() {
            pos_in_dim[c] = by_dim[d as usize].len() as u32;
            by_dim[d as usize].push(c as CellId);
        }
        let labels = if labels.iter().any(Option::is_some) { labels } else { Vec::new() };
        CellPoset { dims, labels, down_off, down, up_off, up, by_dim, pos_in_dim }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Maximum cell dimension.
    pub fn dim(&self) -> usize {
        self.by_dim.len() - 1
    }

    pub fn dim_of(&self, c: CellId) -> usize {
        self.dims[c as usize] as usize
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        0..self.dims.len() as CellId
    }

    /// Cells of dimension `k` in increasing id order.
    pub fn cells_of_dim(&self, k: usize) -> &[CellId] {
        self.by_dim.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Position of `c` within [`Self::cells_of_dim`] of its dimension.
    pub fn index_in_dim(&self, c: CellId) -> usize {
        self.pos_in_dim[c as usize] as usize
    }

    pub fn label(&self, c: CellId) -> Option<&str> {
        self.labels.get(c as usize).and_then(|l| l.as_deref())
    }

    /// Cells covered by `c`, sorted, with multiplicity.
    pub fn faces(&self, c: CellId) -> &[CellId] {
        &self.down[self.down_off[c as usize] as usize..self.down_off[c as usize + 1] as usize]
    }

    /// Cells covering `c`, sorted, with multiplicity.
    pub fn cofaces(&self, c: CellId) -> &[CellId] {
        &self.up[self.up_off[c as usize] as usize..self.up_off[c as usize + 1] as usize]
    }

    pub fn covers(&self) -> impl Iterator<Item = (CellId, CellId)> + '_ {
        self.cells().flat_map(move |h| self.faces(h).iter().map(move |&l| (l, h)))
    }

    pub fn num_covers(&self) -> usize {
        self.down.len()
    }

    pub fn is_cover(&self, lo: CellId, hi: CellId) -> bool {
        self.faces(hi).binary_search(&lo).is_ok()
    }

    fn walk<'a>(&'a self, c: CellId, next: impl Fn(CellId) -> &'a [CellId]) -> Vec<CellId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([c]);
        seen.insert(c);
        while let Some(x) = queue.pop_front() {
            for &y in next(x) {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// `X_{≤c}` in increasing id order.
    pub fn downset(&self, c: CellId) -> Vec<CellId> {
        self.walk(c, |x| self.faces(x))
    }

    /// `X_{≥c}` in increasing id order.
    pub fn upset(&self, c: CellId) -> Vec<CellId> {
        self.walk(c, |x| self.cofaces(x))
    }

    /// Union of downsets of several cells.
    pub fn downset_of(&self, cells: &[CellId]) -> Vec<CellId> {
        let mut out = BTreeSet::new();
        for &c in cells {
            out.extend(self.downset(c));
        }
        out.into_iter().collect()
    }

    /// Cells of dimension `k` in `X_{≥c}`.
    pub fn upset_of_dim(&self, c: CellId, k: usize) -> Vec<CellId> {
        let d = self.dim_of(c);
        if k < d {
            return Vec::new();
        }
        let mut layer = vec![c];
        for _ in d..k {
            let mut next: Vec<CellId> =
                layer.iter().flat_map(|&x| self.cofaces(x).iter().copied()).collect();
            next.sort_unstable();
            next.dedup();
            layer = next;
        }
        layer
    }

    /// Cells of dimension `k` in `X_{≤c}`.
    pub fn downset_of_dim(&self, c: CellId, k: usize) -> Vec<CellId> {
        let d = self.dim_of(c);
        if k > d {
            return Vec::new();
        }
        let mut layer = vec![c];
        for _ in k..d {
            let mut next: Vec<CellId> =
                layer.iter().flat_map(|&x| self.faces(x).iter().copied()).collect();
            next.sort_unstable();
            next.dedup();
            layer = next;
        }
        layer
    }

    /// `a ≤ b`.
    pub fn leq(&self, a: CellId, b: CellId) -> bool {
        let (da, db) = (self.dim_of(a), self.dim_of(b));
        if da >= db {
            return a == b;
        }
        self.downset_of_dim(b, da).binary_search(&a).is_ok()
    }

    /// Vertices of `X_{≤c}`.
    pub fn vertices_of(&self, c: CellId) -> Vec<CellId> {
        self.downset_of_dim(c, 0)
    }

    /// Maximal chains `σ_0 ⋖ σ_1 ⋖ ... ⋖ σ_k = c`, as flags in increasing
    /// dimension, in lexicographic order.
    pub fn full_flags_ending(&self, c: CellId) -> Vec<Vec<CellId>> {
        let d = self.dim_of(c);
        let mut out = Vec::new();
        let mut stack = vec![c];
        self.flags_rec(&mut stack, d + 1, &mut out);
        out.iter_mut().for_each(|f| f.reverse());
        out.sort();
        out
    }

    fn flags_rec(&self, stack: &mut Vec<CellId>, len: usize, out: &mut Vec<Vec<CellId>>) {
        if stack.len() == len {
            out.push(stack.clone());
            return;
        }
        let top = *stack.last().unwrap();
        let mut faces = self.faces(top).to_vec();
        faces.dedup();
        for f in faces {
            stack.push(f);
            self.flags_rec(stack, len, out);
            stack.pop();
        }
    }

    /// Same poset with cell `c` renamed to `perm[c]`.
    pub fn permuted(&self, perm: &[CellId]) -> CellPoset {
        assert_eq!(perm.len(), self.len());
        let mut dims = vec![0u8; self.len()];
        let mut labels = vec![None; self.len()];
        for c in self.cells() {
            dims[perm[c as usize] as usize] = self.dims[c as usize];
            labels[perm[c as usize] as usize] = self.label(c).map(str::to_owned);
        }
        let covers: Vec<_> =
            self.covers().map(|(l, h)| (perm[l as usize], perm[h as usize])).collect();
        CellPoset::from_parts(dims, &covers, labels)
    }

    pub fn counts_by_dim(&self) -> Vec<usize> {
        self.by_dim.iter().map(Vec::len).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.by_dim.iter().enumerate().map(|(k, v)| if k % 2 == 0 { 1 } else { -1 } * v.len() as i64).sum()
    }

    pub fn to_json(&self) -> ComplexJson {
        ComplexJson {
            cells: self
                .cells()
                .map(|c| CellJson { id: c as u64, dim: self.dims[c as usize], label: self.label(c).map(str::to_owned) })
                .collect(),
            covers: self.covers().map(|(l, h)| [l as u64, h as u64]).collect(),
        }
    }

    /// Reads a complex; ids are renumbered densely in increasing order.
    pub fn from_json(json: &ComplexJson) -> Result<CellPoset, ComplexError> {
        let mut ids: Vec<u64> = json.cells.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ComplexError::DuplicateId(w[0]));
        }
        let dense: HashMap<u64, CellId> = ids.iter().enumerate().map(|(i, &id)| (id, i as CellId)).collect();
        let mut dims = vec![0u8; ids.len()];
        let mut labels = vec![None; ids.len()];
        for c in &json.cells {
            dims[dense[&c.id] as usize] = c.dim;
            labels[dense[&c.id] as usize] = c.label.clone();
        }
        let mut covers = Vec::with_capacity(json.covers.len());
        for &[l, h] in &json.covers {
            let lo = *dense.get(&l).ok_or(ComplexError::UnknownCell(l))?;
            let hi = *dense.get(&h).ok_or(ComplexError::UnknownCell(h))?;
            covers.push((lo, hi));
        }
        CellPoset::build(dims, &covers, labels)
    }
}

fn find_cycle(n: usize, covers: &[(CellId, CellId)]) -> Option<CellId> {
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<CellId>> = vec![Vec::new(); n];
    for &(l, h) in covers {
        indeg[h as usize] += 1;
        out[l as usize].push(h);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut done = 0;
    while let Some(x) = queue.pop_front() {
        done += 1;
        for &y in &out[x] {
            indeg[y as usize] -= 1;
            if indeg[y as usize] == 0 {
                queue.push_back(y as usize);
            }
        }
    }
    (done < n).then(|| (0..n).find(|&i| indeg[i] > 0).unwrap() as CellId)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellJson {
    pub id: u64,
    pub dim: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Wire format: `{"cells":[{"id","dim","label"?}],"covers":[[lo,hi],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexJson {
    pub cells: Vec<CellJson>,
    pub covers: Vec<[u64; 2]>,
}

/// Outcome of [`check_regularity`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct RegularityReport {
    /// Cover relations listed more than once.
    pub repeated_covers: Vec<(CellId, CellId)>,
    /// `(σ, π, middles)` with an odd number of middle cells.
    pub odd_diamonds: Vec<(CellId, CellId, usize)>,
    /// Cells whose closure has a disconnected 1-skeleton.
    pub disconnected_closures: Vec<CellId>,
    /// Cells whose boundary has the wrong Euler characteristic for a sphere.
    pub bad_boundaries: Vec<CellId>,
    /// Ball-homeomorphism of closures is not checkable combinatorially.
    pub closures_are_balls: &'static str,
}

impl RegularityReport {
    pub fn passed(&self) -> bool {
        self.repeated_covers.is_empty()
            && self.odd_diamonds.is_empty()
            && self.disconnected_closures.is_empty()
            && self.bad_boundaries.is_empty()
    }
}

pub fn check_regularity(x: &CellPoset) -> RegularityReport {
    let mut report = RegularityReport { closures_are_balls: "assumed", ..Default::default() };
    for c in x.cells() {
        let faces = x.faces(c);
        for w in faces.windows(2) {
            if w[0] == w[1] && report.repeated_covers.last() != Some(&(w[0], c)) {
                report.repeated_covers.push((w[0], c));
            }
        }
    }
    for pi in x.cells() {
        if x.dim_of(pi) < 2 {
            continue;
        }
        let mut count: HashMap<CellId, usize> = HashMap::new();
        let mut mids = x.faces(pi).to_vec();
        mids.dedup();
        for tau in mids {
            let mut lows = x.faces(tau).to_vec();
            lows.dedup();
            for s in lows {
                *count.entry(s).or_default() += 1;
            }
        }
        let mut odd: Vec<_> = count.into_iter().filter(|&(_, k)| k % 2 == 1).collect();
        odd.sort_unstable();
        report.odd_diamonds.extend(odd.into_iter().map(|(s, k)| (s, pi, k)));
    }
    for c in x.cells() {
        let d = x.dim_of(c);
        if d == 0 {
            continue;
        }
        let closure = x.downset(c);
        let chi: i64 = closure
            .iter()
            .filter(|&&s| s != c)
            .map(|&s| if x.dim_of(s) % 2 == 0 { 1 } else { -1 })
            .sum();
        let sphere = 1 + if (d - 1) % 2 == 0 { 1 } else { -1 };
        if chi != sphere {
            report.bad_boundaries.push(c);
        }
        if !closure_connected(x, &closure) {
            report.disconnected_closures.push(c);
        }
    }
    report
}

fn closure_connected(x: &CellPoset, closure: &[CellId]) -> bool {
    let verts: Vec<CellId> = closure.iter().copied().filter(|&s| x.dim_of(s) == 0).collect();
    if verts.len() <= 1 {
        return true;
    }
    let inside = |c: CellId| closure.binary_search(&c).is_ok();
    let mut seen = BTreeSet::from([verts[0]]);
    let mut queue = VecDeque::from([verts[0]]);
    while let Some(v) = queue.pop_front() {
        for &e in x.cofaces(v) {
            if !inside(e) {
                continue;
            }
            for &w in x.faces(e) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
    }
    seen.len() == verts.len()
}

#[derive(Debug, Clone, Serialize)]
pub struct SparsityReport {
    pub max_up_degree: usize,
    pub max_down_degree: usize,
    pub bound: usize,
    pub passed: bool,
}

pub fn check_sparsity(x: &CellPoset, bound: usize) -> SparsityReport {
    let max_up = x.cells().map(|c| x.cofaces(c).len()).max().unwrap_or(0);
    let max_down = x.cells().map(|c| x.faces(c).len()).max().unwrap_or(0);
    SparsityReport {
        max_up_degree: max_up,
        max_down_degree: max_down,
        bound,
        passed: max_up <= bound && max_down <= bound,
    }
}

/// Cartesian product. Cell `(a, b)` gets id `a * |Y| + b`.
pub fn product_complex(x: &CellPoset, y: &CellPoset) -> CellPoset {
    let ny = y.len() as CellId;
    let n = x.len() * y.len();
    let id = |a: CellId, b: CellId| a * ny + b;
    let mut dims = Vec::with_capacity(n);
    for a in x.cells() {
        for b in y.cells() {
            dims.push((x.dim_of(a) + y.dim_of(b)) as u8);
        }
    }
    let mut covers = Vec::with_capacity(x.num_covers() * y.len() + x.len() * y.num_covers());
    for (lo, hi) in x.covers() {
        for b in y.cells() {
            covers.push((id(lo, b), id(hi, b)));
        }
    }
    for a in x.cells() {
        for (lo, hi) in y.covers() {
            covers.push((id(a, lo), id(a, hi)));
        }
    }
    let labels = if n <= LABEL_LIMIT {
        let name = |p: &CellPoset, c: CellId| p.label(c).map(str::to_owned).unwrap_or_else(|| c.to_string());
        x.cells()
            .flat_map(|a| y.cells().map(move |b| (a, b)))
            .map(|(a, b)| Some(format!("({},{})", name(x, a), name(y, b))))
            .collect()
    } else {
        Vec::new()
    };
    CellPoset::from_parts(dims, &covers, labels)
}

/// The two projections out of [`product_complex`].
pub fn product_projections(x: &CellPoset, y: &CellPoset) -> (OrderMap, OrderMap) {
    let ny = y.len() as CellId;
    let n = x.len() * y.len();
    let px = (0..n as CellId).map(|c| c / ny).collect();
    let py = (0..n as CellId).map(|c| c % ny).collect();
    (OrderMap::new(px, x.len()), OrderMap::new(py, y.len()))
}

/// A map of cells `source -> target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderMap {
    assignment: Vec<CellId>,
    target_len: usize,
}

impl OrderMap {
    pub fn new(assignment: Vec<CellId>, target_len: usize) -> OrderMap {
        OrderMap { assignment, target_len }
    }

    pub fn identity(n: usize) -> OrderMap {
        OrderMap::new((0..n as CellId).collect(), n)
    }

    #[inline]
    pub fn apply(&self, c: CellId) -> CellId {
        self.assignment[c as usize]
    }

    pub fn assignment(&self) -> &[CellId] {
        &self.assignment
    }

    pub fn source_len(&self) -> usize {
        self.assignment.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    /// Checks totality and order preservation on every cover of `source`.
    pub fn validate(&self, source: &CellPoset, target: &CellPoset) -> Result<(), ComplexError> {
        if self.assignment.len() != source.len() {
            return Err(ComplexError::SizeMismatch { expected: source.len(), found: self.assignment.len() });
        }
        for c in source.cells() {
            let t = self.apply(c);
            if t as usize >= target.len() {
                return Err(ComplexError::TargetOutOfRange { cell: c, target: t, len: target.len() });
            }
        }
        for (lo, hi) in source.covers() {
            if !target.leq(self.apply(lo), self.apply(hi)) {
                return Err(ComplexError::NotOrderPreserving { lo, hi });
            }
        }
        Ok(())
    }
}

/// True iff `f` is total and order-preserving.
pub fn map_check(f: &OrderMap, source: &CellPoset, target: &CellPoset) -> bool {
    f.validate(source, target).is_ok()
}

/// A cell poset whose `k`-cells carry ordered lists of `k + 1` vertices, with
/// faces exactly the vertex sublists.
#[derive(Debug, Clone)]
pub struct SimplicialPoset {
    poset: CellPoset,
    vertices: Vec<Vec<CellId>>,
    index: HashMap<Vec<CellId>, CellId>,
}

impl SimplicialPoset {
    pub fn new(poset: CellPoset, vertices: Vec<Vec<CellId>>) -> Result<SimplicialPoset, ComplexError> {
        if vertices.len() != poset.len() {
            return Err(ComplexError::SizeMismatch { expected: poset.len(), found: vertices.len() });
        }
        let mut index = HashMap::with_capacity(vertices.len());
        for c in poset.cells() {
            let vs = &vertices[c as usize];
            let bad = |reason: &str| ComplexError::NotSimplicial { cell: c, reason: reason.to_owned() };
            if vs.len() != poset.dim_of(c) + 1 {
                return Err(bad("vertex count does not match dimension"));
            }
            if poset.dim_of(c) == 0 && vs[0] != c {
                return Err(bad("a vertex must list itself"));
            }
            if index.insert(vs.clone(), c).is_some() {
                return Err(bad("vertex list repeated"));
            }
        }
        for c in poset.cells() {
            let vs = &vertices[c as usize];
            if vs.len() < 2 {
                continue;
            }
            let mut expected: Vec<CellId> = Vec::with_capacity(vs.len());
            for i in 0..vs.len() {
                let mut sub = vs.clone();
                sub.remove(i);
                match index.get(&sub) {
                    Some(&f) => expected.push(f),
                    None => {
                        return Err(ComplexError::NotSimplicial { cell: c, reason: "missing face".into() })
                    }
                }
            }
            expected.sort_unstable();
            if expected != poset.faces(c) {
                return Err(ComplexError::NotSimplicial { cell: c, reason: "faces differ from vertex sublists".into() });
            }
        }
        Ok(SimplicialPoset { poset, vertices, index })
    }

    pub fn poset(&self) -> &CellPoset {
        &self.poset
    }

    pub fn vertices(&self, c: CellId) -> &[CellId] {
        &self.vertices[c as usize]
    }

    pub fn cell_of(&self, vertices: &[CellId]) -> Option<CellId> {
        self.index.get(vertices).copied()
    }

    /// Former `p`-face `[v_0, ..., v_p]`.
    pub fn former(&self, c: CellId, p: usize) -> CellId {
        self.cell_of(&self.vertices(c)[..=p]).expect("faces exist")
    }

    /// Latter `q`-face `[v_{k-q}, ..., v_k]`.
    pub fn latter(&self, c: CellId, q: usize) -> CellId {
        let vs = self.vertices(c);
        self.cell_of(&vs[vs.len() - 1 - q..]).expect("faces exist")
    }
}
