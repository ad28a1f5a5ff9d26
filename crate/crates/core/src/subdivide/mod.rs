//! Barycentric subdivision.
//!
//! A cell of `sd X` is a flag `[σ_0 < ... < σ_k]` of cells of `X`, stored as
//! the list of its cell ids; its carrier is the top cell `σ_k`. Everything
//! here works on flags directly, so large complexes never need `sd X` in
//! memory. [`Subdivision`] materializes it for small inputs.

mod approx;

pub use approx::{a_cosharp, a_cosharp_at, a_sharp, build_a_sharp, ApproxInverse, ApproxJson, Pins, PinsJson};

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::complex::{CellId, CellPoset, ComplexError, OrderMap, SimplicialPoset};
use crate::sheaf::{Chain, ChainKind, Cochain, CochainKind, Graded, Sheaf, SheafError};

/// A strictly increasing chain of cells, lowest first.
pub type Flag = Vec<CellId>;
pub type SdChain = Graded<Flag, ChainKind>;
pub type SdCochain = Graded<Flag, CochainKind>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubdivError {
    #[error("{0:?} is not a strictly increasing chain of cells")]
    NotAFlag(Flag),
    #[error("no chain with the required boundary below cell {cell} for flag {flag:?}; its closure is not acyclic")]
    NoSolution { flag: Flag, cell: CellId },
    #[error("pin for {flag:?} is inconsistent: {reason}")]
    PinInconsistent { flag: Flag, reason: String },
    #[error("approximate inverse check failed at {flag:?}: {reason}")]
    Invalid { flag: Flag, reason: String },
    #[error("approximate inverse belongs to a different complex")]
    ApproxMismatch,
    #[error("malformed flag key {0:?}")]
    BadKey(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
}

pub fn flag_key(flag: &[CellId]) -> String {
    flag.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_flag_key(key: &str) -> Result<Flag, SubdivError> {
    key.split(',')
        .map(|s| s.trim().parse::<CellId>().map_err(|_| SubdivError::BadKey(key.to_owned())))
        .collect()
}

/// Checks that `flag` is nonempty and strictly increasing in `x`.
pub fn check_flag(x: &CellPoset, flag: &[CellId]) -> Result<(), SubdivError> {
    let ok = !flag.is_empty()
        && flag.iter().all(|&c| (c as usize) < x.len())
        && flag.windows(2).all(|w| x.dim_of(w[0]) < x.dim_of(w[1]) && x.leq(w[0], w[1]));
    if ok {
        Ok(())
    } else {
        Err(SubdivError::NotAFlag(flag.to_vec()))
    }
}

pub fn carrier(flag: &[CellId]) -> CellId {
    *flag.last().expect("flags are nonempty")
}

/// Whether `flag` is a maximal chain below its carrier.
pub fn is_full(x: &CellPoset, flag: &[CellId]) -> bool {
    flag.len() == x.dim_of(carrier(flag)) + 1
}

/// Codimension-one faces, obtained by deleting each entry in turn.
pub fn flag_faces(flag: &[CellId]) -> Vec<Flag> {
    if flag.len() < 2 {
        return Vec::new();
    }
    (0..flag.len())
        .map(|i| {
            let mut f = flag.to_vec();
            f.remove(i);
            f
        })
        .collect()
}

/// Flags obtained by inserting one cell anywhere in `flag`.
pub fn flag_cofaces(x: &CellPoset, flag: &[CellId]) -> Vec<Flag> {
    let mut out = Vec::new();
    for slot in 0..=flag.len() {
        let below = if slot == 0 { None } else { Some(flag[slot - 1]) };
        let above = flag.get(slot).copied();
        let candidates: Vec<CellId> = match (below, above) {
            (_, Some(a)) => x.downset(a).into_iter().filter(|&t| t != a).collect(),
            (Some(b), None) => x.upset(b).into_iter().filter(|&t| t != b).collect(),
            (None, None) => unreachable!(),
        };
        for t in candidates {
            if below.is_some_and(|b| t == b || !x.leq(b, t)) {
                continue;
            }
            let mut f = flag.to_vec();
            f.insert(slot, t);
            out.push(f);
        }
    }
    out.sort();
    out
}

/// All flags with `len` entries whose carrier is `c`, sorted.
pub fn flags_ending(x: &CellPoset, c: CellId, len: usize) -> Vec<Flag> {
    fn rec(x: &CellPoset, stack: &mut Vec<CellId>, len: usize, out: &mut Vec<Flag>) {
        if stack.len() == len {
            let mut f = stack.clone();
            f.reverse();
            out.push(f);
            return;
        }
        let top = *stack.last().unwrap();
        let need = len - stack.len();
        for t in x.downset(top) {
            if t != top && x.dim_of(t) + 1 >= need {
                stack.push(t);
                rec(x, stack, len, out);
                stack.pop();
            }
        }
    }
    if len == 0 || x.dim_of(c) + 1 < len {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(x, &mut vec![c], len, &mut out);
    out.sort();
    out
}

/// Every flag with carrier `c`, of every length.
pub fn all_flags_ending(x: &CellPoset, c: CellId) -> Vec<Flag> {
    (1..=x.dim_of(c) + 1).flat_map(|len| flags_ending(x, c, len)).collect()
}

/// `(sd f)([σ_0, ..., σ_k]) = [f(σ_0), ..., f(σ_k)]`, repeated entries merged.
pub fn sd_map_flag(f: &OrderMap, flag: &[CellId]) -> Flag {
    let mut out: Flag = flag.iter().map(|&c| f.apply(c)).collect();
    out.dedup();
    out
}

/// `sd X` held explicitly as a simplicial poset. The 0-cell `[σ]` has id
/// `σ`; higher flags follow ordered by length, then lexicographically.
#[derive(Debug, Clone)]
pub struct Subdivision {
    source: Arc<CellPoset>,
    result: Arc<SimplicialPoset>,
    carrier: Vec<CellId>,
    chain_table: Vec<Vec<CellId>>,
}

/// Barycentric subdivision of a regular complex.
pub fn subdivide(x: Arc<CellPoset>) -> Subdivision {
    let n = x.len();
    let mut flags: Vec<Flag> = x.cells().map(|c| vec![c]).collect();
    for len in 2..=x.dim() + 1 {
        for c in x.cells() {
            flags.extend(flags_ending(&x, c, len));
        }
    }
    flags[n..].sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let index: HashMap<&[CellId], CellId> =
        flags.iter().enumerate().map(|(i, f)| (f.as_slice(), i as CellId)).collect();
    let dims: Vec<u8> = flags.iter().map(|f| (f.len() - 1) as u8).collect();
    let mut covers = Vec::new();
    for (i, f) in flags.iter().enumerate() {
        for face in flag_faces(f) {
            covers.push((index[face.as_slice()], i as CellId));
        }
    }
    let poset = CellPoset::from_parts(dims, &covers, Vec::new());
    let carrier: Vec<CellId> = flags.iter().map(|f| self::carrier(f)).collect();
    let mut chain_table = vec![Vec::new(); n];
    for (i, f) in flags.iter().enumerate() {
        if is_full(&x, f) {
            chain_table[carrier[i] as usize].push(i as CellId);
        }
    }
    let result = SimplicialPoset::new(poset, flags).expect("flags of a poset form a simplicial poset");
    Subdivision { source: x, result: Arc::new(result), carrier, chain_table }
}

impl Subdivision {
    pub fn source(&self) -> &Arc<CellPoset> {
        &self.source
    }

    pub fn result(&self) -> &Arc<SimplicialPoset> {
        &self.result
    }

    pub fn poset(&self) -> &CellPoset {
        self.result.poset()
    }

    pub fn flag(&self, c: CellId) -> &[CellId] {
        self.result.vertices(c)
    }

    pub fn cell_of(&self, flag: &[CellId]) -> Option<CellId> {
        self.result.cell_of(flag)
    }

    pub fn carrier(&self, c: CellId) -> CellId {
        self.carrier[c as usize]
    }

    /// The carrier as an order-preserving map `sd X → X`.
    pub fn carrier_map(&self) -> OrderMap {
        OrderMap::new(self.carrier.clone(), self.source.len())
    }

    /// Cells of `sd X` in `S_#(σ)`.
    pub fn chain_table(&self, sigma: CellId) -> &[CellId] {
        &self.chain_table[sigma as usize]
    }

    /// Flag-keyed (co)chain to the id-keyed form on `sd X`.
    pub fn to_ids<Kind>(&self, g: &Graded<Flag, Kind>) -> Graded<CellId, Kind> {
        Graded::from_entries(
            g.degree(),
            g.iter().map(|(f, v)| (self.cell_of(f).expect("flag of this complex"), v.clone())),
        )
    }

    pub fn to_flags<Kind>(&self, g: &Graded<CellId, Kind>) -> Graded<Flag, Kind> {
        Graded::from_entries(g.degree(), g.iter().map(|(&c, v)| (self.flag(c).to_vec(), v.clone())))
    }
}

/// `sd f` between materialized subdivisions.
pub fn sd_map(f: &OrderMap, source: &Subdivision, target: &Subdivision) -> Result<OrderMap, SubdivError> {
    f.validate(source.source(), target.source())?;
    let assignment = source
        .poset()
        .cells()
        .map(|c| {
            let img = sd_map_flag(f, source.flag(c));
            target.cell_of(&img).ok_or(SubdivError::NotAFlag(img))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OrderMap::new(assignment, target.poset().len()))
}

/// `S_#(x(σ)·σ) = Σ_{full flags ρ ending at σ} x(σ)·ρ`.
pub fn s_sharp(x: &CellPoset, c: &Chain) -> SdChain {
    let mut out = SdChain::zero(c.degree());
    for (&s, v) in c.iter() {
        for flag in x.full_flags_ending(s) {
            out.add_at(flag, v);
        }
    }
    out
}

/// `(S^#β)(σ) = Σ_{full flags ρ ending at σ} β(ρ)`.
pub fn s_cosharp(x: &CellPoset, b: &SdCochain) -> Cochain {
    let mut out = Cochain::zero(b.degree());
    for (flag, v) in b.iter() {
        if is_full(x, flag) {
            out.add_at(carrier(flag), v);
        }
    }
    out
}

/// Boundary on `C_•(sd X, s^*F)`.
pub fn sd_boundary<S: Sheaf + ?Sized>(f: &S, y: &SdChain) -> SdChain {
    if y.degree() == 0 {
        return SdChain::zero(0);
    }
    let mut out = SdChain::zero(y.degree() - 1);
    for (flag, v) in y.iter() {
        let top = carrier(flag);
        for face in flag_faces(flag) {
            let w = f.corestrict(carrier(&face), top, v);
            out.add_at(face, &w);
        }
    }
    out
}

/// Coboundary on `C^•(sd X, s^*F)`.
pub fn sd_coboundary<S: Sheaf + ?Sized>(f: &S, b: &SdCochain) -> SdCochain {
    let x = f.base();
    let mut out = SdCochain::zero(b.degree() + 1);
    for (flag, v) in b.iter() {
        let lo = carrier(flag);
        for co in flag_cofaces(x, flag) {
            let w = f.restrict(lo, carrier(&co), v);
            out.add_at(co, &w);
        }
    }
    out
}
