//! Covering maps of cell posets, with projection `P_#` and transfer `T_#`.
//!
//! `P: X̃ → X` is a covering when it is an order-preserving surjection,
//! each closure `X̃_{≤σ̃}` maps isomorphically onto `X_{≤P(σ̃)}`, and the
//! preimage of each closure `X_{≤σ}` is the disjoint union of the closures
//! of the lifts of `σ`. The second condition is checked in the equivalent
//! form "P maps each upset `X̃_{≥τ̃}` bijectively onto `X_{≥P(τ̃)}`".

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellId, CellPoset, ComplexError, OrderMap};
use crate::gfq::{rank, FqMatrix};
use crate::products::{cap_general, cup_general, ProductError};
use crate::sheaf::views::Pulled;
use crate::sheaf::{cohomology, homology, Chain, CochainKind, ChainKind, Cochain, Sheaf, SheafError};
use crate::subdivide::{
    all_flags_ending, carrier, sd_map, sd_map_flag, ApproxInverse, Flag, SdChain, SubdivError, Subdivision,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoveringError {
    #[error("not a covering at cell {cell}: {reason}")]
    NotCovering { cell: CellId, reason: String },
    #[error("cell {0} of the base has no preimage")]
    NotSurjective(CellId),
    #[error("sheaf on the cover is not the pullback at cell {cell}: {reason}")]
    SheafNotPullback { cell: CellId, reason: String },
    #[error("approximate inverse is not compatible with the covering at {flag:?}: {reason}")]
    Incompatible { flag: Flag, reason: String },
    #[error("covering has an even number of sheets ({0}); transfer is not injective")]
    EvenSheets(usize),
    #[error("covering JSON key {0:?} is not a cell id")]
    BadKey(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Subdiv(#[from] SubdivError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// A verified `ℓ`-sheeted covering `P: X̃ → X`.
#[derive(Debug, Clone)]
pub struct CoveringMap {
    source: Arc<CellPoset>,
    target: Arc<CellPoset>,
    map: OrderMap,
    sheets: usize,
    fiber_off: Vec<u32>,
    fibers: Vec<CellId>,
}

/// Checks the covering conditions cell by cell and indexes the fibers.
pub fn cover_verify(
    source: Arc<CellPoset>,
    target: Arc<CellPoset>,
    map: OrderMap,
) -> Result<CoveringMap, CoveringError> {
    map.validate(&source, &target)?;
    let mut count = vec![0u32; target.len() + 1];
    for c in source.cells() {
        count[map.apply(c) as usize + 1] += 1;
    }
    if let Some(c) = target.cells().find(|&c| count[c as usize + 1] == 0) {
        return Err(CoveringError::NotSurjective(c));
    }
    let sheets = count[1] as usize;
    if let Some(c) = target.cells().find(|&c| count[c as usize + 1] as usize != sheets) {
        return Err(CoveringError::NotCovering {
            cell: c,
            reason: format!("fiber has {} cells, fiber of cell 0 has {sheets}", count[c as usize + 1]),
        });
    }
    for i in 0..target.len() {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut fibers = vec![0; source.len()];
    for c in source.cells() {
        let t = map.apply(c) as usize;
        fibers[fill[t] as usize] = c;
        fill[t] += 1;
    }
    let cells: Vec<CellId> = source.cells().collect();
    cells.par_iter().try_for_each(|&c| check_cell(&source, &target, &map, c))?;
    Ok(CoveringMap { source, target, map, sheets, fiber_off: count, fibers })
}

fn check_cell(source: &CellPoset, target: &CellPoset, map: &OrderMap, c: CellId) -> Result<(), CoveringError> {
    let bad = |reason: String| CoveringError::NotCovering { cell: c, reason };
    let t = map.apply(c);
    if source.dim_of(c) != target.dim_of(t) {
        return Err(bad(format!("dimension {} maps to dimension {}", source.dim_of(c), target.dim_of(t))));
    }
    let mut faces: Vec<CellId> = source.faces(c).iter().map(|&f| map.apply(f)).collect();
    faces.sort_unstable();
    if faces != target.faces(t) {
        return Err(bad(format!("faces do not map bijectively onto the faces of {t}")));
    }
    for (up, base) in [(source.downset(c), target.downset(t)), (source.upset(c), target.upset(t))] {
        let mut img: Vec<CellId> = up.iter().map(|&s| map.apply(s)).collect();
        img.sort_unstable();
        if img != base {
            return Err(bad(format!("closure or star does not map bijectively onto that of {t}")));
        }
    }
    Ok(())
}

impl CoveringMap {
    pub fn source(&self) -> &Arc<CellPoset> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CellPoset> {
        &self.target
    }

    pub fn map(&self) -> &OrderMap {
        &self.map
    }

    pub fn apply(&self, c: CellId) -> CellId {
        self.map.apply(c)
    }

    /// Number of sheets `ℓ`.
    pub fn sheets(&self) -> usize {
        self.sheets
    }

    /// `P^{-1}(σ)`, sorted.
    pub fn fiber(&self, sigma: CellId) -> &[CellId] {
        &self.fibers[self.fiber_off[sigma as usize] as usize..self.fiber_off[sigma as usize + 1] as usize]
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.sheets % 2 == 0 {
            vec![format!("{} sheets: P_#T_# = 0 in characteristic 2, so T_# and P^# are not injective", self.sheets)]
        } else {
            Vec::new()
        }
    }

    /// Fails with [`CoveringError::EvenSheets`] when `ℓ` is even.
    pub fn require_odd(&self) -> Result<(), CoveringError> {
        if self.sheets % 2 == 0 {
            return Err(CoveringError::EvenSheets(self.sheets));
        }
        Ok(())
    }

    /// The unique lift of `sigma` lying below `top`.
    pub fn lift(&self, sigma: CellId, top: CellId) -> CellId {
        self.source
            .downset_of_dim(top, self.target.dim_of(sigma))
            .into_iter()
            .find(|&t| self.map.apply(t) == sigma)
            .unwrap_or_else(|| panic!("cell {sigma} has no lift below {top}"))
    }

    /// `P_#(x̃(σ̃)·σ̃) = x̃(σ̃)·P(σ̃)`.
    pub fn p_sharp(&self, x: &Chain) -> Chain {
        self.push(x)
    }

    /// `T_#(x(σ)·σ) = Σ_{σ̃ ∈ P^{-1}(σ)} x(σ)·σ̃`.
    pub fn t_sharp(&self, x: &Chain) -> Chain {
        self.spread(x)
    }

    /// `(P^#α)(σ̃) = α(P(σ̃))`.
    pub fn p_cosharp(&self, a: &Cochain) -> Cochain {
        self.spread(a)
    }

    /// `(T^#α̃)(σ) = Σ_{σ̃ ∈ P^{-1}(σ)} α̃(σ̃)`.
    pub fn t_cosharp(&self, a: &Cochain) -> Cochain {
        self.push(a)
    }

    fn push<Kind>(&self, g: &crate::sheaf::Graded<CellId, Kind>) -> crate::sheaf::Graded<CellId, Kind> {
        let mut out = crate::sheaf::Graded::zero(g.degree());
        for (&c, v) in g.iter() {
            out.add_at(self.map.apply(c), v);
        }
        out
    }

    fn spread<Kind>(&self, g: &crate::sheaf::Graded<CellId, Kind>) -> crate::sheaf::Graded<CellId, Kind> {
        let mut out = crate::sheaf::Graded::zero(g.degree());
        for (&c, v) in g.iter() {
            for &t in self.fiber(c) {
                out.add_at(t, v);
            }
        }
        out
    }

    /// `P^*F` as a lazy view on `X̃`.
    pub fn pullback<S: Sheaf>(&self, f: S) -> Result<Pulled<S>, CoveringError> {
        Ok(Pulled::new(self.source.clone(), self.map.clone(), f)?)
    }

    /// Checks that `upper` equals `P^*lower` on stalks and cover maps.
    pub fn check_pullback<U: Sheaf + ?Sized, L: Sheaf + ?Sized>(&self, upper: &U, lower: &L) -> Result<(), CoveringError> {
        let bad = |cell: CellId, reason: String| CoveringError::SheafNotPullback { cell, reason };
        if upper.base() != &*self.source || lower.base() != &*self.target {
            return Err(bad(0, "sheaves live on the wrong complexes".into()));
        }
        if upper.field() != lower.field() {
            return Err(SheafError::FieldMismatch(upper.field(), lower.field()).into());
        }
        for c in self.source.cells() {
            let t = self.map.apply(c);
            if upper.stalk_dim(c) != lower.stalk_dim(t) {
                return Err(bad(c, format!("stalk dimension {} differs from {}", upper.stalk_dim(c), lower.stalk_dim(t))));
            }
        }
        for (lo, hi) in self.source.covers() {
            if *upper.restriction(lo, hi) != *lower.restriction(self.map.apply(lo), self.map.apply(hi)) {
                return Err(bad(hi, format!("restriction map on ({lo},{hi}) differs")));
            }
        }
        Ok(())
    }

    /// `sd P: sd X̃ → sd X`, verified as a covering.
    pub fn subdivided(&self, upper: &Subdivision, lower: &Subdivision) -> Result<CoveringMap, CoveringError> {
        let m = sd_map(&self.map, upper, lower)?;
        cover_verify(Arc::new(upper.poset().clone()), Arc::new(lower.poset().clone()), m)
    }

    /// `(sd P)_#` on flag-keyed chains.
    pub fn p_sharp_sd(&self, y: &SdChain) -> SdChain {
        SdChain::from_entries(y.degree(), y.iter().map(|(f, v)| (sd_map_flag(&self.map, f), v.clone())))
    }

    /// The lifts of a flag of `sd X`, one per lift of its carrier.
    pub fn lift_flag(&self, flag: &[CellId]) -> Vec<Flag> {
        let top = carrier(flag);
        self.fiber(top).iter().map(|&t| flag.iter().map(|&s| self.lift(s, t)).collect()).collect()
    }

    /// `T_{sd X,#}` on flag-keyed chains.
    pub fn t_sharp_sd(&self, y: &SdChain) -> SdChain {
        let mut out = SdChain::zero(y.degree());
        for (f, v) in y.iter() {
            for lf in self.lift_flag(f) {
                out.add_at(lf, v);
            }
        }
        out
    }

    pub fn to_json(&self) -> CoveringJson {
        CoveringJson { map: self.source.cells().map(|c| (c.to_string(), self.map.apply(c))).collect() }
    }

    pub fn from_json(
        json: &CoveringJson,
        source: Arc<CellPoset>,
        target: Arc<CellPoset>,
    ) -> Result<CoveringMap, CoveringError> {
        let mut assignment = vec![None; source.len()];
        for (k, &v) in &json.map {
            let c: CellId = k.trim().parse().map_err(|_| CoveringError::BadKey(k.clone()))?;
            if c as usize >= source.len() {
                return Err(ComplexError::UnknownCell(c as u64).into());
            }
            assignment[c as usize] = Some(v);
        }
        let assignment = assignment
            .into_iter()
            .map(|v| v.ok_or(ComplexError::SizeMismatch { expected: source.len(), found: json.map.len() }))
            .collect::<Result<Vec<_>, _>>()?;
        let tl = target.len();
        cover_verify(source, target, OrderMap::new(assignment, tl))
    }
}

/// Wire format: `{"map":{"srcCellId":dstCellId}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CoveringJson {
    pub map: BTreeMap<String, CellId>,
}

/// A base approximate inverse together with its lift through a covering.
#[derive(Debug, Clone)]
pub struct CompatibleApprox {
    cover: Arc<CoveringMap>,
    base: Arc<ApproxInverse>,
    lifted: Arc<ApproxInverse>,
}

/// Lifts `base` (an approximate inverse on `X`) to `X̃` by lifting each
/// coefficient cell below the carrier, then checks it is a valid
/// approximate inverse on `X̃`.
pub fn build_compatible_a_sharp(
    cover: Arc<CoveringMap>,
    base: Arc<ApproxInverse>,
) -> Result<CompatibleApprox, CoveringError> {
    if base.source().as_ref() != cover.target().as_ref() {
        return Err(SubdivError::ApproxMismatch.into());
    }
    let lifted = ApproxInverse::lifted(cover.source().clone(), cover.map().clone(), base.clone());
    lifted.force_all()?;
    lifted.verify()?;
    Ok(CompatibleApprox { cover, base, lifted: Arc::new(lifted) })
}

/// [`build_compatible_a_sharp`] without the exhaustive pass: flags of
/// `sd X̃` are lifted on first use.
pub fn lift_a_sharp(cover: Arc<CoveringMap>, base: Arc<ApproxInverse>) -> Result<CompatibleApprox, CoveringError> {
    if base.source().as_ref() != cover.target().as_ref() {
        return Err(SubdivError::ApproxMismatch.into());
    }
    let lifted = ApproxInverse::lifted(cover.source().clone(), cover.map().clone(), base.clone());
    Ok(CompatibleApprox { cover, base, lifted: Arc::new(lifted) })
}

impl CompatibleApprox {
    pub fn cover(&self) -> &Arc<CoveringMap> {
        &self.cover
    }

    pub fn base(&self) -> &Arc<ApproxInverse> {
        &self.base
    }

    pub fn lifted(&self) -> &Arc<ApproxInverse> {
        &self.lifted
    }

    /// Checks `P_#A_# = A_#(sd P)_#` on every flag of `sd X̃` and
    /// `A_#T_# = T_#A_#` on every flag of `sd X`.
    pub fn verify_compatibility(&self) -> Result<(), CoveringError> {
        let p = &self.cover;
        let up: Vec<CellId> = p.source().cells().collect();
        up.par_iter().try_for_each(|&c| -> Result<(), CoveringError> {
            for flag in all_flags_ending(p.source(), c) {
                let mut lhs: Vec<CellId> = self.lifted.eval(&flag)?.iter().map(|&s| p.apply(s)).collect();
                lhs.sort_unstable();
                let rhs = self.base.eval(&sd_map_flag(p.map(), &flag))?;
                if lhs != *rhs {
                    return Err(CoveringError::Incompatible { flag, reason: "P_#A_# differs from A_#(sd P)_#".into() });
                }
            }
            Ok(())
        })?;
        let down: Vec<CellId> = p.target().cells().collect();
        down.par_iter().try_for_each(|&c| -> Result<(), CoveringError> {
            for flag in all_flags_ending(p.target(), c) {
                let mut lhs = Vec::new();
                for lf in p.lift_flag(&flag) {
                    lhs.extend(self.lifted.eval(&lf)?.iter().copied());
                }
                lhs.sort_unstable();
                let mut rhs: Vec<CellId> =
                    self.base.eval(&flag)?.iter().flat_map(|&s| p.fiber(s).iter().copied()).collect();
                rhs.sort_unstable();
                if lhs != rhs {
                    return Err(CoveringError::Incompatible { flag, reason: "A_#T_# differs from T_#A_#".into() });
                }
            }
            Ok(())
        })
    }

    /// `P^#(α⌣β) = (P^#α)⌣(P^#β)`, both sides computed.
    pub fn cup_lift_check<F: Sheaf, G: Sheaf>(
        &self,
        f: &F,
        g: &G,
        alpha: &Cochain,
        beta: &Cochain,
    ) -> Result<bool, CoveringError> {
        let p = &self.cover;
        let lhs = p.p_cosharp(&cup_general(f, g, &self.base, alpha, beta)?);
        let (fu, gu) = (p.pullback(f)?, p.pullback(g)?);
        let rhs = cup_general(&fu, &gu, &self.lifted, &p.p_cosharp(alpha), &p.p_cosharp(beta))?;
        Ok(lhs == rhs)
    }

    /// `T_#(α⌢x) = (P^#α)⌢(T_#x)`, both sides computed.
    pub fn cap_lift_check<F: Sheaf, G: Sheaf>(
        &self,
        f: &F,
        g: &G,
        alpha: &Cochain,
        x: &Chain,
    ) -> Result<bool, CoveringError> {
        let p = &self.cover;
        let lhs = p.t_sharp(&cap_general(f, g, &self.base, alpha, x)?);
        let (fu, gu) = (p.pullback(f)?, p.pullback(g)?);
        let rhs = cap_general(&fu, &gu, &self.lifted, &p.p_cosharp(alpha), &p.t_sharp(x))?;
        Ok(lhs == rhs)
    }
}

/// Ranks of the maps induced on (co)homology by `P^#` and `T_#`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InducedRanks {
    pub degree: usize,
    pub betti_cohomology: usize,
    pub rank_p_cosharp: usize,
    pub betti_homology: usize,
    pub rank_t_sharp: usize,
}

impl InducedRanks {
    pub fn injective(&self) -> bool {
        self.rank_p_cosharp == self.betti_cohomology && self.rank_t_sharp == self.betti_homology
    }
}

/// Computes the rank of `P^*: H^i(X;F) → H^i(X̃;P^*F)` and of
/// `T_*: H_i(X;F) → H_i(X̃;P^*F)` on explicit class bases.
pub fn induced_ranks<S: Sheaf>(cover: &CoveringMap, f: &S, degree: usize) -> Result<InducedRanks, CoveringError> {
    let up = cover.pullback(f)?;
    let (h_lo, h_up) = (cohomology(f, degree)?, cohomology(&up, degree)?);
    let mut cols = Vec::with_capacity(h_lo.betti);
    for k in 0..h_lo.betti {
        let a = cover.p_cosharp(&h_lo.rep::<CochainKind>(k));
        cols.push(h_up.class_of(&h_up.layout.to_dense(up.base(), &a))?);
    }
    let rank_p = rank(&FqMatrix::from_cols(f.field(), h_up.betti, &cols));
    let (c_lo, c_up) = (homology(f, degree)?, homology(&up, degree)?);
    let mut cols = Vec::with_capacity(c_lo.betti);
    for k in 0..c_lo.betti {
        let x = cover.t_sharp(&c_lo.rep::<ChainKind>(k));
        cols.push(c_up.class_of(&c_up.layout.to_dense(up.base(), &x))?);
    }
    let rank_t = rank(&FqMatrix::from_cols(f.field(), c_up.betti, &cols));
    Ok(InducedRanks {
        degree,
        betti_cohomology: h_lo.betti,
        rank_p_cosharp: rank_p,
        betti_homology: c_lo.betti,
        rank_t_sharp: rank_t,
    })
}
