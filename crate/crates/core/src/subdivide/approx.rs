use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{CellId, CellPoset, OrderMap};
use crate::gfq::{Field, FqMatrix, Solver};
use crate::sheaf::{Chain, Cochain, Sheaf};

use super::{all_flags_ending, carrier, check_flag, flag_faces, flag_key, flags_ending, parse_flag_key, sd_map_flag};
use super::{Flag, SdChain, SdCochain, SubdivError};

/// Forced choices for the inductive construction: `v_σ` for chosen cells
/// and whole chains `b_ρ` for chosen flags of positive degree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pins {
    pub vertices: BTreeMap<CellId, CellId>,
    pub chains: BTreeMap<Flag, Vec<CellId>>,
}

/// Wire format: `{"vertices":{"σ":v},"chains":{"σ0,σ1,...":[cells]}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PinsJson {
    #[serde(default)]
    pub vertices: BTreeMap<String, CellId>,
    #[serde(default)]
    pub chains: BTreeMap<String, Vec<CellId>>,
}

impl Pins {
    pub fn to_json(&self) -> PinsJson {
        PinsJson {
            vertices: self.vertices.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            chains: self.chains.iter().map(|(k, v)| (flag_key(k), v.clone())).collect(),
        }
    }

    pub fn from_json(json: &PinsJson) -> Result<Pins, SubdivError> {
        let mut pins = Pins::default();
        for (k, &v) in &json.vertices {
            let c = k.trim().parse().map_err(|_| SubdivError::BadKey(k.clone()))?;
            pins.vertices.insert(c, v);
        }
        for (k, v) in &json.chains {
            let mut cells = v.clone();
            cells.sort_unstable();
            pins.chains.insert(parse_flag_key(k)?, cells);
        }
        Ok(pins)
    }
}

/// `∂_n` restricted to `X_{≤c}`, ready for repeated solves.
struct LocalSolve {
    rows: Vec<CellId>,
    cols: Vec<CellId>,
    solver: Solver,
}

enum Rule {
    Inductive { pins: Pins, local: RwLock<HashMap<(CellId, usize), Arc<LocalSolve>>> },
    /// Unique lifts of a base approximate inverse through a covering map.
    Lifted { base: Arc<ApproxInverse>, map: OrderMap },
}

/// A chain map `A_#: C_•(sd X) → C_•(X)` with `A_#S_# = id` and the
/// carrier condition, evaluated lazily per flag and memoized.
///
/// Coefficients lie in `F_2`, so the same map serves every `F_{2^m}`.
pub struct ApproxInverse {
    source: Arc<CellPoset>,
    vertex: Vec<CellId>,
    rule: Rule,
    memo: RwLock<HashMap<Flag, Arc<[CellId]>>>,
}

impl std::fmt::Debug for ApproxInverse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.rule {
            Rule::Inductive { .. } => "inductive",
            Rule::Lifted { .. } => "lifted",
        };
        write!(f, "ApproxInverse {{ {kind}, source: {:?} }}", self.source)
    }
}

impl ApproxInverse {
    /// Sets up the inductive construction. Vertex pins are checked here;
    /// chain pins are checked when their flag is first evaluated.
    pub fn new(source: Arc<CellPoset>, pins: Pins) -> Result<ApproxInverse, SubdivError> {
        let mut vertex = Vec::with_capacity(source.len());
        for c in source.cells() {
            let v = match pins.vertices.get(&c) {
                Some(&v) => {
                    let bad = |reason: &str| SubdivError::PinInconsistent { flag: vec![c], reason: reason.into() };
                    if v as usize >= source.len() || source.dim_of(v) != 0 {
                        return Err(bad("pinned cell is not a vertex"));
                    }
                    if !source.leq(v, c) {
                        return Err(bad("pinned vertex is not below the cell"));
                    }
                    if source.dim_of(c) == 0 && v != c {
                        return Err(bad("a vertex must map to itself"));
                    }
                    v
                }
                None => source.downset_of_dim(c, 0)[0],
            };
            vertex.push(v);
        }
        for (flag, chain) in &pins.chains {
            check_flag(&source, flag)?;
            if flag.len() < 2 {
                return Err(SubdivError::PinInconsistent {
                    flag: flag.clone(),
                    reason: "degree-0 choices are vertex pins".into(),
                });
            }
            let top = carrier(flag);
            if let Some(&bad) = chain.iter().find(|&&s| source.dim_of(s) != flag.len() - 1 || !source.leq(s, top)) {
                return Err(SubdivError::PinInconsistent {
                    flag: flag.clone(),
                    reason: format!("cell {bad} violates the carrier condition or has the wrong dimension"),
                });
            }
        }
        Ok(ApproxInverse {
            source,
            vertex,
            rule: Rule::Inductive { pins, local: RwLock::new(HashMap::new()) },
            memo: RwLock::new(HashMap::new()),
        })
    }

    /// `A_{sd X̃,#}(ρ̃) = Σ_σ A_{(sd P)(ρ̃),σ}·σ̃`, with `σ̃` the lift of `σ`
    /// below the carrier of `ρ̃`. `map` must be a verified covering.
    pub(crate) fn lifted(cover: Arc<CellPoset>, map: OrderMap, base: Arc<ApproxInverse>) -> ApproxInverse {
        let vertex = cover
            .cells()
            .map(|c| lift(&cover, &map, base.vertex(map.apply(c)), 0, c))
            .collect();
        ApproxInverse { source: cover, vertex, rule: Rule::Lifted { base, map }, memo: RwLock::new(HashMap::new()) }
    }

    pub fn source(&self) -> &Arc<CellPoset> {
        &self.source
    }

    pub fn pins(&self) -> Option<&Pins> {
        match &self.rule {
            Rule::Inductive { pins, .. } => Some(pins),
            Rule::Lifted { .. } => None,
        }
    }

    /// `v_σ`, the vertex `A_#([σ])`.
    pub fn vertex(&self, sigma: CellId) -> CellId {
        self.vertex[sigma as usize]
    }

    /// Support of `A_#(ρ)`, sorted.
    pub fn eval(&self, flag: &[CellId]) -> Result<Arc<[CellId]>, SubdivError> {
        if let Some(v) = self.memo.read().unwrap().get(flag) {
            return Ok(v.clone());
        }
        check_flag(&self.source, flag)?;
        let v: Arc<[CellId]> = match &self.rule {
            _ if flag.len() == 1 => Arc::from(vec![self.vertex(flag[0])]),
            Rule::Lifted { base, map } => {
                let image = sd_map_flag(map, flag);
                let top = carrier(flag);
                let mut out: Vec<CellId> =
                    base.eval(&image)?.iter().map(|&s| lift(&self.source, map, s, flag.len() - 1, top)).collect();
                out.sort_unstable();
                Arc::from(out)
            }
            Rule::Inductive { pins, local } => self.solve_flag(flag, pins, local)?,
        };
        self.memo.write().unwrap().insert(flag.to_vec(), v.clone());
        Ok(v)
    }

    fn solve_flag(
        &self,
        flag: &[CellId],
        pins: &Pins,
        local: &RwLock<HashMap<(CellId, usize), Arc<LocalSolve>>>,
    ) -> Result<Arc<[CellId]>, SubdivError> {
        let x = &self.source;
        let n = flag.len() - 1;
        let top = carrier(flag);
        let ls = self.local_solve(local, top, n);
        let mut rhs = vec![0u8; ls.rows.len()];
        for face in flag_faces(flag) {
            for &s in self.eval(&face)?.iter() {
                let i = ls.rows.binary_search(&s).expect("carrier condition holds on faces");
                rhs[i] ^= 1;
            }
        }
        if let Some(b) = pins.chains.get(flag) {
            let mut got = vec![0u8; ls.rows.len()];
            for &s in b {
                for &t in x.faces(s) {
                    got[ls.rows.binary_search(&t).unwrap()] ^= 1;
                }
            }
            if got != rhs {
                return Err(SubdivError::PinInconsistent {
                    flag: flag.to_vec(),
                    reason: "boundary of the pinned chain differs from A_# of the flag's boundary".into(),
                });
            }
            return Ok(Arc::from(b.clone()));
        }
        let sol = ls.solver.solve(&rhs).map_err(|_| SubdivError::NoSolution { flag: flag.to_vec(), cell: top })?;
        Ok(ls.cols.iter().zip(&sol).filter(|(_, &b)| b == 1).map(|(&c, _)| c).collect::<Vec<_>>().into())
    }

    fn local_solve(&self, local: &RwLock<HashMap<(CellId, usize), Arc<LocalSolve>>>, top: CellId, n: usize) -> Arc<LocalSolve> {
        if let Some(ls) = local.read().unwrap().get(&(top, n)) {
            return ls.clone();
        }
        let x = &self.source;
        let rows = x.downset_of_dim(top, n - 1);
        let cols = x.downset_of_dim(top, n);
        let mut m = FqMatrix::zeros(Field::f2(), rows.len(), cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for &t in x.faces(c) {
                let i = rows.binary_search(&t).unwrap();
                m.set(i, j, m.get(i, j) ^ 1);
            }
        }
        let ls = Arc::new(LocalSolve { solver: Solver::new(&m), rows, cols });
        local.write().unwrap().insert((top, n), ls.clone());
        ls
    }

    /// Evaluates every flag of `sd X` in order of degree.
    pub fn force_all(&self) -> Result<(), SubdivError> {
        let x = &self.source;
        for len in 1..=x.dim() + 1 {
            for c in x.cells() {
                for flag in flags_ending(x, c, len) {
                    self.eval(&flag)?;
                }
            }
        }
        Ok(())
    }

    /// Checks the carrier condition and `∂A_# = A_#∂` on every flag, and
    /// `A_#S_# = id` on every cell.
    pub fn verify(&self) -> Result<(), SubdivError> {
        let x = &self.source;
        let cells: Vec<CellId> = x.cells().collect();
        cells.par_iter().try_for_each(|&c| -> Result<(), SubdivError> {
            for flag in all_flags_ending(x, c) {
                let a = self.eval(&flag)?;
                let bad = |reason: String| SubdivError::Invalid { flag: flag.clone(), reason };
                if let Some(&s) = a.iter().find(|&&s| x.dim_of(s) != flag.len() - 1 || !x.leq(s, c)) {
                    return Err(bad(format!("cell {s} violates the carrier condition")));
                }
                if flag.len() > 1 {
                    let mut lhs = BTreeMap::new();
                    for &s in a.iter() {
                        for &t in x.faces(s) {
                            *lhs.entry(t).or_insert(0u8) ^= 1;
                        }
                    }
                    let mut rhs = BTreeMap::new();
                    for face in flag_faces(&flag) {
                        for &t in self.eval(&face)?.iter() {
                            *rhs.entry(t).or_insert(0u8) ^= 1;
                        }
                    }
                    lhs.retain(|_, v| *v == 1);
                    rhs.retain(|_, v| *v == 1);
                    if lhs != rhs {
                        return Err(bad("boundary does not commute".into()));
                    }
                }
            }
            let mut sum = BTreeMap::new();
            for flag in x.full_flags_ending(c) {
                for &s in self.eval(&flag)?.iter() {
                    *sum.entry(s).or_insert(0u8) ^= 1;
                }
            }
            sum.retain(|_, v| *v == 1);
            if sum.keys().copied().collect::<Vec<_>>() != vec![c] {
                return Err(SubdivError::Invalid { flag: vec![c], reason: "A_#S_# is not the identity here".into() });
            }
            Ok(())
        })
    }

    /// All memoized values plus pins, for certificate replay.
    pub fn to_json(&self) -> ApproxJson {
        let memo = self.memo.read().unwrap();
        ApproxJson {
            pins: self.pins().map(Pins::to_json).unwrap_or_default(),
            coeffs: memo.iter().map(|(f, v)| (flag_key(f), v.iter().map(|&c| [c, 1]).collect())).collect(),
        }
    }

    /// Reloads a dump: pins drive the construction and every recorded
    /// coefficient list must be reproduced.
    pub fn from_json(source: Arc<CellPoset>, json: &ApproxJson) -> Result<ApproxInverse, SubdivError> {
        let a = ApproxInverse::new(source, Pins::from_json(&json.pins)?)?;
        for (k, coeffs) in &json.coeffs {
            let flag = parse_flag_key(k)?;
            let mut want: Vec<CellId> = coeffs.iter().filter(|e| e[1] % 2 == 1).map(|e| e[0]).collect();
            want.sort_unstable();
            if *a.eval(&flag)? != *want {
                return Err(SubdivError::Invalid { flag, reason: "recorded coefficients are not reproduced".into() });
            }
        }
        Ok(a)
    }
}

/// The unique `σ̃ ≤ top` with `map(σ̃) = σ`.
fn lift(cover: &CellPoset, map: &OrderMap, sigma: CellId, dim: usize, top: CellId) -> CellId {
    cover
        .downset_of_dim(top, dim)
        .into_iter()
        .find(|&t| map.apply(t) == sigma)
        .unwrap_or_else(|| panic!("cell {sigma} has no lift below {top}"))
}

/// Wire format: `{"pins":{...},"coeffs":{"σ0,σ1,...":[[cell,coef],...]}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ApproxJson {
    pub pins: PinsJson,
    pub coeffs: BTreeMap<String, Vec<[CellId; 2]>>,
}

/// Builds `A_#` eagerly on all of `sd X` and verifies it exhaustively.
pub fn build_a_sharp(source: Arc<CellPoset>, pins: Pins) -> Result<ApproxInverse, SubdivError> {
    let a = ApproxInverse::new(source, pins)?;
    a.force_all()?;
    a.verify()?;
    Ok(a)
}

/// `A_#(x̃(ρ)·ρ) = Σ_σ A_{ρ,σ} F^T_{σ,s(ρ)} x̃(ρ)·σ`.
pub fn a_sharp<S: Sheaf + ?Sized>(f: &S, a: &ApproxInverse, y: &SdChain) -> Result<Chain, SubdivError> {
    check_base(f, a)?;
    let mut out = Chain::zero(y.degree());
    for (flag, v) in y.iter() {
        let top = carrier(flag);
        for &s in a.eval(flag)?.iter() {
            out.add_at(s, &f.corestrict(s, top, v));
        }
    }
    Ok(out)
}

/// `(A^#α)(ρ) = Σ_σ A_{ρ,σ} F_{σ,s(ρ)} α(σ)`.
pub fn a_cosharp_at<S: Sheaf + ?Sized>(f: &S, a: &ApproxInverse, alpha: &Cochain, flag: &[CellId]) -> Result<Vec<u8>, SubdivError> {
    let top = carrier(flag);
    let mut acc = vec![0u8; f.stalk_dim(top)];
    for &s in a.eval(flag)?.iter() {
        if let Some(v) = alpha.get(&s) {
            acc.iter_mut().zip(f.restrict(s, top, v)).for_each(|(p, q)| *p ^= q);
        }
    }
    Ok(acc)
}

/// `A^#α` on every flag where it can be nonzero: those whose carrier lies
/// above some cell of `supp α`.
pub fn a_cosharp<S: Sheaf + ?Sized>(f: &S, a: &ApproxInverse, alpha: &Cochain) -> Result<SdCochain, SubdivError> {
    check_base(f, a)?;
    let x = f.base();
    let mut tops: Vec<CellId> = alpha.keys().flat_map(|&s| x.upset(s)).collect();
    tops.sort_unstable();
    tops.dedup();
    let mut out = SdCochain::zero(alpha.degree());
    for top in tops {
        for flag in flags_ending(x, top, alpha.degree() + 1) {
            let v = a_cosharp_at(f, a, alpha, &flag)?;
            out.add_at(flag, &v);
        }
    }
    Ok(out)
}

fn check_base<S: Sheaf + ?Sized>(f: &S, a: &ApproxInverse) -> Result<(), SubdivError> {
    if !std::ptr::eq(f.base(), &**a.source()) && f.base() != &**a.source() {
        return Err(SubdivError::ApproxMismatch);
    }
    Ok(())
}
