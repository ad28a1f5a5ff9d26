//! Homological invariant forms built from cup and cap products, their
//! phase polynomials, and end-to-end certificates for logical
//! multi-controlled-Z gates on lifted product codes.

mod certify;

pub use certify::{
    certify_cz_family, certify_with_form, ChainJson, FormSummary, GateCertificate, GateChoices, GateConfig, GateForm,
    LiftChecks,
};

use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::CodesError;
use crate::complex::{CellId, CellPoset};
use crate::covering::CoveringError;
use crate::gfq::{Field, FqMatrix};
use crate::products::{cap_cached, cup_many, CosharpCache, ProductError};
use crate::sheaf::views::TensorPower;
use crate::sheaf::{
    cohomology, homology, is_cocycle, is_cycle, pairing, Chain, Cochain, HomologyData, Layout, Sheaf, SheafError,
};
use crate::subdivide::{ApproxInverse, SubdivError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CupcapError {
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("γ is not a cocycle")]
    NotCocycle,
    #[error("ξ is not a cycle")]
    NotCycle,
    #[error("slot {slot} expects a vector of length {expected}, found {found}")]
    DimensionMismatch { slot: usize, expected: usize, found: usize },
    #[error("covering has an even number of sheets ({0})")]
    EvenSheets(usize),
    #[error("ker h_{0} does not contain the all-ones vector")]
    AllOnesMissing(usize),
    #[error("h_{j} a_{j}^{mu} is zero", j = .0, mu = .1)]
    ZeroSyndrome(usize, usize),
    #[error("invalid choice: {0}")]
    BadChoice(String),
    #[error("pin rejected: {0}")]
    PinFailure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Subdiv(#[from] SubdivError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Codes(#[from] CodesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Cochain,
    Chain,
}

/// One argument of a form: `C^d` or `C_d` in [`Layout`] coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub kind: SlotKind,
    pub degree: usize,
    pub dim: usize,
}

/// A multilinear form `C^{(1)} × ... × C^{(r)} → F_q` stored as its nonzero
/// entries on coordinate tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantForm {
    field: Field,
    slots: Vec<Slot>,
    entries: Vec<(Vec<u32>, u8)>,
    declared_bound: usize,
}

impl InvariantForm {
    /// Sums repeated coordinate tuples and drops zeros.
    pub fn new(field: Field, slots: Vec<Slot>, entries: Vec<(Vec<u32>, u8)>, declared_bound: usize) -> InvariantForm {
        let mut acc: BTreeMap<Vec<u32>, u8> = BTreeMap::new();
        for (k, c) in entries {
            debug_assert_eq!(k.len(), slots.len());
            *acc.entry(k).or_insert(0) ^= c;
        }
        let entries = acc.into_iter().filter(|&(_, c)| c != 0).collect();
        InvariantForm { field, slots, entries, declared_bound }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn entries(&self) -> &[(Vec<u32>, u8)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// A priori bound on the number of entries touching one coordinate,
    /// from local degrees of the complex.
    pub fn declared_bound(&self) -> usize {
        self.declared_bound
    }

    fn check_args(&self, args: &[&[u8]]) -> Result<(), CupcapError> {
        if args.len() != self.arity() {
            return Err(CupcapError::DegreeMismatch(format!("{} arguments for arity {}", args.len(), self.arity())));
        }
        for (slot, (a, s)) in args.iter().zip(&self.slots).enumerate() {
            if a.len() != s.dim {
                return Err(CupcapError::DimensionMismatch { slot, expected: s.dim, found: a.len() });
            }
        }
        Ok(())
    }

    /// `T(z_1, ..., z_r)`.
    pub fn eval(&self, args: &[&[u8]]) -> Result<u8, CupcapError> {
        self.check_args(args)?;
        let f = self.field;
        let mut acc = 0u8;
        for (k, c) in &self.entries {
            let mut term = *c;
            for (a, &i) in args.iter().zip(k) {
                term = f.mul(term, a[i as usize]);
                if term == 0 {
                    break;
                }
            }
            acc ^= term;
        }
        Ok(acc)
    }

    /// Largest number of entries sharing a coordinate, per slot.
    pub fn fan_in(&self) -> Vec<usize> {
        (0..self.arity())
            .map(|s| {
                let mut count: HashMap<u32, usize> = HashMap::new();
                for (k, _) in &self.entries {
                    *count.entry(k[s]).or_insert(0) += 1;
                }
                count.values().copied().max().unwrap_or(0)
            })
            .collect()
    }

    pub fn is_transversal(&self) -> bool {
        self.fan_in().iter().all(|&m| m <= self.declared_bound)
    }

    /// Hex digest of the sorted entries, for replay comparison.
    pub fn digest(&self) -> String {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.field.q().hash(&mut h);
        self.entries.hash(&mut h);
        format!("{:016x}", h.finish())
    }
}

/// `tr_{F_q/F_2}(T(z_1, ..., z_r))`, the exponent of `-1` in the diagonal
/// of `U_T` at `|z_1, ..., z_r⟩`.
pub fn phase_eval(form: &InvariantForm, states: &[&[u8]]) -> Result<u8, CupcapError> {
    Ok(form.field.trace(form.eval(states)?))
}

/// Cycles and boundaries of one slot, as column spans.
#[derive(Debug, Clone)]
pub struct SlotSpaces {
    pub cycles: FqMatrix,
    pub boundaries: FqMatrix,
    pub reps: FqMatrix,
}

impl From<HomologyData> for SlotSpaces {
    fn from(h: HomologyData) -> Self {
        SlotSpaces { cycles: h.cycles, boundaries: h.boundaries, reps: h.reps }
    }
}

pub fn slot_spaces<S: Sheaf + ?Sized>(f: &S, slot: Slot) -> Result<SlotSpaces, CupcapError> {
    Ok(match slot.kind {
        SlotKind::Cochain => cohomology(f, slot.degree)?.into(),
        SlotKind::Chain => homology(f, slot.degree)?.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvarianceWitness {
    pub trial: usize,
    /// Perturbed slot, or `None` when every slot was perturbed.
    pub slot: Option<usize>,
    pub before: u8,
    pub after: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub trials: usize,
    pub comparisons: usize,
    pub failures: usize,
    pub witness: Option<InvarianceWitness>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_combination(field: Field, m: &FqMatrix, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut v = vec![0u8; m.rows()];
    let q = field.q();
    for c in m.cols_iter() {
        let a = rng.gen_range(0..q) as u8;
        if a != 0 {
            field.axpy(&mut v, a, &c);
        }
    }
    v
}

/// Compares `T(x_1, ..., x_r)` with `T(x_1 + y_1, ..., x_r + y_r)` for random
/// cycles `x_i` and boundaries `y_i`, perturbing all slots at once and each
/// slot alone.
pub fn invariance_check(
    form: &InvariantForm,
    spaces: &[SlotSpaces],
    trials: usize,
    seed: u64,
) -> Result<InvarianceReport, CupcapError> {
    if spaces.len() != form.arity() {
        return Err(CupcapError::DegreeMismatch(format!("{} slot spaces for arity {}", spaces.len(), form.arity())));
    }
    let field = form.field;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvarianceReport { trials, comparisons: 0, failures: 0, witness: None };
    for trial in 0..trials {
        let xs: Vec<Vec<u8>> = spaces.iter().map(|s| random_combination(field, &s.cycles, &mut rng)).collect();
        let ys: Vec<Vec<u8>> = spaces
            .iter()
            .zip(&xs)
            .map(|(s, x)| {
                let mut y = random_combination(field, &s.boundaries, &mut rng);
                if s.boundaries.cols() == 0 {
                    y = vec![0; x.len()];
                }
                y.iter().zip(x).map(|(a, b)| a ^ b).collect()
            })
            .collect();
        let refs = |v: &[Vec<u8>]| -> Vec<Vec<u8>> { v.to_vec() };
        let base = form.eval(&xs.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        let mut cases: Vec<(Option<usize>, Vec<Vec<u8>>)> = vec![(None, refs(&ys))];
        for s in 0..form.arity() {
            let mut v = refs(&xs);
            v[s] = ys[s].clone();
            cases.push((Some(s), v));
        }
        for (slot, args) in cases {
            let after = form.eval(&args.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
            report.comparisons += 1;
            if after != base {
                report.failures += 1;
                report.witness.get_or_insert(InvarianceWitness { trial, slot, before: base, after });
            }
        }
    }
    Ok(report)
}

/// Nonzero entries of `L(c_1, ..., c_r) = T(rep(c_1), ..., rep(c_r))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalTensor {
    pub dims: Vec<usize>,
    pub entries: BTreeMap<String, u8>,
}

impl LogicalTensor {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> u8 {
        self.entries.get(&index_key(idx)).copied().unwrap_or(0)
    }
}

fn index_key(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// Contracts `T` with representative bases (columns of `reps[s]`) in every slot.
pub fn logical_action_tensor(form: &InvariantForm, reps: &[FqMatrix]) -> Result<LogicalTensor, CupcapError> {
    if reps.len() != form.arity() {
        return Err(CupcapError::DegreeMismatch(format!("{} bases for arity {}", reps.len(), form.arity())));
    }
    for (slot, (r, s)) in reps.iter().zip(&form.slots).enumerate() {
        if r.rows() != s.dim {
            return Err(CupcapError::DimensionMismatch { slot, expected: s.dim, found: r.rows() });
        }
    }
    let f = form.field;
    // coordinate → [(class, coefficient)]
    let rows: Vec<Vec<Vec<(usize, u8)>>> = reps
        .iter()
        .map(|r| (0..r.rows()).map(|i| r.row(i).iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, &c)| (j, c)).collect()).collect())
        .collect();
    let mut acc: BTreeMap<Vec<usize>, u8> = BTreeMap::new();
    for (k, c) in &form.entries {
        let mut partial: Vec<(Vec<usize>, u8)> = vec![(Vec::new(), *c)];
        for (s, &i) in k.iter().enumerate() {
            let row = &rows[s][i as usize];
            partial = partial
                .iter()
                .flat_map(|(idx, v)| {
                    row.iter().map(move |&(j, a)| {
                        let mut idx = idx.clone();
                        idx.push(j);
                        (idx, f.mul(*v, a))
                    })
                })
                .collect();
            if partial.is_empty() {
                break;
            }
        }
        for (idx, v) in partial {
            *acc.entry(idx).or_insert(0) ^= v;
        }
    }
    Ok(LogicalTensor {
        dims: reps.iter().map(|r| r.cols()).collect(),
        entries: acc.into_iter().filter(|&(_, v)| v != 0).map(|(k, v)| (index_key(&k), v)).collect(),
    })
}

/// Coordinates `(cell, offset)` of the degree-`d` cells below `sigma`.
fn local_basis<S: Sheaf + ?Sized>(f: &S, sigma: CellId, d: usize) -> Vec<(CellId, usize)> {
    let x = f.base();
    x.downset_of_dim(sigma, d).into_iter().flat_map(|c| (0..f.stalk_dim(c)).map(move |i| (c, i))).collect()
}

fn unit(len: usize, i: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    v[i] = 1;
    v
}

fn single<Kind>(f: &dyn Sheaf, degree: usize, (c, i): (CellId, usize)) -> crate::sheaf::Graded<CellId, Kind> {
    crate::sheaf::Graded::from_entries(degree, [(c, unit(f.stalk_dim(c), i))])
}

/// All tuples picking one element from each list.
fn tuples<T: Copy>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    lists.iter().fold(vec![Vec::new()], |acc, l| {
        acc.iter()
            .flat_map(|p| {
                l.iter().map(move |&e| {
                    let mut p = p.clone();
                    p.push(e);
                    p
                })
            })
            .collect()
    })
}

/// `max_τ |{σ ∈ X(k) : σ ≥ τ}|` over `d`-cells `τ`, times the largest
/// local basis of every other slot.
fn declared_bound<S: Sheaf + ?Sized>(f: &S, degrees: &[usize], top: usize, chain_slot: bool) -> usize {
    let x = f.base();
    let tops = x.cells_of_dim(top);
    let loc: Vec<usize> = degrees
        .iter()
        .map(|&d| tops.iter().map(|&s| local_basis(f, s, d).len()).max().unwrap_or(0))
        .collect();
    let top_stalk = tops.iter().map(|&s| f.stalk_dim(s)).max().unwrap_or(0);
    let mut bound = 0;
    for (s, &d) in degrees.iter().enumerate() {
        let ups = x.cells_of_dim(d).iter().map(|&c| x.upset_of_dim(c, top).len()).max().unwrap_or(0);
        let others: usize = loc.iter().enumerate().filter(|&(o, _)| o != s).map(|(_, &l)| l).product();
        bound = bound.max(ups * others * if chain_slot { top_stalk } else { 1 });
    }
    if chain_slot {
        bound = bound.max(loc.iter().product());
    }
    bound
}

fn global_coord(x: &CellPoset, layout: &Layout, (c, i): (CellId, usize)) -> u32 {
    (layout.range(x, c).start + i) as u32
}

/// `I_γ(α_1, ..., α_{r-1}, x) = ⟨γ, (α_1 ⌣ ... ⌣ α_{r-1}) ⌢ x⟩` with
/// `α_s ∈ C^{d_s}(F)`, `x ∈ C_k(F)` for `k = Σ d_s + deg γ`, and
/// `γ ∈ C^•(F^{⊗(r-2)})` a cocycle.
///
/// Entries are computed per `k`-cell `σ`: the functional
/// `ω ↦ ⟨γ, ω ⌢ e_σ⟩` is tabulated on the cells below `σ`, then paired
/// with the cups of local basis cochains.
pub fn build_i_gamma(
    f: &Arc<dyn Sheaf>,
    approx: &ApproxInverse,
    gamma: &Cochain,
    degrees: &[usize],
) -> Result<InvariantForm, CupcapError> {
    if degrees.is_empty() {
        return Err(CupcapError::DegreeMismatch("at least one cochain slot".into()));
    }
    let x = f.base();
    let r = degrees.len() + 1;
    let g = TensorPower::new(f.clone(), r - 2);
    gamma.validate(&g)?;
    if !is_cocycle(&g, gamma) {
        return Err(CupcapError::NotCocycle);
    }
    let cup_deg: usize = degrees.iter().sum();
    let k = cup_deg + gamma.degree();
    if k > x.dim() {
        return Err(CupcapError::DegreeMismatch(format!("chain degree {k} exceeds dim {}", x.dim())));
    }
    let layouts: Vec<Layout> = degrees.iter().map(|&d| Layout::new(&**f, d)).collect();
    let x_layout = Layout::new(&**f, k);
    let mut slots: Vec<Slot> =
        degrees.iter().zip(&layouts).map(|(&d, l)| Slot { kind: SlotKind::Cochain, degree: d, dim: l.total() }).collect();
    slots.push(Slot { kind: SlotKind::Chain, degree: k, dim: x_layout.total() });
    let bound = declared_bound(&**f, degrees, k, true);
    if gamma.is_zero() {
        return Ok(InvariantForm::new(f.field(), slots, Vec::new(), bound));
    }
    let sheaves: Vec<Arc<dyn Sheaf>> = vec![f.clone(); r - 1];
    // F^{⊗(r-1)} with the same coordinates cup_many produces
    let (_, fg) = cup_many(&sheaves, approx, &vec![Cochain::zero(0); r - 1])?;
    let field = f.field();
    let tops: Vec<CellId> = x.cells_of_dim(k).to_vec();
    let parts: Vec<Vec<(Vec<u32>, u8)>> = tops
        .par_iter()
        .map(|&sigma| -> Result<Vec<(Vec<u32>, u8)>, CupcapError> {
            let mut out = Vec::new();
            let omegas = local_basis(&*fg, sigma, cup_deg);
            // phi[kx][w] = ⟨γ, e_w ⌢ e_{σ,kx}⟩
            let mut phi = vec![vec![0u8; omegas.len()]; f.stalk_dim(sigma)];
            for (w, &om) in omegas.iter().enumerate() {
                let omega: Cochain = single(&*fg, cup_deg, om);
                let cache = CosharpCache::new(&*fg, approx, &omega)?;
                for (kx, row) in phi.iter_mut().enumerate() {
                    let chain: Chain = single(&**f, k, (sigma, kx));
                    let capped = cap_cached(&**f, &g, &cache, &chain)?;
                    row[w] = pairing(field, gamma, &capped)?;
                }
            }
            if phi.iter().all(|row| row.iter().all(|&c| c == 0)) {
                return Ok(out);
            }
            let omega_index: HashMap<(CellId, usize), usize> = omegas.iter().enumerate().map(|(i, &o)| (o, i)).collect();
            let bases: Vec<Vec<(CellId, usize)>> = degrees.iter().map(|&d| local_basis(&**f, sigma, d)).collect();
            for combo in tuples(&bases) {
                let alphas: Vec<Cochain> = combo.iter().zip(degrees).map(|(&b, &d)| single(&**f, d, b)).collect();
                let (prod, _) = cup_many(&sheaves, approx, &alphas)?;
                let mut vals = vec![0u8; phi.len()];
                for (&c, v) in prod.iter() {
                    for (i, &a) in v.iter().enumerate() {
                        if a == 0 {
                            continue;
                        }
                        if let Some(&w) = omega_index.get(&(c, i)) {
                            for (kx, row) in phi.iter().enumerate() {
                                vals[kx] ^= field.mul(a, row[w]);
                            }
                        }
                    }
                }
                let coords: Vec<u32> =
                    combo.iter().zip(&layouts).map(|(&b, l)| global_coord(x, l, b)).collect();
                for (kx, &v) in vals.iter().enumerate() {
                    if v != 0 {
                        let mut key = coords.clone();
                        key.push(global_coord(x, &x_layout, (sigma, kx)));
                        out.push((key, v));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(InvariantForm::new(field, slots, parts.into_iter().flatten().collect(), bound))
}

/// `T_ξ(α_1, ..., α_m) = ⟨α_1 ⌣ ... ⌣ α_m, ξ⟩` for a cycle
/// `ξ ∈ C_{Σ d_s}(F^{⊗m})`.
pub fn build_t_xi(
    f: &Arc<dyn Sheaf>,
    approx: &ApproxInverse,
    xi: &Chain,
    degrees: &[usize],
) -> Result<InvariantForm, CupcapError> {
    let m = degrees.len();
    if m == 0 {
        return Err(CupcapError::DegreeMismatch("at least one slot".into()));
    }
    let x = f.base();
    let top: usize = degrees.iter().sum();
    if !xi.is_zero() && xi.degree() != top {
        return Err(CupcapError::DegreeMismatch(format!("ξ has degree {}, slots sum to {top}", xi.degree())));
    }
    let fm = TensorPower::new(f.clone(), m);
    xi.validate(&fm)?;
    if !is_cycle(&fm, xi) {
        return Err(CupcapError::NotCycle);
    }
    let layouts: Vec<Layout> = degrees.iter().map(|&d| Layout::new(&**f, d)).collect();
    let slots: Vec<Slot> =
        degrees.iter().zip(&layouts).map(|(&d, l)| Slot { kind: SlotKind::Cochain, degree: d, dim: l.total() }).collect();
    let bound = declared_bound(&**f, degrees, top, false);
    let sheaves: Vec<Arc<dyn Sheaf>> = vec![f.clone(); m];
    let field = f.field();
    let support: Vec<(CellId, Vec<u8>)> = xi.iter().map(|(&c, v)| (c, v.clone())).collect();
    let parts: Vec<Vec<(Vec<u32>, u8)>> = support
        .par_iter()
        .map(|(sigma, w)| -> Result<Vec<(Vec<u32>, u8)>, CupcapError> {
            let bases: Vec<Vec<(CellId, usize)>> = degrees.iter().map(|&d| local_basis(&**f, *sigma, d)).collect();
            let mut out = Vec::new();
            for combo in tuples(&bases) {
                let alphas: Vec<Cochain> = combo.iter().zip(degrees).map(|(&b, &d)| single(&**f, d, b)).collect();
                let (prod, _) = cup_many(&sheaves, approx, &alphas)?;
                if let Some(v) = prod.get(sigma) {
                    let val = field.dot(v, w);
                    if val != 0 {
                        let key = combo.iter().zip(&layouts).map(|(&b, l)| global_coord(x, l, b)).collect();
                        out.push((key, val));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(InvariantForm::new(field, slots, parts.into_iter().flatten().collect(), bound))
}
