//! Cayley double covers, Tanner sheaves, their products `X^t_{e}` and the
//! lifted complexes `X^t_H` with the covering `X^t_H → X^t_{e}`.

mod css;

pub use css::{
    css_from, distance_estimate, distance_exact, soundness_exact, CodeReport, CssCode, Distance, Param, Ratio,
    ReportOptions, Side, SoundnessValue, Weight,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{product_complex, CellId, CellPoset, ComplexError, OrderMap};
use crate::covering::{cover_verify, CoveringError, CoveringMap};
use crate::gfq::{Field, FieldError, FqMatrix, MatrixError, MatrixJson};
use crate::sheaf::views::ProductSheaf;
use crate::sheaf::{Sheaf, SheafData, SheafError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodesError {
    #[error("invalid group: {0}")]
    BadGroup(String),
    #[error("invalid generator: {0}")]
    BadGenerator(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("edge {0} has no label")]
    LabelingIncomplete(usize),
    #[error("degree {degree} is outside 0..={dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
}

/// `Z_{m_1} × ... × Z_{m_r}`; elements are mixed-radix indices with the
/// first factor slowest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianGroup {
    moduli: Vec<u32>,
}

impl AbelianGroup {
    pub fn new(moduli: Vec<u32>) -> Result<AbelianGroup, CodesError> {
        if moduli.iter().any(|&m| m == 0) {
            return Err(CodesError::BadGroup("cyclic factor of order 0".into()));
        }
        let order = moduli.iter().try_fold(1u64, |acc, &m| acc.checked_mul(m as u64).filter(|&o| o <= u32::MAX as u64));
        if order.is_none() {
            return Err(CodesError::BadGroup("order too large".into()));
        }
        Ok(AbelianGroup { moduli })
    }

    pub fn trivial() -> AbelianGroup {
        AbelianGroup { moduli: Vec::new() }
    }

    pub fn cyclic(m: u32) -> AbelianGroup {
        AbelianGroup { moduli: vec![m] }
    }

    pub fn moduli(&self) -> &[u32] {
        &self.moduli
    }

    pub fn order(&self) -> u32 {
        self.moduli.iter().product()
    }

    pub fn coords(&self, x: u32) -> Vec<u32> {
        let mut out = vec![0; self.moduli.len()];
        let mut x = x;
        for j in (0..self.moduli.len()).rev() {
            out[j] = x % self.moduli[j];
            x /= self.moduli[j];
        }
        out
    }

    pub fn index(&self, coords: &[u32]) -> Result<u32, CodesError> {
        if coords.len() != self.moduli.len() || coords.iter().zip(&self.moduli).any(|(&c, &m)| c >= m) {
            return Err(CodesError::BadGenerator(format!("{coords:?} is not an element of Z{:?}", self.moduli)));
        }
        Ok(coords.iter().zip(&self.moduli).fold(0, |acc, (&c, &m)| acc * m + c))
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let sum: Vec<u32> = ca.iter().zip(&cb).zip(&self.moduli).map(|((x, y), m)| (x + y) % m).collect();
        self.index(&sum).unwrap()
    }

    pub fn neg(&self, a: u32) -> u32 {
        let c: Vec<u32> = self.coords(a).iter().zip(&self.moduli).map(|(x, m)| (m - x) % m).collect();
        self.index(&c).unwrap()
    }
}

/// An element given either as a mixed-radix index or as coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElemJson {
    Index(u32),
    Coords(Vec<u32>),
}

impl ElemJson {
    pub fn resolve(&self, g: &AbelianGroup) -> Result<u32, CodesError> {
        match self {
            ElemJson::Index(i) if *i < g.order() => Ok(*i),
            ElemJson::Index(i) => Err(CodesError::BadGenerator(format!("index {i} exceeds the group order {}", g.order()))),
            ElemJson::Coords(c) => g.index(c),
        }
    }
}

/// Cayley graph of an abelian group: `v ~ a·v` for each generator `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleySpec {
    group: AbelianGroup,
    generators: Vec<u32>,
}

impl CayleySpec {
    pub fn new(group: AbelianGroup, generators: Vec<u32>) -> Result<CayleySpec, CodesError> {
        if generators.is_empty() {
            return Err(CodesError::BadGenerator("no generators".into()));
        }
        for (i, &a) in generators.iter().enumerate() {
            if a >= group.order() {
                return Err(CodesError::BadGenerator(format!("generator {a} is not a group element")));
            }
            if generators[..i].contains(&a) {
                return Err(CodesError::BadGenerator(format!("generator {a} is listed twice")));
            }
        }
        Ok(CayleySpec { group, generators })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    /// Degree `n`.
    pub fn n(&self) -> usize {
        self.generators.len()
    }

    /// Number of vertices `n'`.
    pub fn n_prime(&self) -> usize {
        self.group.order() as usize
    }

    /// `a_μ · v`.
    pub fn act(&self, mu: usize, v: u32) -> u32 {
        self.group.add(self.generators[mu], v)
    }

    /// True when the generator set is closed under inverses, so the
    /// Cayley graph is undirected and `n`-regular.
    pub fn is_symmetric(&self) -> bool {
        self.generators.iter().all(|&a| self.generators.contains(&self.group.neg(a)))
    }
}

/// A cell of the double cover `X^1_{e}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum X1Cell {
    Vertex { v: u32, b: u8 },
    Edge { v: u32, mu: usize },
}

/// The double cover of a Cayley graph: vertices `[v;b]` and edges
/// `[v;a]` joining `[v;0]` and `[a·v;1]`. Vertex `[v;b]` has id
/// `b·n' + v` and edge `[v;a_μ]` has id `2n' + v·n + μ`.
#[derive(Debug, Clone)]
pub struct DoubleCover {
    cayley: CayleySpec,
    poset: Arc<CellPoset>,
}

pub fn double_cover(g0: &CayleySpec) -> DoubleCover {
    let (np, n) = (g0.n_prime() as u32, g0.n() as u32);
    let mut dims = vec![0u8; 2 * np as usize];
    dims.extend(std::iter::repeat(1).take((np * n) as usize));
    let mut labels: Vec<Option<String>> = (0..2 * np).map(|c| Some(format!("[{};{}]", c % np, c / np))).collect();
    let mut covers = Vec::with_capacity(2 * (np * n) as usize);
    for v in 0..np {
        for mu in 0..n {
            let e = 2 * np + v * n + mu;
            covers.push((v, e));
            covers.push((np + g0.act(mu as usize, v), e));
            labels.push(Some(format!("[{v};a{mu}]")));
        }
    }
    let poset = CellPoset::build(dims, &covers, labels).expect("double cover is a valid graph");
    DoubleCover { cayley: g0.clone(), poset: Arc::new(poset) }
}

impl DoubleCover {
    pub fn cayley(&self) -> &CayleySpec {
        &self.cayley
    }

    pub fn poset(&self) -> &Arc<CellPoset> {
        &self.poset
    }

    pub fn vertex(&self, v: u32, b: u8) -> CellId {
        b as CellId * self.cayley.n_prime() as CellId + v
    }

    pub fn edge(&self, v: u32, mu: usize) -> CellId {
        (2 * self.cayley.n_prime() + v as usize * self.cayley.n() + mu) as CellId
    }

    pub fn cell(&self, c: CellId) -> X1Cell {
        let np = self.cayley.n_prime() as u32;
        if c < 2 * np {
            X1Cell::Vertex { v: c % np, b: (c / np) as u8 }
        } else {
            let e = (c - 2 * np) as usize;
            X1Cell::Edge { v: (e / self.cayley.n()) as u32, mu: e % self.cayley.n() }
        }
    }

    pub fn num_edges(&self) -> usize {
        self.cayley.n_prime() * self.cayley.n()
    }
}

/// A local code `h: F_q^{A} → F_q^{Â}`, stored as an `|Â| × |A|` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCode {
    h: FqMatrix,
}

impl LocalCode {
    pub fn new(h: FqMatrix) -> LocalCode {
        LocalCode { h }
    }

    pub fn matrix(&self) -> &FqMatrix {
        &self.h
    }

    pub fn field(&self) -> Field {
        self.h.field()
    }

    /// `|Â|`.
    pub fn check_dim(&self) -> usize {
        self.h.rows()
    }

    /// `h a_μ`.
    pub fn column(&self, mu: usize) -> Vec<u8> {
        self.h.col(mu)
    }

    pub fn kernel_contains_all_ones(&self) -> bool {
        self.h.mul_vec(&vec![1; self.h.cols()]).iter().all(|&x| x == 0)
    }
}

/// `F^h` on `X^1_{e}`: vertex stalks `F_q^{Â}`, edge stalks `F_q`, and
/// `F_{[g;b],[g';a]}(x) = ⟨h a, x⟩`.
pub fn tanner_sheaf(x1: &DoubleCover, h: &LocalCode) -> Result<SheafData, CodesError> {
    let n = x1.cayley.n();
    if h.matrix().cols() != n {
        return Err(CodesError::SizeMismatch(format!("local code has {} columns, graph degree is {n}", h.matrix().cols())));
    }
    let x = x1.poset.clone();
    let field = h.field();
    let stalks: Vec<usize> = x.cells().map(|c| if x.dim_of(c) == 0 { h.check_dim() } else { 1 }).collect();
    let mut maps = std::collections::HashMap::new();
    for (lo, hi) in x.covers() {
        let X1Cell::Edge { mu, .. } = x1.cell(hi) else { unreachable!() };
        maps.insert((lo, hi), FqMatrix::from_rows(field, h.check_dim(), &[h.column(mu)])?);
    }
    Ok(SheafData::build(x, field, stalks, maps)?)
}

/// `X^t_{e} = X_1 × ... × X_t` with `F_1 ⊠ ... ⊠ F_t`, held lazily.
pub fn product_power(factors: &[Arc<SheafData>]) -> Result<(Arc<CellPoset>, ProductSheaf), CodesError> {
    let first = factors.first().ok_or_else(|| CodesError::SizeMismatch("t must be at least 1".into()))?;
    let mut base = first.base_arc().clone();
    for f in &factors[1..] {
        base = Arc::new(product_complex(&base, f.base()));
    }
    let dyns: Vec<Arc<dyn Sheaf>> = factors.iter().map(|f| f.clone() as Arc<dyn Sheaf>).collect();
    let sheaf = ProductSheaf::new(base.clone(), dyns)?;
    Ok((base, sheaf))
}

/// `X^t_H` with its covering `P: X^t_H → X^t_{e}`. The cell
/// `[(h, v_1..v_t); ...]` has id `h·|X^t_{e}| + c`, where `c` is the id of
/// its image in `X^t_{e}`.
#[derive(Debug, Clone)]
pub struct LiftedComplex {
    x1: DoubleCover,
    group: AbelianGroup,
    labeling: Vec<u32>,
    t: usize,
    base: Arc<CellPoset>,
    complex: Arc<CellPoset>,
    cover: Arc<CoveringMap>,
}

/// Builds `X^t_H`: `σ' ⋖_j σ` when `σ_j = a ∈ A_j`, `σ'_j = b`, the other
/// coordinates agree, and `σ'_0 = σ_0` for `b = 0` or `σ_0·a` for `b = 1`.
/// Here `a` acts on `(h, v)` by `(γ(v, a)·h, a·v)`.
pub fn lifted_complex(
    x1: &DoubleCover,
    group: &AbelianGroup,
    labeling: &[u32],
    t: usize,
) -> Result<LiftedComplex, CodesError> {
    if t == 0 {
        return Err(CodesError::SizeMismatch("t must be at least 1".into()));
    }
    if labeling.len() != x1.num_edges() {
        return Err(CodesError::LabelingIncomplete(labeling.len().min(x1.num_edges())));
    }
    if let Some(&bad) = labeling.iter().find(|&&h| h >= group.order()) {
        return Err(CodesError::BadGenerator(format!("label {bad} is not an element of H")));
    }
    let mut base = x1.poset.clone();
    for _ in 1..t {
        base = Arc::new(product_complex(&base, &x1.poset));
    }
    let ne = base.len() as CellId;
    let ell = group.order();
    let n1 = x1.poset.len() as CellId;
    let digit = |c: CellId, j: usize| (c / n1.pow((t - 1 - j) as u32)) % n1;
    let np = x1.cayley.n_prime() as CellId;
    let mut dims = Vec::with_capacity((ne * ell) as usize);
    for _ in 0..ell {
        dims.extend(base.cells().map(|c| base.dim_of(c) as u8));
    }
    let mut covers = Vec::with_capacity(base.num_covers() * ell as usize);
    for (lo, hi) in base.covers() {
        let j = (0..t).find(|&j| digit(lo, j) != digit(hi, j)).expect("a cover changes one factor");
        let X1Cell::Edge { v, mu } = x1.cell(digit(hi, j)) else { unreachable!() };
        let shift = if digit(lo, j) < np { None } else { Some(labeling[v as usize * x1.cayley.n() + mu]) };
        for h in 0..ell {
            let h_lo = shift.map_or(h, |g| group.add(g, h));
            covers.push((h_lo * ne + lo, h * ne + hi));
        }
    }
    let complex = Arc::new(CellPoset::build(dims, &covers, Vec::new())?);
    let map = OrderMap::new(complex.cells().map(|c| c % ne).collect(), base.len());
    let cover = Arc::new(cover_verify(complex.clone(), base.clone(), map)?);
    Ok(LiftedComplex { x1: x1.clone(), group: group.clone(), labeling: labeling.to_vec(), t, base, complex, cover })
}

impl LiftedComplex {
    pub fn x1(&self) -> &DoubleCover {
        &self.x1
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn labeling(&self) -> &[u32] {
        &self.labeling
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `X^t_{e}`.
    pub fn base(&self) -> &Arc<CellPoset> {
        &self.base
    }

    /// `X^t_H`.
    pub fn complex(&self) -> &Arc<CellPoset> {
        &self.complex
    }

    pub fn cover(&self) -> &Arc<CoveringMap> {
        &self.cover
    }

    /// `(h, factor cells in X^1_{e})`.
    pub fn decode(&self, c: CellId) -> (u32, Vec<CellId>) {
        let ne = self.base.len() as CellId;
        let n1 = self.x1.poset.len() as CellId;
        let mut rest = c % ne;
        let mut cells = vec![0; self.t];
        for j in (0..self.t).rev() {
            cells[j] = rest % n1;
            rest /= n1;
        }
        (c / ne, cells)
    }

    pub fn encode(&self, h: u32, cells: &[CellId]) -> CellId {
        let n1 = self.x1.poset.len() as CellId;
        h * self.base.len() as CellId + cells.iter().fold(0, |acc, &c| acc * n1 + c)
    }

    /// Predicted count `ℓ·n'^t·Σ_{|S|=k} n^{|S|} 2^{t-|S|}` of `k`-cells.
    pub fn predicted_count(&self, k: usize) -> usize {
        let (n, np) = (self.x1.cayley.n(), self.x1.cayley.n_prime());
        let subsets = binomial(self.t, k);
        self.group.order() as usize * np.pow(self.t as u32) * subsets * n.pow(k as u32) * 2usize.pow((self.t - k) as u32)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Code construction parameters, as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeConfig {
    pub group: Vec<u32>,
    pub generators: Vec<ElemJson>,
    #[serde(rename = "H", default)]
    pub h_group: Vec<u32>,
    /// `"v·n+μ" → h`, one entry per edge `[v;a_μ]` of the double cover.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeling: Option<BTreeMap<String, ElemJson>>,
    /// Seeds a uniformly random labeling when `labeling` is absent.
    #[serde(default)]
    pub labeling_seed: u64,
    pub t: usize,
    /// One matrix per factor, or a single matrix used for all.
    pub local_codes: Vec<MatrixJson>,
    #[serde(default = "default_q")]
    pub q: u32,
}

fn default_q() -> u32 {
    2
}

/// Everything [`CodeConfig`] describes, built.
#[derive(Debug, Clone)]
pub struct CodeSetup {
    pub field: Field,
    pub x1: DoubleCover,
    pub local_codes: Vec<LocalCode>,
    pub tanner: Vec<Arc<SheafData>>,
    pub lifted: LiftedComplex,
}

impl CodeConfig {
    pub fn build(&self) -> Result<CodeSetup, CodesError> {
        let field = Field::new(self.q)?;
        let g0 = AbelianGroup::new(self.group.clone())?;
        let gens = self.generators.iter().map(|e| e.resolve(&g0)).collect::<Result<Vec<_>, _>>()?;
        let cayley = CayleySpec::new(g0, gens)?;
        let x1 = double_cover(&cayley);
        let h = AbelianGroup::new(self.h_group.clone())?;
        let labeling = self.labeling(&x1, &h)?;
        let t = self.t;
        let codes: Vec<LocalCode> = match self.local_codes.len() {
            1 => vec![self.local_codes[0].clone(); t],
            k if k == t => self.local_codes.clone(),
            k => return Err(CodesError::SizeMismatch(format!("{k} local codes for t = {t}"))),
        }
        .iter()
        .map(|m| {
            let m = FqMatrix::from_json(m)?;
            if m.field() != field {
                return Err(CodesError::SizeMismatch(format!("local code over F_{}, config q = {}", m.field().q(), field.q())));
            }
            Ok(LocalCode::new(m))
        })
        .collect::<Result<_, CodesError>>()?;
        let tanner = codes.iter().map(|h| tanner_sheaf(&x1, h).map(Arc::new)).collect::<Result<Vec<_>, _>>()?;
        let lifted = lifted_complex(&x1, &h, &labeling, t)?;
        Ok(CodeSetup { field, x1, local_codes: codes, tanner, lifted })
    }

    fn labeling(&self, x1: &DoubleCover, h: &AbelianGroup) -> Result<Vec<u32>, CodesError> {
        let m = x1.num_edges();
        match &self.labeling {
            Some(map) => {
                let mut out = vec![None; m];
                for (k, e) in map {
                    let i: usize = k.trim().parse().map_err(|_| CodesError::SizeMismatch(format!("edge key {k:?}")))?;
                    if i >= m {
                        return Err(CodesError::SizeMismatch(format!("edge {i} out of range")));
                    }
                    out[i] = Some(e.resolve(h)?);
                }
                out.iter()
                    .enumerate()
                    .map(|(i, v)| v.ok_or(CodesError::LabelingIncomplete(i)))
                    .collect()
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.labeling_seed);
                Ok((0..m).map(|_| rng.gen_range(0..h.order())).collect())
            }
        }
    }
}

impl CodeSetup {
    /// `X^t_{e}` with `⊠_j F^{h_j}`.
    pub fn product(&self) -> Result<ProductSheaf, CodesError> {
        let factors = self.tanner.iter().map(|f| f.clone() as Arc<dyn Sheaf>).collect();
        Ok(ProductSheaf::new(self.lifted.base().clone(), factors)?)
    }
}
