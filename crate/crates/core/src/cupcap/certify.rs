use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    build_i_gamma, invariance_check, logical_action_tensor, slot_spaces, CupcapError, InvarianceReport, InvariantForm, Slot,
    SlotKind,
};
use crate::codes::CodeConfig;
use crate::complex::CellId;
use crate::covering::{build_compatible_a_sharp, lift_a_sharp};
use crate::gfq::{Field, FqMatrix};
use crate::products::{cap_cached, cup_many, CosharpCache};
use crate::sheaf::views::TensorPower;
use crate::sheaf::{epsilon_map, pairing, solve_boundary, Chain, Cochain, Graded, Layout, Sheaf, SheafError};
use crate::subdivide::{ApproxInverse, Pins, PinsJson};

/// Optional overrides for the free choices of the construction. Missing
/// entries default to the first valid choice in index order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateChoices {
    /// Generator index `μ_j` per factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<usize>>,
    /// `z_j ∈ F_q^{Â_j}` per factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Vec<u8>>>,
    /// Group element `v_j` of `G_0` per factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<u32>>,
}

fn default_trials() -> usize {
    20
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateConfig {
    #[serde(flatten)]
    pub code: CodeConfig,
    #[serde(default)]
    pub choices: GateChoices,
    #[serde(default = "default_trials")]
    pub invariance_trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Expand `I_γ` into its entries on `X^t_H` and test it.
    #[serde(default = "yes")]
    pub expand_form: bool,
    /// Check the lifted approximate inverse on every flag of `sd X^t_H`.
    #[serde(default = "yes")]
    pub verify_compatibility: bool,
    /// Confirm the base result is not a boundary by elimination as well.
    #[serde(default = "yes")]
    pub boundary_solve: bool,
}

impl GateConfig {
    pub fn from_code(code: CodeConfig) -> GateConfig {
        GateConfig {
            code,
            choices: GateChoices::default(),
            invariance_trials: default_trials(),
            seed: 0,
            expand_form: true,
            verify_compatibility: true,
            boundary_solve: true,
        }
    }
}

/// Sparse (co)chain in wire form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainJson {
    pub degree: usize,
    pub entries: Vec<(CellId, Vec<u8>)>,
}

impl<Kind> From<&Graded<CellId, Kind>> for ChainJson {
    fn from(g: &Graded<CellId, Kind>) -> Self {
        ChainJson { degree: g.degree(), entries: g.iter().map(|(&c, v)| (c, v.clone())).collect() }
    }
}

impl ChainJson {
    pub fn to_graded<Kind>(&self) -> Graded<CellId, Kind> {
        Graded::from_entries(self.degree, self.entries.iter().cloned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedChoices {
    pub generators: Vec<usize>,
    pub z: Vec<Vec<u8>>,
    pub vertices: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftChecks {
    /// `P^#(α_1 ⌣ ... ⌣ α_{r-1}) = P^#α_1 ⌣ ... ⌣ P^#α_{r-1}`.
    pub cup: bool,
    /// `T_#((α_1 ⌣ ...) ⌢ x) = (P^#α_1 ⌣ ...) ⌢ T_#x`.
    pub cap: bool,
    /// Exhaustive `A_#` compatibility, when requested.
    pub compatibility: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSummary {
    pub entries: usize,
    pub fan_in: Vec<usize>,
    pub declared_bound: usize,
    pub transversal: bool,
    pub digest: String,
    /// Holds only when cap Leibniz does, i.e. for constant `F^{⊗(r-2)}`;
    /// reported, not required.
    pub invariance: InvarianceReport,
    /// `I_γ` evaluated through its entries at the constructed classes.
    pub logical_value: u8,
    pub matches_pairing: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateCertificate {
    pub config: GateConfig,
    pub t: usize,
    pub r: usize,
    pub s: usize,
    pub sheets: usize,
    pub choices: ResolvedChoices,
    /// `σ*` on `X^t_e` and the vertex `A_#` is pinned to.
    pub pinned_cell: CellId,
    pub pinned_vertex: CellId,
    pub pins: PinsJson,
    pub alphas: Vec<ChainJson>,
    pub x: ChainJson,
    pub cup: ChainJson,
    pub cap: ChainJson,
    pub predicted: ChainJson,
    pub prediction_matches: bool,
    pub epsilon: Vec<u8>,
    /// `Some(true)` when elimination finds no preimage under `∂`.
    pub not_boundary: Option<bool>,
    pub gamma: ChainJson,
    pub lifted_cap: ChainJson,
    pub lift_checks: LiftChecks,
    pub pairing: u8,
    pub form: Option<FormSummary>,
    pub certified: bool,
    pub elapsed_ms: u64,
}

impl GateCertificate {
    /// Equal up to wall-clock time.
    pub fn reproduces(&self, other: &GateCertificate) -> bool {
        let strip = |c: &GateCertificate| {
            let mut v = serde_json::to_value(c).expect("certificate serializes");
            v.as_object_mut().map(|o| o.remove("elapsed_ms"));
            v
        };
        strip(self) == strip(other)
    }

    /// Recomputes from the stored configuration and compares.
    pub fn replay(&self) -> Result<bool, CupcapError> {
        Ok(certify_cz_family(&self.config)?.reproduces(self))
    }
}

fn kron_all(field: Field, parts: &[&[u8]]) -> Vec<u8> {
    parts.iter().fold(vec![1u8], |acc, p| field.kron_vec(&acc, p))
}

/// Entries of `⊗_j c_j` from per-factor entries, first factor slowest.
fn product_entries(field: Field, factors: &[Vec<(CellId, Vec<u8>)>]) -> Vec<(Vec<CellId>, Vec<u8>)> {
    factors.iter().fold(vec![(Vec::new(), vec![1u8])], |acc, fac| {
        acc.iter()
            .flat_map(|(cells, v)| {
                fac.iter().map(move |(c, w)| {
                    let mut cells = cells.clone();
                    cells.push(*c);
                    (cells, field.kron_vec(v, w))
                })
            })
            .collect()
    })
}

fn power(field: Field, u: &[u8], k: usize) -> Vec<u8> {
    kron_all(field, &vec![u; k])
}

fn resolve_choices(
    config: &GateConfig,
    setup: &crate::codes::CodeSetup,
    t: usize,
    s: usize,
) -> Result<ResolvedChoices, CupcapError> {
    let field = setup.field;
    let cay = setup.x1.cayley();
    let codes = &setup.local_codes;
    let want = |name: &str, len: usize| -> Result<(), CupcapError> {
        if len != t {
            return Err(CupcapError::BadChoice(format!("{len} {name} for t = {t}")));
        }
        Ok(())
    };
    for (j, h) in codes.iter().enumerate().take(t - s) {
        if !h.kernel_contains_all_ones() {
            return Err(CupcapError::AllOnesMissing(j + 1));
        }
    }
    let generators = match &config.choices.generators {
        Some(g) => {
            want("generators", g.len())?;
            for (j, &mu) in g.iter().enumerate() {
                if mu >= cay.n() {
                    return Err(CupcapError::BadChoice(format!("generator {mu} for factor {}", j + 1)));
                }
                if crate::gfq::is_zero(&codes[j].column(mu)) {
                    return Err(CupcapError::ZeroSyndrome(j + 1, mu));
                }
            }
            g.clone()
        }
        None => codes
            .iter()
            .enumerate()
            .map(|(j, h)| {
                (0..cay.n()).find(|&mu| !crate::gfq::is_zero(&h.column(mu))).ok_or(CupcapError::ZeroSyndrome(j + 1, 0))
            })
            .collect::<Result<_, _>>()?,
    };
    let z = match &config.choices.z {
        Some(z) => {
            want("vectors z", z.len())?;
            z.clone()
        }
        None => (0..t)
            .map(|j| {
                let dim = codes[j].check_dim();
                if j < t - s {
                    let col = codes[j].column(generators[j]);
                    let i = col.iter().position(|&c| c != 0).expect("nonzero column");
                    let mut v = vec![0u8; dim];
                    v[i] = field.inv(col[i]).expect("nonzero");
                    v
                } else {
                    let mut v = vec![0u8; dim];
                    if dim > 0 {
                        v[0] = 1;
                    }
                    v
                }
            })
            .collect(),
    };
    for (j, zj) in z.iter().enumerate() {
        if zj.len() != codes[j].check_dim() || zj.iter().any(|&c| !field.contains(c as u32)) {
            return Err(CupcapError::BadChoice(format!("z_{} is not a vector in F_{}^{}", j + 1, field.q(), codes[j].check_dim())));
        }
        let (lhs, what) = if j < t - s {
            (field.dot(&codes[j].column(generators[j]), zj), "⟨h_j a_j, z_j⟩")
        } else {
            (field.dot(zj, zj), "⟨z_j, z_j⟩")
        };
        if lhs != 1 {
            return Err(CupcapError::BadChoice(format!("{what} = {lhs} for j = {}", j + 1)));
        }
    }
    let vertices = match &config.choices.vertices {
        Some(v) => {
            want("vertices", v.len())?;
            if let Some(&bad) = v.iter().find(|&&v| v as usize >= cay.n_prime()) {
                return Err(CupcapError::BadChoice(format!("vertex {bad} is not in G_0")));
            }
            v.clone()
        }
        None => vec![0; t],
    };
    Ok(ResolvedChoices { generators, z, vertices })
}

/// Runs the multi-controlled-Z construction on `X^t_H` end to end: builds
/// `α_1, ..., α_{r-1}` and `x` on `X^t_e`, checks the pinned product against
/// its closed form and that it is not a boundary, lifts everything through
/// the covering, pairs with `γ = ℓ^{-1} P^#(⊗ζ^{(r-2)})` and optionally
/// expands and tests `I_γ`.
pub fn certify_cz_family(config: &GateConfig) -> Result<GateCertificate, CupcapError> {
    certify_with_form(config).map(|(cert, _)| cert)
}

/// `I_γ` on `X^t_H` with the lifted classes `P^#α_k` and `T_#x` as
/// single-column representatives, first slot first.
#[derive(Debug, Clone)]
pub struct GateForm {
    pub form: InvariantForm,
    pub reps: Vec<FqMatrix>,
}

/// [`certify_cz_family`], also returning the expanded form when
/// `expand_form` is set.
pub fn certify_with_form(config: &GateConfig) -> Result<(GateCertificate, Option<GateForm>), CupcapError> {
    let start = Instant::now();
    let setup = config.code.build()?;
    let t = setup.lifted.t();
    if t < 3 {
        return Err(CupcapError::Config(format!("t = {t}; the construction needs t >= 3")));
    }
    let (r, s) = if t % 2 == 1 { (t, 1) } else { (t / 2, 2) };
    let ell = setup.lifted.group().order() as usize;
    if ell % 2 == 0 {
        return Err(CupcapError::EvenSheets(ell));
    }
    let field = setup.field;
    let choices = resolve_choices(config, &setup, t, s)?;
    let x1 = &setup.x1;
    let cay = x1.cayley();
    let x1p = x1.poset();
    let vertices_x1: Vec<CellId> = x1p.cells_of_dim(0).to_vec();
    let edges_x1: Vec<CellId> = x1p.cells_of_dim(1).to_vec();

    let mut star = Vec::with_capacity(t);
    let mut corner = Vec::with_capacity(t);
    for j in 0..t {
        let v = choices.vertices[j];
        let mu = choices.generators[j];
        let low = x1.vertex(v, 0);
        if j < t - s {
            let e = x1.edge(v, mu);
            let c = x1.vertex(cay.act(mu, v), 1);
            if !x1p.leq(c, e) {
                return Err(CupcapError::PinFailure(format!("corner {c} is not a face of edge {e}")));
            }
            star.push(e);
            corner.push(c);
        } else {
            star.push(low);
            corner.push(low);
        }
    }
    let lifted = &setup.lifted;
    let base = lifted.base().clone();
    let sigma_star = lifted.encode(0, &star);
    let v_star = lifted.encode(0, &corner);
    let mut pins = Pins::default();
    pins.vertices.insert(sigma_star, v_star);
    let approx = ApproxInverse::new(base.clone(), pins.clone()).map_err(|e| CupcapError::PinFailure(e.to_string()))?;

    let fsheaf: Arc<dyn Sheaf> = Arc::new(setup.product()?);
    let encode = |cells: &[CellId]| lifted.encode(0, cells);
    let zeta = |j: usize| -> Vec<(CellId, Vec<u8>)> { vertices_x1.iter().map(|&w| (w, choices.z[j].clone())).collect() };

    let alphas: Vec<Cochain> = (0..r - 1)
        .map(|k| {
            let factors: Vec<Vec<(CellId, Vec<u8>)>> =
                (0..t).map(|j| if j / s == k && j < t - s { vec![(star[j], vec![1])] } else { zeta(j) }).collect();
            Cochain::from_entries(s, product_entries(field, &factors).into_iter().map(|(c, v)| (encode(&c), v)))
        })
        .collect();
    let x_factors: Vec<Vec<(CellId, Vec<u8>)>> = (0..t)
        .map(|j| if j < t - s { edges_x1.iter().map(|&e| (e, vec![1])).collect() } else { vec![(star[j], choices.z[j].clone())] })
        .collect();
    let x = Chain::from_entries(t - s, product_entries(field, &x_factors).into_iter().map(|(c, v)| (encode(&c), v)));
    let zeta_all: Vec<Vec<(CellId, Vec<u8>)>> = (0..t).map(zeta).collect();
    let gamma_base = Cochain::from_entries(
        0,
        product_entries(field, &zeta_all).into_iter().map(|(c, v)| (encode(&c), power(field, &v, r - 2))),
    );

    // closed form at the pinned corner
    let u: Vec<u8> = kron_all(
        field,
        &(0..t)
            .map(|j| if j < t - s { setup.local_codes[j].column(choices.generators[j]) } else { choices.z[j].clone() })
            .collect::<Vec<_>>()
            .iter()
            .map(Vec::as_slice)
            .collect::<Vec<_>>(),
    );
    let mut coeff = 1u8;
    for k in 0..r - 1 {
        for j in 0..t {
            if j >= t - s {
                if k == 0 {
                    coeff = field.mul(coeff, field.dot(&choices.z[j], &choices.z[j]));
                }
            } else if j / s != k {
                coeff = field.mul(coeff, field.dot(&setup.local_codes[j].column(choices.generators[j]), &choices.z[j]));
            }
        }
    }
    let predicted = Chain::from_entries(0, [(v_star, field.scale(coeff, &power(field, &u, r - 2)))]);

    let sheaves = vec![fsheaf.clone(); r - 1];
    let g = TensorPower::new(fsheaf.clone(), r - 2);
    let (cup, fg) = cup_many(&sheaves, &approx, &alphas)?;
    let cap = {
        let cache = CosharpCache::new(&*fg, &approx, &cup)?;
        cap_cached(&*fsheaf, &g, &cache, &x)?
    };
    let epsilon = epsilon_map(&g, &cap)?;
    let not_boundary = if config.boundary_solve {
        match solve_boundary(&g, &cap) {
            Ok(_) => Some(false),
            Err(SheafError::NoSolution) => Some(true),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    let cover = lifted.cover().clone();
    let approx = Arc::new(approx);
    let (compat, compatibility) = if config.verify_compatibility {
        let c = build_compatible_a_sharp(cover.clone(), approx.clone())?;
        let ok = c.verify_compatibility().is_ok();
        (c, Some(ok))
    } else {
        (lift_a_sharp(cover.clone(), approx.clone())?, None)
    };
    let lifted_approx = compat.lifted().clone();
    let ft: Arc<dyn Sheaf> = Arc::new(cover.pullback(fsheaf.clone())?);
    let alphas_up: Vec<Cochain> = alphas.iter().map(|a| cover.p_cosharp(a)).collect();
    let x_up = cover.t_sharp(&x);
    let (cup_up, fg_up) = cup_many(&vec![ft.clone(); r - 1], &lifted_approx, &alphas_up)?;
    let gt = TensorPower::new(ft.clone(), r - 2);
    let cap_up = {
        let cache = CosharpCache::new(&*fg_up, &lifted_approx, &cup_up)?;
        cap_cached(&*ft, &gt, &cache, &x_up)?
    };
    let lift_checks = LiftChecks {
        cup: cup_up == cover.p_cosharp(&cup),
        cap: cap_up == cover.t_sharp(&cap),
        compatibility,
    };
    let inv_ell = field.inv(field.from_int(ell as u64)).expect("odd sheet count is a unit");
    let gamma = cover.p_cosharp(&gamma_base).scale(field, inv_ell);
    let pairing_value = pairing(field, &gamma, &cap_up)?;

    let form = if config.expand_form {
        let degrees = vec![s; r - 1];
        let form = build_i_gamma(&ft, &lifted_approx, &gamma, &degrees)?;
        let coh = slot_spaces(&*ft, Slot { kind: SlotKind::Cochain, degree: s, dim: 0 })?;
        let hom = slot_spaces(&*ft, Slot { kind: SlotKind::Chain, degree: s * (r - 1), dim: 0 })?;
        let mut spaces = vec![coh; r - 1];
        spaces.push(hom);
        let invariance = invariance_check(&form, &spaces, config.invariance_trials, config.seed)?;
        let column = |v: Vec<u8>| FqMatrix::from_cols(field, v.len(), &[v]);
        let cochain_layout = Layout::new(&*ft, s);
        let mut reps: Vec<FqMatrix> =
            alphas_up.iter().map(|a| column(cochain_layout.to_dense(ft.base(), a))).collect();
        reps.push(column(Layout::new(&*ft, s * (r - 1)).to_dense(ft.base(), &x_up)));
        let logical_value = logical_action_tensor(&form, &reps)?.get(&vec![0; r]);
        let summary = FormSummary {
            entries: form.entries().len(),
            fan_in: form.fan_in(),
            declared_bound: form.declared_bound(),
            transversal: form.is_transversal(),
            digest: form.digest(),
            invariance,
            logical_value,
            matches_pairing: logical_value == pairing_value,
        };
        (Some(summary), Some(GateForm { form, reps }))
    } else {
        (None, None)
    };
    let (form, gate_form) = form;

    let prediction_matches = cap == predicted;
    let certified = prediction_matches
        && !crate::gfq::is_zero(&epsilon)
        && not_boundary != Some(false)
        && lift_checks.cup
        && lift_checks.cap
        && lift_checks.compatibility != Some(false)
        && pairing_value == 1
        && form.as_ref().is_none_or(|f| f.transversal && f.matches_pairing && f.logical_value != 0);
    let cert = GateCertificate {
        config: config.clone(),
        t,
        r,
        s,
        sheets: ell,
        choices,
        pinned_cell: sigma_star,
        pinned_vertex: v_star,
        pins: pins.to_json(),
        alphas: alphas.iter().map(ChainJson::from).collect(),
        x: (&x).into(),
        cup: (&cup).into(),
        cap: (&cap).into(),
        predicted: (&predicted).into(),
        prediction_matches,
        epsilon,
        not_boundary,
        gamma: (&gamma).into(),
        lifted_cap: (&cap_up).into(),
        lift_checks,
        pairing: pairing_value,
        form,
        certified,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    Ok((cert, gate_form))
}
