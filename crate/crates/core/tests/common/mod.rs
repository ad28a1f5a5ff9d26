#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use cupcap_core::codes::CodeConfig;
use cupcap_core::complex::product_complex;
use cupcap_core::gfq::{rank, Solver};
use cupcap_core::sheaf::Graded;
use cupcap_core::subdivide::{Flag, Pins, SdChain, SdCochain, Subdivision};
use cupcap_core::{CellId, CellPoset, Chain, Cochain, Field, FqMatrix, Sheaf, SheafData};
use rand::Rng;

/// Vertices v0..v3 = 0..3, edges e01, e12, e23, e30 = 4..7, face f = 8.
pub fn square() -> CellPoset {
    let dims = vec![0, 0, 0, 0, 1, 1, 1, 1, 2];
    let covers = [(0, 4), (1, 4), (1, 5), (2, 5), (2, 6), (3, 6), (3, 7), (0, 7), (4, 8), (5, 8), (6, 8), (7, 8)];
    CellPoset::build(dims, &covers, vec![None; 9]).unwrap()
}

/// `C_n`: vertices `0..n`, edge `n + e` joins `e` and `e + 1`.
pub fn cycle(n: u32) -> CellPoset {
    let mut dims = vec![0u8; n as usize];
    dims.extend(std::iter::repeat(1).take(n as usize));
    let covers: Vec<_> = (0..n).flat_map(|e| [(e, n + e), ((e + 1) % n, n + e)]).collect();
    CellPoset::build(dims, &covers, vec![]).unwrap()
}

pub fn interval() -> CellPoset {
    CellPoset::build(vec![0, 0, 1], &[(0, 2), (1, 2)], vec![]).unwrap()
}

pub fn cube() -> CellPoset {
    let i = interval();
    product_complex(&product_complex(&i, &i), &i)
}

pub fn torus(n: u32) -> CellPoset {
    product_complex(&cycle(n), &cycle(n))
}

/// The assignment of `C_{nk} → C_n`.
pub fn cycle_cover_map(n: u32, k: u32) -> Vec<CellId> {
    let m = n * k;
    (0..2 * m).map(|c| if c < m { c % n } else { n + (c - m) % n }).collect()
}

/// The square's pins: `e01 ⌣ e12` and `e30 ⌣ e23` are the only nonzero
/// cup products of edge indicators.
pub fn square_pins() -> Pins {
    let mut p = Pins::default();
    p.vertices.extend([(8, 2), (4, 1), (7, 3), (5, 2), (6, 2)]);
    p.chains.insert(vec![0, 8], vec![6, 7]);
    p
}

pub fn inverse(m: &FqMatrix) -> FqMatrix {
    let n = m.rows();
    let s = Solver::new(m);
    let cols: Vec<Vec<u8>> = (0..n)
        .map(|i| {
            let mut e = vec![0u8; n];
            e[i] = 1;
            s.solve(&e).unwrap()
        })
        .collect();
    FqMatrix::from_cols(m.field(), n, &cols)
}

/// `F_{lo,hi} = P_hi P_lo^{-1}` for random invertible `P_σ`: functorial
/// by construction, with no identity restriction maps in general.
pub fn potential_sheaf<R: Rng>(x: Arc<CellPoset>, field: Field, d: usize, rng: &mut R) -> SheafData {
    let pots: Vec<FqMatrix> = x
        .cells()
        .map(|_| loop {
            let m = FqMatrix::from_raw(field, d, d, field.random_vec(rng, d * d));
            if rank(&m) == d {
                break m;
            }
        })
        .collect();
    let invs: Vec<FqMatrix> = pots.iter().map(inverse).collect();
    let maps: HashMap<_, _> = x.covers().map(|(lo, hi)| ((lo, hi), pots[hi as usize].mul(&invs[lo as usize]))).collect();
    let n = x.len();
    SheafData::build(x, field, vec![d; n], maps).unwrap()
}

pub fn random_graded<S: Sheaf + ?Sized, K>(s: &S, deg: usize, rng: &mut impl Rng, density: f64) -> Graded<CellId, K> {
    let x = s.base();
    let mut out = Graded::zero(deg);
    if deg > x.dim() {
        return out;
    }
    for &c in x.cells_of_dim(deg) {
        if rng.gen_bool(density) {
            out.add_at(c, &s.field().random_vec(rng, s.stalk_dim(c)));
        }
    }
    out
}

pub fn random_cochain<S: Sheaf + ?Sized>(s: &S, deg: usize, rng: &mut impl Rng, density: f64) -> Cochain {
    random_graded(s, deg, rng, density)
}

pub fn random_chain<S: Sheaf + ?Sized>(s: &S, deg: usize, rng: &mut impl Rng, density: f64) -> Chain {
    random_graded(s, deg, rng, density)
}

/// A random flag-keyed (co)chain of `sd X` with values in `F(carrier)`.
pub fn random_sd<S: Sheaf + ?Sized, K>(
    s: &S,
    sub: &Subdivision,
    deg: usize,
    rng: &mut impl Rng,
    density: f64,
) -> Graded<Flag, K> {
    let sd = sub.poset();
    let mut out = Graded::zero(deg);
    if deg > sd.dim() {
        return out;
    }
    for &c in sd.cells_of_dim(deg) {
        if rng.gen_bool(density) {
            let flag = sub.flag(c).to_vec();
            let top = *flag.last().unwrap();
            out.add_at(flag, &s.field().random_vec(rng, s.stalk_dim(top)));
        }
    }
    out
}

pub fn random_sd_chain<S: Sheaf + ?Sized>(s: &S, sub: &Subdivision, deg: usize, rng: &mut impl Rng, density: f64) -> SdChain {
    random_sd(s, sub, deg, rng, density)
}

pub fn random_sd_cochain<S: Sheaf + ?Sized>(
    s: &S,
    sub: &Subdivision,
    deg: usize,
    rng: &mut impl Rng,
    density: f64,
) -> SdCochain {
    random_sd(s, sub, deg, rng, density)
}

/// `G_0 = Cayley(Z_2, {0, 1})`, `H = Z_3`: `X^3_H` has 1536 cells.
pub fn small_lift_config() -> CodeConfig {
    serde_json::from_str(
        r#"{
            "group": [2], "generators": [0, 1], "H": [3], "labeling_seed": 5, "t": 3,
            "local_codes": [
                {"q": 2, "rows": 2, "cols": 2, "data": [[1, 0], [1, 1]]},
                {"q": 2, "rows": 1, "cols": 2, "data": [[1, 1]]},
                {"q": 2, "rows": 1, "cols": 2, "data": [[1, 1]]}
            ]
        }"#,
    )
    .unwrap()
}

/// Rank over F_2 by elimination on bit rows, kept apart from the library.
pub fn rank_f2(rows: &[Vec<u8>], cols: usize) -> usize {
    let words = cols.div_ceil(64);
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| {
            let mut w = vec![0u64; words];
            for (j, &b) in r.iter().enumerate() {
                if b & 1 == 1 {
                    w[j / 64] |= 1 << (j % 64);
                }
            }
            w
        })
        .collect();
    let mut r = 0;
    for j in 0..cols {
        let (wi, bit) = (j / 64, 1u64 << (j % 64));
        let Some(p) = (r..m.len()).find(|&i| m[i][wi] & bit != 0) else { continue };
        m.swap(r, p);
        let pivot = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[wi] & bit != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        r += 1;
    }
    r
}

/// Dense `∂_1` over F_2, assembled straight from restriction maps.
pub fn dense_boundary_1<S: Sheaf + ?Sized>(f: &S) -> (Vec<Vec<u8>>, usize) {
    let x = f.base();
    let mut off = HashMap::new();
    let mut rows = 0;
    for &v in x.cells_of_dim(0) {
        off.insert(v, rows);
        rows += f.stalk_dim(v);
    }
    let mut cols = Vec::new();
    for &e in x.cells_of_dim(1) {
        for j in 0..f.stalk_dim(e) {
            let mut col = vec![0u8; rows];
            for &v in x.faces(e) {
                let m = f.restriction(v, e);
                for i in 0..f.stalk_dim(v) {
                    col[off[&v] + i] ^= m.get(j, i);
                }
            }
            cols.push(col);
        }
    }
    (cols, rows)
}
