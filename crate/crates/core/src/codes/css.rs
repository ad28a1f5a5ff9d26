//! CSS codes from three consecutive cochain terms, with exact and
//! randomized parameter computation.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CodesError;
use crate::gfq::{column_basis, kernel, quotient_reps, rank, rref, EchelonBasis, Field, FqMatrix};
use crate::sheaf::{coboundary_matrix, Sheaf};

/// Qudit weight convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    /// Nonzero coordinates.
    Coordinate,
    /// Cells with a nonzero stalk vector.
    Block,
}

/// A computed parameter and how much is known about it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Param<T> {
    Exact(T),
    UpperBound(T),
    Unknown,
    /// The minimum is over an empty set.
    Vacuous,
}

impl<T: Copy> Param<T> {
    pub fn exact(&self) -> Option<T> {
        match self {
            Param::Exact(v) => Some(*v),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<T> {
        match self {
            Param::Exact(v) | Param::UpperBound(v) => Some(*v),
            _ => None,
        }
    }
}

/// A nonnegative rational `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Ratio {
        let g = gcd(num, den).max(1);
        Ratio { num: num / g, den: den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn less(self, other: Ratio) -> bool {
        (self.num as u128) * (other.den as u128) < (other.num as u128) * (self.den as u128)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `C^{i-1} → C^i → C^{i+1}` with `H_Z = δ^i` and `H_X = (δ^{i-1})^T`.
/// Qudits are the coordinates of `C^i`.
#[derive(Debug, Clone)]
pub struct CssCode {
    pub field: Field,
    pub degree: usize,
    pub hx: FqMatrix,
    pub hz: FqMatrix,
    /// Stalk dimensions of the cells of `C^{i-1}`, `C^i`, `C^{i+1}`.
    pub blocks: [Vec<usize>; 3],
}

pub fn css_from<S: Sheaf + ?Sized>(f: &S, i: usize) -> Result<CssCode, CodesError> {
    let x = f.base();
    if i > x.dim() {
        return Err(CodesError::DegreeOutOfRange { degree: i, dim: x.dim() });
    }
    let stalks = |k: Option<usize>| -> Vec<usize> {
        match k {
            Some(k) if k <= x.dim() => x.cells_of_dim(k).iter().map(|&c| f.stalk_dim(c)).collect(),
            _ => Vec::new(),
        }
    };
    let hz = coboundary_matrix(f, i);
    let hx = if i == 0 { FqMatrix::zeros(f.field(), 0, hz.cols()) } else { coboundary_matrix(f, i - 1).transpose() };
    Ok(CssCode {
        field: f.field(),
        degree: i,
        hx,
        hz,
        blocks: [stalks(i.checked_sub(1)), stalks(Some(i)), stalks(Some(i + 1))],
    })
}

/// Which logical operators a distance refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `ker δ^i \ im δ^{i-1}`.
    X,
    /// `ker ∂_i \ im ∂_{i+1}`.
    Z,
}

impl CssCode {
    pub fn n(&self) -> usize {
        self.hz.cols()
    }

    pub fn n_cells(&self) -> usize {
        self.blocks[1].len()
    }

    pub fn k(&self) -> usize {
        self.n() - rank(&self.hz) - rank(&self.hx)
    }

    /// `H_X H_Z^T = 0`.
    pub fn is_orthogonal(&self) -> bool {
        self.hx.mul(&self.hz.transpose()).is_zero()
    }

    /// `(check, stabilizers)`: logicals of `side` lie in `ker check` and
    /// are trivial on `im stabilizers`.
    fn pair(&self, side: Side) -> (&FqMatrix, FqMatrix) {
        match side {
            Side::X => (&self.hz, self.hx.transpose()),
            Side::Z => (&self.hx, self.hz.transpose()),
        }
    }

    pub fn weight(&self, v: &[u8], w: Weight) -> usize {
        weigh(v, &self.blocks[1], w)
    }
}

fn weigh(v: &[u8], blocks: &[usize], w: Weight) -> usize {
    match w {
        Weight::Coordinate => v.iter().filter(|&&x| x != 0).count(),
        Weight::Block => {
            let mut off = 0;
            let mut count = 0;
            for &d in blocks {
                count += v[off..off + d].iter().any(|&x| x != 0) as usize;
                off += d;
            }
            count
        }
    }
}

/// Minimum weights `(coordinate, block)` found so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distance {
    pub coordinate: usize,
    pub block: usize,
}

impl Distance {
    const NONE: Distance = Distance { coordinate: usize::MAX, block: usize::MAX };

    fn merge(self, o: Distance) -> Distance {
        Distance { coordinate: self.coordinate.min(o.coordinate), block: self.block.min(o.block) }
    }

    pub fn get(&self, w: Weight) -> usize {
        match w {
            Weight::Coordinate => self.coordinate,
            Weight::Block => self.block,
        }
    }
}

fn log2_count(field: Field, dim: usize) -> usize {
    dim * field.m() as usize
}

/// Minimum weight over `ker \ im` by enumerating the whole kernel, when
/// `q^{dim ker} ≤ 2^cap`.
pub fn distance_exact(code: &CssCode, side: Side, cap: usize) -> Param<Distance> {
    let (check, stab) = code.pair(side);
    let image = column_basis(&stab);
    let reps = quotient_reps(&kernel(check), &image).expect("image lies in the kernel");
    if reps.cols() == 0 {
        return Param::Vacuous;
    }
    let dim = reps.cols() + image.cols();
    if log2_count(code.field, dim) > cap {
        return Param::Unknown;
    }
    // rep vectors first, so "nonzero quotient part" is "some leading digit nonzero"
    let basis: Vec<Vec<u8>> = reps.cols_iter().chain(image.cols_iter()).collect();
    let d = if code.field.is_binary() {
        enumerate_f2(&basis, reps.cols(), &code.blocks[1], code.n())
    } else {
        enumerate_fq(code.field, &basis, reps.cols(), &code.blocks[1], code.n())
    };
    Param::Exact(d)
}

const PREFIX_BITS: usize = 8;

fn enumerate_f2(basis: &[Vec<u8>], nreps: usize, blocks: &[usize], n: usize) -> Distance {
    let words = n.div_ceil(64);
    let packed: Vec<Vec<u64>> = basis
        .iter()
        .map(|v| {
            let mut w = vec![0u64; words];
            for (i, &x) in v.iter().enumerate() {
                w[i / 64] |= (x as u64) << (i % 64);
            }
            w
        })
        .collect();
    let mut block_masks: Vec<Vec<(usize, u64)>> = Vec::with_capacity(blocks.len());
    let mut off = 0;
    for &d in blocks {
        let mut segs: Vec<(usize, u64)> = Vec::new();
        for i in off..off + d {
            match segs.last_mut() {
                Some((w, m)) if *w == i / 64 => *m |= 1 << (i % 64),
                _ => segs.push((i / 64, 1 << (i % 64))),
            }
        }
        block_masks.push(segs);
        off += d;
    }
    let weigh = |v: &[u64]| Distance {
        coordinate: v.iter().map(|w| w.count_ones() as usize).sum(),
        block: block_masks.iter().filter(|segs| segs.iter().any(|&(w, m)| v[w] & m != 0)).count(),
    };
    let dim = basis.len();
    // the top `p` basis vectors are fixed per job; the rest run through a Gray code
    let p = dim.min(PREFIX_BITS);
    let low = dim - p;
    (0u64..1 << p)
        .into_par_iter()
        .map(|prefix| {
            let mut v = vec![0u64; words];
            let mut reps_on = 0u32;
            for j in 0..p {
                if prefix >> j & 1 == 1 {
                    let idx = low + j;
                    v.iter_mut().zip(&packed[idx]).for_each(|(a, b)| *a ^= b);
                    reps_on += (idx < nreps) as u32;
                }
            }
            let mut low_reps = vec![false; low];
            let mut best = Distance::NONE;
            if reps_on > 0 {
                best = weigh(&v);
            }
            for step in 1u64..1 << low {
                let j = step.trailing_zeros() as usize;
                v.iter_mut().zip(&packed[j]).for_each(|(a, b)| *a ^= b);
                if j < nreps {
                    low_reps[j] = !low_reps[j];
                    if low_reps[j] {
                        reps_on += 1;
                    } else {
                        reps_on -= 1;
                    }
                }
                if reps_on > 0 {
                    best = best.merge(weigh(&v));
                }
            }
            best
        })
        .reduce(|| Distance::NONE, Distance::merge)
}

fn enumerate_fq(field: Field, basis: &[Vec<u8>], nreps: usize, blocks: &[usize], n: usize) -> Distance {
    let q = field.q() as usize;
    let dim = basis.len();
    let p = dim.min(2);
    let low = dim - p;
    let axpy = |v: &mut [u8], c: u8, b: &[u8]| {
        for (x, &y) in v.iter_mut().zip(b) {
            *x ^= field.mul(c, y);
        }
    };
    let weigh_both = |v: &[u8]| Distance {
        coordinate: weigh(v, blocks, Weight::Coordinate),
        block: weigh(v, blocks, Weight::Block),
    };
    (0..q.pow(p as u32))
        .into_par_iter()
        .map(|prefix| {
            let mut v = vec![0u8; n];
            let mut digits = vec![0u8; dim];
            let mut rest = prefix;
            for j in low..dim {
                digits[j] = (rest % q) as u8;
                rest /= q;
                axpy(&mut v, digits[j], &basis[j]);
            }
            let mut reps_on = digits[..nreps].iter().filter(|&&c| c != 0).count();
            let mut best = if reps_on > 0 { weigh_both(&v) } else { Distance::NONE };
            loop {
                // odometer over the low digits
                let mut j = 0;
                while j < low && digits[j] as usize == q - 1 {
                    axpy(&mut v, digits[j], &basis[j]);
                    if j < nreps {
                        reps_on -= 1;
                    }
                    digits[j] = 0;
                    j += 1;
                }
                if j == low {
                    break;
                }
                let old = digits[j];
                digits[j] += 1;
                axpy(&mut v, old ^ digits[j], &basis[j]);
                if j < nreps && old == 0 {
                    reps_on += 1;
                }
                if reps_on > 0 {
                    best = best.merge(weigh_both(&v));
                }
            }
            best
        })
        .reduce(|| Distance::NONE, Distance::merge)
}

/// Upper bound by information-set sampling: each trial row-reduces the
/// kernel basis under a random column order and keeps the nontrivial rows
/// and pairwise sums.
pub fn distance_estimate(code: &CssCode, side: Side, trials: usize, seed: u64) -> Param<Distance> {
    let (check, stab) = code.pair(side);
    let field = code.field;
    let n = code.n();
    let ker = kernel(check);
    let mut image = EchelonBasis::new(field, n);
    for c in column_basis(&stab).cols_iter() {
        image.insert(&c);
    }
    if ker.cols() == image.dim() {
        return Param::Vacuous;
    }
    let rows: Vec<Vec<u8>> = ker.cols_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = Distance::NONE;
    let consider = |v: &[u8], best: &mut Distance| {
        if v.iter().any(|&x| x != 0) && !image.contains(v) {
            *best = best.merge(Distance {
                coordinate: weigh(v, &code.blocks[1], Weight::Coordinate),
                block: weigh(v, &code.blocks[1], Weight::Block),
            });
        }
    };
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..trials.max(1) {
        perm.shuffle(&mut rng);
        let permuted: Vec<Vec<u8>> = rows.iter().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
        let red = rref(&FqMatrix::from_rows(field, n, &permuted).expect("rows have length n")).matrix;
        let reduced: Vec<Vec<u8>> = (0..red.rows())
            .map(|i| {
                let mut v = vec![0u8; n];
                for (j, &p) in perm.iter().enumerate() {
                    v[p] = red.get(i, j);
                }
                v
            })
            .filter(|v| v.iter().any(|&x| x != 0))
            .collect();
        for (a, u) in reduced.iter().enumerate() {
            consider(u, &mut best);
            for w in &reduced[a + 1..] {
                let s: Vec<u8> = u.iter().zip(w).map(|(x, y)| x ^ y).collect();
                consider(&s, &mut best);
            }
        }
    }
    Param::UpperBound(best)
}

/// A minimizing ratio of the soundness formula and its witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessValue {
    pub rho: Ratio,
    pub syndrome_weight: usize,
    pub distance_to_kernel: usize,
}

/// `ρ_X` or `ρ_Z` by enumerating all of `C^i`, when `q^{dim C^i} ≤ 2^cap`.
///
/// `ρ = min |Ax| / W(target) · W(C^i) / dist(x, ker A)` over `x ∉ ker A`,
/// where `W` is the total weight of a space: its dimension for
/// coordinate weight and its cell count for block weight.
pub fn soundness_exact(code: &CssCode, side: Side, weight: Weight, cap: usize) -> Param<SoundnessValue> {
    let (a, target_blocks) = match side {
        Side::X => (&code.hz, &code.blocks[2]),
        Side::Z => (&code.hx, &code.blocks[0]),
    };
    let n = code.n();
    if a.is_zero() {
        return Param::Vacuous;
    }
    if log2_count(code.field, n) > cap {
        return Param::Unknown;
    }
    let field = code.field;
    let q = field.q() as usize;
    let cols: Vec<Vec<u8>> = a.cols_iter().collect();
    // min weight in each syndrome class; dist(x, ker A) = min_class[A x]
    let mut min_class: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut digits = vec![0u8; n];
    let mut x = vec![0u8; n];
    let mut s = vec![0u8; a.rows()];
    loop {
        let w = weigh(&x, &code.blocks[1], weight);
        min_class.entry(s.clone()).and_modify(|m| *m = (*m).min(w)).or_insert(w);
        let mut j = 0;
        while j < n && digits[j] as usize == q - 1 {
            for (t, &c) in s.iter_mut().zip(&cols[j]) {
                *t ^= field.mul(digits[j], c);
            }
            digits[j] = 0;
            x[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
        let old = digits[j];
        digits[j] += 1;
        for (t, &c) in s.iter_mut().zip(&cols[j]) {
            *t ^= field.mul(old ^ digits[j], c);
        }
        x[j] = digits[j];
    }
    let (total_src, total_tgt) = match weight {
        Weight::Coordinate => (n, target_blocks.iter().sum::<usize>()),
        Weight::Block => (code.blocks[1].len(), target_blocks.len()),
    };
    let mut best: Option<SoundnessValue> = None;
    for (syn, &dist) in &min_class {
        if syn.iter().all(|&c| c == 0) {
            continue;
        }
        let sw = weigh(syn, target_blocks, weight);
        let rho = Ratio::new((sw * total_src) as u64, (total_tgt * dist) as u64);
        if best.map_or(true, |b| rho.less(b.rho)) {
            best = Some(SoundnessValue { rho, syndrome_weight: sw, distance_to_kernel: dist });
        }
    }
    Param::Exact(best.expect("A is nonzero"))
}

/// Everything known about a code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeReport {
    pub q: u32,
    pub degree: usize,
    pub n: usize,
    pub n_cells: usize,
    pub k: usize,
    pub d_x: Param<Distance>,
    pub d_z: Param<Distance>,
    pub rho_x: Param<SoundnessValue>,
    pub rho_z: Param<SoundnessValue>,
}

/// Caps and sampling effort for [`CodeReport::compute`].
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub distance_cap: usize,
    pub soundness_cap: usize,
    pub trials: usize,
    pub seed: u64,
    pub soundness_weight: Weight,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { distance_cap: 24, soundness_cap: 16, trials: 200, seed: 0, soundness_weight: Weight::Block }
    }
}

impl CodeReport {
    /// Exact values where the caps allow, sampled upper bounds otherwise.
    pub fn compute(code: &CssCode, opts: &ReportOptions) -> CodeReport {
        let dist = |side| match distance_exact(code, side, opts.distance_cap) {
            Param::Unknown => distance_estimate(code, side, opts.trials, opts.seed),
            d => d,
        };
        CodeReport {
            q: code.field.q(),
            degree: code.degree,
            n: code.n(),
            n_cells: code.n_cells(),
            k: code.k(),
            d_x: dist(Side::X),
            d_z: dist(Side::Z),
            rho_x: soundness_exact(code, Side::X, opts.soundness_weight, opts.soundness_cap),
            rho_z: soundness_exact(code, Side::Z, opts.soundness_weight, opts.soundness_cap),
        }
    }
}
