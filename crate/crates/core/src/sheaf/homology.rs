use std::sync::OnceLock;

use crate::complex::CellId;
use crate::gfq::{column_basis, kernel, mat_solve, quotient_reps, FqMatrix, MatrixError, Solver};

use super::chains::{boundary, coboundary, Chain, Cochain, Layout};
use super::{Sheaf, SheafError};

/// Matrix of `δ^i: C^i → C^{i+1}` in the [`Layout`] coordinates.
pub fn coboundary_matrix<S: Sheaf + ?Sized>(f: &S, i: usize) -> FqMatrix {
    let x = f.base();
    let lo = Layout::new(f, i);
    let hi = Layout::new(f, i + 1);
    let mut m = FqMatrix::zeros(f.field(), hi.total(), lo.total());
    for (j, &t) in hi.cells().iter().enumerate() {
        let rows = hi.range_at(j);
        for &s in x.faces(t) {
            let cols = lo.range(x, s);
            let r = f.restriction(s, t);
            for (a, row) in rows.clone().enumerate() {
                for (b, col) in cols.clone().enumerate() {
                    let v = m.get(row, col) ^ r.get(a, b);
                    m.set(row, col, v);
                }
            }
        }
    }
    m
}

/// Matrix of `∂_i: C_i → C_{i-1}`, the transpose of `δ^{i-1}`.
pub fn boundary_matrix<S: Sheaf + ?Sized>(f: &S, i: usize) -> FqMatrix {
    if i == 0 {
        return FqMatrix::zeros(f.field(), 0, Layout::new(f, 0).total());
    }
    coboundary_matrix(f, i - 1).transpose()
}

/// `H_i` or `H^i` in [`Layout`] coordinates, as cycles modulo boundaries.
#[derive(Debug)]
pub struct HomologyData {
    pub degree: usize,
    pub betti: usize,
    pub layout: Layout,
    /// Columns span the (co)cycles.
    pub cycles: FqMatrix,
    /// Columns are a basis of the (co)boundaries.
    pub boundaries: FqMatrix,
    /// Columns are cycle representatives of a basis of the quotient.
    pub reps: FqMatrix,
    class_solver: OnceLock<Solver>,
}

impl HomologyData {
    fn new(degree: usize, layout: Layout, cycles: FqMatrix, boundaries: FqMatrix) -> Result<Self, SheafError> {
        let reps = quotient_reps(&cycles, &boundaries)?;
        Ok(HomologyData {
            degree,
            betti: reps.cols(),
            layout,
            cycles,
            boundaries,
            reps,
            class_solver: OnceLock::new(),
        })
    }

    /// The `k`-th representative as a sparse vector.
    pub fn rep<Kind>(&self, k: usize) -> super::Graded<CellId, Kind> {
        self.layout.from_dense(&self.reps.col(k))
    }

    /// Coordinates of a (co)cycle's class in the `reps` basis.
    pub fn class_of(&self, v: &[u8]) -> Result<Vec<u8>, SheafError> {
        let s = self.class_solver.get_or_init(|| Solver::new(&self.reps.hstack(&self.boundaries)));
        let c = s.solve(v).map_err(|e| match e {
            MatrixError::NoSolution => SheafError::NoSolution,
            e => e.into(),
        })?;
        Ok(c[..self.betti].to_vec())
    }
}

/// `H_i(X; F)`.
pub fn homology<S: Sheaf + ?Sized>(f: &S, i: usize) -> Result<HomologyData, SheafError> {
    let layout = Layout::new(f, i);
    let cycles = if i == 0 { FqMatrix::identity(f.field(), layout.total()) } else { kernel(&boundary_matrix(f, i)) };
    let boundaries = column_basis(&boundary_matrix(f, i + 1));
    HomologyData::new(i, layout, cycles, boundaries)
}

/// `H^i(X; F)`.
pub fn cohomology<S: Sheaf + ?Sized>(f: &S, i: usize) -> Result<HomologyData, SheafError> {
    let layout = Layout::new(f, i);
    let cycles = kernel(&coboundary_matrix(f, i));
    let boundaries = if i == 0 {
        FqMatrix::zeros(f.field(), layout.total(), 0)
    } else {
        column_basis(&coboundary_matrix(f, i - 1))
    };
    HomologyData::new(i, layout, cycles, boundaries)
}

pub fn is_cycle<S: Sheaf + ?Sized>(f: &S, x: &Chain) -> bool {
    boundary(f, x).is_zero()
}

pub fn is_cocycle<S: Sheaf + ?Sized>(f: &S, a: &Cochain) -> bool {
    coboundary(f, a).is_zero()
}

/// Some `y` with `∂y = x`, or [`SheafError::NoSolution`].
pub fn solve_boundary<S: Sheaf + ?Sized>(f: &S, x: &Chain) -> Result<Chain, SheafError> {
    let i = x.degree();
    let lay = Layout::new(f, i);
    let m = boundary_matrix(f, i + 1);
    let y = mat_solve(&m, &lay.to_dense(f.base(), x)).map_err(no_solution)?;
    Ok(Layout::new(f, i + 1).from_dense(&y))
}

/// Some `b` with `δb = a`, or [`SheafError::NoSolution`].
pub fn solve_coboundary<S: Sheaf + ?Sized>(f: &S, a: &Cochain) -> Result<Cochain, SheafError> {
    let i = a.degree();
    if i == 0 {
        return if a.is_zero() { Ok(Cochain::zero(0)) } else { Err(SheafError::NoSolution) };
    }
    let m = coboundary_matrix(f, i - 1);
    let y = mat_solve(&m, &Layout::new(f, i).to_dense(f.base(), a)).map_err(no_solution)?;
    Ok(Layout::new(f, i - 1).from_dense(&y))
}

fn no_solution(e: MatrixError) -> SheafError {
    match e {
        MatrixError::NoSolution => SheafError::NoSolution,
        e => e.into(),
    }
}

pub fn is_boundary<S: Sheaf + ?Sized>(f: &S, x: &Chain) -> bool {
    solve_boundary(f, x).is_ok()
}

pub fn is_coboundary<S: Sheaf + ?Sized>(f: &S, a: &Cochain) -> bool {
    solve_coboundary(f, a).is_ok()
}

/// `ε(x) = Σ_v x(v)` on 0-chains.
///
/// Defined when all vertex stalks share one space and the two ends of every
/// edge restrict to it identically, so that `ε` kills boundaries.
pub fn epsilon_map<S: Sheaf + ?Sized>(f: &S, x: &Chain) -> Result<Vec<u8>, SheafError> {
    if x.degree() != 0 && !x.is_zero() {
        return Err(SheafError::DegreeMismatch { expected: 0, found: x.degree() });
    }
    let base = f.base();
    let verts = base.cells_of_dim(0);
    let d = f.stalk_dim(verts[0]);
    if let Some(&v) = verts.iter().find(|&&v| f.stalk_dim(v) != d) {
        return Err(SheafError::WrongBase(format!("vertex {v} has stalk dimension {}, not {d}", f.stalk_dim(v))));
    }
    if base.dim() >= 1 {
        for &e in base.cells_of_dim(1) {
            let ends = base.faces(e);
            if ends.len() == 2 && *f.restriction(ends[0], e) != *f.restriction(ends[1], e) {
                return Err(SheafError::WrongBase(format!("edge {e} restricts differently from its ends")));
            }
        }
    }
    let mut acc = vec![0u8; d];
    for (_, v) in x.iter() {
        acc.iter_mut().zip(v).for_each(|(a, b)| *a ^= b);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::complex::tests::{cycle, square};
    use crate::complex::product_complex;
    use crate::gfq::Field;
    use crate::sheaf::tests::random_square_sheaf;
    use crate::sheaf::SheafData;

    #[test]
    fn constant_sheaf_betti_numbers() {
        let f = Field::f2();
        let sq = SheafData::constant(Arc::new(square()), f, 1);
        let b: Vec<usize> = (0..3).map(|i| homology(&sq, i).unwrap().betti).collect();
        assert_eq!(b, vec![1, 0, 0]);
        let c = cycle(4);
        let torus = SheafData::constant(Arc::new(product_complex(&c, &c)), f, 1);
        let b: Vec<usize> = (0..3).map(|i| homology(&torus, i).unwrap().betti).collect();
        assert_eq!(b, vec![1, 2, 1]);
        let cb: Vec<usize> = (0..3).map(|i| cohomology(&torus, i).unwrap().betti).collect();
        assert_eq!(cb, b);
    }

    #[test]
    fn dense_matrices_match_sparse_operators() {
        let s = random_square_sheaf(21);
        let x = s.base();
        let d0 = coboundary_matrix(&s, 0);
        let l0 = Layout::new(&s, 0);
        let l1 = Layout::new(&s, 1);
        for k in 0..l0.total() {
            let mut e = vec![0u8; l0.total()];
            e[k] = 3;
            let a: Cochain = l0.from_dense(&e);
            assert_eq!(l1.to_dense(x, &coboundary(&s, &a)), d0.mul_vec(&e));
        }
        let d1 = coboundary_matrix(&s, 1);
        assert!(d1.mul(&d0).is_zero());
    }

    #[test]
    fn twisted_cycle_has_trivial_homology() {
        // A cycle with one edge twisted by a nontrivial unit has no
        // global sections, unlike the constant sheaf.
        let f = Field::new(4).unwrap();
        let base = Arc::new(cycle(3));
        let mut maps = std::collections::HashMap::new();
        for (lo, hi) in base.covers() {
            let c = if (lo, hi) == (0, 5) { 2 } else { 1 };
            maps.insert((lo, hi), FqMatrix::from_raw(f, 1, 1, vec![c]));
        }
        let s = SheafData::build(base, f, vec![1; 6], maps).unwrap();
        assert_eq!(cohomology(&s, 0).unwrap().betti, 0);
        assert_eq!(homology(&s, 1).unwrap().betti, 0);
        assert!(epsilon_map(&s, &Chain::zero(0)).is_err());
    }

    #[test]
    fn boundary_membership_and_class() {
        let f = Field::f2();
        let sq = SheafData::constant(Arc::new(square()), f, 1);
        let x = Chain::from_entries(0, [(0, vec![1]), (2, vec![1])]);
        assert!(is_boundary(&sq, &x));
        let y = solve_boundary(&sq, &x).unwrap();
        assert_eq!(boundary(&sq, &y), x);
        let v = Chain::from_entries(0, [(1, vec![1])]);
        assert_eq!(solve_boundary(&sq, &v), Err(SheafError::NoSolution));
        assert_eq!(epsilon_map(&sq, &v).unwrap(), vec![1]);
        let h0 = homology(&sq, 0).unwrap();
        assert_eq!(h0.class_of(&h0.layout.to_dense(sq.base(), &v)).unwrap(), vec![1]);
        assert_eq!(h0.class_of(&h0.layout.to_dense(sq.base(), &x)).unwrap(), vec![0]);
        let a = Cochain::from_entries(1, [(4, vec![1])]);
        assert!(!is_cocycle(&sq, &a));
        let c = coboundary(&sq, &Cochain::from_entries(0, [(1, vec![1])]));
        assert!(is_coboundary(&sq, &c));
    }

    #[test]
    fn homology_cohomology_dims_agree_random() {
        for seed in 0..5 {
            let s = random_square_sheaf(seed);
            for i in 0..3 {
                assert_eq!(homology(&s, i).unwrap().betti, cohomology(&s, i).unwrap().betti);
            }
            // potentials make it isomorphic to the constant sheaf F^2
            assert_eq!(cohomology(&s, 0).unwrap().betti, 2);
        }
    }
}
