//! Fixtures shared by the benchmarks.

use cupcap_core::complex::product_complex;
use cupcap_core::CellPoset;

/// `C_n`: vertices `0..n`, edge `n + e` joins `e` and `e + 1`.
pub fn cycle(n: u32) -> CellPoset {
    let mut dims = vec![0u8; n as usize];
    dims.extend(std::iter::repeat(1).take(n as usize));
    let covers: Vec<_> = (0..n).flat_map(|e| [(e, n + e), ((e + 1) % n, n + e)]).collect();
    CellPoset::build(dims, &covers, vec![]).unwrap()
}

pub fn torus(n: u32) -> CellPoset {
    product_complex(&cycle(n), &cycle(n))
}
