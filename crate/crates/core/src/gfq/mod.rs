//! Arithmetic over `F_q`, `q = 2^m` with `1 <= m <= 8`.
//!
//! Elements are `u8` values read as polynomials over `F_2` in the basis
//! `1, x, ..., x^{m-1}`, reduced modulo the Conway polynomial of degree `m`:
//!
//! | m | modulus                     | hex   |
//! |---|-----------------------------|-------|
//! | 1 | x + 1                       | 0x3   |
//! | 2 | x^2 + x + 1                 | 0x7   |
//! | 3 | x^3 + x + 1                 | 0xB   |
//! | 4 | x^4 + x + 1                 | 0x13  |
//! | 5 | x^5 + x^2 + 1               | 0x25  |
//! | 6 | x^6 + x^4 + x^3 + x + 1     | 0x5B  |
//! | 7 | x^7 + x + 1                 | 0x83  |
//! | 8 | x^8 + x^4 + x^3 + x^2 + 1   | 0x11D |
//!
//! Every modulus is primitive, so `x` generates the multiplicative group and
//! multiplication runs through log/exp tables.

mod elim;
mod matrix;

pub use elim::{column_basis, kernel, mat_solve, quotient_reps, rank, rref, EchelonBasis, MatrixError, Rref, Solver};
pub use matrix::{FqMatrix, MatrixJson};

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

/// Conway moduli indexed by `m`.
pub const MODULI: [u16; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x5B, 0x83, 0x11D];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field size {0} is odd; only characteristic 2 is supported")]
    CharNotTwo(u32),
    #[error("field size {0} is not a power of two")]
    NotPowerOfTwo(u32),
    #[error("field size {0} is outside 2..=256")]
    OutOfRange(u32),
}

struct Tables {
    exp: [u8; 512],
    log: [u16; 256],
}

fn tables(m: u8) -> &'static Tables {
    static CELLS: [OnceLock<Tables>; 9] = [const { OnceLock::new() }; 9];
    CELLS[m as usize].get_or_init(|| build_tables(m))
}

fn build_tables(m: u8) -> Tables {
    let q = 1usize << m;
    let modulus = MODULI[m as usize];
    let mut exp = [0u8; 512];
    let mut log = [0u16; 256];
    let mut x: u16 = 1;
    for i in 0..q - 1 {
        exp[i] = x as u8;
        log[x as usize] = i as u16;
        x <<= 1;
        if x & (1 << m) != 0 {
            x ^= modulus;
        }
        if m > 1 {
            debug_assert!(x != 1 || i == q - 2, "modulus for m={m} is not primitive");
        }
    }
    for i in q - 1..512 {
        exp[i] = exp[i % (q - 1)];
    }
    Tables { exp, log }
}

/// A finite field `F_{2^m}`. Cheap to copy; tables are shared process-wide.
#[derive(Clone, Copy)]
pub struct Field {
    m: u8,
    t: &'static Tables,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q())
    }
}

impl Field {
    /// Builds `F_q`. Odd sizes are rejected with [`FieldError::CharNotTwo`].
    pub fn new(q: u32) -> Result<Field, FieldError> {
        if !(2..=256).contains(&q) {
            return Err(FieldError::OutOfRange(q));
        }
        if q % 2 == 1 {
            return Err(FieldError::CharNotTwo(q));
        }
        if !q.is_power_of_two() {
            return Err(FieldError::NotPowerOfTwo(q));
        }
        let m = q.trailing_zeros() as u8;
        Ok(Field { m, t: tables(m) })
    }

    /// `F_2`.
    pub fn f2() -> Field {
        Field { m: 1, t: tables(1) }
    }

    pub fn q(self) -> u32 {
        1 << self.m
    }

    pub fn m(self) -> u8 {
        self.m
    }

    pub fn modulus(self) -> u16 {
        MODULI[self.m as usize]
    }

    pub fn is_binary(self) -> bool {
        self.m == 1
    }

    pub fn contains(self, a: u32) -> bool {
        a < self.q()
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    #[inline]
    pub fn mul(self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.m == 1 {
            return 1;
        }
        let l = self.t.log[a as usize] as usize + self.t.log[b as usize] as usize;
        self.t.exp[l]
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self, a: u8) -> Option<u8> {
        if a == 0 {
            return None;
        }
        let order = (self.q() - 1) as usize;
        let l = self.t.log[a as usize] as usize;
        Some(self.t.exp[(order - l) % order])
    }

    pub fn pow(self, a: u8, e: u64) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.q() - 1) as u64;
        let l = self.t.log[a as usize] as u64;
        self.t.exp[((l * (e % order)) % order) as usize]
    }

    /// Reduces an integer into the prime subfield (its parity).
    pub fn from_int(self, n: u64) -> u8 {
        (n & 1) as u8
    }

    /// Absolute trace `a + a^2 + a^4 + ... + a^{2^{m-1}}`, an element of `F_2`.
    pub fn trace(self, a: u8) -> u8 {
        let mut acc = 0u8;
        let mut x = a;
        for _ in 0..self.m {
            acc ^= x;
            x = self.mul(x, x);
        }
        debug_assert!(acc <= 1);
        acc
    }

    /// Carry-less product reduced by the modulus, independent of the tables.
    pub fn mul_slow(self, a: u8, b: u8) -> u8 {
        let mut acc: u16 = 0;
        for i in 0..8 {
            if b >> i & 1 == 1 {
                acc ^= (a as u16) << i;
            }
        }
        let modulus = self.modulus() as u32;
        let mut acc = acc as u32;
        for bit in (self.m as u32..16).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= modulus << (bit - self.m as u32);
            }
        }
        acc as u8
    }

    pub fn elements(self) -> impl Iterator<Item = u8> {
        (0..self.q()).map(|a| a as u8)
    }

    pub fn random<R: Rng + ?Sized>(self, rng: &mut R) -> u8 {
        rng.gen_range(0..self.q()) as u8
    }

    pub fn random_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> u8 {
        rng.gen_range(1..self.q()) as u8
    }

    pub fn random_vec<R: Rng + ?Sized>(self, rng: &mut R, len: usize) -> Vec<u8> {
        (0..len).map(|_| self.random(rng)).collect()
    }

    /// `sum_i a_i b_i`.
    pub fn dot(self, a: &[u8], b: &[u8]) -> u8 {
        debug_assert_eq!(a.len(), b.len());
        if self.m == 1 {
            return a.iter().zip(b).fold(0, |acc, (x, y)| acc ^ (x & y));
        }
        a.iter().zip(b).fold(0, |acc, (&x, &y)| acc ^ self.mul(x, y))
    }

    /// `y += c * x`.
    pub fn axpy(self, y: &mut [u8], c: u8, x: &[u8]) {
        debug_assert_eq!(y.len(), x.len());
        match c {
            0 => {}
            1 => y.iter_mut().zip(x).for_each(|(a, b)| *a ^= b),
            _ => y.iter_mut().zip(x).for_each(|(a, &b)| *a ^= self.mul(c, b)),
        }
    }

    pub fn scale(self, c: u8, x: &[u8]) -> Vec<u8> {
        x.iter().map(|&b| self.mul(c, b)).collect()
    }

    /// Kronecker product of two vectors, `a` as the slow index.
    pub fn kron_vec(self, a: &[u8], b: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for &x in a {
            out.extend(b.iter().map(|&y| self.mul(x, y)));
        }
        out
    }
}

pub fn is_zero(v: &[u8]) -> bool {
    v.iter().all(|&x| x == 0)
}
