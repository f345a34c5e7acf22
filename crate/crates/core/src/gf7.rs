//! Arithmetic in GF(2^7) = GF(2)[x]/(x^7 + x + 1).
//!
//! A [`FieldElem`] stores its polynomial-basis coefficients: bit `i` is the
//! coefficient of `beta^i`, where `beta` is the residue class of `x`.
//!
//! Cipher stages do not expose polynomial coefficients directly. A stage
//! tuple `(s_{7j}, ..., s_{7j+6})` is the coordinate vector of the stage value
//! in [`STATE_BASIS`]; [`to_stage_bits`] and [`from_stage_bits`] are the only
//! place that convention lives.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

/// `x^7 + x + 1`, bit `i` = coefficient of `x^i`.
pub const MODULUS: u16 = 0b1000_0011;

/// An element of GF(2^7).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FieldElem(u8);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);
    /// The class of `x`, a root of the defining polynomial.
    pub const BETA: FieldElem = FieldElem(2);

    /// Builds an element from its 7-bit polynomial-basis encoding.
    ///
    /// Returns `None` when `raw` does not fit in 7 bits.
    pub const fn new(raw: u8) -> Option<Self> {
        if raw < 0x80 {
            Some(FieldElem(raw))
        } else {
            None
        }
    }

    /// Reduces an arbitrary byte into the field by masking the top bit.
    pub const fn from_low_bits(raw: u8) -> Self {
        FieldElem(raw & 0x7f)
    }

    pub const fn raw(self) -> u8 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Shift-and-reduce multiplication.
    pub const fn mul(self, rhs: FieldElem) -> FieldElem {
        let mut a = self.0 as u16;
        let mut b = rhs.0;
        let mut acc = 0u16;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & 0x80 != 0 {
                a ^= MODULUS;
            }
        }
        FieldElem(acc as u8)
    }

    pub const fn square(self) -> FieldElem {
        self.mul(self)
    }

    /// `self^e` by square-and-multiply, with `0^0 = 1`.
    pub const fn pow(self, mut e: u32) -> FieldElem {
        let mut base = self;
        let mut acc = FieldElem::ONE;
        while e != 0 {
            if e & 1 != 0 {
                acc = acc.mul(base);
            }
            base = base.square();
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub const fn inv(self) -> Option<FieldElem> {
        if self.0 == 0 {
            None
        } else {
            // a^(2^7 - 2) = a^-1
            Some(self.pow(126))
        }
    }

    /// Absolute trace `a + a^2 + ... + a^64`, always 0 or 1.
    pub const fn trace(self) -> u8 {
        let mut t = self;
        let mut acc = self;
        let mut i = 1;
        while i < 7 {
            t = t.square();
            acc = FieldElem(acc.0 ^ t.0);
            i += 1;
        }
        debug_assert!(acc.0 <= 1);
        acc.0
    }

    /// Iterator over all 128 field elements in raw order.
    pub fn all() -> impl Iterator<Item = FieldElem> + Clone {
        (0u8..128).map(FieldElem)
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElem({:#04x})", self.0)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02x}", self.0)
    }
}

impl Add for FieldElem {
    type Output = FieldElem;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: FieldElem) -> FieldElem {
        FieldElem(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElem {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: FieldElem) {
        self.0 ^= rhs.0;
    }
}

impl Mul for FieldElem {
    type Output = FieldElem;
    fn mul(self, rhs: FieldElem) -> FieldElem {
        FieldElem::mul(self, rhs)
    }
}

pub fn mul(a: FieldElem, b: FieldElem) -> FieldElem {
    a.mul(b)
}

pub fn pow(a: FieldElem, e: u32) -> FieldElem {
    a.pow(e)
}

pub fn trace(a: FieldElem) -> u8 {
    a.trace()
}

/// A basis of GF(2^7) over GF(2), listed as field elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    elems: [FieldElem; 7],
    /// `coords[raw]` = coordinate vector of the element with that raw value.
    coords: [u8; 128],
}

impl Basis {
    /// Builds a basis; `None` if the elements are linearly dependent.
    pub const fn new(elems: [u8; 7]) -> Option<Basis> {
        let mut coords = [0xffu8; 128];
        let mut v = 0usize;
        while v < 128 {
            let mut x = 0u8;
            let mut i = 0;
            while i < 7 {
                if (v >> i) & 1 == 1 {
                    x ^= elems[i];
                }
                i += 1;
            }
            if x >= 0x80 || coords[x as usize] != 0xff {
                return None;
            }
            coords[x as usize] = v as u8;
            v += 1;
        }
        let mut fe = [FieldElem::ZERO; 7];
        let mut i = 0;
        while i < 7 {
            fe[i] = FieldElem(elems[i]);
            i += 1;
        }
        Some(Basis { elems: fe, coords })
    }

    pub const fn elems(&self) -> [FieldElem; 7] {
        self.elems
    }

    /// Coordinate vector of `x`, bit `p` = coefficient of `elems[p]`.
    pub const fn coords(&self, x: FieldElem) -> u8 {
        self.coords[x.0 as usize]
    }

    /// Element with the given coordinate vector (low 7 bits used).
    pub const fn element(&self, coords: u8) -> FieldElem {
        let mut x = 0u8;
        let mut i = 0;
        while i < 7 {
            if (coords >> i) & 1 == 1 {
                x ^= self.elems[i].0;
            }
            i += 1;
        }
        FieldElem(x)
    }
}

/// Polynomial basis `1, beta, ..., beta^6`.
pub const POLYNOMIAL_BASIS: Basis = match Basis::new([1, 2, 4, 8, 16, 32, 64]) {
    Some(b) => b,
    None => panic!("polynomial basis"),
};

/// Basis in which cipher stages are written.
///
/// Stage bit `p` is `Tr(beta^{e_p} * x)` with `e = (15, 14, 12, 11, 7, 6, 3)`;
/// these are the dual-basis elements. This is the unique basis in which the
/// keystream filter has the published 50-term ANF and multiplication by `beta`
/// has the published 17-entry matrix (up to reversed indexing, see
/// [`crate::divprop::reverse7`]).
pub const STATE_BASIS: Basis = match Basis::new([97, 32, 12, 8, 33, 14, 113]) {
    Some(b) => b,
    None => panic!("state basis"),
};

/// Exponents `e_p` with stage bit `p` = `Tr(beta^{e_p} x)`.
pub const STATE_TRACE_EXPONENTS: [u32; 7] = [15, 14, 12, 11, 7, 6, 3];

/// Stage value to its 7-bit tuple, bit `p` = `s_{7j+p}`.
pub const fn to_stage_bits(x: FieldElem) -> u8 {
    STATE_BASIS.coords(x)
}

/// 7-bit stage tuple (bit `p` = `s_{7j+p}`) to the stage value.
pub const fn from_stage_bits(bits: u8) -> FieldElem {
    STATE_BASIS.element(bits)
}

/// A 7x7 matrix over GF(2). Row `r` is a 7-bit mask; bit `c` = entry `(r, c)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BinMatrix7 {
    rows: [u8; 7],
}

impl BinMatrix7 {
    pub const IDENTITY: BinMatrix7 = BinMatrix7 {
        rows: [1, 2, 4, 8, 16, 32, 64],
    };

    pub const fn from_rows(rows: [u8; 7]) -> Self {
        let mut r = rows;
        let mut i = 0;
        while i < 7 {
            r[i] &= 0x7f;
            i += 1;
        }
        BinMatrix7 { rows: r }
    }

    pub const fn rows(&self) -> [u8; 7] {
        self.rows
    }

    pub const fn get(&self, r: usize, c: usize) -> bool {
        (self.rows[r] >> c) & 1 == 1
    }

    /// `M * x` for a column vector `x` given as a bitmask.
    pub const fn apply(&self, x: u8) -> u8 {
        let mut y = 0u8;
        let mut r = 0;
        while r < 7 {
            if (self.rows[r] & x).count_ones() & 1 == 1 {
                y |= 1 << r;
            }
            r += 1;
        }
        y
    }

    pub fn transpose(&self) -> BinMatrix7 {
        let mut rows = [0u8; 7];
        for (r, row) in rows.iter_mut().enumerate() {
            for c in 0..7 {
                if self.get(c, r) {
                    *row |= 1 << c;
                }
            }
        }
        BinMatrix7 { rows }
    }

    /// Relabels both rows and columns by `i -> 6 - i`.
    pub fn reversed(&self) -> BinMatrix7 {
        let mut rows = [0u8; 7];
        for (r, row) in rows.iter_mut().enumerate() {
            for c in 0..7 {
                if self.get(6 - r, 6 - c) {
                    *row |= 1 << c;
                }
            }
        }
        BinMatrix7 { rows }
    }

    pub fn nonzeros(&self) -> u32 {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }

    pub fn rank(&self) -> usize {
        crate::divprop::gf2_rank(&self.rows)
    }
}

impl fmt::Debug for BinMatrix7 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinMatrix7 [")?;
        for r in 0..7 {
            let row: String = (0..7)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        write!(f, "]")
    }
}

/// Matrix of `x -> c * x` on coordinate vectors in `basis`.
pub fn mul_by_const_matrix_in(c: FieldElem, basis: &Basis) -> BinMatrix7 {
    let mut rows = [0u8; 7];
    for (col, b) in basis.elems().iter().enumerate() {
        let image = basis.coords(c * *b);
        for (r, row) in rows.iter_mut().enumerate() {
            if (image >> r) & 1 == 1 {
                *row |= 1 << col;
            }
        }
    }
    BinMatrix7 { rows }
}

/// Matrix of `x -> c * x` on stage tuples.
pub fn mul_by_const_matrix(c: FieldElem) -> BinMatrix7 {
    mul_by_const_matrix_in(c, &STATE_BASIS)
}
