//! Conventional bit-based division property: primitive rules, S-box trail
//! tables, the invertible-submatrix rule for linear layers and K-set reduction.

use std::fmt;

use crate::anf::mobius_in_place;
use crate::gf7::BinMatrix7;
use crate::Error;

/// Rank over GF(2) of a list of row bitmasks.
pub fn gf2_rank(rows: &[u8]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in 0..8 {
        let Some(p) = (rank..rows.len()).find(|r| (rows[*r] >> bit) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && (*row >> bit) & 1 == 1 {
                *row ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// Reverses a 7-bit index vector: bit `i` moves to bit `6 - i`.
pub const fn reverse7(x: u8) -> u8 {
    (x.reverse_bits() >> 1) & 0x7f
}

/// `a ⪰ b` componentwise on bitmasks.
#[inline]
pub const fn dominates(a: u8, b: u8) -> bool {
    b & !a == 0
}

/// 0/1 vector of division-property exponents, up to 192 entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DivVector {
    width: u16,
    words: [u64; 3],
}

impl DivVector {
    pub const MAX_WIDTH: usize = 192;

    pub fn zero(width: usize) -> Self {
        assert!(width <= Self::MAX_WIDTH, "width {width} too large");
        DivVector {
            width: width as u16,
            words: [0; 3],
        }
    }

    pub fn from_indices(width: usize, idx: impl IntoIterator<Item = usize>) -> Result<Self, Error> {
        let mut v = Self::zero(width);
        for i in idx {
            if i >= width {
                return Err(Error::IndexRange {
                    what: "division vector",
                    index: i,
                    max: width - 1,
                });
            }
            v.set(i, true);
        }
        Ok(v)
    }

    /// Vector of width `width` from the low bits of `mask`.
    pub fn from_mask(width: usize, mask: u128) -> Self {
        assert!(width <= 128);
        let mut v = Self::zero(width);
        let m = if width == 128 {
            mask
        } else {
            mask & ((1u128 << width) - 1)
        };
        v.words[0] = m as u64;
        v.words[1] = (m >> 64) as u64;
        v
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.width());
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        assert!(i < self.width());
        if b {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn weight(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words == [0; 3]
    }

    /// `self ⪰ other`.
    pub fn dominates(&self, other: &DivVector) -> bool {
        assert_eq!(self.width, other.width);
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| b & !a == 0)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width()).filter(move |i| self.get(*i))
    }
}

impl fmt::Debug for DivVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DivVector{{")?;
        for (n, i) in self.support().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.width)
    }
}

impl fmt::Display for DivVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A set of division vectors of equal width.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KSet {
    vectors: Vec<DivVector>,
}

impl KSet {
    pub fn new(vectors: Vec<DivVector>) -> Self {
        if let Some(w) = vectors.first().map(|v| v.width) {
            assert!(vectors.iter().all(|v| v.width == w), "mixed widths in KSet");
        }
        KSet { vectors }
    }

    pub fn vectors(&self) -> &[DivVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_antichain(&self) -> bool {
        self.vectors.iter().enumerate().all(|(i, a)| {
            self.vectors
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.dominates(b))
        })
    }

    /// Keeps only the minimal elements, sorted; duplicates collapse.
    pub fn reduce(&self) -> KSet {
        let mut v = self.vectors.clone();
        v.sort_by_key(|x| (x.weight(), *x));
        v.dedup();
        let mut kept: Vec<DivVector> = Vec::with_capacity(v.len());
        for x in v {
            if !kept.iter().any(|k| x.dominates(k)) {
                kept.push(x);
            }
        }
        kept.sort();
        KSet { vectors: kept }
    }
}

pub fn reduce(ks: &KSet) -> KSet {
    ks.reduce()
}

/// Copy `a -> (b1, b2)`.
pub fn prop_copy(a: u8) -> Vec<(u8, u8)> {
    match a {
        0 => vec![(0, 0)],
        _ => vec![(1, 0), (0, 1)],
    }
}

/// XOR `(a1, a2) -> b`.
pub fn prop_xor(a1: u8, a2: u8) -> Vec<u8> {
    match a1 + a2 {
        0 => vec![0],
        1 => vec![1],
        _ => vec![],
    }
}

/// AND `(a1, a2) -> b`, exact rule.
pub fn prop_and(a1: u8, a2: u8) -> Vec<u8> {
    if a1 == 0 && a2 == 0 {
        vec![0]
    } else {
        vec![1]
    }
}

/// Division trails through an `n`-bit S-box (`n <= 7`).
#[derive(Clone, PartialEq, Eq)]
pub struct SboxTrailTable {
    n: u32,
    sbox: Option<Vec<u8>>,
    /// `valid[u]` has bit `v` set iff `(u, v)` is a valid trail.
    valid: Vec<u128>,
    minimal: Vec<Vec<u8>>,
}

/// Trail table of a 7-bit S-box.
pub fn sbox_trails(sbox: &[u8]) -> Result<SboxTrailTable, Error> {
    if sbox.len() != 128 {
        return Err(Error::SboxSize {
            expected: 128,
            got: sbox.len(),
        });
    }
    SboxTrailTable::from_sbox(7, sbox)
}

impl SboxTrailTable {
    /// `(u, v)` valid iff the ANF of `pi_v(S(x))` has a monomial `w ⪰ u`.
    pub fn from_sbox(n: u32, sbox: &[u8]) -> Result<Self, Error> {
        assert!((1..=7).contains(&n));
        let size = 1usize << n;
        if sbox.len() != size {
            return Err(Error::SboxSize {
                expected: size,
                got: sbox.len(),
            });
        }
        let mut valid = vec![0u128; size];
        let mut t = vec![0u8; size];
        for v in 0..size {
            for (x, e) in t.iter_mut().enumerate() {
                *e = dominates(sbox[x], v as u8) as u8;
            }
            mobius_in_place(&mut t);
            // t[u] := OR of t[w] over w ⪰ u
            let mut half = 1;
            while half < size {
                for block in t.chunks_mut(2 * half) {
                    let (lo, hi) = block.split_at_mut(half);
                    for (l, h) in lo.iter_mut().zip(hi.iter()) {
                        *l |= *h;
                    }
                }
                half <<= 1;
            }
            for (u, e) in t.iter().enumerate() {
                if *e == 1 {
                    valid[u] |= 1 << v;
                }
            }
        }
        let mut table = Self::from_valid(n, valid);
        table.sbox = Some(sbox.to_vec());
        Ok(table)
    }

    /// Table from an explicit feasible set, e.g. the solutions of an inequality system.
    pub fn from_valid(n: u32, valid: Vec<u128>) -> Self {
        assert_eq!(valid.len(), 1 << n);
        let minimal = valid
            .iter()
            .map(|set| {
                let vs: Vec<u8> = (0..1u32 << n)
                    .filter(|v| (set >> v) & 1 == 1)
                    .map(|v| v as u8)
                    .collect();
                vs.iter()
                    .copied()
                    .filter(|v| !vs.iter().any(|w| w != v && dominates(*v, *w)))
                    .collect()
            })
            .collect();
        SboxTrailTable {
            n,
            sbox: None,
            valid,
            minimal,
        }
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    pub fn sbox(&self) -> Option<&[u8]> {
        self.sbox.as_deref()
    }

    pub fn is_valid(&self, u: u8, v: u8) -> bool {
        (self.valid[u as usize] >> v) & 1 == 1
    }

    pub fn valid_set(&self, u: u8) -> u128 {
        self.valid[u as usize]
    }

    /// Minimal `v` reachable from `u`, ascending.
    pub fn minimal(&self, u: u8) -> &[u8] {
        &self.minimal[u as usize]
    }

    pub fn is_minimal_pair(&self, u: u8, v: u8) -> bool {
        self.minimal[u as usize].contains(&v)
    }

    pub fn valid_pairs(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        let size = 1u32 << self.n;
        (0..size).flat_map(move |u| {
            (0..size)
                .filter(move |v| self.is_valid(u as u8, *v as u8))
                .map(move |v| (u as u8, v as u8))
        })
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().map(|s| s.count_ones() as usize).sum()
    }

    pub fn minimal_count(&self) -> usize {
        self.minimal.iter().map(Vec::len).sum()
    }

    /// Relabels inputs and outputs by `i -> n - 1 - i`.
    pub fn reversed(&self) -> SboxTrailTable {
        let n = self.n;
        let rev = |x: u8| (x.reverse_bits() >> (8 - n)) & ((1u16 << n) - 1) as u8;
        let size = 1usize << n;
        let mut valid = vec![0u128; size];
        for (u, set) in self.valid.iter().enumerate() {
            for v in 0..size {
                if (set >> v) & 1 == 1 {
                    valid[rev(u as u8) as usize] |= 1 << rev(v as u8);
                }
            }
        }
        let mut t = Self::from_valid(n, valid);
        t.sbox = self.sbox.as_ref().map(|s| {
            let mut r = vec![0u8; size];
            for (x, y) in s.iter().enumerate() {
                r[rev(x as u8) as usize] = rev(*y);
            }
            r
        });
        t
    }

    /// One line per input: `u: v v v` in hex, minimal outputs only.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (u, vs) in self.minimal.iter().enumerate() {
            out.push_str(&format!("{u:02x}:"));
            for v in vs {
                out.push_str(&format!(" {v:02x}"));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for SboxTrailTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SboxTrailTable")
            .field("n", &self.n)
            .field("valid", &self.valid_count())
            .field("minimal", &self.minimal_count())
            .finish()
    }
}

/// The square submatrix with rows `supp(v)` and columns `supp(u)`, as row masks
/// compressed onto the selected columns.
fn submatrix(m: &BinMatrix7, u: u8, v: u8) -> Vec<u8> {
    let cols: Vec<usize> = (0..7).filter(|c| (u >> c) & 1 == 1).collect();
    (0..7)
        .filter(|r| (v >> r) & 1 == 1)
        .map(|r| {
            cols.iter()
                .enumerate()
                .fold(0u8, |acc, (k, c)| acc | ((m.get(r, *c) as u8) << k))
        })
        .collect()
}

/// `u -> v` through `y = M x` is valid iff `wt(u) = wt(v)` and the submatrix with
/// rows `supp(v)` and columns `supp(u)` is invertible over GF(2).
pub fn linear_trail_valid(m: &BinMatrix7, u: u8, v: u8) -> bool {
    let w = u.count_ones();
    w == v.count_ones() && gf2_rank(&submatrix(m, u, v)) == w as usize
}

/// All valid linear-layer trails of a matrix, indexed by input pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearTrailTable {
    matrix: BinMatrix7,
    images: Vec<Vec<u8>>,
}

impl LinearTrailTable {
    pub fn new(matrix: BinMatrix7) -> Self {
        let images = (0..128u8)
            .map(|u| {
                (0..128u8)
                    .filter(|v| linear_trail_valid(&matrix, u, *v))
                    .collect()
            })
            .collect();
        LinearTrailTable { matrix, images }
    }

    pub fn matrix(&self) -> &BinMatrix7 {
        &self.matrix
    }

    pub fn images(&self, u: u8) -> &[u8] {
        &self.images[u as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.images.iter().map(Vec::len).sum()
    }
}
