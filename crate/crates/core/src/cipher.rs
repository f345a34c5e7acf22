//! The WG-7 stream cipher: 23 stages over GF(2^7), 80-bit key, 81-bit IV.
//!
//! Initialization clocks `S[22] <- S[11] + beta*S[0] + WGP(S[22])`; keystream
//! generation outputs `Tr(WGP(S[22]))` and clocks the linear part only.
//! Reduced-round variants take the number of initialization clocks as a
//! parameter (46 for the full cipher).

use std::fmt;
use std::str::FromStr;

use crate::gf7::{from_stage_bits, to_stage_bits, FieldElem};
use crate::Error;

pub const KEY_BITS: usize = 80;
pub const IV_BITS: usize = 81;
pub const STAGES: usize = 23;
pub const STATE_BITS: usize = 7 * STAGES;
pub const FULL_INIT_ROUNDS: usize = 46;

/// Filter ANF, one bitmask per monomial over stage 22 (bit `p` = `s_{154+p}`),
/// in the order the terms are usually listed. 4 linear and 46 nonlinear terms.
pub const FILTER_ANF: [u8; 50] = [
    64, 80, 48, 8, 72, 40, 104, 24, 88, 120, 84, 12, 108, 124, 2, 34, 98, 22, 3, 70, 114, 106, 122,
    78, 30, 1, 33, 97, 5, 49, 73, 105, 121, 69, 85, 117, 45, 61, 99, 83, 7, 115, 43, 91, 59, 39,
    103, 55, 79, 31,
];

/// Key, bit `i` of the inner word is `K_i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Key80(u128);

/// IV, bit `i` of the inner word is `IV_i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Iv81(u128);

macro_rules! bit_word {
    ($name:ident, $len:expr, $what:literal) => {
        impl $name {
            pub const LEN: usize = $len;
            const MASK: u128 = (1u128 << $len) - 1;

            pub const fn from_word(word: u128) -> Self {
                $name(word & Self::MASK)
            }

            pub const fn word(self) -> u128 {
                self.0
            }

            /// From a slice of 0/1 values, element `i` = bit `i`.
            pub fn from_bits(bits: &[u8]) -> Result<Self, Error> {
                if bits.len() != $len {
                    return Err(Error::Length {
                        what: $what,
                        expected: $len,
                        got: bits.len(),
                    });
                }
                let mut w = 0u128;
                for (i, b) in bits.iter().enumerate() {
                    match b {
                        0 => {}
                        1 => w |= 1 << i,
                        _ => {
                            return Err(Error::BadBit {
                                what: $what,
                                index: i,
                            })
                        }
                    }
                }
                Ok($name(w))
            }

            pub const fn bit(self, i: usize) -> u8 {
                ((self.0 >> i) & 1) as u8
            }

            pub fn with_bit(self, i: usize, b: u8) -> Self {
                assert!(i < $len);
                $name((self.0 & !(1 << i)) | (((b & 1) as u128) << i))
            }

            pub fn flip(self, i: usize) -> Self {
                assert!(i < $len);
                $name(self.0 ^ (1 << i))
            }

            pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
                $name::from_word(rng.gen::<u128>())
            }

            /// Index-ordered binary string, bit 0 first.
            pub fn to_binary_string(self) -> String {
                (0..$len)
                    .map(|i| if self.bit(i) == 1 { '1' } else { '0' })
                    .collect()
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self)
            }
        }
    };
}

bit_word!(Key80, KEY_BITS, "key");
bit_word!(Iv81, IV_BITS, "iv");

impl Key80 {
    /// 20 hex characters; the most significant bit of the first character is `K_0`.
    pub fn from_hex(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let mut w = 0u128;
        let mut n = 0;
        for (pos, ch) in s.chars().enumerate() {
            let nib = ch.to_digit(16).ok_or(Error::BadChar {
                what: "key",
                position: pos,
                ch,
            })?;
            if n == 20 {
                return Err(Error::Length {
                    what: "key hex",
                    expected: 20,
                    got: s.chars().count(),
                });
            }
            for k in 0..4 {
                if (nib >> (3 - k)) & 1 == 1 {
                    w |= 1 << (4 * n + k);
                }
            }
            n += 1;
        }
        if n != 20 {
            return Err(Error::Length {
                what: "key hex",
                expected: 20,
                got: n,
            });
        }
        Ok(Key80(w))
    }

    pub fn to_hex(self) -> String {
        (0..20)
            .map(|n| {
                let nib = (0..4).fold(0u32, |acc, k| (acc << 1) | self.bit(4 * n + k) as u32);
                char::from_digit(nib, 16).unwrap()
            })
            .collect()
    }
}

impl Iv81 {
    /// 81 characters of `0`/`1`; the first character is `IV_0`.
    pub fn from_binary(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let mut w = 0u128;
        let mut n = 0;
        for (pos, ch) in s.chars().enumerate() {
            let b = match ch {
                '0' => 0u128,
                '1' => 1,
                _ => {
                    return Err(Error::BadChar {
                        what: "iv",
                        position: pos,
                        ch,
                    })
                }
            };
            if n == IV_BITS {
                return Err(Error::Length {
                    what: "iv",
                    expected: IV_BITS,
                    got: s.chars().count(),
                });
            }
            w |= b << n;
            n += 1;
        }
        if n != IV_BITS {
            return Err(Error::Length {
                what: "iv",
                expected: IV_BITS,
                got: n,
            });
        }
        Ok(Iv81(w))
    }
}

impl fmt::Display for Key80 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Display for Iv81 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary_string())
    }
}

impl FromStr for Key80 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Key80::from_hex(s)
    }
}

impl FromStr for Iv81 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Iv81::from_binary(s)
    }
}

/// Which key/IV bit sits at each state bit position after loading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoadSource {
    Key(usize),
    Iv(usize),
}

/// Source of state bit `t` (0..161) after loading.
pub const fn load_source(t: usize) -> LoadSource {
    let stage = t / 7;
    let pos = t % 7;
    if stage == 22 {
        return if pos < 3 {
            LoadSource::Key(77 + pos)
        } else {
            LoadSource::Iv(77 + pos - 3)
        };
    }
    let i = stage / 2;
    if stage.is_multiple_of(2) {
        if pos < 4 {
            LoadSource::Key(7 * i + pos)
        } else {
            LoadSource::Iv(7 * i + pos - 4)
        }
    } else if pos < 3 {
        LoadSource::Key(7 * i + 4 + pos)
    } else {
        LoadSource::Iv(7 * i + 3 + pos - 3)
    }
}

/// State bit index holding key bit `k`.
pub fn key_position(k: usize) -> usize {
    (0..STATE_BITS)
        .find(|t| load_source(*t) == LoadSource::Key(k))
        .expect("key bit in range")
}

/// State bit index holding IV bit `v`.
pub fn iv_position(v: usize) -> usize {
    (0..STATE_BITS)
        .find(|t| load_source(*t) == LoadSource::Iv(v))
        .expect("iv bit in range")
}

const fn wg_permutation(y: FieldElem) -> FieldElem {
    let y1 = FieldElem::from_low_bits(y.raw() ^ 1);
    let r = y.raw() ^ y1.pow(33).raw() ^ y1.pow(39).raw() ^ y1.pow(41).raw() ^ y1.pow(104).raw();
    FieldElem::from_low_bits(r)
}

const fn build_wgp_table() -> [u8; 128] {
    let mut t = [0u8; 128];
    let mut i = 0;
    while i < 128 {
        let x = FieldElem::from_low_bits(i as u8);
        t[i] = wg_permutation(x.pow(3)).raw();
        i += 1;
    }
    t
}

const fn build_trace_table() -> [u8; 128] {
    let mut t = [0u8; 128];
    let mut i = 0;
    while i < 128 {
        t[i] = FieldElem::from_low_bits(i as u8).trace();
        i += 1;
    }
    t
}

const fn build_beta_table() -> [u8; 128] {
    let mut t = [0u8; 128];
    let mut i = 0;
    while i < 128 {
        t[i] = FieldElem::from_low_bits(i as u8).mul(FieldElem::BETA).raw();
        i += 1;
    }
    t
}

static WGP_TABLE: [u8; 128] = build_wgp_table();
static TRACE_TABLE: [u8; 128] = build_trace_table();
static BETA_TABLE: [u8; 128] = build_beta_table();

/// The decimated WG permutation `x -> WGP7(x^3)` used in the initialization
/// feedback, where `WGP7(y) = y + (y+1)^33 + (y+1)^39 + (y+1)^41 + (y+1)^104`.
pub fn wgp(x: FieldElem) -> FieldElem {
    FieldElem::from_low_bits(WGP_TABLE[x.raw() as usize])
}

/// Keystream filter `Tr(WGP(x))`, equal to `Tr(x^3 + x^9 + x^21 + x^57 + x^87)`.
pub fn filter(x: FieldElem) -> u8 {
    TRACE_TABLE[WGP_TABLE[x.raw() as usize] as usize]
}

/// The WGP permutation acting on stage tuples (bit `p` = position `p`).
pub fn wgp_stage_table() -> [u8; 128] {
    let mut t = [0u8; 128];
    for (bits, out) in t.iter_mut().enumerate() {
        *out = to_stage_bits(wgp(from_stage_bits(bits as u8)));
    }
    t
}

/// Evaluates the listed filter ANF on `(s_154, ..., s_160)` (bit `p` = `s_{154+p}`).
pub fn ksg_anf(s: u8) -> u8 {
    crate::anf::eval_monomials(&FILTER_ANF.map(u32::from), s as u32)
}

/// Full 161-bit register, one field element per stage.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CipherState {
    pub stages: [FieldElem; STAGES],
}

impl CipherState {
    pub fn stage_bits(&self, j: usize) -> u8 {
        to_stage_bits(self.stages[j])
    }

    /// State bit `s_t`.
    pub fn bit(&self, t: usize) -> u8 {
        (self.stage_bits(t / 7) >> (t % 7)) & 1
    }

    pub fn from_bits(bits: &[u8; STATE_BITS]) -> Self {
        let mut st = CipherState::default();
        for j in 0..STAGES {
            let tuple = (0..7).fold(0u8, |acc, p| acc | ((bits[7 * j + p] & 1) << p));
            st.stages[j] = from_stage_bits(tuple);
        }
        st
    }

    pub fn to_bits(&self) -> [u8; STATE_BITS] {
        let mut out = [0u8; STATE_BITS];
        for (t, o) in out.iter_mut().enumerate() {
            *o = self.bit(t);
        }
        out
    }

    /// Short digest for reports: 64-bit FNV-1a over the stage values.
    pub fn digest(&self) -> u64 {
        self.stages.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, s| {
            (h ^ s.raw() as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

impl fmt::Debug for CipherState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CipherState[")?;
        for (j, s) in self.stages.iter().enumerate() {
            if j > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

pub fn load(key: Key80, iv: Iv81) -> CipherState {
    let mut bits = [0u8; STATE_BITS];
    for (t, b) in bits.iter_mut().enumerate() {
        *b = match load_source(t) {
            LoadSource::Key(k) => key.bit(k),
            LoadSource::Iv(v) => iv.bit(v),
        };
    }
    CipherState::from_bits(&bits)
}

/// Loads from raw bit slices, checking lengths.
pub fn load_bits(key: &[u8], iv: &[u8]) -> Result<CipherState, Error> {
    Ok(load(Key80::from_bits(key)?, Iv81::from_bits(iv)?))
}

pub fn init_round(st: &CipherState) -> CipherState {
    let s = &st.stages;
    let fb = s[11] + FieldElem::BETA * s[0] + wgp(s[22]);
    let mut next = CipherState::default();
    next.stages[..22].copy_from_slice(&s[1..]);
    next.stages[22] = fb;
    next
}

/// One keystream clock: the output bit is taken from the current state.
pub fn ksg_round(st: &CipherState) -> (CipherState, u8) {
    let s = &st.stages;
    let z = filter(s[22]);
    let mut next = CipherState::default();
    next.stages[..22].copy_from_slice(&s[1..]);
    next.stages[22] = s[11] + FieldElem::BETA * s[0];
    (next, z)
}

/// `n` keystream bits after `init_rounds` initialization clocks.
pub fn keystream(key: Key80, iv: Iv81, init_rounds: usize, n: usize) -> Vec<u8> {
    let (_, z) = keystream_with_state(key, iv, init_rounds, n);
    z
}

/// Like [`keystream`], also returning the state after the last output clock.
pub fn keystream_with_state(
    key: Key80,
    iv: Iv81,
    init_rounds: usize,
    n: usize,
) -> (CipherState, Vec<u8>) {
    let mut st = load(key, iv);
    for _ in 0..init_rounds {
        st = init_round(&st);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, z) = ksg_round(&st);
        out.push(z);
        st = next;
    }
    (st, out)
}

/// Loaded state as raw stage bytes (polynomial-basis encoding).
pub fn load_raw(key: Key80, iv: Iv81) -> [u8; STAGES] {
    load(key, iv).stages.map(FieldElem::raw)
}

/// First keystream bit after `rounds` initialization clocks, working on raw
/// stage bytes with the stages unrolled into one sequence
/// `a_{t+23} = a_{t+11} + beta*a_t + WGP(a_{t+22})`.
pub fn first_bit_from_raw(loaded: &[u8; STAGES], rounds: usize) -> u8 {
    let mut seq = [0u8; STAGES + 64];
    assert!(rounds <= 64, "first_bit_from_raw supports up to 64 rounds");
    seq[..STAGES].copy_from_slice(loaded);
    for t in 0..rounds {
        seq[t + 23] = seq[t + 11] ^ BETA_TABLE[seq[t] as usize] ^ WGP_TABLE[seq[t + 22] as usize];
    }
    TRACE_TABLE[WGP_TABLE[seq[rounds + 22] as usize] as usize]
}

/// First keystream bit after `rounds` initialization clocks.
pub fn first_bit(key: Key80, iv: Iv81, rounds: usize) -> u8 {
    first_bit_from_raw(&load_raw(key, iv), rounds)
}

/// Per-bit contribution of each key and IV bit to the loaded raw stages, so a
/// loaded state can be patched by XOR when a single input bit flips.
#[derive(Clone, Debug)]
pub struct LoadMap {
    key: [(usize, u8); KEY_BITS],
    iv: [(usize, u8); IV_BITS],
}

impl LoadMap {
    pub fn new() -> Self {
        let mut key = [(0usize, 0u8); KEY_BITS];
        let mut iv = [(0usize, 0u8); IV_BITS];
        for t in 0..STATE_BITS {
            let stage = t / 7;
            let raw = from_stage_bits(1 << (t % 7)).raw();
            match load_source(t) {
                LoadSource::Key(k) => key[k] = (stage, raw),
                LoadSource::Iv(v) => iv[v] = (stage, raw),
            }
        }
        LoadMap { key, iv }
    }

    /// `(stage, raw xor mask)` toggled by key bit `k`.
    pub fn key_delta(&self, k: usize) -> (usize, u8) {
        self.key[k]
    }

    /// `(stage, raw xor mask)` toggled by IV bit `v`.
    pub fn iv_delta(&self, v: usize) -> (usize, u8) {
        self.iv[v]
    }
}

impl Default for LoadMap {
    fn default() -> Self {
        Self::new()
    }
}
