//! Cube sums, superpoly tables, IV screening, the online phase and
//! complexity accounting.

use std::fmt;
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cipher::{
    first_bit_from_raw, load_raw, Iv81, Key80, LoadMap, IV_BITS, KEY_BITS, STAGES,
};
use crate::trail::check_indices;
use crate::Error;

/// Largest `|J|` a table is built for.
pub const DEFAULT_TABLE_LIMIT: usize = 22;

/// A cube over IV bits with the remaining IV bits fixed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubeSpec {
    cube: Vec<usize>,
    iv_const: Iv81,
    rounds: usize,
}

impl CubeSpec {
    /// Cube bits are cleared in `iv_const`.
    pub fn new(cube: &[usize], iv_const: Iv81, rounds: usize) -> Result<Self, Error> {
        check_indices(cube, IV_BITS, "cube index")?;
        let mut c = cube.to_vec();
        c.sort_unstable();
        let mut iv = iv_const;
        for i in &c {
            iv = iv.with_bit(*i, 0);
        }
        Ok(CubeSpec {
            cube: c,
            iv_const: iv,
            rounds,
        })
    }

    pub fn cube(&self) -> &[usize] {
        &self.cube
    }

    pub fn iv_const(&self) -> Iv81 {
        self.iv_const
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn with_iv_const(&self, iv: Iv81) -> Self {
        CubeSpec::new(&self.cube, iv, self.rounds).expect("already validated")
    }

    /// FNV-1a over cube, constants and rounds.
    pub fn hash64(&self) -> u64 {
        let mut h = Fnv::new();
        for i in &self.cube {
            h.write(&(*i as u32).to_le_bytes());
        }
        h.write(&self.iv_const.word().to_le_bytes());
        h.write(&(self.rounds as u32).to_le_bytes());
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = (self.0 ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// XOR of the first keystream bit over the cube, starting from a loaded state
/// whose cube bits are all zero.
fn cube_sum_raw(loaded: &[u8; STAGES], deltas: &[(usize, u8)], rounds: usize) -> u8 {
    let mut st = *loaded;
    let mut acc = first_bit_from_raw(&st, rounds);
    // Gray-code walk: step g flips the bit at trailing_zeros(g)
    for g in 1u64..1 << deltas.len() {
        let (j, m) = deltas[g.trailing_zeros() as usize];
        st[j] ^= m;
        acc ^= first_bit_from_raw(&st, rounds);
    }
    acc
}

fn cube_deltas(map: &LoadMap, spec: &CubeSpec) -> Vec<(usize, u8)> {
    spec.cube.iter().map(|i| map.iv_delta(*i)).collect()
}

/// Sum of the first keystream bit over all `2^|I|` cube assignments.
pub fn cube_sum(key: Key80, spec: &CubeSpec) -> u8 {
    let map = LoadMap::new();
    cube_sum_raw(
        &load_raw(key, spec.iv_const),
        &cube_deltas(&map, spec),
        spec.rounds,
    )
}

/// Key with the bits of `j` set from `jhat` (lowest index = least significant).
pub fn key_with(base: Key80, j: &[usize], jhat: u64) -> Key80 {
    j.iter().enumerate().fold(base, |k, (n, idx)| {
        k.with_bit(*idx, ((jhat >> n) & 1) as u8)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    ConstantZero,
    ConstantOne,
    Balanced,
    Unbalanced,
}

impl Verdict {
    pub fn from_counts(ones: u64, len: u64) -> Self {
        if ones == 0 {
            Verdict::ConstantZero
        } else if ones == len {
            Verdict::ConstantOne
        } else if 2 * ones == len {
            Verdict::Balanced
        } else {
            Verdict::Unbalanced
        }
    }

    pub fn is_constant(self) -> bool {
        matches!(self, Verdict::ConstantZero | Verdict::ConstantOne)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConstantZero => "constant-0",
            Verdict::ConstantOne => "constant-1",
            Verdict::Balanced => "balanced",
            Verdict::Unbalanced => "unbalanced",
        })
    }
}

/// The offline table `T_1` of one cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperpolyProfile {
    pub spec: CubeSpec,
    pub j: Vec<usize>,
    pub base_key: Key80,
    /// Bit `jhat` of the packed little-endian bitset.
    table: Vec<u8>,
    pub ones: u64,
    pub verdict: Verdict,
}

impl SuperpolyProfile {
    fn from_table(spec: CubeSpec, j: Vec<usize>, base_key: Key80, table: Vec<u8>) -> Self {
        let len = 1u64 << j.len();
        let ones = count_ones(&table, len);
        SuperpolyProfile {
            spec,
            j,
            base_key,
            table,
            ones,
            verdict: Verdict::from_counts(ones, len),
        }
    }

    pub fn len(&self) -> u64 {
        1 << self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, jhat: u64) -> u8 {
        (self.table[(jhat / 8) as usize] >> (jhat % 8)) & 1
    }

    pub fn bits(&self) -> &[u8] {
        &self.table
    }
}

fn count_ones(table: &[u8], len: u64) -> u64 {
    if len < 8 {
        return (table[0] & ((1u16 << len) - 1) as u8).count_ones() as u64;
    }
    table.iter().map(|b| b.count_ones() as u64).sum()
}

const T1_MAGIC: &[u8; 8] = b"WG7T1\0\0\0";

/// 32-byte header of a table file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableHeader {
    pub j_len: u32,
    pub rounds: u32,
    pub cube_hash: u64,
    pub seed: u64,
}

impl TableHeader {
    pub fn to_bytes(&self) -> [u8; 32] {
        let mut b = [0u8; 32];
        b[..8].copy_from_slice(T1_MAGIC);
        b[8..12].copy_from_slice(&self.j_len.to_le_bytes());
        b[12..16].copy_from_slice(&self.rounds.to_le_bytes());
        b[16..24].copy_from_slice(&self.cube_hash.to_le_bytes());
        b[24..32].copy_from_slice(&self.seed.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        if b.len() < 32 || &b[..8] != T1_MAGIC {
            return None;
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        Some(TableHeader {
            j_len: u32_at(8),
            rounds: u32_at(12),
            cube_hash: u64_at(16),
            seed: u64_at(24),
        })
    }
}

/// Hash binding a table to its cube, constants, key set and base key.
fn table_hash(spec: &CubeSpec, j: &[usize], base_key: Key80) -> u64 {
    let mut h = Fnv::new();
    h.write(&spec.hash64().to_le_bytes());
    for i in j {
        h.write(&(*i as u32).to_le_bytes());
    }
    h.write(&base_key.word().to_le_bytes());
    h.finish()
}

/// Settings for building `T_1`.
#[derive(Clone, Debug)]
pub struct TableOptions {
    pub limit: usize,
    /// Persist to this file, resuming from a partial one.
    pub path: Option<PathBuf>,
    /// Entries per persisted chunk, as a power of two.
    pub chunk_log2: u32,
    /// Recorded in the file header.
    pub seed: u64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            limit: DEFAULT_TABLE_LIMIT,
            path: None,
            chunk_log2: 14,
            seed: 0,
        }
    }
}

fn progress_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".progress");
    PathBuf::from(p)
}

/// Evaluates the superpoly on every assignment of the key bits `j`; the other
/// key bits come from `base_key`.
pub fn superpoly_table(
    spec: &CubeSpec,
    j: &[usize],
    base_key: Key80,
) -> Result<SuperpolyProfile, Error> {
    superpoly_table_with(spec, j, base_key, &TableOptions::default())
}

pub fn superpoly_table_with(
    spec: &CubeSpec,
    j: &[usize],
    base_key: Key80,
    opts: &TableOptions,
) -> Result<SuperpolyProfile, Error> {
    check_indices(j, KEY_BITS, "key index")?;
    if j.len() > opts.limit {
        return Err(Error::TableTooLarge {
            size: j.len(),
            limit: opts.limit,
        });
    }
    let mut j = j.to_vec();
    j.sort_unstable();
    let len = 1u64 << j.len();
    let nbytes = len.div_ceil(8) as usize;
    let header = TableHeader {
        j_len: j.len() as u32,
        rounds: spec.rounds as u32,
        cube_hash: table_hash(spec, &j, base_key),
        seed: opts.seed,
    };

    // chunks of whole bytes so workers never share a byte
    let chunk_entries = (1u64 << opts.chunk_log2.max(3)).min(len.max(8));
    let nchunks = len.div_ceil(chunk_entries);
    let mut table = vec![0u8; nbytes];
    let mut done = 0u64;
    if let Some(path) = &opts.path {
        done = resume(path, &header, &mut table)?.min(nchunks);
    }

    let map = LoadMap::new();
    let deltas = cube_deltas(&map, spec);
    let compute_chunk = |c: u64, out: &mut [u8]| {
        let start = c * chunk_entries;
        let end = (start + chunk_entries).min(len);
        out.iter_mut().for_each(|b| *b = 0);
        for jhat in start..end {
            let key = key_with(base_key, &j, jhat);
            let bit = cube_sum_raw(&load_raw(key, spec.iv_const), &deltas, spec.rounds);
            let off = jhat - start;
            out[(off / 8) as usize] |= bit << (off % 8);
        }
    };
    let chunk_bytes = (chunk_entries / 8).max(1) as usize;
    // persist after each batch of chunks
    let batch = if opts.path.is_some() {
        (rayon::current_num_threads() as u64 * 4).max(1)
    } else {
        nchunks
    };
    while done < nchunks {
        let upto = (done + batch).min(nchunks);
        let lo = (done as usize) * chunk_bytes;
        let hi = ((upto as usize) * chunk_bytes).min(nbytes);
        table[lo..hi]
            .par_chunks_mut(chunk_bytes)
            .enumerate()
            .for_each(|(k, out)| compute_chunk(done + k as u64, out));
        done = upto;
        if let Some(path) = &opts.path {
            write_table(path, &header, &table)?;
            let pp = progress_path(path);
            if done < nchunks {
                fs::write(&pp, format!("{done} {nchunks}\n")).map_err(|e| Error::io(&pp, e))?;
            } else if pp.exists() {
                fs::remove_file(&pp).map_err(|e| Error::io(&pp, e))?;
            }
        }
    }
    if len < 8 {
        table[0] &= ((1u16 << len) - 1) as u8;
    }
    Ok(SuperpolyProfile::from_table(
        spec.clone(),
        j,
        base_key,
        table,
    ))
}

/// Loads a partial or complete table; returns the number of finished chunks.
fn resume(path: &Path, header: &TableHeader, table: &mut [u8]) -> Result<u64, Error> {
    let Ok(mut f) = File::open(path) else {
        return Ok(0);
    };
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    if TableHeader::from_bytes(&buf) != Some(*header) || buf.len() != 32 + table.len() {
        return Ok(0);
    }
    table.copy_from_slice(&buf[32..]);
    let pp = progress_path(path);
    match fs::read_to_string(&pp) {
        Ok(s) => Ok(s
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .unwrap_or(0)),
        Err(_) => Ok(u64::MAX),
    }
}

fn write_table(path: &Path, header: &TableHeader, table: &[u8]) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&header.to_bytes())
        .map_err(|e| Error::io(&tmp, e))?;
    f.write_all(table).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads a complete table file.
pub fn read_table(path: &Path) -> Result<(TableHeader, Vec<u8>), Error> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = TableHeader::from_bytes(&buf).ok_or_else(|| Error::Parse {
        what: "table file",
        line: 0,
        msg: "bad header".into(),
    })?;
    let want = (1u64 << header.j_len).div_ceil(8) as usize;
    if buf.len() != 32 + want {
        return Err(Error::Parse {
            what: "table file",
            line: 0,
            msg: format!("expected {want} table bytes"),
        });
    }
    Ok((header, buf[32..].to_vec()))
}

/// Outcome of IV screening.
#[derive(Clone, Debug)]
pub struct Screened {
    pub spec: CubeSpec,
    pub attempts: usize,
    pub profile: SuperpolyProfile,
}

/// Draws non-cube IV constants until the superpoly over `j` is not constant.
pub fn screen_iv(
    template: &CubeSpec,
    j: &[usize],
    base_key: Key80,
    trials: usize,
    seed: u64,
    opts: &TableOptions,
) -> Result<Result<Screened, usize>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=trials {
        let spec = template.with_iv_const(Iv81::random(&mut rng));
        let profile = superpoly_table_with(&spec, j, base_key, opts)?;
        if !profile.verdict.is_constant() {
            return Ok(Ok(Screened {
                spec,
                attempts: attempt,
                profile,
            }));
        }
    }
    Ok(Err(trials))
}

/// Key bits whose flip changes the cube sum for some random key and constants.
pub fn empirical_dependence(template: &CubeSpec, trials: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Key80, Iv81)> = (0..trials)
        .map(|_| (Key80::random(&mut rng), Iv81::random(&mut rng)))
        .collect();
    let hits: Vec<[bool; KEY_BITS]> = draws
        .par_iter()
        .map(|(key, iv)| {
            let spec = template.with_iv_const(*iv);
            let base = cube_sum(*key, &spec);
            std::array::from_fn(|k| cube_sum(key.flip(k), &spec) != base)
        })
        .collect();
    (0..KEY_BITS)
        .filter(|k| hits.iter().any(|h| h[*k]))
        .collect()
}

/// Online-phase result for one cube.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineRow {
    pub observed: u8,
    pub candidates: u64,
    pub survivors: u64,
    pub true_index: u64,
    pub true_survives: bool,
}

impl OnlineRow {
    pub fn surviving_fraction(&self) -> f64 {
        self.survivors as f64 / self.candidates as f64
    }

    /// Key entropy removed, in bits.
    pub fn bits_recovered(&self) -> f64 {
        (self.candidates as f64 / self.survivors.max(1) as f64).log2()
    }
}

/// Queries the oracle (the cipher under `true_key`) on each cube and keeps the
/// table entries that agree with the observed sum.
pub fn online_recover(true_key: Key80, cubes: &[(CubeSpec, SuperpolyProfile)]) -> Vec<OnlineRow> {
    cubes
        .iter()
        .map(|(spec, prof)| {
            let observed = cube_sum(true_key, spec);
            let survivors = if observed == 1 {
                prof.ones
            } else {
                prof.len() - prof.ones
            };
            let true_index = prof
                .j
                .iter()
                .enumerate()
                .fold(0u64, |a, (n, k)| a | ((true_key.bit(*k) as u64) << n));
            OnlineRow {
                observed,
                candidates: prof.len(),
                survivors,
                true_index,
                true_survives: prof.get(true_index) == observed,
            }
        })
        .collect()
}

/// One cube of the attack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityRow {
    pub id: String,
    pub rounds: usize,
    pub cube: Vec<usize>,
    pub j: Vec<usize>,
}

impl ComplexityRow {
    pub fn offline_log2(&self) -> usize {
        self.j.len() + self.cube.len()
    }
}

/// Attack cost summary; totals are always recomputed from the rows.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AttackReport {
    pub rows: Vec<ComplexityRow>,
}

impl AttackReport {
    /// `log2(sum 2^{|I|})`
    pub fn data_log2(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| 2f64.powi(r.cube.len() as i32))
            .sum::<f64>()
            .log2()
    }

    /// `log2(sum 2^{|J|+|I|} + 2^{80 - #cubes})`
    pub fn time_log2(&self) -> f64 {
        let offline: f64 = self
            .rows
            .iter()
            .map(|r| 2f64.powi(r.offline_log2() as i32))
            .sum();
        (offline + self.brute_force()).log2()
    }

    /// `log2(#cubes * max 2^{|J|+|I|} + 2^{80 - #cubes})`, the bound that
    /// charges every cube at the most expensive one.
    pub fn time_log2_bound(&self) -> f64 {
        let max = self
            .rows
            .iter()
            .map(|r| r.offline_log2())
            .max()
            .unwrap_or(0);
        (self.rows.len() as f64 * 2f64.powi(max as i32) + self.brute_force()).log2()
    }

    fn brute_force(&self) -> f64 {
        2f64.powi((KEY_BITS - self.rows.len().min(KEY_BITS)) as i32)
    }

    /// Line-oriented records.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "row id={} rounds={} cube={} J={} nJ={} time_log2={}+{}\n",
                r.id,
                r.rounds,
                join(&r.cube),
                join(&r.j),
                r.j.len(),
                r.j.len(),
                r.cube.len()
            ));
        }
        out.push_str(&format!(
            "total cubes={} data_log2={:.2} time_log2_sum={:.2} time_log2_bound={:.2}\n",
            self.rows.len(),
            self.data_log2(),
            self.time_log2(),
            self.time_log2_bound()
        ));
        out
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<4} {:<22} {:>6} {:>4}  {:<10} J",
            "cube", "indices", "rounds", "|J|", "time"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<4} {:<22} {:>6} {:>4}  2^({}+{})  {}",
                r.id,
                join(&r.cube),
                r.rounds,
                r.j.len(),
                r.j.len(),
                r.cube.len(),
                compact_ranges(&r.j)
            )?;
        }
        writeln!(
            f,
            "data 2^{:.2}, time 2^{:.2} (sum), 2^{:.2} (bound)",
            self.data_log2(),
            self.time_log2(),
            self.time_log2_bound()
        )
    }
}

pub fn complexity_report(rows: Vec<ComplexityRow>) -> AttackReport {
    AttackReport { rows }
}

pub(crate) fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `0..6,39..48` style rendering.
pub fn compact_ranges(v: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut k = i;
        while k + 1 < v.len() && v[k + 1] == v[k] + 1 {
            k += 1;
        }
        parts.push(if k > i {
            format!("{}..{}", v[i], v[k])
        } else {
            v[i].to_string()
        });
        i = k + 1;
    }
    parts.join(",")
}

/// The eight published cubes with their round counts.
pub const PUBLISHED_CUBES: [(&str, usize, [usize; 7]); 8] = [
    ("I1", 14, [0, 36, 37, 73, 74, 75, 76]),
    ("I2", 15, [35, 37, 73, 74, 75, 76, 80]),
    ("I3", 16, [36, 37, 73, 74, 75, 76, 78]),
    ("I4", 17, [35, 37, 73, 74, 75, 76, 77]),
    ("I5", 18, [36, 37, 45, 73, 74, 75, 76]),
    ("I6", 19, [35, 37, 73, 74, 75, 76, 79]),
    ("I7", 20, [35, 37, 38, 73, 74, 75, 76]),
    ("I8", 20, [35, 37, 39, 73, 74, 75, 76]),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{keystream, ksg_anf};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn spec(cube: &[usize], iv: Iv81, r: usize) -> CubeSpec {
        CubeSpec::new(cube, iv, r).unwrap()
    }

    #[test]
    fn empty_cube_is_first_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for r in [0, 3, 14] {
            let (k, iv) = (Key80::random(&mut rng), Iv81::random(&mut rng));
            assert_eq!(cube_sum(k, &spec(&[], iv, r)), keystream(k, iv, r, 1)[0]);
        }
    }

    #[test]
    fn zero_round_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (k, iv) = (Key80::random(&mut rng), Iv81::random(&mut rng));
            let s = spec(&[80], iv, 0);
            let t = (k.bit(77) | k.bit(78) << 1 | k.bit(79) << 2)
                | (iv.bit(77) << 3 | iv.bit(78) << 4 | iv.bit(79) << 5);
            assert_eq!(cube_sum(k, &s), ksg_anf(t) ^ ksg_anf(t | 64));
            // table over J = {77}
            let prof = superpoly_table(&s, &[77], k).unwrap();
            assert_eq!(prof.len(), 2);
            for b in 0..2u8 {
                let tb = (t & !1) | b;
                assert_eq!(prof.get(b as u64), ksg_anf(tb) ^ ksg_anf(tb | 64));
            }
        }
    }

    #[test]
    fn empty_j_table() {
        let p = superpoly_table(&spec(&[1, 2], Iv81::default(), 4), &[], Key80::default()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(0), cube_sum(Key80::default(), &p.spec));
    }

    #[test]
    fn table_limit_is_a_refusal() {
        let opts = TableOptions {
            limit: 3,
            ..TableOptions::default()
        };
        let r = superpoly_table_with(
            &spec(&[1], Iv81::default(), 1),
            &[0, 1, 2, 3],
            Key80::default(),
            &opts,
        );
        assert!(matches!(r, Err(Error::TableTooLarge { size: 4, limit: 3 })));
    }

    #[test]
    fn cube_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (k, iv) = (Key80::random(&mut rng), Iv81::random(&mut rng));
            let s = spec(&[3, 40, 75], iv, 12);
            let lo = spec(&[3, 40], iv.with_bit(75, 0), 12);
            let hi = spec(&[3, 40], iv.with_bit(75, 1), 12);
            assert_eq!(cube_sum(k, &s), cube_sum(k, &lo) ^ cube_sum(k, &hi));
        }
    }

    #[test]
    fn enumeration_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (k, iv) = (Key80::random(&mut rng), Iv81::random(&mut rng));
        let s = spec(&[0, 36, 37, 73], iv, 14);
        let mut order: Vec<u32> = (0..16).collect();
        order.shuffle(&mut rng);
        let acc = order.iter().fold(0u8, |a, m| {
            let v = s
                .cube()
                .iter()
                .enumerate()
                .fold(iv, |v, (n, i)| v.with_bit(*i, ((m >> n) & 1) as u8));
            a ^ keystream(k, v, 14, 1)[0]
        });
        assert_eq!(acc, cube_sum(k, &s));
    }

    // toy polynomials: the cube sum equals the quotient by the cube monomial
    #[test]
    fn toy_superpolys() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let monos: Vec<u32> = (0..rng.gen_range(1..30))
                .map(|_| rng.gen::<u32>() & 0x3ff)
                .collect();
            let mut vars: Vec<u32> = (0..10).collect();
            vars.shuffle(&mut rng);
            let cube_mask: u32 = vars[..3].iter().map(|v| 1 << v).sum();
            let f = |x: u32| crate::anf::eval_monomials(&monos, x);
            let superpoly: Vec<u32> = monos
                .iter()
                .filter(|m| *m & cube_mask == cube_mask)
                .map(|m| m & !cube_mask)
                .collect();
            for x in 0..1024u32 {
                let rest = x & !cube_mask;
                let mut sum = 0;
                let mut sub = cube_mask;
                loop {
                    sum ^= f(rest | sub);
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & cube_mask;
                }
                assert_eq!(sum, crate::anf::eval_monomials(&superpoly, rest));
            }
        }
    }

    #[test]
    fn table_file_round_trip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t1.bin");
        let s = spec(&[0, 36], Iv81::from_word(0x1234_5678), 12);
        let j = [0usize, 1, 2, 3, 4, 5, 6, 39, 40, 41];
        let opts = TableOptions {
            path: Some(path.clone()),
            chunk_log2: 4,
            seed: 9,
            ..TableOptions::default()
        };
        let a = superpoly_table_with(&s, &j, Key80::default(), &opts).unwrap();
        let plain = superpoly_table(&s, &j, Key80::default()).unwrap();
        assert_eq!(a, plain);
        let (h, bits) = read_table(&path).unwrap();
        assert_eq!(h.j_len, 10);
        assert_eq!(h.rounds, 12);
        assert_eq!(h.seed, 9);
        assert_eq!(bits, plain.bits());
        assert!(!progress_path(&path).exists());
        // a complete file is reused; a forged partial file resumes from its progress mark
        let mut raw = fs::read(&path).unwrap();
        for b in &mut raw[32 + 64..] {
            *b = 0;
        }
        fs::write(&path, &raw).unwrap();
        fs::write(progress_path(&path), "32 64\n").unwrap();
        let b = superpoly_table_with(&s, &j, Key80::default(), &opts).unwrap();
        assert_eq!(b, plain);
    }

    #[test]
    fn header_bytes() {
        let h = TableHeader {
            j_len: 20,
            rounds: 14,
            cube_hash: 7,
            seed: 1,
        };
        let b = h.to_bytes();
        assert_eq!(b.len(), 32);
        assert_eq!(TableHeader::from_bytes(&b), Some(h));
        assert_eq!(TableHeader::from_bytes(&[0; 32]), None);
    }

    #[test]
    fn screening_is_reproducible() {
        let t = spec(&[0, 36, 37, 73, 74, 75, 76], Iv81::default(), 12);
        let a = screen_iv(
            &t,
            &[0, 1, 2, 3],
            Key80::default(),
            5,
            77,
            &TableOptions::default(),
        )
        .unwrap();
        let b = screen_iv(
            &t,
            &[0, 1, 2, 3],
            Key80::default(),
            5,
            77,
            &TableOptions::default(),
        )
        .unwrap();
        match (a, b) {
            (Ok(x), Ok(y)) => {
                assert_eq!(x.spec, y.spec);
                assert_eq!(x.attempts, y.attempts);
            }
            (Err(x), Err(y)) => assert_eq!(x, y),
            _ => panic!("differing outcomes"),
        }
    }

    #[test]
    fn dependence_edge_cases() {
        assert!(empirical_dependence(&spec(&[80], Iv81::default(), 0), 0, 1).is_empty());
        let d = empirical_dependence(&spec(&[80], Iv81::default(), 0), 32, 1);
        assert!(d.iter().all(|k| [77, 78, 79].contains(k)));
    }

    #[test]
    fn online_phase_halves_a_balanced_table() {
        // R=0, I={80}, J={77,78,79}: a small table over the filter derivative
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = spec(&[80], Iv81::random(&mut rng), 0);
        let prof = superpoly_table(&s, &[77, 78, 79], Key80::default()).unwrap();
        for _ in 0..20 {
            let key = Key80::random(&mut rng);
            let row = &online_recover(key, &[(s.clone(), prof.clone())])[0];
            assert!(row.true_survives);
            if prof.verdict == Verdict::Balanced {
                assert_eq!(row.surviving_fraction(), 0.5);
                assert_eq!(row.bits_recovered(), 1.0);
            }
            if prof.verdict.is_constant() {
                assert_eq!(row.surviving_fraction(), 1.0);
            }
        }
    }

    #[test]
    fn published_complexity() {
        let j_sizes = [20usize, 28, 34, 42, 48, 56, 62, 62];
        let rows = PUBLISHED_CUBES
            .iter()
            .zip(j_sizes)
            .map(|((id, r, c), nj)| ComplexityRow {
                id: id.to_string(),
                rounds: *r,
                cube: c.to_vec(),
                j: (0..nj).collect(),
            })
            .collect();
        let rep = complexity_report(rows);
        assert_eq!(rep.rows[0].offline_log2(), 27);
        assert_eq!(rep.data_log2(), 10.0);
        assert_eq!(rep.time_log2_bound(), 73.0);
        assert!((rep.time_log2() - 72.32).abs() < 0.01);
        assert!(rep.to_records().contains("time_log2=20+7"));
    }

    #[test]
    fn ranges() {
        assert_eq!(compact_ranges(&[0, 1, 2, 5, 7, 8]), "0..2,5,7..8");
        assert_eq!(compact_ranges(&[]), "");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn cube_sum_splits_on_any_cube_bit(k in proptest::prelude::any::<u128>(), v in proptest::prelude::any::<u128>(),
                                           idx in proptest::collection::btree_set(0usize..81, 1..5), r in 0usize..20) {
            let cube: Vec<usize> = idx.into_iter().collect();
            let (key, iv) = (Key80::from_word(k), Iv81::from_word(v));
            let last = *cube.last().unwrap();
            let rest = &cube[..cube.len() - 1];
            let whole = cube_sum(key, &spec(&cube, iv, r));
            let split = cube_sum(key, &spec(rest, iv.with_bit(last, 0), r)) ^ cube_sum(key, &spec(rest, iv.with_bit(last, 1), r));
            proptest::prop_assert_eq!(whole, split);
        }

        #[test]
        fn encodings_round_trip(k in proptest::prelude::any::<u128>(), v in proptest::prelude::any::<u128>()) {
            let (key, iv) = (Key80::from_word(k), Iv81::from_word(v));
            proptest::prop_assert_eq!(Key80::from_hex(&key.to_hex()).unwrap(), key);
            proptest::prop_assert_eq!(Iv81::from_binary(&iv.to_binary_string()).unwrap(), iv);
        }
    }
}
