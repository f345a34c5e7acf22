//! Built-in division-trail search over the initialization rounds.
//!
//! A frontier is the reduced set of 161-bit division vectors reachable after
//! `r` rounds. Stage `j` of a vector is stored in byte `j % 8` of word `j / 8`,
//! so one round is a byte shift plus the feedback choices.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::FxHashSet;

use crate::cipher::{
    iv_position, key_position, wgp_stage_table, FILTER_ANF, IV_BITS, KEY_BITS, STATE_BITS,
};
use crate::divprop::{sbox_trails, DivVector, KSet, LinearTrailTable, SboxTrailTable};
use crate::gf7::{mul_by_const_matrix, BinMatrix7, FieldElem};
use crate::milp::IneqSet21;
use crate::Error;

/// Linear-layer matrix read off the published copy/xor system:
/// `y0 = x1+x3+x4, y1 = x2, y2 = x2+x5, y3 = x4, y4 = x1+x2, y5 = x6, y6 = sum x`.
pub const M_PAPER: BinMatrix7 = BinMatrix7::from_rows([
    0b001_1010, 0b000_0100, 0b010_0100, 0b001_0000, 0b000_0110, 0b100_0000, 0b111_1111,
]);

pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Which round model the trail search and the MILP models use.
///
/// `Paper` takes the published matrix and the published inequalities; their
/// index `i` is stage position `6 - i`. `Field` computes multiplication by beta
/// and the WGP trail table directly in stage coordinates. The two agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum MatrixSel {
    #[default]
    Paper,
    Field,
}

impl MatrixSel {
    /// Linear-layer matrix in stage coordinates.
    pub fn stage_matrix(self) -> BinMatrix7 {
        match self {
            MatrixSel::Paper => M_PAPER.reversed(),
            MatrixSel::Field => mul_by_const_matrix(FieldElem::BETA),
        }
    }
}

impl FromStr for MatrixSel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(MatrixSel::Paper),
            "field" => Ok(MatrixSel::Field),
            _ => Err(format!("unknown matrix {s:?} (expected paper|field)")),
        }
    }
}

impl fmt::Display for MatrixSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixSel::Paper => "paper",
            MatrixSel::Field => "field",
        })
    }
}

/// Trail tables for one round model.
#[derive(Clone, Debug)]
pub struct RoundLayers {
    sel: MatrixSel,
    sbox: SboxTrailTable,
    linear: LinearTrailTable,
    /// `target[u]`: a final stage-22 pattern `u` reaches the keystream bit.
    target: [bool; 128],
}

impl RoundLayers {
    pub fn new(sel: MatrixSel) -> Self {
        let sbox = match sel {
            MatrixSel::Paper => IneqSet21::published().feasible_table().reversed(),
            MatrixSel::Field => sbox_trails(&wgp_stage_table()).expect("128-entry table"),
        };
        Self::from_parts(sel, sbox, sel.stage_matrix())
    }

    /// Published matrix and inequalities with their indices taken as stage
    /// positions unchanged. Inconsistent with the cipher; kept for comparison.
    pub fn paper_unreversed() -> Self {
        Self::from_parts(
            MatrixSel::Paper,
            IneqSet21::published().feasible_table(),
            M_PAPER,
        )
    }

    fn from_parts(sel: MatrixSel, sbox: SboxTrailTable, matrix: BinMatrix7) -> Self {
        let mut target = [false; 128];
        for (u, t) in target.iter_mut().enumerate() {
            *t = u != 0 && FILTER_ANF.iter().any(|m| (u as u8) & !m == 0);
        }
        RoundLayers {
            sel,
            sbox,
            linear: LinearTrailTable::new(matrix),
            target,
        }
    }

    pub fn selector(&self) -> MatrixSel {
        self.sel
    }

    pub fn sbox(&self) -> &SboxTrailTable {
        &self.sbox
    }

    pub fn linear(&self) -> &LinearTrailTable {
        &self.linear
    }

    pub fn is_target(&self, u: u8) -> bool {
        self.target[u as usize]
    }
}

pub type Packed = [u64; 3];

#[inline]
fn stage(v: &Packed, j: usize) -> u8 {
    (v[j / 8] >> (8 * (j % 8))) as u8
}

#[inline]
fn xor_stage(v: &mut Packed, j: usize, b: u8) {
    v[j / 8] ^= (b as u64) << (8 * (j % 8));
}

#[inline]
fn shift_stages(v: &Packed) -> Packed {
    [
        (v[0] >> 8) | (v[1] << 56),
        (v[1] >> 8) | (v[2] << 56),
        v[2] >> 8,
    ]
}

#[inline]
fn weight(v: &Packed) -> u32 {
    v.iter().map(|w| w.count_ones()).sum()
}

#[inline]
fn is_subset(a: &Packed, b: &Packed) -> bool {
    (a[0] & !b[0]) | (a[1] & !b[1]) | (a[2] & !b[2]) == 0
}

/// Rounds needed before every active bit can sit in stage 22.
fn rounds_needed(v: &Packed) -> usize {
    const NEED: [usize; 23] = [
        1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 0,
    ];
    (0..23)
        .filter(|j| stage(v, *j) != 0)
        .map(|j| NEED[j])
        .max()
        .unwrap_or(0)
}

fn pack(d: &DivVector) -> Packed {
    let mut p = [0u64; 3];
    for t in d.support() {
        xor_stage(&mut p, t / 7, 1 << (t % 7));
    }
    p
}

fn unpack(p: &Packed) -> DivVector {
    let idx = (0..STATE_BITS).filter(|t| (stage(p, t / 7) >> (t % 7)) & 1 == 1);
    DivVector::from_indices(STATE_BITS, idx).expect("in range")
}

/// Removes every vector that dominates another one.
fn reduce_packed(mut vs: Vec<Packed>) -> Vec<Packed> {
    vs.sort_unstable_by_key(|v| (weight(v), *v));
    vs.dedup();
    if vs.first() == Some(&[0; 3]) {
        return vec![[0; 3]];
    }
    // kept vectors bucketed by lowest set bit
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); 192];
    let mut kept: Vec<Packed> = Vec::with_capacity(vs.len());
    for q in vs {
        let mut dominated = false;
        'outer: for (w, word) in q.iter().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let b = 64 * w + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                for k in &buckets[b] {
                    if is_subset(&kept[*k as usize], &q) {
                        dominated = true;
                        break 'outer;
                    }
                }
            }
        }
        if !dominated {
            let low = q
                .iter()
                .enumerate()
                .find(|(_, w)| **w != 0)
                .map(|(i, w)| 64 * i + w.trailing_zeros() as usize);
            buckets[low.expect("nonzero")].push(kept.len() as u32);
            kept.push(q);
        }
    }
    kept.sort_unstable();
    kept
}

/// Initial division property of a query.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RoundSpec {
    pub rounds: usize,
    pub cube: Vec<usize>,
    /// Key bits with exponent 1; the rest are 0.
    pub keys: Vec<usize>,
    pub matrix: MatrixSel,
}

impl RoundSpec {
    pub fn new(rounds: usize, cube: &[usize], keys: &[usize], matrix: MatrixSel) -> Self {
        RoundSpec {
            rounds,
            cube: cube.to_vec(),
            keys: keys.to_vec(),
            matrix,
        }
    }

    pub fn initial(&self) -> Result<DivVector, Error> {
        check_indices(&self.cube, IV_BITS, "cube index")?;
        check_indices(&self.keys, KEY_BITS, "key index")?;
        let idx = self
            .cube
            .iter()
            .map(|i| iv_position(*i))
            .chain(self.keys.iter().map(|k| key_position(*k)));
        DivVector::from_indices(STATE_BITS, idx)
    }
}

pub(crate) fn check_indices(idx: &[usize], len: usize, what: &'static str) -> Result<(), Error> {
    let mut seen = vec![false; len];
    for i in idx {
        if *i >= len {
            return Err(Error::IndexRange {
                what,
                index: *i,
                max: len - 1,
            });
        }
        if std::mem::replace(&mut seen[*i], true) {
            return Err(Error::DuplicateIndex(*i));
        }
    }
    Ok(())
}

/// Reduced set of division vectors after `round` rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frontier {
    round: usize,
    vectors: Vec<Packed>,
}

impl Frontier {
    pub fn start(v: &DivVector) -> Self {
        assert_eq!(v.width(), STATE_BITS);
        Frontier {
            round: 0,
            vectors: vec![pack(v)],
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn to_kset(&self) -> KSet {
        KSet::new(self.vectors.iter().map(unpack).collect())
    }
}

/// Outcome of a single feasibility query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Reached,
    Unreachable,
    BudgetExceeded,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Reached => "reached",
            Verdict::Unreachable => "unreachable",
            Verdict::BudgetExceeded => "budget-exceeded",
        })
    }
}

/// Search statistics of one query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub max_frontier: usize,
}

#[derive(Clone, Debug)]
pub struct TrailEngine {
    layers: RoundLayers,
    budget: u64,
    reduce: bool,
}

impl TrailEngine {
    pub fn new(sel: MatrixSel) -> Self {
        Self::with_layers(RoundLayers::new(sel))
    }

    pub fn with_layers(layers: RoundLayers) -> Self {
        TrailEngine {
            layers,
            budget: DEFAULT_BUDGET,
            reduce: true,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Disables antichain reduction (deduplication only).
    pub fn without_reduction(mut self) -> Self {
        self.reduce = false;
        self
    }

    pub fn layers(&self) -> &RoundLayers {
        &self.layers
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// All one-round successors of `v`.
    fn successors(&self, v: &Packed, mut emit: impl FnMut(Packed)) {
        let s22 = stage(v, 22);
        let s11 = stage(v, 11);
        let lin = self.layers.linear.images(stage(v, 0));
        let base = shift_stages(v);
        let mut x = s22;
        loop {
            // x goes into the S-box, the rest of stage 22 shifts to 21
            for &sv in self.layers.sbox.minimal(x) {
                let mut x11 = s11 & !sv;
                loop {
                    for &w in lin {
                        if w & (sv | x11) == 0 {
                            let mut n = base;
                            xor_stage(&mut n, 21, x);
                            xor_stage(&mut n, 10, x11);
                            xor_stage(&mut n, 22, sv | x11 | w);
                            emit(n);
                        }
                    }
                    if x11 == 0 {
                        break;
                    }
                    x11 = (x11 - 1) & s11 & !sv;
                }
            }
            if x == 0 {
                break;
            }
            x = (x - 1) & s22;
        }
    }

    /// Whether `b` is a one-round successor of `a`.
    pub fn is_successor(&self, a: &DivVector, b: &DivVector) -> bool {
        let target = pack(b);
        let mut hit = false;
        self.successors(&pack(a), |n| hit |= n == target);
        hit
    }

    /// Whether a state vector feeds the keystream bit directly.
    pub fn is_output(&self, v: &DivVector) -> bool {
        self.is_final_target(&pack(v))
    }

    /// One unpruned round, reduced when reduction is enabled.
    pub fn propagate_round(&self, f: &Frontier) -> Frontier {
        let mut next = FxHashSet::default();
        for v in &f.vectors {
            self.successors(v, |n| {
                next.insert(n);
            });
        }
        let mut vectors: Vec<Packed> = next.into_iter().collect();
        if self.reduce {
            vectors = reduce_packed(vectors);
        } else {
            vectors.sort_unstable();
        }
        Frontier {
            round: f.round + 1,
            vectors,
        }
    }

    fn is_final_target(&self, v: &Packed) -> bool {
        let s22 = stage(v, 22);
        let mut rest = *v;
        xor_stage(&mut rest, 22, s22);
        rest == [0; 3] && self.layers.is_target(s22)
    }

    /// Feasibility of `z = 1` after `rounds` rounds from `init`.
    pub fn search(&self, init: &DivVector, rounds: usize) -> (Verdict, SearchStats) {
        let mut stats = SearchStats::default();
        let start = pack(init);
        if rounds_needed(&start) > rounds {
            return (Verdict::Unreachable, stats);
        }
        let mut frontier = vec![start];
        for r in 0..rounds {
            let left = rounds - r - 1;
            let mut next = FxHashSet::default();
            let mut found = false;
            for v in &frontier {
                let mut over = false;
                self.successors(v, |n| {
                    stats.nodes += 1;
                    if stats.nodes > self.budget {
                        over = true;
                    }
                    if left == 0 {
                        found |= self.is_final_target(&n);
                    } else if rounds_needed(&n) <= left {
                        next.insert(n);
                    }
                });
                if found {
                    return (Verdict::Reached, stats);
                }
                if over {
                    return (Verdict::BudgetExceeded, stats);
                }
            }
            let mut vectors: Vec<Packed> = next.into_iter().collect();
            if self.reduce {
                vectors = reduce_packed(vectors);
            }
            stats.max_frontier = stats.max_frontier.max(vectors.len());
            if vectors.is_empty() {
                return (Verdict::Unreachable, stats);
            }
            frontier = vectors;
        }
        let reached = rounds == 0 && self.is_final_target(&start);
        (
            if reached {
                Verdict::Reached
            } else {
                Verdict::Unreachable
            },
            stats,
        )
    }

    pub fn reaches_unit_output(&self, spec: &RoundSpec) -> Result<bool, Error> {
        assert_eq!(
            spec.matrix, self.layers.sel,
            "engine built for a different matrix"
        );
        match self.search(&spec.initial()?, spec.rounds).0 {
            Verdict::Reached => Ok(true),
            Verdict::Unreachable => Ok(false),
            Verdict::BudgetExceeded => Err(Error::BudgetExceeded {
                budget: self.budget,
            }),
        }
    }

    /// Per-key-bit verdicts for a cube, computed in parallel.
    pub fn key_verdicts(
        &self,
        rounds: usize,
        cube: &[usize],
    ) -> Result<Vec<(Verdict, SearchStats)>, Error> {
        check_indices(cube, IV_BITS, "cube index")?;
        Ok((0..KEY_BITS)
            .into_par_iter()
            .map(|k| {
                let init = RoundSpec::new(rounds, cube, &[k], self.layers.sel)
                    .initial()
                    .expect("checked");
                self.search(&init, rounds)
            })
            .collect())
    }

    /// Key bits whose unit initial property reaches the output.
    pub fn involved_keys(&self, rounds: usize, cube: &[usize]) -> Result<Vec<usize>, Error> {
        let verdicts = self.key_verdicts(rounds, cube)?;
        if verdicts.iter().any(|(v, _)| *v == Verdict::BudgetExceeded) {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
            });
        }
        Ok((0..KEY_BITS)
            .filter(|k| verdicts[*k].0 == Verdict::Reached)
            .collect())
    }
}
