//! Gadget builders for the initialization rounds and the keystream bit.

use crate::cipher::{iv_position, key_position, IV_BITS, KEY_BITS, STATE_BITS};
use crate::divprop::linear_trail_valid;
use crate::gf7::BinMatrix7;
use crate::milp::linear::copy_xor_counts;
use crate::milp::model::{MilpModel, Sense, VarId};
use crate::milp::IneqSet21;
use crate::trail::{check_indices, MatrixSel};
use crate::Error;

/// Monomials of the filter in gadget order, bit `p` = `s_{154+p}`: 46 products
/// followed by the linear part `s_154 + s_155 + s_157 + s_160`.
pub const KSG_AND_TERMS: [u8; 46] = [
    80, 91, 48, 43, 72, 83, 40, 99, 104, 69, 24, 108, 88, 84, 120, 85, 12, 114, 124, 73, 34, 106,
    98, 70, 122, 22, 30, 105, 33, 45, 5, 117, 78, 97, 49, 121, 3, 115, 59, 7, 61, 39, 103, 31, 55,
    79,
];
pub const KSG_XOR_TERM: u8 = 0b100_1011;

/// How the AND gadget bounds its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum AndModel {
    /// `y >= x_i` only; also admits the vacuous trail `0 -> 1`.
    #[default]
    Literal,
    /// Adds `y <= sum x_i`, the exact AND rule.
    Exact,
}

/// The 161 current state variables, bit `t` = `s_t`.
pub type StateVars = Vec<VarId>;

fn mask_indices(mask: u8) -> Vec<usize> {
    (0..7)
        .filter(|p| (mask >> p) & 1 == 1)
        .map(|p| 154 + p)
        .collect()
}

fn check_gadget_indices(idx: &[usize]) -> Result<(), Error> {
    check_indices(idx, STATE_BITS, "state index")
}

/// Copy `s_i = s'_i + x_i` for each `i`; the state now holds `s'`.
fn copy_bits(m: &mut MilpModel, s: &mut StateVars, idx: &[usize], prefix: &str) -> Vec<VarId> {
    let mut pairs = Vec::with_capacity(idx.len());
    for i in idx {
        let sp = m.add_var(format!("{prefix}_s{i}"));
        let x = m.add_var(format!("{prefix}_x{i}"));
        pairs.push((sp, x));
    }
    let mut xs = Vec::with_capacity(idx.len());
    for (i, (sp, x)) in idx.iter().zip(pairs) {
        m.add_sum_eq(s[*i], &[sp, x]);
        s[*i] = sp;
        xs.push(x);
    }
    xs
}

/// AND gadget: copies of the indexed bits feed `y` with `y >= x_i`.
pub fn build_and(
    m: &mut MilpModel,
    s: &mut StateVars,
    idx: &[usize],
    and_model: AndModel,
    prefix: &str,
) -> Result<VarId, Error> {
    check_gadget_indices(idx)?;
    let mut pairs = Vec::new();
    for i in idx {
        pairs.push((
            m.add_var(format!("{prefix}_s{i}")),
            m.add_var(format!("{prefix}_x{i}")),
        ));
    }
    let y = m.add_var(format!("{prefix}_y"));
    for (i, (sp, x)) in idx.iter().zip(pairs.iter()) {
        m.add_sum_eq(s[*i], &[*sp, *x]);
        s[*i] = *sp;
    }
    for (_, x) in &pairs {
        m.add_constraint(vec![(1, y), (-1, *x)], Sense::Ge, 0);
    }
    if and_model == AndModel::Exact {
        let mut terms = vec![(1, y)];
        terms.extend(pairs.iter().map(|(_, x)| (-1, *x)));
        m.add_constraint(terms, Sense::Le, 0);
    }
    Ok(y)
}

/// XOR gadget: copies of the indexed bits sum to `y`.
pub fn build_xor(
    m: &mut MilpModel,
    s: &mut StateVars,
    idx: &[usize],
    prefix: &str,
) -> Result<VarId, Error> {
    check_gadget_indices(idx)?;
    let mut pairs = Vec::new();
    for i in idx {
        pairs.push((
            m.add_var(format!("{prefix}_s{i}")),
            m.add_var(format!("{prefix}_x{i}")),
        ));
    }
    let y = m.add_var(format!("{prefix}_y"));
    for (i, (sp, x)) in idx.iter().zip(pairs.iter()) {
        m.add_sum_eq(s[*i], &[*sp, *x]);
        s[*i] = *sp;
    }
    let xs: Vec<VarId> = pairs.iter().map(|(_, x)| *x).collect();
    m.add_sum_eq(y, &xs);
    Ok(y)
}

/// Keystream bit: 46 AND gadgets, one XOR gadget, `z = sum a_i`.
pub fn build_ksg(m: &mut MilpModel, s: &mut StateVars, and_model: AndModel, prefix: &str) -> VarId {
    let z = m.add_var(format!("{prefix}_z"));
    let mut outs = Vec::with_capacity(47);
    for (k, mask) in KSG_AND_TERMS.iter().enumerate() {
        let idx = mask_indices(*mask);
        outs.push(
            build_and(m, s, &idx, and_model, &format!("{prefix}_and{k}")).expect("fixed indices"),
        );
    }
    outs.push(
        build_xor(m, s, &mask_indices(KSG_XOR_TERM), &format!("{prefix}_xor"))
            .expect("fixed indices"),
    );
    m.add_sum_eq(z, &outs);
    z
}

/// Stage position addressed by gadget index `i`.
fn position(i: usize, reversed: bool) -> usize {
    if reversed {
        6 - i
    } else {
        i
    }
}

/// S-box gadget on stage 22: copies `x`, outputs `y`, the 21 inequalities.
/// Variables are named by stage position; `reversed` maps inequality index
/// `i` to position `6 - i`.
pub fn build_wgp(
    m: &mut MilpModel,
    s: &mut StateVars,
    ineqs: &IneqSet21,
    reversed: bool,
    prefix: &str,
) -> [VarId; 7] {
    let mut sp = [VarId(0); 7];
    let mut x = [VarId(0); 7];
    let mut y = [VarId(0); 7];
    for p in 0..7 {
        sp[p] = m.add_var(format!("{prefix}_s{}", 154 + p));
        x[p] = m.add_var(format!("{prefix}_x{p}"));
        y[p] = m.add_var(format!("{prefix}_y{p}"));
    }
    for p in 0..7 {
        m.add_sum_eq(s[154 + p], &[sp[p], x[p]]);
        s[154 + p] = sp[p];
    }
    for row in ineqs.rows() {
        let mut terms = Vec::with_capacity(14);
        for i in 0..7 {
            terms.push((row.a[i], x[position(i, reversed)]));
        }
        for i in 0..7 {
            terms.push((row.b[i], y[position(i, reversed)]));
        }
        m.add_constraint(terms, Sense::Ge, row.rhs);
    }
    y
}

/// Copy/xor system for `y = M x` with one `t` per nonzero entry.
pub fn build_linear_layer(
    m: &mut MilpModel,
    x: &[VarId; 7],
    mat: &BinMatrix7,
    prefix: &str,
) -> [VarId; 7] {
    let mut y = [VarId(0); 7];
    for (j, v) in y.iter_mut().enumerate() {
        *v = m.add_var(format!("{prefix}_y{j}"));
    }
    let mut t = [[None; 7]; 7];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            if mat.get(i, j) {
                *e = Some(m.add_var(format!("{prefix}_t{i}_{j}")));
            }
        }
    }
    for i in 0..7 {
        let col: Vec<VarId> = (0..7).filter_map(|r| t[r][i]).collect();
        m.add_sum_eq(x[i], &col);
        let row: Vec<VarId> = (0..7).filter_map(|c| t[i][c]).collect();
        m.add_sum_eq(y[i], &row);
    }
    let mut terms: Vec<(i32, VarId)> = y.iter().map(|v| (1, *v)).collect();
    terms.extend(x.iter().map(|v| (-1, *v)));
    m.add_constraint(terms, Sense::Eq, 0);
    y
}

/// One no-good cut per copy/xor solution that fails the invertible-submatrix
/// rule. Returns the number of cuts.
pub fn add_invertibility_cuts(
    m: &mut MilpModel,
    x: &[VarId; 7],
    y: &[VarId; 7],
    mat: &BinMatrix7,
) -> usize {
    let counts = copy_xor_counts(mat, true);
    for (u, v) in &counts.invalid {
        debug_assert!(!linear_trail_valid(mat, *u, *v));
        let mut terms = Vec::with_capacity(14);
        let mut ones = 0;
        for (vars, pat) in [(x, *u), (y, *v)] {
            for (i, var) in vars.iter().enumerate() {
                if (pat >> i) & 1 == 1 {
                    terms.push((-1, *var));
                    ones += 1;
                } else {
                    terms.push((1, *var));
                }
            }
        }
        m.add_constraint(terms, Sense::Ge, 1 - ones);
    }
    counts.invalid.len()
}

/// Feedback: copies of stages 0 and 11, linear layer on stage 0,
/// `z_j = y_j + x_{77+j}`. Returns `z` and the number of cuts added.
pub fn build_fbk(
    m: &mut MilpModel,
    s: &mut StateVars,
    mat: &BinMatrix7,
    cuts: bool,
    prefix: &str,
) -> ([VarId; 7], usize) {
    let mut z = [VarId(0); 7];
    for (j, v) in z.iter_mut().enumerate() {
        *v = m.add_var(format!("{prefix}_z{j}"));
    }
    let idx: Vec<usize> = (0..7).chain(77..84).collect();
    let xs = copy_bits(m, s, &idx, prefix);
    let x0: [VarId; 7] = xs[..7].try_into().expect("7");
    let y = build_linear_layer(m, &x0, mat, &format!("{prefix}_ll"));
    let ncuts = if cuts {
        add_invertibility_cuts(m, &x0, &y, mat)
    } else {
        0
    };
    for j in 0..7 {
        m.add_sum_eq(z[j], &[y[j], xs[7 + j]]);
    }
    (z, ncuts)
}

/// Key bits not under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum KeyMode {
    /// Fixed to 0.
    #[default]
    Zero,
    /// Left unconstrained.
    Free,
}

/// Parameters of the R-round evaluation model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub rounds: usize,
    pub cube: Vec<usize>,
    /// Key bit forced to 1; when absent every key bit is free.
    pub key_bit: Option<usize>,
    pub others: KeyMode,
    pub matrix: MatrixSel,
    pub and_model: AndModel,
    pub cuts: bool,
}

impl EvalConfig {
    pub fn new(rounds: usize, cube: &[usize], key_bit: Option<usize>) -> Self {
        EvalConfig {
            rounds,
            cube: cube.to_vec(),
            key_bit,
            others: KeyMode::Zero,
            matrix: MatrixSel::Paper,
            and_model: AndModel::Literal,
            cuts: true,
        }
    }

    pub fn with_matrix(mut self, sel: MatrixSel) -> Self {
        self.matrix = sel;
        self
    }

    pub fn with_and_model(mut self, a: AndModel) -> Self {
        self.and_model = a;
        self
    }

    pub fn with_cuts(mut self, cuts: bool) -> Self {
        self.cuts = cuts;
        self
    }

    pub fn with_others(mut self, k: KeyMode) -> Self {
        self.others = k;
        self
    }
}

/// A built evaluation model with handles for witness replay.
#[derive(Clone, Debug)]
pub struct Wg7Model {
    pub config: EvalConfig,
    pub model: MilpModel,
    pub z: VarId,
    /// `states[r]` = the 161 variables of the state after `r` rounds.
    pub states: Vec<StateVars>,
    pub cut_constraints: usize,
    pub initial_constraints: usize,
}

/// Size of a built model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelSize {
    pub vars: usize,
    pub constraints: usize,
    pub cuts: usize,
    pub initial: usize,
}

impl ModelSize {
    /// Constraints excluding the invertibility cuts and the initial-property
    /// fixings, i.e. the rows written out in the round algorithms.
    pub fn algorithm_constraints(&self) -> usize {
        self.constraints - self.cuts - self.initial
    }
}

impl Wg7Model {
    pub fn size(&self) -> ModelSize {
        ModelSize {
            vars: self.model.num_vars(),
            constraints: self.model.num_constraints(),
            cuts: self.cut_constraints,
            initial: self.initial_constraints,
        }
    }
}

/// R rounds of S-box plus feedback, then the keystream bit with `z = 1`.
pub fn build_wg7_eval(cfg: &EvalConfig) -> Result<Wg7Model, Error> {
    if cfg.rounds == 0 {
        return Err(Error::IndexRange {
            what: "rounds (at least 1)",
            index: 0,
            max: usize::MAX,
        });
    }
    check_indices(&cfg.cube, IV_BITS, "cube index")?;
    if let Some(k) = cfg.key_bit {
        check_indices(&[k], KEY_BITS, "key index")?;
    }
    let ineqs = IneqSet21::published();
    let mat = cfg.matrix.stage_matrix();

    let mut m = MilpModel::new();
    let mut s: StateVars = (0..STATE_BITS)
        .map(|t| m.add_var(format!("s0_{t}")))
        .collect();
    let mut states = vec![s.clone()];
    let mut cut_constraints = 0;
    for r in 1..=cfg.rounds {
        // inequality index i is stage position 6 - i
        let a = build_wgp(&mut m, &mut s, &ineqs, true, &format!("r{r}_wgp"));
        let (b, nc) = build_fbk(&mut m, &mut s, &mat, cfg.cuts, &format!("r{r}_fbk"));
        cut_constraints += nc;
        for v in &s[..7] {
            m.fix(*v, 0);
        }
        let mut next: StateVars = s[7..].to_vec();
        for j in 0..7 {
            let v = m.add_var(format!("s{r}_{}", 154 + j));
            m.add_sum_eq(v, &[a[j], b[j]]);
            next.push(v);
        }
        s = next;
        states.push(s.clone());
    }
    let z = build_ksg(&mut m, &mut s, cfg.and_model, "ksg");
    for v in &s {
        m.fix(*v, 0);
    }
    m.fix(z, 1);

    let before = m.num_constraints();
    let s0 = &states[0];
    for v in 0..IV_BITS {
        m.fix(s0[iv_position(v)], cfg.cube.contains(&v) as u8);
    }
    if let Some(kb) = cfg.key_bit {
        for k in 0..KEY_BITS {
            if k == kb {
                m.fix(s0[key_position(k)], 1);
            } else if cfg.others == KeyMode::Zero {
                m.fix(s0[key_position(k)], 0);
            }
        }
    }
    let initial_constraints = m.num_constraints() - before;
    Ok(Wg7Model {
        config: cfg.clone(),
        model: m,
        z,
        states,
        cut_constraints,
        initial_constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::FILTER_ANF;
    use crate::trail::M_PAPER;

    #[test]
    fn lp_r1_matches_golden_file() {
        let golden = include_str!("../../tests/data/wg7_r1.lp");
        let lp = build_wg7_eval(&EvalConfig::new(1, &[80], Some(77)))
            .unwrap()
            .model
            .emit_lp();
        assert_eq!(lp.len(), golden.len());
        assert!(lp == golden, "LP text drifted from tests/data/wg7_r1.lp");
    }

    fn state(m: &mut MilpModel) -> StateVars {
        (0..STATE_BITS)
            .map(|t| m.add_var(format!("s{t}")))
            .collect()
    }

    #[test]
    fn ksg_terms_are_the_filter_monomials() {
        let mut gadget: Vec<u8> = KSG_AND_TERMS.to_vec();
        let linear: Vec<u8> = (0..7)
            .filter(|p| (KSG_XOR_TERM >> p) & 1 == 1)
            .map(|p| 1 << p)
            .collect();
        gadget.extend(&linear);
        gadget.sort();
        let mut listed = FILTER_ANF.to_vec();
        listed.sort();
        assert_eq!(gadget, listed);
        assert_eq!(mask_indices(KSG_XOR_TERM), vec![154, 155, 157, 160]);
        assert_eq!(mask_indices(KSG_AND_TERMS[0]), vec![158, 160]);
    }

    #[test]
    fn and_gadget_size() {
        let mut m = MilpModel::new();
        let mut s = state(&mut m);
        let (v0, c0) = (m.num_vars(), m.num_constraints());
        build_and(&mut m, &mut s, &[3, 9], AndModel::Literal, "g").unwrap();
        assert_eq!(m.num_vars() - v0, 5);
        assert_eq!(m.num_constraints() - c0, 4);
        assert!(build_and(&mut m, &mut s, &[3, 3], AndModel::Literal, "h").is_err());
        assert!(build_xor(&mut m, &mut s, &[161], "k").is_err());
    }

    // Enumerates the gadget's (x-pattern, y) set on two fresh bits.
    fn and_patterns(and_model: AndModel) -> Vec<(u8, u8)> {
        let mut m = MilpModel::new();
        let mut s = state(&mut m);
        let y = build_and(&mut m, &mut s, &[0, 1], and_model, "g").unwrap();
        let n = m.num_vars();
        let mut out = Vec::new();
        // free variables: s0, s1, the two (s', x) pairs, y
        let free: Vec<VarId> = [0usize, 1]
            .iter()
            .map(|i| VarId(*i as u32))
            .chain((STATE_BITS..n).map(|i| VarId(i as u32)))
            .collect();
        for bits in 0u32..1 << free.len() {
            let mut a = vec![0u8; n];
            for (k, v) in free.iter().enumerate() {
                a[v.index()] = ((bits >> k) & 1) as u8;
            }
            if m.violated(&a).is_empty() {
                let x0 = a[m.var("g_x0").unwrap().index()];
                let x1 = a[m.var("g_x1").unwrap().index()];
                let p = (x0 | (x1 << 1), a[y.index()]);
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn and_gadget_feasible_sets() {
        assert_eq!(
            and_patterns(AndModel::Exact),
            vec![(0, 0), (1, 1), (2, 1), (3, 1)]
        );
        assert_eq!(
            and_patterns(AndModel::Literal),
            vec![(0, 0), (0, 1), (1, 1), (2, 1), (3, 1)]
        );
    }

    #[test]
    fn xor_gadget() {
        let mut m = MilpModel::new();
        let mut s = state(&mut m);
        let y = build_xor(&mut m, &mut s, &[154, 155, 157, 160], "x").unwrap();
        let last = m.constraints().last().unwrap();
        assert_eq!(last.terms.len(), 5);
        assert_eq!(last.terms[0], (1, y));
        let mut m1 = MilpModel::new();
        let mut s1 = state(&mut m1);
        build_xor(&mut m1, &mut s1, &[7], "x").unwrap();
        assert_eq!(m1.constraints().last().unwrap().terms.len(), 2);
    }

    #[test]
    fn ksg_has_47_outputs() {
        let mut m = MilpModel::new();
        let mut s = state(&mut m);
        let z = build_ksg(&mut m, &mut s, AndModel::Literal, "ksg");
        let last = m.constraints().last().unwrap();
        assert_eq!(last.terms.len(), 48);
        assert_eq!(last.terms[0], (1, z));
    }

    #[test]
    fn linear_layer_sizes() {
        for (mat, nt) in [(M_PAPER, 17), (BinMatrix7::IDENTITY, 7)] {
            let mut m = MilpModel::new();
            let x: [VarId; 7] = std::array::from_fn(|i| m.add_var(format!("x{i}")));
            build_linear_layer(&mut m, &x, &mat, "ll");
            assert_eq!(m.num_vars(), 7 + 7 + nt);
            assert_eq!(m.num_constraints(), 15);
        }
        let mut m = MilpModel::new();
        let x: [VarId; 7] = std::array::from_fn(|i| m.add_var(format!("x{i}")));
        let y = build_linear_layer(&mut m, &x, &BinMatrix7::IDENTITY, "ll");
        assert_eq!(
            add_invertibility_cuts(&mut m, &x, &y, &BinMatrix7::IDENTITY),
            0
        );
    }

    // Projects the linear-layer model onto (x, y) by enumerating the t's.
    #[test]
    fn cuts_leave_exactly_the_valid_patterns() {
        let mat = M_PAPER;
        let mut m = MilpModel::new();
        let x: [VarId; 7] = std::array::from_fn(|i| m.add_var(format!("x{i}")));
        let y = build_linear_layer(&mut m, &x, &mat, "ll");
        let cut_from = m.num_constraints();
        add_invertibility_cuts(&mut m, &x, &y, &mat);
        let cuts = &m.constraints()[cut_from..];
        let counts = copy_xor_counts(&mat, true);
        for (u, v) in &counts.patterns {
            let mut a = vec![0u8; m.num_vars()];
            for i in 0..7 {
                a[x[i].index()] = (u >> i) & 1;
                a[y[i].index()] = (v >> i) & 1;
            }
            let cut_ok = cuts.iter().all(|c| c.holds(&a));
            assert_eq!(cut_ok, linear_trail_valid(&mat, *u, *v), "({u},{v})");
            // each cut removes one pattern
            assert!(cuts.iter().filter(|c| !c.holds(&a)).count() <= 1);
        }
    }

    #[test]
    fn wgp_gadget_rows() {
        let mut m = MilpModel::new();
        let mut s = state(&mut m);
        let before = m.num_vars();
        build_wgp(&mut m, &mut s, &IneqSet21::published(), true, "w");
        assert_eq!(m.num_vars() - before, 21);
        assert_eq!(m.num_constraints(), 28);
    }

    #[test]
    fn fbk_gadget_size() {
        let mut m = MilpModel::new();
        let mut s = state(&mut m);
        let before = m.num_vars();
        let (_, cuts) = build_fbk(&mut m, &mut s, &M_PAPER, false, "f");
        assert_eq!(cuts, 0);
        // 7 z, 28 copies, 7 y, 17 t
        assert_eq!(m.num_vars() - before, 59);
        assert_eq!(m.num_constraints(), 14 + 15 + 7);
    }

    #[test]
    fn eval_is_affine_in_rounds() {
        let sizes: Vec<ModelSize> = (1..=5)
            .map(|r| {
                build_wg7_eval(&EvalConfig::new(r, &[0, 36], Some(3)))
                    .unwrap()
                    .size()
            })
            .collect();
        for w in sizes.windows(3) {
            assert_eq!(w[1].vars - w[0].vars, w[2].vars - w[1].vars);
            assert_eq!(
                w[1].constraints - w[0].constraints,
                w[2].constraints - w[1].constraints
            );
        }
        assert_eq!(sizes[1].vars - sizes[0].vars, 87);
        assert_eq!(
            sizes[1].algorithm_constraints() - sizes[0].algorithm_constraints(),
            78
        );
    }

    #[test]
    fn eval_rejects_bad_inputs() {
        assert!(build_wg7_eval(&EvalConfig::new(0, &[], None)).is_err());
        assert!(build_wg7_eval(&EvalConfig::new(1, &[81], None)).is_err());
        assert!(build_wg7_eval(&EvalConfig::new(1, &[], Some(80))).is_err());
    }

    #[test]
    fn lp_is_deterministic() {
        let a = build_wg7_eval(&EvalConfig::new(2, &[1, 2], Some(0)))
            .unwrap()
            .model
            .emit_lp();
        let b = build_wg7_eval(&EvalConfig::new(2, &[1, 2], Some(0)))
            .unwrap()
            .model
            .emit_lp();
        assert_eq!(a, b);
    }
}
