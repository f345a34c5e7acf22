//! Algebraic normal form of small Boolean functions via the binary Möbius
//! transform. This is the only ANF engine in the crate: the keystream filter
//! check and the S-box division-trail tables both go through it.

/// In-place Möbius transform of a truth table of length `2^n`.
///
/// On input `table[x]` is `f(x)`; on output `table[m]` is the coefficient of
/// the monomial `x^m` (bit `i` of `m` set means variable `i` appears).
pub fn mobius_in_place(table: &mut [u8]) {
    let len = table.len();
    assert!(
        len.is_power_of_two(),
        "truth table length must be a power of two"
    );
    let mut half = 1;
    while half < len {
        for block in table.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (h, l) in hi.iter_mut().zip(lo.iter()) {
                *h ^= *l;
            }
        }
        half <<= 1;
    }
}

/// ANF coefficients of `f` on `n` variables.
pub fn anf_of<F: Fn(u32) -> u8>(n: u32, f: F) -> Vec<u8> {
    let mut t: Vec<u8> = (0..1u32 << n).map(|x| f(x) & 1).collect();
    mobius_in_place(&mut t);
    t
}

/// Monomials (as bitmasks) with nonzero coefficient, ascending.
pub fn monomials<F: Fn(u32) -> u8>(n: u32, f: F) -> Vec<u32> {
    anf_of(n, f)
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == 1)
        .map(|(m, _)| m as u32)
        .collect()
}

/// Evaluates a function given by its monomial list.
pub fn eval_monomials(monos: &[u32], x: u32) -> u8 {
    (monos.iter().filter(|m| *m & x == **m).count() & 1) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_is_an_involution() {
        let mut t: Vec<u8> = (0..64u32).map(|x| ((x * 37 + 11) >> 3 & 1) as u8).collect();
        let orig = t.clone();
        mobius_in_place(&mut t);
        mobius_in_place(&mut t);
        assert_eq!(t, orig);
    }

    #[test]
    fn known_functions() {
        // x0 AND x1 on two variables
        assert_eq!(monomials(2, |x| (x == 3) as u8), vec![3]);
        // x0 XOR x1
        assert_eq!(monomials(2, |x| (x.count_ones() & 1) as u8), vec![1, 2]);
        // constant one
        assert_eq!(monomials(3, |_| 1), vec![0]);
        // OR = x0 + x1 + x0x1
        assert_eq!(monomials(2, |x| (x != 0) as u8), vec![1, 2, 3]);
    }

    #[test]
    fn evaluation_matches_truth_table() {
        let f = |x: u32| ((x ^ (x >> 2)) & (x >> 1) & 1) as u8;
        let m = monomials(5, f);
        for x in 0..32 {
            assert_eq!(eval_monomials(&m, x), f(x));
        }
    }
}
