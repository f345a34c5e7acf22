//! Exhaustive analysis of the copy/xor system for `y = M x`.

use crate::divprop::linear_trail_valid;
use crate::gf7::BinMatrix7;

/// Solution counts of the copy/xor system of one matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearLayerCounts {
    /// Assignments to the `t` variables satisfying every row.
    pub t_assignments: usize,
    /// Distinct `(x, y)` patterns, ascending.
    pub patterns: Vec<(u8, u8)>,
    /// Patterns rejected by the invertible-submatrix rule.
    pub invalid: Vec<(u8, u8)>,
}

impl LinearLayerCounts {
    pub fn valid(&self) -> usize {
        self.patterns.len() - self.invalid.len()
    }
}

/// Enumerates all 0/1 assignments of one `t` per nonzero entry with
/// `x_i = sum_j t_ji` and `y_i = sum_j t_ij` binary. With `balance` the row
/// `sum y = sum x` is also imposed (it is implied, so counts do not change).
pub fn copy_xor_counts(m: &BinMatrix7, balance: bool) -> LinearLayerCounts {
    let entries: Vec<(usize, usize)> = (0..7)
        .flat_map(|r| (0..7).map(move |c| (r, c)))
        .filter(|(r, c)| m.get(*r, *c))
        .collect();
    assert!(entries.len() <= 24, "too many entries to enumerate");
    let mut seen = vec![false; 1 << 14];
    let mut t_assignments = 0;
    'next: for t in 0u32..1 << entries.len() {
        let mut xs = [0u8; 7];
        let mut ys = [0u8; 7];
        for (k, (r, c)) in entries.iter().enumerate() {
            if (t >> k) & 1 == 1 {
                xs[*c] += 1;
                ys[*r] += 1;
                if xs[*c] > 1 || ys[*r] > 1 {
                    continue 'next;
                }
            }
        }
        let x = (0..7).fold(0u8, |a, i| a | (xs[i] << i));
        let y = (0..7).fold(0u8, |a, i| a | (ys[i] << i));
        if balance && x.count_ones() != y.count_ones() {
            continue;
        }
        t_assignments += 1;
        seen[((x as usize) << 7) | y as usize] = true;
    }
    let patterns: Vec<(u8, u8)> = (0..1usize << 14)
        .filter(|i| seen[*i])
        .map(|i| ((i >> 7) as u8, (i & 0x7f) as u8))
        .collect();
    let invalid = patterns
        .iter()
        .copied()
        .filter(|(x, y)| !linear_trail_valid(m, *x, *y))
        .collect();
    LinearLayerCounts {
        t_assignments,
        patterns,
        invalid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trail::M_PAPER;

    #[test]
    fn identity_counts() {
        let c = copy_xor_counts(&BinMatrix7::IDENTITY, true);
        assert_eq!(c.patterns.len(), 128);
        assert!(c.invalid.is_empty());
        assert!(c.patterns.iter().all(|(x, y)| x == y));
    }

    #[test]
    fn published_matrix_has_626_patterns() {
        let with = copy_xor_counts(&M_PAPER, true);
        let without = copy_xor_counts(&M_PAPER, false);
        assert_eq!(with.patterns.len(), 626);
        assert_eq!(with, without);
        assert_eq!(with.t_assignments, 736);
        // every invertible-rule trail is a solution of the system
        for x in 0..128u8 {
            for y in 0..128u8 {
                if linear_trail_valid(&M_PAPER, x, y) {
                    assert!(with.patterns.binary_search(&(x, y)).is_ok());
                }
            }
        }
    }

    #[test]
    fn reversal_preserves_counts() {
        let a = copy_xor_counts(&M_PAPER, true);
        let b = copy_xor_counts(&M_PAPER.reversed(), true);
        assert_eq!(
            (a.patterns.len(), a.invalid.len()),
            (b.patterns.len(), b.invalid.len())
        );
    }
}
