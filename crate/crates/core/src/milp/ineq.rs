//! The published 21-row inequality description of the WGP division trails.

use std::fmt;

use crate::divprop::SboxTrailTable;
use crate::Error;

const PUBLISHED: &str = include_str!("../../data/wgp_ineq21.txt");

/// `sum a_i x_i + sum b_j y_j >= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inequality {
    pub a: [i32; 7],
    pub b: [i32; 7],
    pub rhs: i32,
}

impl Inequality {
    pub fn lhs(&self, x: u8, y: u8) -> i32 {
        (0..7)
            .map(|i| self.a[i] * ((x >> i) & 1) as i32 + self.b[i] * ((y >> i) & 1) as i32)
            .sum()
    }

    pub fn holds(&self, x: u8, y: u8) -> bool {
        self.lhs(x, y) >= self.rhs
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.a.iter().chain(self.b.iter()) {
            write!(f, "{c} ")?;
        }
        write!(f, "{}", self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IneqSet21 {
    rows: Vec<Inequality>,
}

impl IneqSet21 {
    pub const ROWS: usize = 21;

    /// The shipped coefficient file.
    pub fn published() -> Self {
        Self::parse(PUBLISHED).expect("shipped inequality file parses")
    }

    /// 21 non-comment lines of 15 integers each.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<i32> = line
                .split_whitespace()
                .map(|t| t.parse::<i32>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Parse {
                    what: "inequality file",
                    line: n + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != 15 {
                return Err(Error::Parse {
                    what: "inequality file",
                    line: n + 1,
                    msg: format!("expected 15 integers, got {}", vals.len()),
                });
            }
            let mut a = [0; 7];
            let mut b = [0; 7];
            a.copy_from_slice(&vals[..7]);
            b.copy_from_slice(&vals[7..14]);
            rows.push(Inequality {
                a,
                b,
                rhs: vals[14],
            });
        }
        if rows.len() != Self::ROWS {
            return Err(Error::Parse {
                what: "inequality file",
                line: 0,
                msg: format!("expected {} rows, got {}", Self::ROWS, rows.len()),
            });
        }
        Ok(IneqSet21 { rows })
    }

    pub fn rows(&self) -> &[Inequality] {
        &self.rows
    }

    pub fn row_mut(&mut self, i: usize) -> &mut Inequality {
        &mut self.rows[i]
    }

    pub fn satisfied(&self, x: u8, y: u8) -> bool {
        self.rows.iter().all(|r| r.holds(x, y))
    }

    /// 0-based indices of the violated rows.
    pub fn violated_rows(&self, x: u8, y: u8) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|i| !self.rows[*i].holds(x, y))
            .collect()
    }

    /// The feasible 0/1 points as a trail table, in the inequalities' own indexing.
    pub fn feasible_table(&self) -> SboxTrailTable {
        let valid = (0..128u8)
            .map(|x| {
                (0..128u8)
                    .filter(|y| self.satisfied(x, *y))
                    .fold(0u128, |acc, y| acc | (1 << y))
            })
            .collect();
        SboxTrailTable::from_valid(7, valid)
    }

    pub fn to_text(&self) -> String {
        self.rows.iter().map(|r| format!("{r}\n")).collect()
    }
}
