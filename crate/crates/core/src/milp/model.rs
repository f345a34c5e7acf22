//! Binary linear models and their LP-format text.

use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A binary variable with a deterministic name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MilpVar {
    pub id: VarId,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Ge,
    Eq,
    Le,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Eq => "=",
            Sense::Le => "<=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinConstraint {
    pub terms: Vec<(i32, VarId)>,
    pub sense: Sense,
    pub rhs: i32,
}

impl LinConstraint {
    pub fn lhs(&self, assign: &[u8]) -> i64 {
        self.terms
            .iter()
            .map(|(c, v)| *c as i64 * assign[v.index()] as i64)
            .sum()
    }

    pub fn holds(&self, assign: &[u8]) -> bool {
        let l = self.lhs(assign);
        let r = self.rhs as i64;
        match self.sense {
            Sense::Ge => l >= r,
            Sense::Eq => l == r,
            Sense::Le => l <= r,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    #[default]
    Feasibility,
    Maximize(Vec<VarId>),
    Minimize(Vec<VarId>),
}

#[derive(Clone, Debug, Default)]
pub struct MilpModel {
    vars: Vec<String>,
    by_name: HashMap<String, VarId>,
    constraints: Vec<LinConstraint>,
    objective: Objective,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a binary variable. Panics on a duplicate name.
    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        let name = name.into();
        let id = VarId(self.vars.len() as u32);
        let prev = self.by_name.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable name {name}");
        self.vars.push(name);
        id
    }

    /// Adds a constraint; zero coefficients are dropped and repeated variables
    /// are rejected.
    pub fn add_constraint(&mut self, terms: Vec<(i32, VarId)>, sense: Sense, rhs: i32) -> usize {
        let terms: Vec<(i32, VarId)> = terms.into_iter().filter(|(c, _)| *c != 0).collect();
        for (i, (_, v)) in terms.iter().enumerate() {
            assert!(v.index() < self.vars.len(), "undeclared variable");
            assert!(
                terms[..i].iter().all(|(_, w)| w != v),
                "variable {} repeated",
                self.vars[v.index()]
            );
        }
        self.constraints.push(LinConstraint { terms, sense, rhs });
        self.constraints.len() - 1
    }

    /// `a = b_1 + ... + b_n`
    pub fn add_sum_eq(&mut self, a: VarId, parts: &[VarId]) -> usize {
        let mut terms = vec![(1, a)];
        terms.extend(parts.iter().map(|p| (-1, *p)));
        self.add_constraint(terms, Sense::Eq, 0)
    }

    pub fn fix(&mut self, v: VarId, value: u8) -> usize {
        self.add_constraint(vec![(1, v)], Sense::Eq, value as i32)
    }

    pub fn set_objective(&mut self, obj: Objective) {
        self.objective = obj;
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()]
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = MilpVar> + '_ {
        self.vars.iter().enumerate().map(|(i, n)| MilpVar {
            id: VarId(i as u32),
            name: n.clone(),
        })
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    /// Indices of constraints violated by a full 0/1 assignment.
    pub fn violated(&self, assign: &[u8]) -> Vec<usize> {
        assert_eq!(assign.len(), self.vars.len());
        (0..self.constraints.len())
            .filter(|i| !self.constraints[*i].holds(assign))
            .collect()
    }

    /// LP text: objective, constraints in id order, binaries, end.
    pub fn emit_lp(&self) -> String {
        let mut out = String::new();
        let (head, vars) = match &self.objective {
            Objective::Feasibility => ("Minimize", None),
            Objective::Maximize(v) => ("Maximize", Some(v)),
            Objective::Minimize(v) => ("Minimize", Some(v)),
        };
        out.push_str(head);
        out.push('\n');
        match vars {
            Some(v) if !v.is_empty() => {
                let terms: Vec<(i32, VarId)> = v.iter().map(|x| (1, *x)).collect();
                self.write_terms(&mut out, " obj:", &terms);
            }
            _ => out.push_str(" obj:\n"),
        }
        out.push_str("Subject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let mut line = String::new();
            self.write_terms(&mut line, &format!(" c{i}:"), &c.terms);
            line.pop();
            if c.terms.is_empty() {
                // a constant row; keep it well formed
                line.push_str(&format!(
                    " 0 {}",
                    self.vars.first().map(String::as_str).unwrap_or("z")
                ));
            }
            let _ = writeln!(line, " {} {}", c.sense.symbol(), c.rhs);
            out.push_str(&line);
        }
        out.push_str("Binary\n");
        for chunk in self.vars.chunks(8) {
            out.push(' ');
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
        out.push_str("End\n");
        out
    }

    fn write_terms(&self, out: &mut String, label: &str, terms: &[(i32, VarId)]) {
        out.push_str(label);
        for (k, (c, v)) in terms.iter().enumerate() {
            if k > 0 && k % 8 == 0 {
                out.push_str("\n   ");
            }
            let sign = if *c < 0 { '-' } else { '+' };
            let mag = c.unsigned_abs();
            if mag == 1 {
                let _ = write!(out, " {sign} {}", self.vars[v.index()]);
            } else {
                let _ = write!(out, " {sign} {mag} {}", self.vars[v.index()]);
            }
        }
        out.push('\n');
    }
}

/// Parses a `name value` solution listing into a full assignment.
pub fn parse_assignment(model: &MilpModel, text: &str) -> Result<Vec<u8>, String> {
    let mut assign = vec![0u8; model.num_vars()];
    for line in text.lines() {
        let mut it = line.split_whitespace();
        let (Some(name), Some(val)) = (it.next(), it.next()) else {
            continue;
        };
        let Some(v) = model.var(name) else { continue };
        let x: f64 = val
            .parse()
            .map_err(|_| format!("bad value {val:?} for {name}"))?;
        assign[v.index()] = (x > 0.5) as u8;
    }
    Ok(assign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MilpModel {
        let mut m = MilpModel::new();
        let a = m.add_var("a");
        let b = m.add_var("b");
        let y = m.add_var("y");
        m.add_constraint(vec![(1, y), (-1, a)], Sense::Ge, 0);
        m.add_constraint(vec![(1, a), (1, b)], Sense::Le, 1);
        m.add_constraint(vec![(2, y), (-3, b)], Sense::Eq, 2);
        m.set_objective(Objective::Maximize(vec![a, b]));
        m
    }

    #[test]
    fn lp_text() {
        let m = small();
        let lp = m.emit_lp();
        assert_eq!(
            lp,
            "Maximize\n obj: + a + b\nSubject To\n c0: + y - a >= 0\n c1: + a + b <= 1\n c2: + 2 y - 3 b = 2\nBinary\n a b y\nEnd\n"
        );
        assert_eq!(lp, small().emit_lp());
    }

    #[test]
    fn assignments() {
        let m = small();
        assert_eq!(m.violated(&[0, 0, 1]), Vec::<usize>::new());
        assert_eq!(m.violated(&[1, 0, 0]), vec![0, 2]);
        assert_eq!(
            parse_assignment(&m, "a 1\ny 0.9999\nzz 1\n").unwrap(),
            vec![1, 0, 1]
        );
    }

    #[test]
    #[should_panic]
    fn duplicate_names_rejected() {
        let mut m = MilpModel::new();
        m.add_var("a");
        m.add_var("a");
    }

    #[test]
    #[should_panic]
    fn repeated_variable_rejected() {
        let mut m = MilpModel::new();
        let a = m.add_var("a");
        m.add_constraint(vec![(1, a), (1, a)], Sense::Ge, 0);
    }
}
