//! A complete DPLL decision procedure: unit propagation, pure-literal
//! elimination and chronological backtracking. Branching picks the lowest
//! unassigned variable and tries `true` first, so runs are deterministic.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit {
            var,
            positive: true,
        }
    }

    pub fn neg(var: usize) -> Self {
        Lit {
            var,
            positive: false,
        }
    }

    pub fn negate(self) -> Self {
        Lit {
            var: self.var,
            positive: !self.positive,
        }
    }

    /// DIMACS-style signed index (1-based).
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = Vec<Lit>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn add(&mut self, clause: Clause) {
        for l in &clause {
            self.num_vars = self.num_vars.max(l.var + 1);
        }
        self.clauses.push(clause);
    }

    /// Whether `model` satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model.get(l.var).copied() == Some(l.positive)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// A total assignment, indexed by variable.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Debug, Clone, Copy)]
enum Reason {
    Decision { flipped: bool },
    Implied,
}

struct Dpll<'a> {
    cnf: &'a Cnf,
    assign: Vec<Option<bool>>,
    trail: Vec<(usize, Reason)>,
}

enum Propagation {
    Conflict,
    Done { all_satisfied: bool },
}

impl<'a> Dpll<'a> {
    fn value(&self, l: Lit) -> Option<bool> {
        self.assign[l.var].map(|v| v == l.positive)
    }

    fn set(&mut self, l: Lit, reason: Reason) {
        self.assign[l.var] = Some(l.positive);
        self.trail.push((l.var, reason));
    }

    /// Runs unit propagation and pure-literal elimination to a fixpoint.
    fn propagate(&mut self) -> Propagation {
        loop {
            let mut changed = false;
            let mut all_satisfied = true;
            // polarity[v]: bit 0 = occurs positively, bit 1 = negatively (open clauses only)
            let mut polarity = vec![0u8; self.cnf.num_vars];
            for clause in &self.cnf.clauses {
                let mut unassigned = None;
                let mut open = 0usize;
                let mut satisfied = false;
                for &l in clause {
                    match self.value(l) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            open += 1;
                            unassigned = Some(l);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                all_satisfied = false;
                match open {
                    0 => return Propagation::Conflict,
                    1 => {
                        let l = unassigned.expect("one open literal");
                        self.set(l, Reason::Implied);
                        changed = true;
                    }
                    _ => {
                        for &l in clause {
                            if self.assign[l.var].is_none() {
                                polarity[l.var] |= if l.positive { 1 } else { 2 };
                            }
                        }
                    }
                }
            }
            if changed {
                continue;
            }
            for (var, &p) in polarity.iter().enumerate() {
                if self.assign[var].is_none() && (p == 1 || p == 2) {
                    self.set(
                        Lit {
                            var,
                            positive: p == 1,
                        },
                        Reason::Implied,
                    );
                    changed = true;
                }
            }
            if !changed {
                return Propagation::Done { all_satisfied };
            }
        }
    }

    /// Undoes the trail back to the most recent unflipped decision and flips it.
    fn backtrack(&mut self) -> bool {
        while let Some((var, reason)) = self.trail.pop() {
            let value = self.assign[var].take().expect("trail variables are assigned");
            if let Reason::Decision { flipped: false } = reason {
                self.set(
                    Lit {
                        var,
                        positive: !value,
                    },
                    Reason::Decision { flipped: true },
                );
                return true;
            }
        }
        false
    }

    fn run(mut self) -> SatResult {
        loop {
            match self.propagate() {
                Propagation::Conflict => {
                    if !self.backtrack() {
                        return SatResult::Unsat;
                    }
                }
                Propagation::Done { all_satisfied } => {
                    let next = self.assign.iter().position(Option::is_none);
                    match next {
                        Some(var) if !all_satisfied => {
                            self.set(Lit::pos(var), Reason::Decision { flipped: false })
                        }
                        _ => {
                            let model: Vec<bool> =
                                self.assign.iter().map(|v| v.unwrap_or(false)).collect();
                            debug_assert!(self.cnf.satisfied_by(&model));
                            return SatResult::Sat(model);
                        }
                    }
                }
            }
        }
    }
}

/// Decides satisfiability of `cnf`. Unconstrained variables come back `false`.
pub fn solve(cnf: &Cnf) -> SatResult {
    Dpll {
        cnf,
        assign: vec![None; cnf.num_vars],
        trail: Vec::new(),
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(clauses: &[&[i64]]) -> Cnf {
        let mut f = Cnf::default();
        for c in clauses {
            f.add(
                c.iter()
                    .map(|&x| {
                        let var = (x.unsigned_abs() - 1) as usize;
                        if x > 0 {
                            Lit::pos(var)
                        } else {
                            Lit::neg(var)
                        }
                    })
                    .collect(),
            );
        }
        f
    }

    #[test]
    fn empty_formula_is_sat() {
        assert_eq!(solve(&Cnf::default()), SatResult::Sat(vec![]));
    }

    #[test]
    fn small_unsat() {
        assert_eq!(solve(&cnf(&[&[1, 2], &[-1], &[-2]])), SatResult::Unsat);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut f = cnf(&[&[1]]);
        f.add(vec![]);
        assert_eq!(solve(&f), SatResult::Unsat);
    }

    #[test]
    fn model_is_total_and_satisfying() {
        let f = cnf(&[&[1, 2, 3], &[-1, 2], &[-2, 3], &[-3, -1]]);
        match solve(&f) {
            SatResult::Sat(m) => {
                assert_eq!(m.len(), 3);
                assert!(f.satisfied_by(&m));
            }
            SatResult::Unsat => panic!("satisfiable formula reported unsat"),
        }
    }

    #[test]
    fn needs_backtracking() {
        // x1 true first leads to conflict; the solver must flip it.
        let f = cnf(&[&[-1, 2], &[-1, -2], &[1, 3], &[1, -3, 4]]);
        match solve(&f) {
            SatResult::Sat(m) => {
                assert!(!m[0]);
                assert!(f.satisfied_by(&m));
            }
            SatResult::Unsat => panic!(),
        }
    }
}
