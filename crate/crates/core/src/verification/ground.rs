//! Finite-domain instantiation of rules into propositional clauses.
//!
//! A rule `h1 and ... and hm <- b1 and ... and bk` over variables `X1..Xv`
//! yields, for every substitution of same-sort domain constants, the `m`
//! clauses `not b1 or ... or not bk or hi`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sat::{Clause, Cnf, Lit};
use crate::fol::{
    is_lower_ident, variable_sorts, CmpOp, Formula, Literal, Number, Ontology, Rule, Term,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonMode {
    /// Each distinct ground comparison is an unrelated propositional atom.
    #[default]
    Opaque,
    /// Ground comparisons over one attribute and subject are tied to the
    /// attribute's declared value domain: exactly one value holds.
    IntervalAxioms,
}

impl fmt::Display for ComparisonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonMode::Opaque => "opaque",
            ComparisonMode::IntervalAxioms => "interval-axioms",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundingConfig {
    /// Domain elements per sort, in substitution order.
    pub domain_constants: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub comparison_mode: ComparisonMode,
}

pub const DEFAULT_DOMAIN_SIZE: usize = 3;

impl GroundingConfig {
    /// Every sort of `onto` gets its declared constants followed by fresh
    /// names (`a`, `b`, ...) until it has at least `size` elements.
    pub fn for_ontology(onto: &Ontology, size: usize) -> Self {
        let mut taken: HashSet<String> = onto
            .predicates
            .keys()
            .chain(onto.numeric_attributes.keys())
            .chain(onto.constants.keys())
            .cloned()
            .collect();
        let mut fresh = (0usize..).map(fresh_name);
        let mut domain_constants = BTreeMap::new();
        for sort in onto.sorts() {
            let mut elems: Vec<String> = onto.constants_of(sort).map(str::to_string).collect();
            while elems.len() < size {
                let name = fresh
                    .by_ref()
                    .find(|n| !taken.contains(n))
                    .expect("unbounded name supply");
                taken.insert(name.clone());
                elems.push(name);
            }
            domain_constants.insert(sort.to_string(), elems);
        }
        GroundingConfig {
            domain_constants,
            comparison_mode: ComparisonMode::Opaque,
        }
    }

    pub fn with_mode(mut self, mode: ComparisonMode) -> Self {
        self.comparison_mode = mode;
        self
    }

    pub fn with_constants(mut self, sort: &str, constants: &[&str]) -> Self {
        self.domain_constants.insert(
            sort.to_string(),
            constants.iter().map(|c| c.to_string()).collect(),
        );
        self
    }
}

/// `a`..`z`, then `a1`..`z1`, and so on.
fn fresh_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        round => format!("{letter}{round}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundingError {
    #[error("variable {var} of rule {rule_id} has sort `{sort}`, which has no domain constants")]
    SortMismatch {
        rule_id: String,
        var: String,
        sort: String,
    },
    #[error("variable {var} of rule {rule_id} has no inferable sort")]
    UnsortedVariable { rule_id: String, var: String },
    #[error("domain constant `{0}` is not a valid name")]
    BadConstant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundFormula {
    Atom {
        predicate: String,
        args: Vec<String>,
    },
    Cmp {
        attribute: String,
        subject: String,
        op: CmpOp,
        value: Number,
    },
}

impl fmt::Display for GroundFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundFormula::Atom { predicate, args } => write!(f, "{predicate}({})", args.join(", ")),
            GroundFormula::Cmp {
                attribute,
                subject,
                op,
                value,
            } => write!(f, "{attribute}({subject}) {op} {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundLiteral {
    pub negated: bool,
    pub formula: GroundFormula,
}

impl GroundLiteral {
    pub fn negate(&self) -> Self {
        GroundLiteral {
            negated: !self.negated,
            formula: self.formula.clone(),
        }
    }
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not {}", self.formula)
        } else {
            write!(f, "{}", self.formula)
        }
    }
}

pub type Substitution = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundClause {
    pub literals: Vec<GroundLiteral>,
    pub substitution: Substitution,
}

/// All ground clauses of one rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundRule {
    pub rule_id: String,
    pub clauses: Vec<GroundClause>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Rule {
        rule_id: String,
        substitution: Substitution,
    },
    /// An extra clause asserted for a single query (a refutation or witness).
    Assumption(String),
}

pub struct Grounder<'a> {
    onto: &'a Ontology,
    config: &'a GroundingConfig,
}

impl<'a> Grounder<'a> {
    pub fn new(onto: &'a Ontology, config: &'a GroundingConfig) -> Self {
        Grounder { onto, config }
    }

    pub fn config(&self) -> &GroundingConfig {
        self.config
    }

    pub fn ontology(&self) -> &Ontology {
        self.onto
    }

    /// Every substitution of the rule's quantified variables, varying the
    /// last variable fastest, constants in domain order.
    pub fn substitutions(&self, rule: &Rule) -> Result<Vec<Substitution>, GroundingError> {
        let sorts = variable_sorts(rule, self.onto);
        let mut domains: Vec<(&str, &[String])> = Vec::new();
        for var in &rule.vars {
            let sort = sorts
                .get(var)
                .ok_or_else(|| GroundingError::UnsortedVariable {
                    rule_id: rule.id.clone(),
                    var: var.clone(),
                })?;
            let consts = self
                .config
                .domain_constants
                .get(sort)
                .filter(|c| !c.is_empty())
                .ok_or_else(|| GroundingError::SortMismatch {
                    rule_id: rule.id.clone(),
                    var: var.clone(),
                    sort: sort.clone(),
                })?;
            if let Some(bad) = consts.iter().find(|c| !is_lower_ident(c)) {
                return Err(GroundingError::BadConstant(bad.clone()));
            }
            domains.push((var, consts));
        }
        let mut out = vec![Substitution::new()];
        for (var, consts) in domains {
            out = out
                .into_iter()
                .flat_map(|s| {
                    consts.iter().map(move |c| {
                        let mut s = s.clone();
                        s.insert(var.to_string(), c.clone());
                        s
                    })
                })
                .collect();
        }
        Ok(out)
    }

    pub fn ground_literal(lit: &Literal, subst: &Substitution) -> GroundLiteral {
        let name = |t: &Term| match t {
            Term::Variable(v) => subst.get(v).cloned().unwrap_or_else(|| v.clone()),
            Term::Constant(c) => c.clone(),
        };
        let formula = match &lit.inner {
            Formula::Atom(a) => GroundFormula::Atom {
                predicate: a.predicate.clone(),
                args: a.args.iter().map(name).collect(),
            },
            Formula::Cmp(c) => GroundFormula::Cmp {
                attribute: c.attribute.clone(),
                subject: name(&c.subject),
                op: c.op,
                value: c.value,
            },
        };
        GroundLiteral {
            negated: lit.negated,
            formula,
        }
    }

    /// `m * prod(d_i)` clauses for a rule with `m` head literals and
    /// variables over domains of sizes `d_i`.
    pub fn ground_rule(&self, rule: &Rule) -> Result<GroundRule, GroundingError> {
        let mut clauses = Vec::new();
        for subst in self.substitutions(rule)? {
            let negated_body: Vec<GroundLiteral> = rule
                .body
                .iter()
                .map(|l| Self::ground_literal(&l.negate(), &subst))
                .collect();
            for h in &rule.head {
                let mut literals = negated_body.clone();
                literals.push(Self::ground_literal(h, &subst));
                clauses.push(GroundClause {
                    literals,
                    substitution: subst.clone(),
                });
            }
        }
        Ok(GroundRule {
            rule_id: rule.id.clone(),
            clauses,
        })
    }

    pub fn ground(&self, rules: &[Rule]) -> Result<ClauseDb, GroundingError> {
        let mut db = ClauseDb::default();
        for rule in rules {
            db.add_ground_rule(&self.ground_rule(rule)?);
        }
        Ok(db)
    }
}

/// Interned ground atoms plus duplicate-free propositional clauses.
#[derive(Debug, Clone, Default)]
pub struct ClauseDb {
    atoms: Vec<GroundFormula>,
    index: HashMap<GroundFormula, usize>,
    clauses: Vec<Clause>,
    provenance: Vec<Provenance>,
    seen: HashSet<Clause>,
}

impl ClauseDb {
    pub fn intern(&mut self, f: &GroundFormula) -> usize {
        if let Some(&i) = self.index.get(f) {
            return i;
        }
        let i = self.atoms.len();
        self.atoms.push(f.clone());
        self.index.insert(f.clone(), i);
        i
    }

    pub fn lookup(&self, f: &GroundFormula) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn atoms(&self) -> &[GroundFormula] {
        &self.atoms
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn lit(&mut self, l: &GroundLiteral) -> Lit {
        let var = self.intern(&l.formula);
        Lit {
            var,
            positive: !l.negated,
        }
    }

    /// Adds a clause unless an identical one (as a literal set) is present.
    /// Returns whether it was new.
    pub fn add_clause(&mut self, literals: &[GroundLiteral], provenance: Provenance) -> bool {
        let mut clause: Clause = literals.iter().map(|l| self.lit(l)).collect();
        clause.sort();
        clause.dedup();
        if !self.seen.insert(clause.clone()) {
            return false;
        }
        self.clauses.push(clause);
        self.provenance.push(provenance);
        true
    }

    pub fn add_ground_rule(&mut self, g: &GroundRule) {
        for c in &g.clauses {
            self.add_clause(
                &c.literals,
                Provenance::Rule {
                    rule_id: g.rule_id.clone(),
                    substitution: c.substitution.clone(),
                },
            );
        }
    }

    /// The clauses as CNF, with domain axioms for every interned comparison
    /// when `mode` is [`ComparisonMode::IntervalAxioms`]. Atom `i` keeps
    /// variable index `i`; value-selector atoms not already interned are
    /// numbered after them.
    pub fn to_cnf(&self, onto: &Ontology, mode: ComparisonMode) -> Cnf {
        let mut cnf = Cnf::new(self.atoms.len());
        for c in &self.clauses {
            cnf.add(c.clone());
        }
        if mode == ComparisonMode::IntervalAxioms {
            self.append_domain_axioms(onto, &mut cnf);
        }
        cnf
    }

    /// For every (attribute, subject) with ground comparisons, introduce one
    /// selector per domain value `attr(s) = v`: exactly one selector holds, and
    /// each selector fixes the truth of every comparison on that pair.
    fn append_domain_axioms(&self, onto: &Ontology, cnf: &mut Cnf) {
        let mut groups: BTreeMap<(&str, &str), BTreeSet<usize>> = BTreeMap::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if let GroundFormula::Cmp {
                attribute, subject, ..
            } = atom
            {
                if onto.numeric_attributes.contains_key(attribute) {
                    groups.entry((attribute, subject)).or_default().insert(i);
                }
            }
        }
        let mut extra: HashMap<GroundFormula, usize> = HashMap::new();
        let mut next = self.atoms.len();
        for ((attribute, subject), members) in groups {
            let domain = &onto.numeric_attributes[attribute].domain;
            let selectors: Vec<(usize, Number)> = domain
                .iter()
                .map(|&v| {
                    let sel = GroundFormula::Cmp {
                        attribute: attribute.to_string(),
                        subject: subject.to_string(),
                        op: CmpOp::Eq,
                        value: v,
                    };
                    let var = match self.index.get(&sel) {
                        Some(&i) => i,
                        None => *extra.entry(sel).or_insert_with(|| {
                            next += 1;
                            next - 1
                        }),
                    };
                    (var, v)
                })
                .collect();
            cnf.add(selectors.iter().map(|&(s, _)| Lit::pos(s)).collect());
            for (i, &(a, _)) in selectors.iter().enumerate() {
                for &(b, _) in &selectors[i + 1..] {
                    cnf.add(vec![Lit::neg(a), Lit::neg(b)]);
                }
            }
            for &m in &members {
                let GroundFormula::Cmp { op, value, .. } = &self.atoms[m] else {
                    unreachable!("groups hold comparisons only")
                };
                for &(sel, v) in &selectors {
                    if sel == m {
                        continue;
                    }
                    let holds = op.holds(v, *value);
                    cnf.add(vec![Lit::neg(sel), Lit { var: m, positive: holds }]);
                }
            }
        }
        cnf.num_vars = cnf.num_vars.max(next);
    }

    /// Signed rendering of `formulas` under `model`, sorted.
    pub fn describe(&self, model: &[bool], formulas: &[GroundFormula]) -> Vec<String> {
        let mut out: Vec<String> = formulas
            .iter()
            .filter_map(|f| {
                self.lookup(f).map(|i| {
                    let value = model.get(i).copied().unwrap_or(false);
                    if value {
                        f.to_string()
                    } else {
                        format!("not {f}")
                    }
                })
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_rule_syntax;
    use crate::verification::sat::{solve, SatResult};

    fn onto() -> Ontology {
        Ontology::from_json(
            r#"{
            "predicates": {
                "collide": {"args": ["vehicle"]},
                "sd_front": {"args": ["vehicle"]},
                "sd_rear": {"args": ["vehicle"]},
                "lane_change": {"args": ["vehicle"]},
                "dense": {"args": ["vehicle"]},
                "follows": {"args": ["vehicle", "vehicle"]}
            },
            "numeric_attributes": {"speed": {"subject": "vehicle", "unit": "km/h", "domain": [0, 30, 50, 130]}},
            "constants": {"ego": "vehicle"}
        }"#,
        )
        .unwrap()
    }

    fn render(db: &ClauseDb, c: &Clause) -> Vec<String> {
        let mut v: Vec<String> = c
            .iter()
            .map(|l| {
                let a = db.atoms()[l.var].to_string();
                if l.positive {
                    a
                } else {
                    format!("not {a}")
                }
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn default_config_names() {
        let cfg = GroundingConfig::for_ontology(&onto(), 3);
        assert_eq!(cfg.domain_constants["vehicle"], vec!["ego", "a", "b"]);
        let cfg = GroundingConfig::for_ontology(&onto(), 1);
        assert_eq!(cfg.domain_constants["vehicle"], vec!["ego"]);
    }

    #[test]
    fn fresh_names_cycle() {
        assert_eq!(fresh_name(0), "a");
        assert_eq!(fresh_name(25), "z");
        assert_eq!(fresh_name(26), "a1");
    }

    #[test]
    fn collide_rule_single_constant() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 1).with_constants("vehicle", &["a"]);
        let r = parse_rule_syntax(
            "forall X . not collide(X) <- sd_front(X) and sd_rear(X) and not lane_change(X)",
        )
        .unwrap();
        let db = Grounder::new(&o, &cfg).ground(&[r]).unwrap();
        assert_eq!(db.clauses().len(), 1);
        assert_eq!(
            render(&db, &db.clauses()[0]),
            vec!["lane_change(a)", "not collide(a)", "not sd_front(a)", "not sd_rear(a)"]
        );
    }

    #[test]
    fn conjunctive_head_splits() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 1).with_constants("vehicle", &["a"]);
        let r = parse_rule_syntax("forall X . sd_front(X) and sd_rear(X) <- not dense(X)").unwrap();
        let db = Grounder::new(&o, &cfg).ground(&[r]).unwrap();
        let clauses: Vec<_> = db.clauses().iter().map(|c| render(&db, c)).collect();
        assert_eq!(
            clauses,
            vec![vec!["dense(a)", "sd_front(a)"], vec!["dense(a)", "sd_rear(a)"]]
        );
    }

    #[test]
    fn ground_rule_without_variables() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 3);
        let r = parse_rule_syntax("forall . collide(ego) <- dense(ego)").unwrap();
        let g = Grounder::new(&o, &cfg).ground_rule(&r).unwrap();
        assert_eq!(g.clauses.len(), 1);
        assert!(g.clauses[0].substitution.is_empty());
    }

    #[test]
    fn clause_count_is_product_of_domains() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 3);
        let r = parse_rule_syntax("forall X, Y . collide(X) and collide(Y) <- follows(X, Y)").unwrap();
        let g = Grounder::new(&o, &cfg).ground_rule(&r).unwrap();
        assert_eq!(g.clauses.len(), 2 * 3 * 3);
    }

    #[test]
    fn empty_sort_is_an_error() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 3).with_constants("vehicle", &[]);
        let r = parse_rule_syntax("forall X . collide(X) <- true").unwrap();
        assert!(matches!(
            Grounder::new(&o, &cfg).ground(&[r]),
            Err(GroundingError::SortMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_clauses_are_dropped() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 2);
        let r = parse_rule_syntax("forall X . collide(X) <- dense(X)").unwrap();
        let db = Grounder::new(&o, &cfg).ground(&[r.clone(), r]).unwrap();
        assert_eq!(db.clauses().len(), 2);
    }

    #[test]
    fn interval_axioms_relate_thresholds() {
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 1).with_constants("vehicle", &["a"]);
        let rules = [
            parse_rule_syntax("forall X . speed(X) > 50 <- true").unwrap(),
            parse_rule_syntax("forall X . not speed(X) > 30 <- true").unwrap(),
        ];
        let db = Grounder::new(&o, &cfg).ground(&rules).unwrap();
        assert!(solve(&db.to_cnf(&o, ComparisonMode::Opaque)).is_sat());
        assert_eq!(
            solve(&db.to_cnf(&o, ComparisonMode::IntervalAxioms)),
            SatResult::Unsat
        );
    }

    #[test]
    fn interval_axioms_respect_finite_domain() {
        // speed takes one of {0, 30, 50, 130}; nothing lies strictly between 50 and 130.
        let o = onto();
        let cfg = GroundingConfig::for_ontology(&o, 1).with_constants("vehicle", &["a"]);
        let between = [parse_rule_syntax("forall X . speed(X) > 50 and speed(X) < 130 <- true").unwrap()];
        let db = Grounder::new(&o, &cfg).ground(&between).unwrap();
        assert_eq!(
            solve(&db.to_cnf(&o, ComparisonMode::IntervalAxioms)),
            SatResult::Unsat
        );
        let at = [parse_rule_syntax("forall X . speed(X) >= 50 and speed(X) != 130 <- true").unwrap()];
        let db = Grounder::new(&o, &cfg).ground(&at).unwrap();
        let SatResult::Sat(model) = solve(&db.to_cnf(&o, ComparisonMode::IntervalAxioms)) else {
            panic!("speed = 50 satisfies both");
        };
        assert!(model[0] && model[1]);
    }
}
