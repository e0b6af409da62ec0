//! Checking a rule against an [`Ontology`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{CmpOp, Formula, Rule, Term};
use super::ontology::Ontology;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnknownPredicate { name: String },
    ArityMismatch { predicate: String, expected: usize, found: usize },
    UndeclaredAttribute { name: String },
    UndeclaredOperator { attribute: String, op: CmpOp },
    UnknownConstant { name: String },
    SortMismatch { term: String, expected: String, found: String },
    UnquantifiedVariable { name: String },
    /// A quantified variable that occurs in no literal has no inferable sort.
    UnusedVariable { name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownPredicate { name } => write!(f, "unknown predicate `{name}`"),
            Violation::ArityMismatch {
                predicate,
                expected,
                found,
            } => write!(
                f,
                "arity mismatch: `{predicate}` takes {expected} argument(s), found {found}"
            ),
            Violation::UndeclaredAttribute { name } => {
                write!(f, "undeclared numeric attribute `{name}`")
            }
            Violation::UndeclaredOperator { attribute, op } => {
                write!(f, "comparison operator `{op}` on `{attribute}` is not declared")
            }
            Violation::UnknownConstant { name } => write!(f, "unknown constant `{name}`"),
            Violation::SortMismatch {
                term,
                expected,
                found,
            } => write!(f, "sort mismatch: `{term}` used as {expected} and as {found}"),
            Violation::UnquantifiedVariable { name } => {
                write!(f, "variable `{name}` is not quantified")
            }
            Violation::UnusedVariable { name } => {
                write!(f, "quantified variable `{name}` occurs in no literal")
            }
        }
    }
}

/// Lists every way `rule` falls outside `onto`. An empty list means the rule is valid.
pub fn validate_schema(rule: &Rule, onto: &Ontology) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut push = |v: Violation| {
        if !violations.contains(&v) {
            violations.push(v);
        }
    };
    let mut var_sorts: BTreeMap<&str, &str> = BTreeMap::new();
    for lit in rule.literals() {
        let typed: Vec<(&Term, Option<&str>)> = match &lit.inner {
            Formula::Atom(atom) => match onto.predicates.get(&atom.predicate) {
                None => {
                    push(Violation::UnknownPredicate {
                        name: atom.predicate.clone(),
                    });
                    atom.args.iter().map(|t| (t, None)).collect()
                }
                Some(decl) => {
                    if decl.arity() != atom.args.len() {
                        push(Violation::ArityMismatch {
                            predicate: atom.predicate.clone(),
                            expected: decl.arity(),
                            found: atom.args.len(),
                        });
                        atom.args.iter().map(|t| (t, None)).collect()
                    } else {
                        atom.args
                            .iter()
                            .zip(&decl.args)
                            .map(|(t, s)| (t, Some(s.as_str())))
                            .collect()
                    }
                }
            },
            Formula::Cmp(cmp) => match onto.numeric_attributes.get(&cmp.attribute) {
                None => {
                    push(Violation::UndeclaredAttribute {
                        name: cmp.attribute.clone(),
                    });
                    vec![(&cmp.subject, None)]
                }
                Some(decl) => {
                    if !onto.comparison_ops.contains(&cmp.op) {
                        push(Violation::UndeclaredOperator {
                            attribute: cmp.attribute.clone(),
                            op: cmp.op,
                        });
                    }
                    vec![(&cmp.subject, Some(decl.subject.as_str()))]
                }
            },
        };
        for (term, sort) in typed {
            match term {
                Term::Variable(v) => {
                    if !rule.vars.contains(v) {
                        push(Violation::UnquantifiedVariable { name: v.clone() });
                    }
                    if let Some(sort) = sort {
                        match var_sorts.get(v.as_str()) {
                            Some(prev) if *prev != sort => push(Violation::SortMismatch {
                                term: v.clone(),
                                expected: prev.to_string(),
                                found: sort.to_string(),
                            }),
                            Some(_) => {}
                            None => {
                                var_sorts.insert(v, sort);
                            }
                        }
                    }
                }
                Term::Constant(c) => match onto.constants.get(c) {
                    None => push(Violation::UnknownConstant { name: c.clone() }),
                    Some(declared) => {
                        if let Some(sort) = sort {
                            if declared != sort {
                                push(Violation::SortMismatch {
                                    term: c.clone(),
                                    expected: declared.clone(),
                                    found: sort.to_string(),
                                });
                            }
                        }
                    }
                },
            }
        }
    }
    let used = rule.used_variables();
    for v in &rule.vars {
        if !used.contains(&v.as_str()) {
            push(Violation::UnusedVariable { name: v.clone() });
        }
    }
    violations
}

/// The sort of each quantified variable, inferred from its first typed
/// occurrence. Meaningful only for schema-valid rules.
pub fn variable_sorts(rule: &Rule, onto: &Ontology) -> BTreeMap<String, String> {
    let mut sorts = BTreeMap::new();
    for lit in rule.literals() {
        let typed: Vec<(&Term, &str)> = match &lit.inner {
            Formula::Atom(atom) => match onto.predicates.get(&atom.predicate) {
                Some(decl) => atom
                    .args
                    .iter()
                    .zip(&decl.args)
                    .map(|(t, s)| (t, s.as_str()))
                    .collect(),
                None => Vec::new(),
            },
            Formula::Cmp(cmp) => match onto.numeric_attributes.get(&cmp.attribute) {
                Some(decl) => vec![(&cmp.subject, decl.subject.as_str())],
                None => Vec::new(),
            },
        };
        for (term, sort) in typed {
            if let Term::Variable(v) = term {
                sorts.entry(v.clone()).or_insert_with(|| sort.to_string());
            }
        }
    }
    sorts
}
