//! Staged verification of candidate rules against the current theory.
//!
//! Rules are interpreted over a finite domain (see [`GroundingConfig`]):
//! every quantified rule is instantiated into propositional clauses and the
//! resulting CNF is decided by the DPLL solver in [`sat`].

pub mod ground;
pub mod sat;

use serde::{Deserialize, Serialize};

pub use ground::{
    ClauseDb, ComparisonMode, GroundClause, GroundFormula, GroundLiteral, GroundRule, Grounder,
    GroundingConfig, GroundingError, Provenance, Substitution, DEFAULT_DOMAIN_SIZE,
};
pub use sat::{solve, Clause, Cnf, Lit, SatResult};

use crate::fol::{render_rule, validate_schema, Ontology, Rule, Violation};
use crate::kb::TheoryStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Accepted,
    Malformed,
    Inconsistent,
    Redundant,
    Unsafe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    /// `core` is an inclusion-minimal set of theory rule ids that, together
    /// with the candidate, has no finite-domain model. It is empty when the
    /// candidate contradicts itself.
    Inconsistent { core: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entailment {
    Entailed,
    Novel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantCheck {
    Preserved,
    /// A model of theory plus candidate in which the invariant fails;
    /// `countermodel` lists the invariant's ground atoms, signed and sorted.
    Violated {
        invariant_id: String,
        countermodel: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageRecord {
    Schema {
        passed: bool,
        violations: Vec<Violation>,
    },
    Grounding {
        passed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        ground_atoms: usize,
        clauses: usize,
    },
    Consistency {
        consistent: bool,
        conflict_core: Vec<String>,
    },
    Redundancy {
        entailed: bool,
    },
    Invariants {
        preserved: bool,
        checked: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        violated: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        countermodel: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rule_id: String,
    pub rule: String,
    /// Executed stages, in execution order.
    pub stages: Vec<StageRecord>,
    pub verdict: Verdict,
    pub grounding: GroundingConfig,
}

impl VerificationReport {
    /// Whether the solver ran at all.
    pub fn reached_solver(&self) -> bool {
        self.stages
            .iter()
            .any(|s| matches!(s, StageRecord::Consistency { .. }))
    }

    pub fn conflict_core(&self) -> Option<&[String]> {
        self.stages.iter().find_map(|s| match s {
            StageRecord::Consistency {
                consistent: false,
                conflict_core,
            } => Some(conflict_core.as_slice()),
            _ => None,
        })
    }

    pub fn countermodel(&self) -> Option<(&str, &[String])> {
        self.stages.iter().find_map(|s| match s {
            StageRecord::Invariants {
                violated: Some(id),
                countermodel,
                ..
            } => Some((id.as_str(), countermodel.as_slice())),
            _ => None,
        })
    }
}

fn satisfiable(db: &ClauseDb, onto: &Ontology, config: &GroundingConfig) -> SatResult {
    solve(&db.to_cnf(onto, config.comparison_mode))
}

fn db_of<'r>(rules: impl IntoIterator<Item = &'r GroundRule>) -> ClauseDb {
    let mut db = ClauseDb::default();
    for g in rules {
        db.add_ground_rule(g);
    }
    db
}

/// Whether `theory` and `candidate` have a common finite-domain model; on
/// failure the theory is shrunk by deletion to a minimal conflicting core.
pub fn check_consistency(
    theory: &[Rule],
    candidate: &Rule,
    config: &GroundingConfig,
    onto: &Ontology,
) -> Result<Consistency, GroundingError> {
    let grounder = Grounder::new(onto, config);
    let ground_theory = theory
        .iter()
        .map(|r| grounder.ground_rule(r))
        .collect::<Result<Vec<_>, _>>()?;
    let ground_candidate = grounder.ground_rule(candidate)?;
    let unsat = |members: &[usize]| {
        let db = db_of(
            members
                .iter()
                .map(|&i| &ground_theory[i])
                .chain(std::iter::once(&ground_candidate)),
        );
        !satisfiable(&db, onto, config).is_sat()
    };
    let mut core: Vec<usize> = (0..theory.len()).collect();
    if !unsat(&core) {
        return Ok(Consistency::Consistent);
    }
    let mut i = 0;
    while i < core.len() {
        let mut without = core.clone();
        without.remove(i);
        if unsat(&without) {
            core = without;
        } else {
            i += 1;
        }
    }
    Ok(Consistency::Inconsistent {
        core: core.into_iter().map(|i| theory[i].id.clone()).collect(),
    })
}

/// Whether every ground clause of `candidate` follows from `theory`: each
/// clause is refuted by asserting its negation as unit clauses.
pub fn check_entailment(
    theory: &[Rule],
    candidate: &Rule,
    config: &GroundingConfig,
    onto: &Ontology,
) -> Result<Entailment, GroundingError> {
    let grounder = Grounder::new(onto, config);
    let base = grounder.ground(theory)?;
    for clause in grounder.ground_rule(candidate)?.clauses {
        let mut db = base.clone();
        for l in &clause.literals {
            db.add_clause(
                &[l.negate()],
                Provenance::Assumption(format!("refute {}", candidate.id)),
            );
        }
        if satisfiable(&db, onto, config).is_sat() {
            return Ok(Entailment::Novel);
        }
    }
    Ok(Entailment::Entailed)
}

/// Checks that `theory` plus `candidate` entails every invariant. For each
/// invariant, substitution and head literal, the body is asserted together
/// with the negated head literal; any model found is a violation.
pub fn check_invariants(
    theory: &[Rule],
    candidate: &Rule,
    invariants: &[Rule],
    config: &GroundingConfig,
    onto: &Ontology,
) -> Result<InvariantCheck, GroundingError> {
    if invariants.is_empty() {
        return Ok(InvariantCheck::Preserved);
    }
    let grounder = Grounder::new(onto, config);
    let mut base = grounder.ground(theory)?;
    base.add_ground_rule(&grounder.ground_rule(candidate)?);
    for inv in invariants {
        for subst in grounder.substitutions(inv)? {
            let body: Vec<GroundLiteral> = inv
                .body
                .iter()
                .map(|l| Grounder::ground_literal(l, &subst))
                .collect();
            for h in &inv.head {
                let head = Grounder::ground_literal(h, &subst);
                let mut db = base.clone();
                let prov = || Provenance::Assumption(format!("negate {}", inv.id));
                for b in &body {
                    db.add_clause(std::slice::from_ref(b), prov());
                }
                db.add_clause(&[head.negate()], prov());
                if let SatResult::Sat(model) = satisfiable(&db, onto, config) {
                    let formulas: Vec<GroundFormula> = inv
                        .literals()
                        .map(|l| Grounder::ground_literal(l, &subst).formula)
                        .collect();
                    return Ok(InvariantCheck::Violated {
                        invariant_id: inv.id.clone(),
                        countermodel: db.describe(&model, &formulas),
                    });
                }
            }
        }
    }
    Ok(InvariantCheck::Preserved)
}

/// Runs the verification stages in order and stops at the first failure:
/// schema, grounding, consistency, redundancy, invariants.
pub fn verify(
    candidate: &Rule,
    store: &TheoryStore,
    config: &GroundingConfig,
    onto: &Ontology,
) -> VerificationReport {
    let mut report = VerificationReport {
        rule_id: candidate.id.clone(),
        rule: render_rule(candidate),
        stages: Vec::new(),
        verdict: Verdict::Malformed,
        grounding: config.clone(),
    };
    let finish = |report: &mut VerificationReport, verdict| {
        report.verdict = verdict;
        log::info!("rule {}: {:?}", candidate.id, verdict);
    };

    let violations = validate_schema(candidate, onto);
    let passed = violations.is_empty();
    report.stages.push(StageRecord::Schema { passed, violations });
    if !passed {
        finish(&mut report, Verdict::Malformed);
        return report;
    }

    let theory = store.theory();
    let grounder = Grounder::new(onto, config);
    let mut with_candidate = theory.clone();
    with_candidate.push(candidate.clone());
    // Invariant substitutions are checked here too, so a sort without
    // constants surfaces in this stage rather than a later one.
    let grounding = store
        .invariants
        .iter()
        .try_for_each(|r| grounder.substitutions(r).map(drop))
        .and_then(|()| grounder.ground(&with_candidate));
    match grounding {
        Ok(db) => report.stages.push(StageRecord::Grounding {
            passed: true,
            error: None,
            ground_atoms: db.atoms().len(),
            clauses: db.clauses().len(),
        }),
        Err(e) => {
            report.stages.push(StageRecord::Grounding {
                passed: false,
                error: Some(e.to_string()),
                ground_atoms: 0,
                clauses: 0,
            });
            finish(&mut report, Verdict::Malformed);
            return report;
        }
    }

    // Grounding succeeded above, so the checks below cannot fail to ground.
    let grounded = "grounding already succeeded";
    match check_consistency(&theory, candidate, config, onto).expect(grounded) {
        Consistency::Consistent => report.stages.push(StageRecord::Consistency {
            consistent: true,
            conflict_core: Vec::new(),
        }),
        Consistency::Inconsistent { core } => {
            report.stages.push(StageRecord::Consistency {
                consistent: false,
                conflict_core: core,
            });
            finish(&mut report, Verdict::Inconsistent);
            return report;
        }
    }

    let entailed =
        check_entailment(&theory, candidate, config, onto).expect(grounded) == Entailment::Entailed;
    report.stages.push(StageRecord::Redundancy { entailed });
    if entailed {
        finish(&mut report, Verdict::Redundant);
        return report;
    }

    let checked = store.invariants.iter().map(|r| r.id.clone()).collect();
    match check_invariants(&theory, candidate, &store.invariants, config, onto).expect(grounded) {
        InvariantCheck::Preserved => report.stages.push(StageRecord::Invariants {
            preserved: true,
            checked,
            violated: None,
            countermodel: Vec::new(),
        }),
        InvariantCheck::Violated {
            invariant_id,
            countermodel,
        } => {
            report.stages.push(StageRecord::Invariants {
                preserved: false,
                checked,
                violated: Some(invariant_id),
                countermodel,
            });
            finish(&mut report, Verdict::Unsafe);
            return report;
        }
    }
    finish(&mut report, Verdict::Accepted);
    report
}
