#![allow(dead_code)]

use std::path::PathBuf;

use rulesynth::fol::Ontology;
use rulesynth::kb::{load_store, Goal, GoalStatus, TheoryStore};
use rulesynth::oracle::spec::{DeterministicOracleSpec, SpecBackend};
use rulesynth::oracle::Oracle;
use rulesynth::verification::{GroundingConfig, DEFAULT_DOMAIN_SIZE};

pub fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn ontology() -> Ontology {
    Ontology::load(&scenarios().join("traffic.ontology.json")).unwrap()
}

pub fn store() -> TheoryStore {
    load_store(&scenarios().join("traffic.kb.json")).unwrap()
}

pub fn spec() -> DeterministicOracleSpec {
    DeterministicOracleSpec::load(&scenarios().join("traffic.oracle.json")).unwrap()
}

pub fn det_oracle() -> Oracle {
    Oracle::new(SpecBackend::new(spec()))
}

pub fn grounding() -> GroundingConfig {
    GroundingConfig::for_ontology(&ontology(), DEFAULT_DOMAIN_SIZE)
}

pub fn goal(store: &TheoryStore, id: &str) -> Goal {
    store.goal(id).cloned().unwrap_or(Goal {
        id: id.into(),
        text: id.into(),
        status: GoalStatus::Draft,
    })
}

pub fn ids(family: &[Vec<&str>], goal: &str) -> Vec<Vec<String>> {
    family
        .iter()
        .map(|s| s.iter().map(|c| format!("{goal}-{c}")).collect())
        .collect()
}

use rand::Rng;
use rulesynth::analysis::CauseSet;
use rulesynth::verification::{Cnf, Lit};

/// A random CNF over at most `max_vars` variables and `max_clauses` clauses
/// of width 1..=3.
pub fn random_cnf(rng: &mut impl Rng, max_vars: usize, max_clauses: usize) -> Cnf {
    let n = rng.random_range(1..=max_vars);
    let mut cnf = Cnf::new(n);
    for _ in 0..rng.random_range(0..=max_clauses) {
        let width = rng.random_range(1..=3);
        let clause = (0..width)
            .map(|_| {
                let v = rng.random_range(0..n);
                if rng.random_bool(0.5) { Lit::pos(v) } else { Lit::neg(v) }
            })
            .collect();
        cnf.add(clause);
    }
    cnf
}

/// Satisfiability by enumerating every assignment.
pub fn truth_table_sat(cnf: &Cnf) -> bool {
    (0u64..1 << cnf.num_vars).any(|bits| {
        cnf.clauses
            .iter()
            .all(|c| c.iter().any(|l| ((bits >> l.var) & 1 == 1) == l.positive))
    })
}

/// `pigeons` pigeons in `holes` holes, each hole holding at most one.
pub fn pigeonhole(pigeons: usize, holes: usize) -> Cnf {
    let var = |p: usize, h: usize| p * holes + h;
    let mut cnf = Cnf::new(pigeons * holes);
    for p in 0..pigeons {
        cnf.add((0..holes).map(|h| Lit::pos(var(p, h))).collect());
    }
    for h in 0..holes {
        for p in 0..pigeons {
            for q in p + 1..pigeons {
                cnf.add(vec![Lit::neg(var(p, h)), Lit::neg(var(q, h))]);
            }
        }
    }
    cnf
}

/// A random antichain of nonempty subsets of `0..n` (possibly empty).
pub fn random_antichain(rng: &mut impl Rng, n: usize) -> Vec<CauseSet> {
    let mut sets: Vec<CauseSet> = Vec::new();
    for _ in 0..rng.random_range(0..=4) {
        let s = CauseSet::from_indices((0..n).filter(|_| rng.random_bool(0.4)));
        if s.is_empty() {
            continue;
        }
        if sets.iter().any(|t| t.is_subset_of(s)) {
            continue;
        }
        sets.retain(|t| !s.is_subset_of(*t));
        sets.push(s);
    }
    sets
}

pub fn all_subsets(n: usize) -> impl Iterator<Item = CauseSet> {
    (0u64..1 << n).map(CauseSet::from_bits)
}

/// Inclusion-minimal members of `sets`, sorted by bits.
pub fn minimal_members(sets: Vec<CauseSet>) -> Vec<u64> {
    let mut out: Vec<u64> = sets
        .iter()
        .filter(|s| !sets.iter().any(|t| t != *s && t.is_subset_of(**s)))
        .map(|s| s.bits())
        .collect();
    out.sort();
    out
}

/// Minimal sufficient and minimal necessary sets straight from their
/// definitions over all subsets.
pub fn reference_families(n: usize, achieves: impl Fn(CauseSet) -> bool) -> (Vec<u64>, Vec<u64>) {
    let full = CauseSet::full(n);
    let sufficient = minimal_members(all_subsets(n).filter(|&s| achieves(s)).collect());
    let necessary = if achieves(full) {
        minimal_members(all_subsets(n).filter(|&r| !achieves(full.difference(r))).collect())
    } else {
        Vec::new()
    };
    (sufficient, necessary)
}

/// Minimal hitting sets of `family` by enumeration.
pub fn reference_transversals(n: usize, family: &[CauseSet]) -> Vec<u64> {
    minimal_members(
        all_subsets(n)
            .filter(|t| family.iter().all(|s| s.intersects(*t)))
            .collect(),
    )
}

pub fn bits(sets: &[CauseSet]) -> Vec<u64> {
    let mut v: Vec<u64> = sets.iter().map(|s| s.bits()).collect();
    v.sort();
    v
}
