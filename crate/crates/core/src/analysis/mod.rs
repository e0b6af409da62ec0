//! Necessity and sufficiency analysis of a goal's consolidated causes.

mod search;
mod sets;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use search::{
    brute_force_families, find_minimal_necessary_sets, find_minimal_sufficient_sets,
    minimal_transversals, BruteForceOutcome, Judge, MonotonicityViolation, SearchError,
    SearchOutcome, BRUTE_FORCE_LIMIT,
};
pub use sets::{combinations, CauseSet, CauseSetFamily, MAX_UNIVERSE};

use crate::kb::{Cause, Goal, TheoryStore};
use crate::oracle::{NecessityVerdict, Oracle, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    #[default]
    Pruned,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessityEntry {
    pub cause_id: String,
    #[serde(flatten)]
    pub verdict: NecessityVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedViolation {
    pub achieving: Vec<String>,
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub goal_id: String,
    pub causes: Vec<String>,
    pub individual_necessity: Vec<NecessityEntry>,
    pub minimal_necessary: CauseSetFamily,
    pub minimal_sufficient: CauseSetFamily,
    /// Disjunction of conjunctions of cause ids: one disjunct per minimal
    /// sufficient set.
    pub necessary_and_sufficient: Vec<Vec<String>>,
    /// Causes present in every minimal sufficient set.
    pub structurally_necessary: Vec<String>,
    /// Distinct subsets judged by the oracle.
    pub query_count: usize,
    pub monotonicity_violations: Vec<NamedViolation>,
    /// The minimal necessary family differs from the minimal transversals
    /// of the minimal sufficient family.
    pub duality_mismatch: bool,
    /// No subset of the causes achieves the goal.
    pub effect_unachievable: bool,
    pub search: SearchMode,
}

impl AnalysisReport {
    pub fn individually_necessary(&self) -> Vec<&str> {
        self.individual_necessity
            .iter()
            .filter(|e| e.verdict.necessary)
            .map(|e| e.cause_id.as_str())
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("goal `{0}` has no consolidated causes")]
    NoCauses(String),
    #[error("goal has {size} causes; the search supports at most {limit}")]
    UniverseTooLarge { size: usize, limit: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<SearchError<OracleError>> for AnalysisError {
    fn from(e: SearchError<OracleError>) -> Self {
        match e {
            SearchError::UniverseTooLarge { size, limit } => {
                AnalysisError::UniverseTooLarge { size, limit }
            }
            SearchError::Oracle(e) => AnalysisError::Oracle(e),
        }
    }
}

fn named(universe: &[String], v: &MonotonicityViolation) -> NamedViolation {
    let names = |s: CauseSet| s.names(universe).into_iter().map(String::from).collect();
    NamedViolation {
        achieving: names(v.achieving),
        failing: names(v.failing),
    }
}

/// Individual necessity per cause, then the minimal necessary and minimal
/// sufficient families with a duality cross-check. Subset judgments are
/// shared between both searches.
pub fn analyze(
    goal_id: &str,
    store: &TheoryStore,
    oracle: &Oracle,
    mode: SearchMode,
) -> Result<AnalysisReport, AnalysisError> {
    let goal: &Goal = store
        .goal(goal_id)
        .ok_or_else(|| AnalysisError::UnknownGoal(goal_id.to_string()))?;
    let causes: Vec<&Cause> = store.causes_of(goal_id).collect();
    if causes.is_empty() {
        return Err(AnalysisError::NoCauses(goal_id.to_string()));
    }
    let universe: Vec<String> = causes.iter().map(|c| c.id.clone()).collect();
    let principles = &store.principles;

    let individual_necessity = causes
        .iter()
        .map(|c| {
            Ok(NecessityEntry {
                cause_id: c.id.clone(),
                verdict: oracle.judge_individual_necessity(c, goal, principles)?,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;

    let mut judge = Judge::new(|set: CauseSet| {
        let subset: Vec<&Cause> = set.indices().map(|i| causes[i]).collect();
        oracle.judge_subset_achieves(goal, &subset, principles)
    });
    let (minimal_sufficient, minimal_necessary, violations) = match mode {
        SearchMode::Pruned => {
            // The necessary search probes large subsets first; the failures
            // it finds spare most of the sufficient search's queries.
            let nec = find_minimal_necessary_sets(&universe, &mut judge)?;
            let suf = find_minimal_sufficient_sets(&universe, &mut judge)?;
            let mut violations = suf.violations;
            violations.extend(nec.violations);
            (suf.family, nec.family, violations)
        }
        SearchMode::BruteForce => {
            let bf = brute_force_families(&universe, &mut judge)?;
            (bf.minimal_sufficient, bf.minimal_necessary, bf.violations)
        }
    };
    let query_count = judge.queries();

    let effect_unachievable = minimal_sufficient.is_empty();
    let duality_mismatch =
        !effect_unachievable && minimal_transversals(&minimal_sufficient) != minimal_necessary;
    if duality_mismatch {
        log::warn!("goal {goal_id}: minimal necessary sets are not the transversals of the sufficient sets");
    }
    let core = minimal_sufficient.common_core();

    Ok(AnalysisReport {
        goal_id: goal_id.to_string(),
        necessary_and_sufficient: minimal_sufficient.named(),
        structurally_necessary: core.names(&universe).into_iter().map(String::from).collect(),
        monotonicity_violations: violations.iter().map(|v| named(&universe, v)).collect(),
        causes: universe,
        individual_necessity,
        minimal_necessary,
        minimal_sufficient,
        query_count,
        duality_mismatch,
        effect_unachievable,
        search: mode,
    })
}
