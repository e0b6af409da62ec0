//! The synthesis, analysis and verification stages over a store. Each stage
//! archives one report per step it runs and returns the updated store.

use thiserror::Error;

use crate::analysis::{analyze, AnalysisError, AnalysisReport, SearchMode};
use crate::consolidation::{consolidate, MergePartition};
use crate::fol::Ontology;
use crate::kb::{
    Cause, CommitOutcome, Goal, GoalStatus, KbError, ReportBody, TheoryStore, TranslationEntry,
};
use crate::oracle::{Oracle, OracleError};
use crate::verification::{verify, GroundingConfig, Verdict, VerificationReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("the store has no principles to reason with")]
    NoPrinciples,
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub raw_causes: Vec<String>,
    pub partition: MergePartition,
    pub causes: Vec<Cause>,
}

pub fn cause_id(goal_id: &str, index: usize) -> String {
    format!("{goal_id}-c{}", index + 1)
}

pub fn rule_id(cause_id: &str) -> String {
    format!("{cause_id}-rule")
}

/// Generates raw causes for `goal`, consolidates them and translates every
/// consolidated cause. The goal is added to the store if it is new and its
/// causes are replaced.
pub fn synthesize(
    store: &TheoryStore,
    goal: &Goal,
    oracle: &Oracle,
    onto: &Ontology,
    count_hint: usize,
) -> Result<(TheoryStore, Synthesis), PipelineError> {
    if store.principles.is_empty() {
        return Err(PipelineError::NoPrinciples);
    }
    let store = store.with_goal(goal.clone())?;
    let goal = store.goal(&goal.id).expect("just added").clone();

    let mut raw_causes: Vec<String> = Vec::new();
    for c in oracle.generate_causes(&goal, &store.principles, count_hint)? {
        if !raw_causes.contains(&c) {
            raw_causes.push(c);
        }
    }
    let (store, _) = store.archive_report(ReportBody::Generation {
        goal_id: goal.id.clone(),
        raw_causes: raw_causes.clone(),
    });

    let partition = consolidate(&raw_causes, oracle)?;
    let (store, _) = store.archive_report(ReportBody::Consolidation {
        goal_id: goal.id.clone(),
        partition: partition.clone(),
    });

    let mut causes = Vec::new();
    for (i, class) in partition.classes.iter().enumerate() {
        let mut cause = Cause {
            id: cause_id(&goal.id, i),
            goal_id: goal.id.clone(),
            text: class.representative.clone(),
            merged_from: class.members.clone(),
            rule: None,
            rule_explanation: None,
        };
        let t = oracle.translate_to_fol(&cause, onto)?;
        cause.rule = Some(t.rule.with_id(rule_id(&cause.id)).with_origin(t.explanation.clone()));
        cause.rule_explanation = Some(t.explanation);
        causes.push(cause);
    }
    let (store, _) = store.archive_report(ReportBody::Translation {
        goal_id: goal.id.clone(),
        translations: causes
            .iter()
            .map(|c| TranslationEntry {
                cause_id: c.id.clone(),
                rule: c.rule.as_ref().map(|r| r.to_string()).unwrap_or_default(),
                explanation: c.rule_explanation.clone().unwrap_or_default(),
            })
            .collect(),
    });
    let store = store
        .with_causes(&goal.id, causes.clone())?
        .with_goal_status(&goal.id, GoalStatus::Draft)?;
    Ok((
        store,
        Synthesis {
            raw_causes,
            partition,
            causes,
        },
    ))
}

/// Runs the analysis for `goal_id`, archives the report and marks the goal
/// analyzed.
pub fn analyze_goal(
    store: &TheoryStore,
    goal_id: &str,
    oracle: &Oracle,
    mode: SearchMode,
) -> Result<(TheoryStore, AnalysisReport), PipelineError> {
    let report = analyze(goal_id, store, oracle, mode)?;
    let (store, _) = store.archive_report(ReportBody::Analysis(report.clone()));
    let store = store.with_goal_status(goal_id, GoalStatus::Analyzed)?;
    Ok((store, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleOutcome {
    pub cause_id: String,
    pub goal_id: String,
    pub report_id: String,
    pub report: VerificationReport,
    /// Set when the rule was accepted.
    pub commit: Option<CommitOutcome>,
}

impl RuleOutcome {
    pub fn verdict(&self) -> Verdict {
        self.report.verdict
    }
}

/// Which cause rules to verify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// Every cause rule, optionally of one goal only.
    All { goal_id: Option<String> },
    /// The cause rules with these rule ids.
    Rules(Vec<String>),
    /// Every cause rule whose formula is not yet in the verified theory.
    Unverified,
}

/// Verifies the selected cause rules in store order against the evolving
/// theory. Accepted rules are committed with their report; every other
/// report is archived as well.
pub fn verify_rules(
    store: &TheoryStore,
    selection: &Selection,
    config: &GroundingConfig,
    onto: &Ontology,
) -> Result<(TheoryStore, Vec<RuleOutcome>), PipelineError> {
    let with_rules = store.causes.iter().filter(|c| c.rule.is_some());
    let candidates: Vec<Cause> = match selection {
        Selection::All { goal_id } => {
            if let Some(g) = goal_id {
                if store.goal(g).is_none() {
                    return Err(PipelineError::UnknownGoal(g.clone()));
                }
            }
            with_rules
                .filter(|c| goal_id.as_ref().is_none_or(|g| &c.goal_id == g))
                .cloned()
                .collect()
        }
        Selection::Rules(ids) => {
            let mut out = Vec::new();
            for id in ids {
                let cause = store
                    .causes
                    .iter()
                    .find(|c| c.rule.as_ref().is_some_and(|r| &r.id == id))
                    .ok_or_else(|| PipelineError::UnknownRule(id.clone()))?;
                out.push(cause.clone());
            }
            out
        }
        Selection::Unverified => with_rules
            .filter(|c| !store.is_verified(c.rule.as_ref().expect("filtered on rule")))
            .cloned()
            .collect(),
    };

    let mut current = store.clone();
    let mut outcomes = Vec::new();
    for cause in candidates {
        let rule = cause.rule.as_ref().expect("filtered on rule");
        let report = verify(rule, &current, config, onto);
        let (next, report_id, commit) = if report.verdict == Verdict::Accepted {
            let (next, outcome) =
                current.commit_verified_rule(rule, &cause.id, &cause.goal_id, &report)?;
            let (next, id) = match outcome {
                CommitOutcome::Committed => {
                    let id = next.reports.last().expect("commit archives").id.clone();
                    (next, id)
                }
                CommitOutcome::Duplicate => {
                    next.archive_report(ReportBody::Verification(report.clone()))
                }
            };
            (next, id, Some(outcome))
        } else {
            let (next, id) = current.archive_report(ReportBody::Verification(report.clone()));
            (next, id, None)
        };
        current = next;
        outcomes.push(RuleOutcome {
            cause_id: cause.id.clone(),
            goal_id: cause.goal_id.clone(),
            report_id,
            report,
            commit,
        });
    }
    Ok((current, outcomes))
}
