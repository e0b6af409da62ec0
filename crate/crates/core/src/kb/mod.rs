//! The theory store: principles, goals, causes, verified rules, safety
//! invariants and archived reports in one JSON document.
//!
//! A store is a value. Every mutating operation returns a new store and
//! leaves the receiver untouched; file locking is left to the caller
//! (single writer).

mod document;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalysisReport;
use crate::consolidation::MergePartition;
use crate::fol::{Ontology, Rule, Violation};
use crate::verification::{Verdict, VerificationReport};

pub use document::{from_json, to_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrincipleKind {
    Legal,
    Safety,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principle {
    pub id: String,
    pub kind: PrincipleKind,
    pub text: String,
    /// Formal counterpart; its rule id equals the principle id.
    pub formal: Option<Rule>,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalStatus {
    Draft,
    Analyzed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub id: String,
    pub text: String,
    pub status: GoalStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cause {
    pub id: String,
    pub goal_id: String,
    pub text: String,
    pub merged_from: Vec<String>,
    pub rule: Option<Rule>,
    pub rule_explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedRule {
    pub rule: Rule,
    pub cause_id: String,
    pub goal_id: String,
    pub report_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationEntry {
    pub cause_id: String,
    pub rule: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Generation {
        goal_id: String,
        raw_causes: Vec<String>,
    },
    Consolidation {
        goal_id: String,
        partition: MergePartition,
    },
    Translation {
        goal_id: String,
        translations: Vec<TranslationEntry>,
    },
    Analysis(AnalysisReport),
    Verification(VerificationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivedReport {
    pub id: String,
    #[serde(flatten)]
    pub body: ReportBody,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TheoryStore {
    pub principles: Vec<Principle>,
    pub goals: Vec<Goal>,
    pub causes: Vec<Cause>,
    pub verified_rules: Vec<VerifiedRule>,
    pub invariants: Vec<Rule>,
    pub reports: Vec<ArchivedReport>,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error at {path}: {message}")]
    Format { path: String, message: String },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("rule {rule_id} rejected: verdict is {verdict:?}, not Accepted")]
    Rejected { rule_id: String, verdict: Verdict },
    #[error("schema error in {owner}: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Schema {
        owner: String,
        violations: Vec<Violation>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitOutcome {
    Committed,
    /// A structurally equal rule was already verified; the store is unchanged.
    Duplicate,
}

pub fn load_store(path: &Path) -> Result<TheoryStore, KbError> {
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

pub fn save_store(store: &TheoryStore, path: &Path) -> Result<(), KbError> {
    std::fs::write(path, to_json(store)).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn unique_ids<'a>(section: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), KbError> {
    let mut seen = HashSet::new();
    for id in ids {
        if id.is_empty() {
            return Err(KbError::Integrity(format!("{section}: empty id")));
        }
        if !seen.insert(id) {
            return Err(KbError::Integrity(format!("{section}: duplicate id `{id}`")));
        }
    }
    Ok(())
}

impl TheoryStore {
    pub fn goal(&self, id: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.id == id)
    }

    pub fn cause(&self, id: &str) -> Option<&Cause> {
        self.causes.iter().find(|c| c.id == id)
    }

    pub fn report(&self, id: &str) -> Option<&ArchivedReport> {
        self.reports.iter().find(|r| r.id == id)
    }

    pub fn causes_of<'a>(&'a self, goal_id: &'a str) -> impl Iterator<Item = &'a Cause> + 'a {
        self.causes.iter().filter(move |c| c.goal_id == goal_id)
    }

    /// Formal principles followed by verified rules, each carrying its own id.
    pub fn theory(&self) -> Vec<Rule> {
        self.principles
            .iter()
            .filter_map(|p| p.formal.clone())
            .chain(self.verified_rules.iter().map(|v| v.rule.clone()))
            .collect()
    }

    pub fn is_verified(&self, rule: &Rule) -> bool {
        self.verified_rules.iter().any(|v| v.rule.same_formula(rule))
    }

    /// Checks every store invariant that does not need an ontology.
    pub fn check_integrity(&self) -> Result<(), KbError> {
        unique_ids("principles", self.principles.iter().map(|p| p.id.as_str()))?;
        unique_ids("goals", self.goals.iter().map(|g| g.id.as_str()))?;
        unique_ids("causes", self.causes.iter().map(|c| c.id.as_str()))?;
        unique_ids("invariants", self.invariants.iter().map(|r| r.id.as_str()))?;
        unique_ids("reports", self.reports.iter().map(|r| r.id.as_str()))?;
        unique_ids(
            "verified_rules",
            self.verified_rules.iter().map(|v| v.rule.id.as_str()),
        )?;
        for g in &self.goals {
            if g.text.trim().is_empty() {
                return Err(KbError::Integrity(format!("goal `{}` has empty text", g.id)));
            }
        }
        for c in &self.causes {
            if self.goal(&c.goal_id).is_none() {
                return Err(KbError::Integrity(format!(
                    "cause `{}` refers to unknown goal `{}`",
                    c.id, c.goal_id
                )));
            }
            if c.merged_from.is_empty() {
                return Err(KbError::Integrity(format!(
                    "cause `{}` has no source candidates",
                    c.id
                )));
            }
        }
        for (i, v) in self.verified_rules.iter().enumerate() {
            self.check_trace(&v.cause_id, &v.goal_id)?;
            if self.report(&v.report_id).is_none() {
                return Err(KbError::Integrity(format!(
                    "verified rule `{}` refers to unknown report `{}`",
                    v.rule.id, v.report_id
                )));
            }
            if self.verified_rules[..i]
                .iter()
                .any(|w| w.rule.same_formula(&v.rule))
            {
                return Err(KbError::Integrity(format!(
                    "verified rule `{}` duplicates an earlier verified rule",
                    v.rule.id
                )));
            }
        }
        Ok(())
    }

    fn check_trace(&self, cause_id: &str, goal_id: &str) -> Result<(), KbError> {
        let cause = self.cause(cause_id).ok_or_else(|| {
            KbError::Integrity(format!("trace refers to unknown cause `{cause_id}`"))
        })?;
        if cause.goal_id != goal_id {
            return Err(KbError::Integrity(format!(
                "cause `{cause_id}` belongs to goal `{}`, not `{goal_id}`",
                cause.goal_id
            )));
        }
        if self.goal(goal_id).is_none() {
            return Err(KbError::Integrity(format!(
                "trace refers to unknown goal `{goal_id}`"
            )));
        }
        Ok(())
    }

    /// Validates every formal principle, cause rule, verified rule and
    /// invariant against `onto`.
    pub fn check_schema(&self, onto: &Ontology) -> Result<(), KbError> {
        let rules = self
            .principles
            .iter()
            .filter_map(|p| p.formal.as_ref().map(|r| (format!("principle {}", p.id), r)))
            .chain(
                self.causes
                    .iter()
                    .filter_map(|c| c.rule.as_ref().map(|r| (format!("cause {}", c.id), r))),
            )
            .chain(
                self.verified_rules
                    .iter()
                    .map(|v| (format!("verified rule {}", v.rule.id), &v.rule)),
            )
            .chain(
                self.invariants
                    .iter()
                    .map(|r| (format!("invariant {}", r.id), r)),
            );
        for (owner, rule) in rules {
            let violations = crate::fol::validate_schema(rule, onto);
            if !violations.is_empty() {
                return Err(KbError::Schema { owner, violations });
            }
        }
        Ok(())
    }

    fn next_report_id(&self) -> String {
        format!("rpt-{:04}", self.reports.len() + 1)
    }

    /// Archives `body` and returns the new store with the assigned report id.
    pub fn archive_report(&self, body: ReportBody) -> (TheoryStore, String) {
        let mut next = self.clone();
        let id = self.next_report_id();
        next.reports.push(ArchivedReport {
            id: id.clone(),
            body,
        });
        (next, id)
    }

    /// Adds `goal` unless a goal with its id exists (the existing one is kept).
    pub fn with_goal(&self, goal: Goal) -> Result<TheoryStore, KbError> {
        if goal.text.trim().is_empty() {
            return Err(KbError::Integrity(format!("goal `{}` has empty text", goal.id)));
        }
        let mut next = self.clone();
        if next.goal(&goal.id).is_none() {
            next.goals.push(goal);
        }
        Ok(next)
    }

    pub fn with_goal_status(&self, goal_id: &str, status: GoalStatus) -> Result<TheoryStore, KbError> {
        let mut next = self.clone();
        let goal = next
            .goals
            .iter_mut()
            .find(|g| g.id == goal_id)
            .ok_or_else(|| KbError::Integrity(format!("unknown goal `{goal_id}`")))?;
        goal.status = status;
        Ok(next)
    }

    /// Replaces the causes of `goal_id`. Refused when a verified rule traces
    /// to one of the current causes.
    pub fn with_causes(&self, goal_id: &str, causes: Vec<Cause>) -> Result<TheoryStore, KbError> {
        if self.goal(goal_id).is_none() {
            return Err(KbError::Integrity(format!("unknown goal `{goal_id}`")));
        }
        if let Some(v) = self.verified_rules.iter().find(|v| v.goal_id == goal_id) {
            return Err(KbError::Integrity(format!(
                "goal `{goal_id}` already has verified rule `{}`; its causes cannot be replaced",
                v.rule.id
            )));
        }
        let mut next = self.clone();
        next.causes.retain(|c| c.goal_id != goal_id);
        for c in causes {
            if c.goal_id != goal_id {
                return Err(KbError::Integrity(format!(
                    "cause `{}` does not belong to goal `{goal_id}`",
                    c.id
                )));
            }
            next.causes.push(c);
        }
        next.check_integrity()?;
        Ok(next)
    }

    /// Promotes an accepted rule into the verified theory with its trace and
    /// archives the report. Committing a rule whose formula is already
    /// verified leaves the store unchanged.
    pub fn commit_verified_rule(
        &self,
        rule: &Rule,
        cause_id: &str,
        goal_id: &str,
        report: &VerificationReport,
    ) -> Result<(TheoryStore, CommitOutcome), KbError> {
        if report.verdict != Verdict::Accepted {
            return Err(KbError::Rejected {
                rule_id: rule.id.clone(),
                verdict: report.verdict,
            });
        }
        self.check_trace(cause_id, goal_id)?;
        if self.is_verified(rule) {
            return Ok((self.clone(), CommitOutcome::Duplicate));
        }
        let mut rule = rule.clone();
        if self.verified_rules.iter().any(|v| v.rule.id == rule.id) {
            rule.id = rule.content_id();
        }
        let (mut next, report_id) =
            self.archive_report(ReportBody::Verification(report.clone()));
        next.verified_rules.push(VerifiedRule {
            rule,
            cause_id: cause_id.to_string(),
            goal_id: goal_id.to_string(),
            report_id,
        });
        Ok((next, CommitOutcome::Committed))
    }
}

#[cfg(test)]
mod tests;
