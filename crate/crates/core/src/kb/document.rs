//! JSON layout of the store. Rules are kept in canonical surface syntax and
//! object keys are written in sorted order, so saving is byte-stable.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    ArchivedReport, Cause, Goal, GoalStatus, KbError, Principle, PrincipleKind, TheoryStore,
    VerifiedRule,
};
use crate::fol::{parse_rule_syntax, render_rule, Rule};

const SECTIONS: [&str; 6] = [
    "principles",
    "goals",
    "causes",
    "verified_rules",
    "invariants",
    "reports",
];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    id: String,
    rule: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    origin: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrincipleDoc {
    id: String,
    kind: PrincipleKind,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formal: Option<String>,
    #[serde(default)]
    source: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalDoc {
    id: String,
    text: String,
    status: GoalStatus,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CauseDoc {
    id: String,
    goal_id: String,
    text: String,
    merged_from: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<RuleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule_explanation: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifiedRuleDoc {
    id: String,
    rule: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    origin: String,
    cause_id: String,
    goal_id: String,
    report_id: String,
}

fn format_err(path: impl Into<String>, message: impl ToString) -> KbError {
    KbError::Format {
        path: path.into(),
        message: message.to_string(),
    }
}

fn rule_from_text(text: &str, id: &str, origin: &str, path: &str) -> Result<Rule, KbError> {
    let rule = parse_rule_syntax(text).map_err(|e| format_err(path, e))?;
    Ok(rule.with_id(id).with_origin(origin))
}

fn rule_doc(r: &Rule) -> RuleDoc {
    RuleDoc {
        id: r.id.clone(),
        rule: render_rule(r),
        origin: r.origin.clone(),
    }
}

fn section<T: DeserializeOwned>(doc: &Map<String, Value>, name: &str) -> Result<Vec<T>, KbError> {
    let items = doc
        .get(name)
        .ok_or_else(|| format_err(name, "missing required section"))?
        .as_array()
        .ok_or_else(|| format_err(name, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            serde_json::from_value(item.clone()).map_err(|e| format_err(format!("{name}[{i}]"), e))
        })
        .collect()
}

/// Parses and integrity-checks a store document.
pub fn from_json(text: &str) -> Result<TheoryStore, KbError> {
    let value: Value = serde_json::from_str(text).map_err(|e| format_err("$", e))?;
    let doc = value
        .as_object()
        .ok_or_else(|| format_err("$", "expected an object"))?;
    let missing: Vec<&str> = SECTIONS
        .iter()
        .copied()
        .filter(|s| !doc.contains_key(*s))
        .collect();
    if !missing.is_empty() {
        return Err(format_err(
            "$",
            format!("missing required sections: {}", missing.join(", ")),
        ));
    }
    if let Some(extra) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(format_err(extra.as_str(), "unknown section"));
    }

    let principles = section::<PrincipleDoc>(doc, "principles")?
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let formal = p
                .formal
                .as_deref()
                .map(|t| rule_from_text(t, &p.id, "", &format!("principles[{i}].formal")))
                .transpose()?;
            Ok(Principle {
                id: p.id,
                kind: p.kind,
                text: p.text,
                formal,
                source: p.source,
            })
        })
        .collect::<Result<Vec<_>, KbError>>()?;
    let goals = section::<GoalDoc>(doc, "goals")?
        .into_iter()
        .map(|g| Goal {
            id: g.id,
            text: g.text,
            status: g.status,
        })
        .collect();
    let causes = section::<CauseDoc>(doc, "causes")?
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let rule = c
                .rule
                .as_ref()
                .map(|r| rule_from_text(&r.rule, &r.id, &r.origin, &format!("causes[{i}].rule")))
                .transpose()?;
            Ok(Cause {
                id: c.id,
                goal_id: c.goal_id,
                text: c.text,
                merged_from: c.merged_from,
                rule,
                rule_explanation: c.rule_explanation,
            })
        })
        .collect::<Result<Vec<_>, KbError>>()?;
    let verified_rules = section::<VerifiedRuleDoc>(doc, "verified_rules")?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            Ok(VerifiedRule {
                rule: rule_from_text(&v.rule, &v.id, &v.origin, &format!("verified_rules[{i}].rule"))?,
                cause_id: v.cause_id,
                goal_id: v.goal_id,
                report_id: v.report_id,
            })
        })
        .collect::<Result<Vec<_>, KbError>>()?;
    let invariants = section::<RuleDoc>(doc, "invariants")?
        .into_iter()
        .enumerate()
        .map(|(i, r)| rule_from_text(&r.rule, &r.id, &r.origin, &format!("invariants[{i}].rule")))
        .collect::<Result<Vec<_>, KbError>>()?;
    let reports = section::<ArchivedReport>(doc, "reports")?;

    let store = TheoryStore {
        principles,
        goals,
        causes,
        verified_rules,
        invariants,
        reports,
    };
    store.check_integrity()?;
    Ok(store)
}

fn to_value<T: Serialize>(items: impl Iterator<Item = T>) -> Value {
    Value::Array(
        items
            .map(|i| serde_json::to_value(i).expect("store documents serialize"))
            .collect(),
    )
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn to_json(store: &TheoryStore) -> String {
    let mut doc = Map::new();
    doc.insert(
        "principles".into(),
        to_value(store.principles.iter().map(|p| PrincipleDoc {
            id: p.id.clone(),
            kind: p.kind,
            text: p.text.clone(),
            formal: p.formal.as_ref().map(render_rule),
            source: p.source.clone(),
        })),
    );
    doc.insert(
        "goals".into(),
        to_value(store.goals.iter().map(|g| GoalDoc {
            id: g.id.clone(),
            text: g.text.clone(),
            status: g.status,
        })),
    );
    doc.insert(
        "causes".into(),
        to_value(store.causes.iter().map(|c| CauseDoc {
            id: c.id.clone(),
            goal_id: c.goal_id.clone(),
            text: c.text.clone(),
            merged_from: c.merged_from.clone(),
            rule: c.rule.as_ref().map(rule_doc),
            rule_explanation: c.rule_explanation.clone(),
        })),
    );
    doc.insert(
        "verified_rules".into(),
        to_value(store.verified_rules.iter().map(|v| VerifiedRuleDoc {
            id: v.rule.id.clone(),
            rule: render_rule(&v.rule),
            origin: v.rule.origin.clone(),
            cause_id: v.cause_id.clone(),
            goal_id: v.goal_id.clone(),
            report_id: v.report_id.clone(),
        })),
    );
    doc.insert("invariants".into(), to_value(store.invariants.iter().map(rule_doc)));
    doc.insert("reports".into(), to_value(store.reports.iter()));
    // serde_json's default map is ordered by key, so a round trip through
    // `Value` sorts every nested object as well.
    let sorted: Value = serde_json::to_value(Value::Object(doc)).expect("json value");
    let mut text = serde_json::to_string_pretty(&sorted).expect("json text");
    text.push('\n');
    text
}
