//! A deterministic oracle described by a JSON document.
//!
//! Per goal the document lists the raw candidate causes, their partition
//! into equivalence classes (each with a merged representative), necessity
//! verdicts and a family of sufficient sets. Consolidated causes are the
//! class representatives, labelled `c1`, `c2`, ... in class order; class
//! order must follow the first member's position among the raw causes, which
//! is the order consolidation produces. A subset achieves the goal iff it
//! contains some member of the sufficient family, so the oracle is monotone.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, NecessityVerdict, OracleError, QueryKind, Request};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceClass {
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub raw_causes: Vec<String>,
    pub equivalence_classes: Vec<EquivalenceClass>,
    /// Keyed by cause label (`c1`, ...); unlisted causes are not necessary.
    #[serde(default)]
    pub individually_necessary: BTreeMap<String, NecessityVerdict>,
    /// Sets of cause labels.
    pub sufficient_family: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationSpec {
    pub rule: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterministicOracleSpec {
    pub goals: BTreeMap<String, GoalSpec>,
    /// Keyed by consolidated cause text.
    #[serde(default)]
    pub translations: BTreeMap<String, TranslationSpec>,
}

impl GoalSpec {
    pub fn label(index: usize) -> String {
        format!("c{}", index + 1)
    }

    /// Consolidated cause texts in label order.
    pub fn causes(&self) -> Vec<&str> {
        self.equivalence_classes
            .iter()
            .map(|c| c.representative.as_str())
            .collect()
    }

    fn label_of(&self, text: &str) -> Option<String> {
        self.equivalence_classes
            .iter()
            .position(|c| c.representative == text)
            .map(Self::label)
    }

    fn class_of(&self, text: &str) -> Option<usize> {
        self.equivalence_classes
            .iter()
            .position(|c| c.representative == text || c.members.iter().any(|m| m == text))
    }

    /// `subset` (labels) contains some member of the sufficient family.
    pub fn achieves(&self, subset: &BTreeSet<String>) -> bool {
        self.sufficient_family
            .iter()
            .any(|f| f.iter().all(|c| subset.contains(c)))
    }

    fn check(&self, goal: &str) -> Result<(), String> {
        let err = |m: String| Err(format!("goal {goal}: {m}"));
        let raw: HashSet<&str> = self.raw_causes.iter().map(String::as_str).collect();
        if raw.len() != self.raw_causes.len() {
            return err("raw causes contain duplicates".into());
        }
        let mut seen = HashSet::new();
        let mut last_first = None;
        for (i, class) in self.equivalence_classes.iter().enumerate() {
            if class.members.is_empty() {
                return err(format!("class {} has no members", i + 1));
            }
            if class.members.len() == 1 && class.members[0] != class.representative {
                return err(format!(
                    "singleton class {} must use its member as representative",
                    i + 1
                ));
            }
            for m in &class.members {
                if !raw.contains(m.as_str()) {
                    return err(format!("class member `{m}` is not a raw cause"));
                }
                if !seen.insert(m.as_str()) {
                    return err(format!("`{m}` belongs to two classes"));
                }
            }
            let first = class
                .members
                .iter()
                .filter_map(|m| self.raw_causes.iter().position(|r| r == m))
                .min();
            if first <= last_first {
                return err("classes must be ordered by their first raw cause".into());
            }
            last_first = first;
        }
        if seen.len() != raw.len() {
            return err("equivalence classes do not cover every raw cause".into());
        }
        let labels: HashSet<String> = (0..self.equivalence_classes.len()).map(Self::label).collect();
        for label in self
            .sufficient_family
            .iter()
            .flatten()
            .chain(self.individually_necessary.keys())
        {
            if !labels.contains(label) {
                return err(format!("unknown cause label `{label}`"));
            }
        }
        Ok(())
    }
}

impl DeterministicOracleSpec {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let spec: DeterministicOracleSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn check(&self) -> Result<(), String> {
        self.goals.iter().try_for_each(|(id, g)| g.check(id))
    }

    fn goal(&self, payload: &Value) -> Result<&GoalSpec, OracleError> {
        let id = payload["goal_id"].as_str().unwrap_or_default();
        self.goals
            .get(id)
            .ok_or_else(|| OracleError::Unsupported(format!("no deterministic data for goal `{id}`")))
    }

    fn equivalent(&self, a: &str, b: &str) -> Value {
        for g in self.goals.values() {
            if let (Some(x), Some(y)) = (g.class_of(a), g.class_of(b)) {
                if x == y {
                    let merged = &g.equivalence_classes[x].representative;
                    return json!({"equivalent": true, "merged_text": merged});
                }
            }
        }
        json!({"equivalent": false, "merged_text": null})
    }
}

fn text_field<'a>(payload: &'a Value, field: &str) -> &'a str {
    payload[field].as_str().unwrap_or_default()
}

/// Answers every query from a [`DeterministicOracleSpec`].
pub struct SpecBackend {
    spec: DeterministicOracleSpec,
}

impl SpecBackend {
    pub fn new(spec: DeterministicOracleSpec) -> Self {
        SpecBackend { spec }
    }
}

impl Backend for SpecBackend {
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        let p = &request.payload;
        match request.kind {
            QueryKind::GenerateCauses => {
                let g = self.spec.goal(p)?;
                let n = p["count_hint"].as_u64().unwrap_or(u64::MAX) as usize;
                let causes: Vec<&String> = g.raw_causes.iter().take(n).collect();
                Ok(json!({ "causes": causes }))
            }
            QueryKind::Equivalent => Ok(self.spec.equivalent(text_field(p, "a"), text_field(p, "b"))),
            QueryKind::IndividualNecessity => {
                let g = self.spec.goal(p)?;
                let text = text_field(p, "cause");
                let label = g.label_of(text).ok_or_else(|| {
                    OracleError::Unsupported(format!("unknown consolidated cause `{text}`"))
                })?;
                let verdict = g.individually_necessary.get(&label).cloned().unwrap_or(NecessityVerdict {
                    necessary: false,
                    rationale: String::new(),
                    cited_principles: Vec::new(),
                });
                Ok(serde_json::to_value(verdict).expect("verdict serializes"))
            }
            QueryKind::SubsetAchieves => {
                let g = self.spec.goal(p)?;
                let mut labels = BTreeSet::new();
                for c in p["causes"].as_array().into_iter().flatten() {
                    let text = text_field(c, "text");
                    labels.insert(g.label_of(text).ok_or_else(|| {
                        OracleError::Unsupported(format!("unknown consolidated cause `{text}`"))
                    })?);
                }
                Ok(json!({"achieves": g.achieves(&labels)}))
            }
            QueryKind::Translate => {
                let text = text_field(p, "cause");
                let t = self.spec.translations.get(text).ok_or_else(|| {
                    OracleError::Unsupported(format!("no translation for `{text}`"))
                })?;
                Ok(json!({"rule": t.rule, "explanation": t.explanation}))
            }
        }
    }
}
