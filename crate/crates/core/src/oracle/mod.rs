//! The judgment interface queried by the pipeline.
//!
//! An [`Oracle`] turns typed questions (generate causes, compare two causes,
//! judge necessity, judge a cause subset, translate a cause) into
//! [`Request`]s, sends them to a [`Backend`] through a single-flight cache and
//! validates the structured answers. Backends: a deterministic one driven by
//! a [`spec::DeterministicOracleSpec`], an HTTP one for OpenAI-compatible chat
//! completions, and transcript replay/recording.

pub mod llm;
mod prompts;
pub mod spec;
pub mod transcript;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fol::{parse_rule, Ontology, Rule};
use crate::kb::{Cause, Goal, Principle};

pub use llm::{LlmBackend, LlmConfig};
pub use spec::{DeterministicOracleSpec, SpecBackend};
pub use transcript::{RecordingBackend, ReplayBackend, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    GenerateCauses,
    Equivalent,
    IndividualNecessity,
    SubsetAchieves,
    Translate,
}

impl QueryKind {
    pub fn name(self) -> &'static str {
        match self {
            QueryKind::GenerateCauses => "generate_causes",
            QueryKind::Equivalent => "equivalent",
            QueryKind::IndividualNecessity => "individual_necessity",
            QueryKind::SubsetAchieves => "subset_achieves",
            QueryKind::Translate => "translate",
        }
    }
}

/// One question for a backend. `payload` carries the structured inputs;
/// `system`/`user` are the same inputs rendered as chat messages and
/// `schema` is the JSON schema the answer must follow.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub kind: QueryKind,
    pub key: String,
    pub system: String,
    pub user: String,
    pub schema: Value,
    pub payload: Value,
}

pub trait Backend: Send + Sync {
    fn answer(&self, request: &Request) -> Result<Value, OracleError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        (**self).answer(request)
    }
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        (**self).answer(request)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle unavailable: {0}")]
    Unavailable(String),
    #[error("malformed oracle response for {key}: {message}")]
    Malformed { key: String, message: String },
    #[error("transcript has no entry for query key {key}")]
    MissingTranscriptEntry { key: String },
    #[error("cause {cause_id} could not be translated: {message}")]
    Untranslatable { cause_id: String, message: String },
    #[error("oracle cannot answer: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

type Slot = Arc<Mutex<Option<Value>>>;

/// Answers by canonical key. Concurrent requests for one key wait on the
/// key's slot, so the backend sees each key at most once. Failed calls are
/// not cached.
#[derive(Default)]
pub struct QueryCache {
    slots: Mutex<HashMap<String, Slot>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl QueryCache {
    pub fn get_or_fetch(
        &self,
        key: &str,
        fetch: impl FnOnce() -> Result<Value, OracleError>,
    ) -> Result<Value, OracleError> {
        let slot = self
            .slots
            .lock()
            .expect("cache index poisoned")
            .entry(key.to_string())
            .or_default()
            .clone();
        let mut guard = slot.lock().expect("cache slot poisoned");
        if let Some(v) = guard.as_ref() {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = fetch()?;
        *guard = Some(v.clone());
        Ok(v)
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub equivalent: bool,
    pub merged_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessityVerdict {
    pub necessary: bool,
    pub rationale: String,
    #[serde(default)]
    pub cited_principles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub rule: Rule,
    pub rule_text: String,
    pub explanation: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CausesAnswer {
    causes: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquivalentAnswer {
    equivalent: bool,
    #[serde(default)]
    merged_text: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AchievesAnswer {
    achieves: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TranslateAnswer {
    rule: String,
    explanation: String,
}

/// Number of extra attempts after a malformed or unparsable answer.
pub const MAX_REASKS: usize = 1;

fn retry_key(key: &str, attempt: usize) -> String {
    if attempt == 0 {
        key.to_string()
    } else {
        format!("{key}#retry{attempt}")
    }
}

fn canonical_key(parts: Value) -> String {
    serde_json::to_string(&parts).expect("keys serialize")
}

fn principles_payload(principles: &[Principle]) -> Value {
    Value::Array(
        principles
            .iter()
            .map(|p| json!({"id": p.id, "kind": p.kind, "text": p.text}))
            .collect(),
    )
}

pub struct Oracle {
    backend: Box<dyn Backend>,
    cache: QueryCache,
}

impl Oracle {
    pub fn new(backend: impl Backend + 'static) -> Self {
        Oracle {
            backend: Box::new(backend),
            cache: QueryCache::default(),
        }
    }

    pub fn stats(&self) -> CacheStats {
        self.cache.stats()
    }

    fn fetch(&self, kind: QueryKind, key: &str, payload: &Value, problem: Option<&str>) -> Result<Value, OracleError> {
        let (system, mut user) = prompts::render(kind, payload);
        if let Some(p) = problem {
            user.push_str(&format!(
                "\n\nYour previous answer was rejected: {p}\nAnswer again, following the schema exactly."
            ));
        }
        let request = Request {
            kind,
            key: key.to_string(),
            system,
            user,
            schema: prompts::schema(kind),
            payload: payload.clone(),
        };
        self.cache.get_or_fetch(key, || {
            log::debug!("oracle query {key}");
            self.backend.answer(&request)
        })
    }

    /// Asks `key`, re-asking once when the answer does not deserialize into
    /// `T` or fails `check`.
    fn ask<T: DeserializeOwned>(
        &self,
        kind: QueryKind,
        key: &str,
        payload: Value,
        check: impl Fn(&T) -> Result<(), String>,
    ) -> Result<T, OracleError> {
        let mut problem: Option<String> = None;
        for attempt in 0..=MAX_REASKS {
            let value = self.fetch(kind, &retry_key(key, attempt), &payload, problem.as_deref())?;
            match serde_json::from_value::<T>(value).map_err(|e| e.to_string()) {
                Ok(answer) => match check(&answer) {
                    Ok(()) => return Ok(answer),
                    Err(msg) => problem = Some(msg),
                },
                Err(msg) => problem = Some(msg),
            }
            log::warn!("oracle answer for {key} rejected: {}", problem.as_deref().unwrap_or(""));
        }
        Err(OracleError::Malformed {
            key: key.to_string(),
            message: problem.unwrap_or_default(),
        })
    }

    /// Raw candidate causes for `goal`, in emission order; between 1 and
    /// `count_hint` nonempty sentences.
    pub fn generate_causes(
        &self,
        goal: &Goal,
        principles: &[Principle],
        count_hint: usize,
    ) -> Result<Vec<String>, OracleError> {
        let key = canonical_key(json!(["generate_causes", goal.id, count_hint]));
        let payload = json!({
            "goal_id": goal.id,
            "goal": goal.text,
            "principles": principles_payload(principles),
            "count_hint": count_hint,
        });
        let answer: CausesAnswer = self.ask(QueryKind::GenerateCauses, &key, payload, |a: &CausesAnswer| {
            if a.causes.is_empty() || a.causes.len() > count_hint {
                return Err(format!("expected 1 to {count_hint} causes, got {}", a.causes.len()));
            }
            if a.causes.iter().any(|c| c.trim().is_empty()) {
                return Err("empty cause text".into());
            }
            Ok(())
        })?;
        Ok(answer.causes.into_iter().map(|c| c.trim().to_string()).collect())
    }

    /// Whether two cause texts describe the same condition. The pair is put
    /// in canonical order first, so the verdict is symmetric; identical texts
    /// are equivalent without a query.
    pub fn judge_equivalent(&self, a: &str, b: &str) -> Result<Equivalence, OracleError> {
        if a == b {
            return Ok(Equivalence {
                equivalent: true,
                merged_text: Some(a.to_string()),
            });
        }
        let (first, second) = if a <= b { (a, b) } else { (b, a) };
        let key = canonical_key(json!(["equivalent", first, second]));
        let payload = json!({"a": first, "b": second});
        let answer: EquivalentAnswer = self.ask(QueryKind::Equivalent, &key, payload, |e: &EquivalentAnswer| {
            match (&e.equivalent, &e.merged_text) {
                (true, Some(t)) if !t.trim().is_empty() => Ok(()),
                (true, _) => Err("equivalent causes need a merged_text".into()),
                (false, _) => Ok(()),
            }
        })?;
        Ok(Equivalence {
            equivalent: answer.equivalent,
            merged_text: answer.merged_text.filter(|_| answer.equivalent),
        })
    }

    /// Whether `cause` is essential for `goal` on its own. A positive verdict
    /// carries a rationale citing at least one of `principles`.
    pub fn judge_individual_necessity(
        &self,
        cause: &Cause,
        goal: &Goal,
        principles: &[Principle],
    ) -> Result<NecessityVerdict, OracleError> {
        let key = canonical_key(json!(["individual_necessity", goal.id, cause.id]));
        let payload = json!({
            "goal_id": goal.id,
            "goal": goal.text,
            "cause_id": cause.id,
            "cause": cause.text,
            "principles": principles_payload(principles),
        });
        self.ask(QueryKind::IndividualNecessity, &key, payload, |v: &NecessityVerdict| {
            if let Some(bad) = v
                .cited_principles
                .iter()
                .find(|id| !principles.iter().any(|p| &p.id == *id))
            {
                return Err(format!("cites unknown principle `{bad}`"));
            }
            if v.necessary && v.rationale.trim().is_empty() {
                return Err("a necessary verdict needs a rationale".into());
            }
            if v.necessary && v.cited_principles.is_empty() {
                return Err("a necessary verdict must cite a principle".into());
            }
            Ok(())
        })
    }

    /// Whether the causes in `subset` together achieve `goal`. The key uses
    /// the sorted cause ids; the backend receives the cause texts.
    pub fn judge_subset_achieves(
        &self,
        goal: &Goal,
        subset: &[&Cause],
        principles: &[Principle],
    ) -> Result<bool, OracleError> {
        let mut sorted: Vec<&Cause> = subset.to_vec();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        sorted.dedup_by(|a, b| a.id == b.id);
        let ids: Vec<&str> = sorted.iter().map(|c| c.id.as_str()).collect();
        let key = canonical_key(json!(["subset_achieves", goal.id, ids]));
        let payload = json!({
            "goal_id": goal.id,
            "goal": goal.text,
            "causes": sorted.iter().map(|c| json!({"id": c.id, "text": c.text})).collect::<Vec<_>>(),
            "principles": principles_payload(principles),
        });
        let answer: AchievesAnswer = self.ask(QueryKind::SubsetAchieves, &key, payload, |_: &AchievesAnswer| Ok(()))?;
        Ok(answer.achieves)
    }

    /// Translates `cause` into the rule language. An answer that does not
    /// parse against `onto` is re-asked once with the parse error attached.
    pub fn translate_to_fol(&self, cause: &Cause, onto: &Ontology) -> Result<Translation, OracleError> {
        let key = canonical_key(json!(["translate", cause.id, cause.text]));
        let payload = json!({
            "cause_id": cause.id,
            "cause": cause.text,
            "grammar": onto.grammar_doc(),
        });
        let mut problem: Option<String> = None;
        for attempt in 0..=MAX_REASKS {
            let value = self.fetch(
                QueryKind::Translate,
                &retry_key(&key, attempt),
                &payload,
                problem.as_deref(),
            )?;
            let msg = match serde_json::from_value::<TranslateAnswer>(value) {
                Ok(answer) => match parse_rule(&answer.rule, onto) {
                    Ok(rule) => {
                        return Ok(Translation {
                            rule_text: answer.rule,
                            rule,
                            explanation: answer.explanation,
                        })
                    }
                    Err(e) => format!("`{}` does not parse: {e}", answer.rule),
                },
                Err(e) => e.to_string(),
            };
            log::warn!("translation of {} rejected: {msg}", cause.id);
            problem = Some(msg);
        }
        Err(OracleError::Untranslatable {
            cause_id: cause.id.clone(),
            message: problem.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests;
