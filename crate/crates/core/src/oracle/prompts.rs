//! Chat prompts and response schemas per query kind.

use serde_json::{json, Value};

use super::QueryKind;

const SHARED: &str = "You support the safety analysis of an automated vehicle. \
Answer with a single JSON object that follows the provided schema and nothing else.";

fn instructions(kind: QueryKind) -> &'static str {
    match kind {
        QueryKind::GenerateCauses => {
            "Decompose the goal into candidate causes: conditions that contribute to achieving it \
             while respecting the listed legal and safety principles. Each cause is one declarative \
             sentence. Return at most `count_hint` causes, most important first."
        }
        QueryKind::Equivalent => {
            "Decide whether causes `a` and `b` describe the same underlying condition or overlap so \
             much that they should be one cause. If they do, give `merged_text`: one sentence that \
             subsumes both. Otherwise set `merged_text` to null."
        }
        QueryKind::IndividualNecessity => {
            "Decide whether the cause on its own is essential for the goal: without it the goal cannot \
             be achieved under the principles. If it is necessary, explain why and list the ids of the \
             principles the explanation relies on in `cited_principles`."
        }
        QueryKind::SubsetAchieves => {
            "Assume exactly the listed causes hold and no other cause from the analysis. Decide whether \
             the goal is achieved under the principles."
        }
        QueryKind::Translate => {
            "Translate the cause into one rule of the rule language described under `grammar`. Use only \
             the listed predicates, attributes and constants. Give the rule text in `rule` and a brief \
             explanation of the translation in `explanation`."
        }
    }
}

pub(super) fn render(kind: QueryKind, payload: &Value) -> (String, String) {
    let system = format!("{SHARED}\n\n{}", instructions(kind));
    let user = serde_json::to_string_pretty(payload).expect("payload serializes");
    (system, user)
}

pub(super) fn schema(kind: QueryKind) -> Value {
    let object = |properties: Value, required: &[&str]| {
        json!({
            "type": "object",
            "properties": properties,
            "required": required,
            "additionalProperties": false,
        })
    };
    match kind {
        QueryKind::GenerateCauses => object(
            json!({"causes": {"type": "array", "items": {"type": "string"}}}),
            &["causes"],
        ),
        QueryKind::Equivalent => object(
            json!({
                "equivalent": {"type": "boolean"},
                "merged_text": {"type": ["string", "null"]},
            }),
            &["equivalent", "merged_text"],
        ),
        QueryKind::IndividualNecessity => object(
            json!({
                "necessary": {"type": "boolean"},
                "rationale": {"type": "string"},
                "cited_principles": {"type": "array", "items": {"type": "string"}},
            }),
            &["necessary", "rationale", "cited_principles"],
        ),
        QueryKind::SubsetAchieves => object(json!({"achieves": {"type": "boolean"}}), &["achieves"]),
        QueryKind::Translate => object(
            json!({
                "rule": {"type": "string"},
                "explanation": {"type": "string"},
            }),
            &["rule", "explanation"],
        ),
    }
}
