use super::*;
use crate::fol::parse_rule_syntax;
use crate::verification::{GroundingConfig, StageRecord};

const COLLIDE: &str =
    "forall X . not collide(X) <- sd_front(X) and sd_rear(X) and not lane_change(X)";

const DOC: &str = r#"{
  "principles": [
    {"id": "S1", "kind": "safety", "text": "A vehicle may collide if obstacles are present.",
     "formal": "forall X . collide(X) <- obstacle(X) and not emergency_brake(X)", "source": "safety set"},
    {"id": "L1", "kind": "legal", "text": "Keep a safe distance.", "source": "legal set"}
  ],
  "goals": [{"id": "g1", "text": "merge into heavy traffic", "status": "draft"}],
  "causes": [
    {"id": "g1-c1", "goal_id": "g1", "text": "Driver maintains control of the vehicle",
     "merged_from": ["Driver maintains control of the vehicle"],
     "rule": {"id": "g1-c1-rule", "rule": "forall X . not collide(X) <- sd_front(X) and sd_rear(X) and not lane_change(X)"}}
  ],
  "verified_rules": [],
  "invariants": [{"id": "inv1", "rule": "forall X . not collide(X) <- sd_front(X) and sd_rear(X) and not lane_change(X)"}],
  "reports": []
}"#;

fn store() -> TheoryStore {
    from_json(DOC).unwrap()
}

fn accepted(rule_id: &str) -> VerificationReport {
    VerificationReport {
        rule_id: rule_id.into(),
        rule: COLLIDE.into(),
        stages: vec![StageRecord::Redundancy { entailed: false }],
        verdict: Verdict::Accepted,
        grounding: GroundingConfig {
            domain_constants: [("vehicle".to_string(), vec!["a".to_string()])].into(),
            comparison_mode: Default::default(),
        },
    }
}

fn collide_rule() -> Rule {
    parse_rule_syntax(COLLIDE).unwrap().with_id("g1-c1-rule")
}

#[test]
fn loads_and_round_trips_byte_stably() {
    let s = store();
    assert_eq!(s.principles.len(), 2);
    assert_eq!(s.theory().len(), 1);
    assert_eq!(s.theory()[0].id, "S1");
    let text = to_json(&s);
    let back = from_json(&text).unwrap();
    assert_eq!(back, s);
    assert_eq!(to_json(&back), text);
    assert!(text.ends_with("}\n"));
}

#[test]
fn empty_document_names_missing_sections() {
    let err = from_json("{}").unwrap_err();
    let KbError::Format { path, message } = err else {
        panic!("expected a format error");
    };
    assert_eq!(path, "$");
    assert!(message.contains("principles") && message.contains("reports"), "{message}");
}

#[test]
fn format_errors_point_into_the_document() {
    let bad = DOC.replace("\"status\": \"draft\"", "\"status\": \"done\"");
    match from_json(&bad).unwrap_err() {
        KbError::Format { path, .. } => assert_eq!(path, "goals[0]"),
        e => panic!("unexpected {e}"),
    }
    let bad_rule = DOC.replace("not emergency_brake(X)\"", "not emergency_brake(X\"");
    match from_json(&bad_rule).unwrap_err() {
        KbError::Format { path, .. } => assert_eq!(path, "principles[0].formal"),
        e => panic!("unexpected {e}"),
    }
    let extra = DOC.replacen('{', "{\"extra\": [],", 1);
    assert!(matches!(from_json(&extra), Err(KbError::Format { .. })));
}

#[test]
fn dangling_trace_is_an_integrity_error() {
    let bad = DOC.replace(
        "\"verified_rules\": []",
        r#""verified_rules": [{"id": "v1", "rule": "forall X . dense(X) <- true", "cause_id": "g1-c9", "goal_id": "g1", "report_id": "rpt-0001"}]"#,
    );
    let err = from_json(&bad).unwrap_err();
    assert!(matches!(err, KbError::Integrity(ref m) if m.contains("g1-c9")), "{err}");
}

#[test]
fn cause_with_unknown_goal_is_rejected() {
    let bad = DOC.replace("\"goal_id\": \"g1\", \"text\": \"Driver", "\"goal_id\": \"g7\", \"text\": \"Driver");
    assert!(matches!(from_json(&bad), Err(KbError::Integrity(_))));
}

#[test]
fn commit_adds_a_traced_rule_and_is_idempotent() {
    let s = store();
    let (s1, outcome) = s
        .commit_verified_rule(&collide_rule(), "g1-c1", "g1", &accepted("g1-c1-rule"))
        .unwrap();
    assert_eq!(outcome, CommitOutcome::Committed);
    assert_eq!(s1.verified_rules.len(), 1);
    let v = &s1.verified_rules[0];
    assert_eq!((v.cause_id.as_str(), v.goal_id.as_str()), ("g1-c1", "g1"));
    assert_eq!(s1.report(&v.report_id).map(|r| r.id.as_str()), Some("rpt-0001"));
    s1.check_integrity().unwrap();

    let (s2, again) = s1
        .commit_verified_rule(&collide_rule(), "g1-c1", "g1", &accepted("g1-c1-rule"))
        .unwrap();
    assert_eq!(again, CommitOutcome::Duplicate);
    assert_eq!(s2, s1);
}

#[test]
fn commit_refuses_non_accepted_reports_and_bad_traces() {
    let s = store();
    let mut report = accepted("g1-c1-rule");
    report.verdict = Verdict::Inconsistent;
    assert!(matches!(
        s.commit_verified_rule(&collide_rule(), "g1-c1", "g1", &report),
        Err(KbError::Rejected { verdict: Verdict::Inconsistent, .. })
    ));
    assert!(matches!(
        s.commit_verified_rule(&collide_rule(), "g1-c4", "g1", &accepted("x")),
        Err(KbError::Integrity(_))
    ));
}

#[test]
fn commit_diff_touches_only_rules_and_reports() {
    let s = store();
    let before: serde_json::Value = serde_json::from_str(&to_json(&s)).unwrap();
    let (s1, _) = s
        .commit_verified_rule(&collide_rule(), "g1-c1", "g1", &accepted("g1-c1-rule"))
        .unwrap();
    let after: serde_json::Value = serde_json::from_str(&to_json(&s1)).unwrap();
    let changed: Vec<&String> = after
        .as_object()
        .unwrap()
        .iter()
        .filter(|(k, v)| before[k.as_str()] != **v)
        .map(|(k, _)| k)
        .collect();
    assert_eq!(changed, vec!["reports", "verified_rules"]);
}

#[test]
fn causes_of_a_goal_with_verified_rules_are_frozen() {
    let (s1, _) = store()
        .commit_verified_rule(&collide_rule(), "g1-c1", "g1", &accepted("g1-c1-rule"))
        .unwrap();
    assert!(matches!(s1.with_causes("g1", vec![]), Err(KbError::Integrity(_))));
    assert!(store().with_causes("g1", vec![]).is_ok());
}

#[test]
fn save_and_load_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.json");
    save_store(&store(), &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let loaded = load_store(&path).unwrap();
    assert_eq!(loaded, store());
    save_store(&loaded, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
    assert!(matches!(
        load_store(&dir.path().join("missing.json")),
        Err(KbError::Io { .. })
    ));
}

#[test]
fn reports_round_trip_inside_the_store() {
    let (s, id) = store().archive_report(ReportBody::Generation {
        goal_id: "g1".into(),
        raw_causes: vec!["a".into()],
    });
    assert_eq!(id, "rpt-0001");
    let (s, _) = s.commit_verified_rule(&collide_rule(), "g1-c1", "g1", &accepted("g1-c1-rule")).unwrap();
    let back = from_json(&to_json(&s)).unwrap();
    assert_eq!(back, s);
}
