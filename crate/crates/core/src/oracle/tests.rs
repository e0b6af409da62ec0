use std::sync::atomic::AtomicUsize;
use std::sync::Barrier;

use super::*;
use crate::kb::{GoalStatus, PrincipleKind};

/// Answers from a fixed table keyed by request key and counts calls.
struct Table {
    answers: HashMap<String, Value>,
    calls: AtomicUsize,
}

impl Table {
    fn new(entries: &[(&str, Value)]) -> Self {
        Table {
            answers: entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            calls: AtomicUsize::new(0),
        }
    }
}

impl Backend for Table {
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.answers
            .get(&request.key)
            .cloned()
            .ok_or_else(|| OracleError::MissingTranscriptEntry {
                key: request.key.clone(),
            })
    }
}

fn goal() -> Goal {
    Goal {
        id: "g".into(),
        text: "merge into heavy traffic".into(),
        status: GoalStatus::Draft,
    }
}

fn cause(id: &str, text: &str) -> Cause {
    Cause {
        id: id.into(),
        goal_id: "g".into(),
        text: text.into(),
        merged_from: vec![text.into()],
        rule: None,
        rule_explanation: None,
    }
}

fn principles() -> Vec<Principle> {
    vec![Principle {
        id: "L1".into(),
        kind: PrincipleKind::Legal,
        text: "keep control of the vehicle".into(),
        formal: None,
        source: String::new(),
    }]
}

fn onto() -> Ontology {
    Ontology::from_json(r#"{"predicates": {"collide": {"args": ["vehicle"]}, "dense": {"args": ["vehicle"]}}}"#)
        .unwrap()
}

#[test]
fn equivalence_key_is_symmetric() {
    let key = r#"["equivalent","a","b"]"#;
    let table = Arc::new(Table::new(&[(key, json!({"equivalent": false, "merged_text": null}))]));
    let oracle = Oracle::new(table.clone());
    assert!(!oracle.judge_equivalent("a", "b").unwrap().equivalent);
    assert!(!oracle.judge_equivalent("b", "a").unwrap().equivalent);
    assert_eq!(table.calls.load(Ordering::SeqCst), 1);
    assert_eq!(oracle.stats(), CacheStats { hits: 1, misses: 1 });
}

#[test]
fn identical_texts_need_no_query() {
    let table = Arc::new(Table::new(&[]));
    let oracle = Oracle::new(table.clone());
    let e = oracle.judge_equivalent("same", "same").unwrap();
    assert_eq!(e.merged_text.as_deref(), Some("same"));
    assert_eq!(table.calls.load(Ordering::SeqCst), 0);
}

#[test]
fn malformed_answer_is_reasked_once() {
    let key = r#"["subset_achieves","g",["c1"]]"#;
    let retry = format!("{key}#retry1");
    let table = Arc::new(Table::new(&[
        (key, json!("yes")),
        (&retry, json!({"achieves": true})),
    ]));
    let oracle = Oracle::new(table.clone());
    let c1 = cause("c1", "driver in control");
    assert!(oracle.judge_subset_achieves(&goal(), &[&c1], &principles()).unwrap());
    assert_eq!(table.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn twice_malformed_is_an_error() {
    let key = r#"["subset_achieves","g",["c1"]]"#;
    let retry = format!("{key}#retry1");
    let table = Table::new(&[(key, json!({"achieves": "maybe"})), (&retry, json!({}))]);
    let oracle = Oracle::new(table);
    let c1 = cause("c1", "driver in control");
    assert!(matches!(
        oracle.judge_subset_achieves(&goal(), &[&c1], &principles()),
        Err(OracleError::Malformed { .. })
    ));
}

#[test]
fn subset_key_sorts_cause_ids() {
    let key = r#"["subset_achieves","g",["c1","c2"]]"#;
    let table = Arc::new(Table::new(&[(key, json!({"achieves": false}))]));
    let oracle = Oracle::new(table.clone());
    let (c1, c2) = (cause("c1", "x"), cause("c2", "y"));
    assert!(!oracle.judge_subset_achieves(&goal(), &[&c2, &c1], &principles()).unwrap());
    assert!(!oracle.judge_subset_achieves(&goal(), &[&c1, &c2], &principles()).unwrap());
    assert_eq!(table.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn necessary_verdict_must_cite_a_known_principle() {
    let key = r#"["individual_necessity","g","c1"]"#;
    let retry = format!("{key}#retry1");
    let uncited = json!({"necessary": true, "rationale": "required", "cited_principles": []});
    let unknown = json!({"necessary": true, "rationale": "required", "cited_principles": ["S9"]});
    let oracle = Oracle::new(Table::new(&[(key, uncited), (&retry, unknown)]));
    let err = oracle
        .judge_individual_necessity(&cause("c1", "x"), &goal(), &principles())
        .unwrap_err();
    assert!(err.to_string().contains("S9"), "{err}");

    let empty = json!({"necessary": true, "rationale": " ", "cited_principles": ["L1"]});
    let oracle = Oracle::new(Table::new(&[(key, empty.clone()), (&retry, empty)]));
    assert!(matches!(
        oracle.judge_individual_necessity(&cause("c1", "x"), &goal(), &principles()),
        Err(OracleError::Malformed { .. })
    ));

    let fine = json!({"necessary": false, "rationale": "", "cited_principles": []});
    let oracle = Oracle::new(Table::new(&[(key, fine)]));
    let v = oracle
        .judge_individual_necessity(&cause("c1", "x"), &goal(), &principles())
        .unwrap();
    assert!(!v.necessary);
}

#[test]
fn unparsable_translation_is_untranslatable_after_retry() {
    let c = cause("c1", "bananas on the road");
    let key = serde_json::to_string(&json!(["translate", "c1", "bananas on the road"])).unwrap();
    let retry = format!("{key}#retry1");
    let banana = json!({"rule": "banana", "explanation": "?"});
    let table = Arc::new(Table::new(&[(&key, banana.clone()), (&retry, banana)]));
    let oracle = Oracle::new(table.clone());
    let err = oracle.translate_to_fol(&c, &onto()).unwrap_err();
    assert!(matches!(err, OracleError::Untranslatable { ref cause_id, .. } if cause_id == "c1"));
    assert_eq!(table.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn translation_recovers_on_retry() {
    let c = cause("c1", "no collision in dense traffic");
    let key = serde_json::to_string(&json!(["translate", "c1", c.text])).unwrap();
    let retry = format!("{key}#retry1");
    let oracle = Oracle::new(Table::new(&[
        (&key, json!({"rule": "forall X . teleport(X) <- true", "explanation": "?"})),
        (&retry, json!({"rule": "forall X . not collide(X) <- dense(X)", "explanation": "ok"})),
    ]));
    let t = oracle.translate_to_fol(&c, &onto()).unwrap();
    assert_eq!(t.rule.to_string(), "forall X . not collide(X) <- dense(X)");
    assert_eq!(t.explanation, "ok");
}

#[test]
fn generation_respects_count_hint() {
    let key = r#"["generate_causes","g",2]"#;
    let retry = format!("{key}#retry1");
    let three = json!({"causes": ["a", "b", "c"]});
    let oracle = Oracle::new(Table::new(&[(key, three.clone()), (&retry, three)]));
    assert!(matches!(
        oracle.generate_causes(&goal(), &principles(), 2),
        Err(OracleError::Malformed { .. })
    ));
}

/// Answers after a short delay so concurrent callers overlap.
struct Slow {
    calls: AtomicUsize,
}

impl Backend for Slow {
    fn answer(&self, _: &Request) -> Result<Value, OracleError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(std::time::Duration::from_millis(50));
        Ok(json!({"achieves": true}))
    }
}

#[test]
fn concurrent_identical_queries_share_one_backend_call() {
    let slow = Arc::new(Slow {
        calls: AtomicUsize::new(0),
    });
    let oracle = Oracle::new(slow.clone());
    let barrier = Barrier::new(8);
    let c1 = cause("c1", "x");
    std::thread::scope(|s| {
        for _ in 0..8 {
            s.spawn(|| {
                barrier.wait();
                assert!(oracle.judge_subset_achieves(&goal(), &[&c1], &principles()).unwrap());
            });
        }
    });
    assert_eq!(slow.calls.load(Ordering::SeqCst), 1);
    assert_eq!(oracle.stats(), CacheStats { hits: 7, misses: 1 });
}

#[test]
fn replay_names_the_missing_key() {
    let oracle = Oracle::new(ReplayBackend::new(Transcript::default()));
    let err = oracle.generate_causes(&goal(), &principles(), 8).unwrap_err();
    assert_eq!(
        err,
        OracleError::MissingTranscriptEntry {
            key: r#"["generate_causes","g",8]"#.into()
        }
    );
}

#[test]
fn recording_then_replaying_gives_identical_answers() {
    let key = r#"["generate_causes","g",8]"#;
    let rec = Arc::new(RecordingBackend::new(Table::new(&[(
        key,
        json!({"causes": ["a", "b"]}),
    )])));
    let live = Oracle::new(rec.clone()).generate_causes(&goal(), &principles(), 8).unwrap();
    let replayed = Oracle::new(ReplayBackend::new(rec.transcript()))
        .generate_causes(&goal(), &principles(), 8)
        .unwrap();
    assert_eq!(live, replayed);
}

#[test]
fn spec_backend_is_monotone_by_construction() {
    let spec = DeterministicOracleSpec::from_json(
        r#"{
        "goals": {"g": {
            "raw_causes": ["a", "a2", "b", "c"],
            "equivalence_classes": [
                {"representative": "A", "members": ["a", "a2"]},
                {"representative": "b", "members": ["b"]},
                {"representative": "c", "members": ["c"]}
            ],
            "sufficient_family": [["c1", "c2"], ["c3"]]
        }}
    }"#,
    )
    .unwrap();
    let oracle = Oracle::new(SpecBackend::new(spec));
    let causes = [cause("g-c1", "A"), cause("g-c2", "b"), cause("g-c3", "c")];
    for bits in 0u32..8 {
        let subset: Vec<&Cause> = (0..3).filter(|i| bits & (1 << i) != 0).map(|i| &causes[i]).collect();
        let expected = bits & 0b011 == 0b011 || bits & 0b100 != 0;
        assert_eq!(
            oracle.judge_subset_achieves(&goal(), &subset, &principles()).unwrap(),
            expected,
            "subset bits {bits:03b}"
        );
    }
    let e = oracle.judge_equivalent("a2", "a").unwrap();
    assert_eq!(e.merged_text.as_deref(), Some("A"));
    assert!(oracle.judge_equivalent("A", "a2").unwrap().equivalent);
    assert!(!oracle.judge_equivalent("a", "b").unwrap().equivalent);
}

#[test]
fn spec_rejects_bad_partitions() {
    let bad = r#"{"goals": {"g": {
        "raw_causes": ["a", "b"],
        "equivalence_classes": [{"representative": "a", "members": ["a"]}],
        "sufficient_family": []
    }}}"#;
    assert!(DeterministicOracleSpec::from_json(bad).unwrap_err().contains("cover"));
    let unordered = r#"{"goals": {"g": {
        "raw_causes": ["a", "b"],
        "equivalence_classes": [
            {"representative": "b", "members": ["b"]},
            {"representative": "a", "members": ["a"]}
        ],
        "sufficient_family": []
    }}}"#;
    assert!(DeterministicOracleSpec::from_json(unordered).unwrap_err().contains("ordered"));
    let label = r#"{"goals": {"g": {
        "raw_causes": ["a"],
        "equivalence_classes": [{"representative": "a", "members": ["a"]}],
        "sufficient_family": [["c2"]]
    }}}"#;
    assert!(DeterministicOracleSpec::from_json(label).unwrap_err().contains("c2"));
}
