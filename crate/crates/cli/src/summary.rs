//! Human-readable stage summaries.

use std::fmt::Write;

use rulesynth::analysis::{AnalysisReport, CauseSetFamily};
use rulesynth::kb::{CommitOutcome, TheoryStore};
use rulesynth::pipeline::{RuleOutcome, Synthesis};
use rulesynth::verification::{StageRecord, Verdict};

pub fn synthesis(goal_id: &str, goal_text: &str, s: &Synthesis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "goal {goal_id}: {goal_text}");
    let _ = writeln!(out, "raw causes: {}", s.raw_causes.len());
    for raw in &s.raw_causes {
        let _ = writeln!(out, "  - {raw}");
    }
    let _ = writeln!(out, "consolidated causes: {}", s.causes.len());
    for c in &s.causes {
        let _ = writeln!(out, "  {}  {}", c.id, c.text);
        if let Some(r) = &c.rule {
            let _ = writeln!(out, "      {}: {}", r.id, r);
        }
    }
    for note in &s.partition.inconsistencies {
        let _ = writeln!(out, "warning: {note}");
    }
    out
}

fn family(out: &mut String, title: &str, f: &CauseSetFamily) {
    let _ = writeln!(out, "{title} ({}):", f.len());
    for set in f.named() {
        let _ = writeln!(out, "  {{{}}}", set.join(", "));
    }
}

pub fn analysis(store: &TheoryStore, r: &AnalysisReport) -> String {
    let mut out = String::new();
    let search = match r.search {
        rulesynth::analysis::SearchMode::Pruned => "pruned",
        rulesynth::analysis::SearchMode::BruteForce => "brute force",
    };
    let _ = writeln!(
        out,
        "goal {}: {} causes, {} subset queries ({search})",
        r.goal_id,
        r.causes.len(),
        r.query_count
    );
    for id in &r.causes {
        let text = store.cause(id).map(|c| c.text.as_str()).unwrap_or("");
        let _ = writeln!(out, "  {id}  {text}");
    }
    let necessary = r.individually_necessary();
    let _ = writeln!(
        out,
        "individually necessary: {}",
        if necessary.is_empty() { "none".to_string() } else { necessary.join(", ") }
    );
    family(&mut out, "minimal necessary sets", &r.minimal_necessary);
    family(&mut out, "minimal sufficient sets", &r.minimal_sufficient);
    if !r.structurally_necessary.is_empty() {
        let _ = writeln!(out, "in every sufficient set: {}", r.structurally_necessary.join(", "));
    }
    if r.effect_unachievable {
        let _ = writeln!(out, "the effect is not achievable from these causes");
    }
    let _ = writeln!(out, "duality: {}", if r.duality_mismatch { "MISMATCH" } else { "ok" });
    let _ = writeln!(out, "monotonicity violations: {}", r.monotonicity_violations.len());
    for v in &r.monotonicity_violations {
        let _ = writeln!(
            out,
            "  {{{}}} achieves but {{{}}} fails",
            v.achieving.join(", "),
            v.failing.join(", ")
        );
    }
    out
}

fn detail(o: &RuleOutcome) -> String {
    let r = &o.report;
    match r.verdict {
        Verdict::Accepted => match o.commit {
            Some(CommitOutcome::Duplicate) => "already verified".into(),
            _ => "committed".into(),
        },
        Verdict::Redundant => "entailed by the theory".into(),
        Verdict::Inconsistent => match r.conflict_core() {
            Some([]) | None => "contradicts itself".into(),
            Some(core) => format!("conflict core: {}", core.join(", ")),
        },
        Verdict::Unsafe => match r.countermodel() {
            Some((id, model)) => format!("violates {id}: {}", model.join(", ")),
            None => "violates an invariant".into(),
        },
        Verdict::Malformed => r
            .stages
            .iter()
            .find_map(|s| match s {
                StageRecord::Schema { passed: false, violations } => Some(
                    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                ),
                StageRecord::Grounding { passed: false, error, .. } => error.clone(),
                _ => None,
            })
            .unwrap_or_default(),
    }
}

pub fn verification(outcomes: &[RuleOutcome]) -> String {
    let mut out = String::new();
    let width = outcomes.iter().map(|o| o.report.rule_id.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(out, "{:width$}  {:12}  {:8}  detail", "rule", "verdict", "report");
    for o in outcomes {
        let _ = writeln!(
            out,
            "{:width$}  {:12}  {:8}  {}",
            o.report.rule_id,
            format!("{:?}", o.verdict()),
            o.report_id,
            detail(o)
        );
    }
    out
}
