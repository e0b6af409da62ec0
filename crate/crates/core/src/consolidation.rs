//! Merging raw candidate causes into classes of equivalent causes.

use serde::{Deserialize, Serialize};

use crate::oracle::{Oracle, OracleError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeClass {
    pub representative: String,
    /// Raw texts in input order.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub a: String,
    pub b: String,
    pub equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergePartition {
    /// Ordered by each class's first member in the input.
    pub classes: Vec<MergeClass>,
    pub pair_log: Vec<PairVerdict>,
    /// Transitive merges the oracle would not confirm when folding the
    /// representative text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inconsistencies: Vec<String>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Queries every input pair `(i, j)`, `i < j`, in index order, skipping pairs
/// already in one class, and closes the verdicts transitively. A class's
/// representative is the oracle's merged text folded over its members from
/// left to right.
pub fn consolidate(raw: &[String], oracle: &Oracle) -> Result<MergePartition, OracleError> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut pair_log = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                continue;
            }
            let verdict = oracle.judge_equivalent(&raw[i], &raw[j])?;
            pair_log.push(PairVerdict {
                a: raw[i].clone(),
                b: raw[j].clone(),
                equivalent: verdict.equivalent,
            });
            if verdict.equivalent {
                // Keep the smaller index as root so class order is stable.
                let (lo, hi) = (ri.min(rj), ri.max(rj));
                parent[hi] = lo;
            }
        }
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => groups.push((root, vec![i])),
        }
    }

    let mut inconsistencies = Vec::new();
    let mut classes = Vec::new();
    for (_, members) in groups {
        let mut representative = raw[members[0]].clone();
        for &m in &members[1..] {
            let verdict = oracle.judge_equivalent(&representative, &raw[m])?;
            match verdict.merged_text {
                Some(text) if verdict.equivalent => representative = text,
                _ => {
                    let note = format!(
                        "`{}` was merged transitively but judged distinct from `{representative}`",
                        raw[m]
                    );
                    log::warn!("{note}");
                    inconsistencies.push(note);
                }
            }
        }
        classes.push(MergeClass {
            representative,
            members: members.iter().map(|&i| raw[i].clone()).collect(),
        });
    }
    Ok(MergePartition {
        classes,
        pair_log,
        inconsistencies,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use serde_json::{json, Value};

    use super::*;
    use crate::oracle::{Backend, Request};

    /// Equivalent iff both texts share a first letter; merged text is the
    /// upper-case letter.
    struct FirstLetter;

    impl Backend for FirstLetter {
        fn answer(&self, r: &Request) -> Result<Value, OracleError> {
            let first = |k: &str| r.payload[k].as_str().unwrap().chars().next().unwrap().to_ascii_lowercase();
            let (a, b) = (first("a"), first("b"));
            Ok(if a == b {
                json!({"equivalent": true, "merged_text": a.to_ascii_uppercase().to_string()})
            } else {
                json!({"equivalent": false, "merged_text": null})
            })
        }
    }

    struct Never;

    impl Backend for Never {
        fn answer(&self, _: &Request) -> Result<Value, OracleError> {
            Ok(json!({"equivalent": false, "merged_text": null}))
        }
    }

    fn texts(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn member_sets(p: &MergePartition) -> BTreeSet<BTreeSet<String>> {
        p.classes
            .iter()
            .map(|c| c.members.iter().cloned().collect())
            .collect()
    }

    #[test]
    fn distinct_inputs_stay_singletons() {
        let raw = texts(&["a", "b", "c"]);
        let p = consolidate(&raw, &Oracle::new(Never)).unwrap();
        assert_eq!(p.classes.len(), 3);
        for (c, r) in p.classes.iter().zip(&raw) {
            assert_eq!(&c.representative, r);
            assert_eq!(c.members, vec![r.clone()]);
        }
        assert_eq!(p.pair_log.len(), 3);
    }

    #[test]
    fn co_classed_pairs_are_skipped() {
        let raw = texts(&["a1", "a2", "a3", "b1"]);
        let p = consolidate(&raw, &Oracle::new(FirstLetter)).unwrap();
        // (a1,a2) and (a1,a3) merge; (a2,a3) is skipped.
        assert_eq!(p.pair_log.len(), 5);
        assert_eq!(p.classes.len(), 2);
        assert_eq!(p.classes[0].representative, "A");
        assert_eq!(p.classes[0].members, texts(&["a1", "a2", "a3"]));
        assert_eq!(p.classes[1].representative, "b1");
    }

    #[test]
    fn membership_ignores_input_order() {
        let raw = texts(&["a1", "b1", "a2", "c1", "b2", "a3"]);
        let base = member_sets(&consolidate(&raw, &Oracle::new(FirstLetter)).unwrap());
        let mut rev = raw.clone();
        rev.reverse();
        let other = member_sets(&consolidate(&rev, &Oracle::new(FirstLetter)).unwrap());
        assert_eq!(base, other);
    }

    /// Equivalent pairs are listed explicitly; the fold query is refused.
    struct Intransitive(HashMap<(String, String), bool>);

    impl Backend for Intransitive {
        fn answer(&self, r: &Request) -> Result<Value, OracleError> {
            let a = r.payload["a"].as_str().unwrap().to_string();
            let b = r.payload["b"].as_str().unwrap().to_string();
            let eq = self.0.get(&(a.clone(), b)).copied().unwrap_or(false);
            Ok(json!({"equivalent": eq, "merged_text": if eq { Some(format!("{a}+")) } else { None }}))
        }
    }

    #[test]
    fn unconfirmed_transitive_merge_is_logged() {
        let mut table = HashMap::new();
        table.insert(("x".to_string(), "y".to_string()), true);
        table.insert(("y".to_string(), "z".to_string()), true);
        let raw = texts(&["x", "y", "z"]);
        let p = consolidate(&raw, &Oracle::new(Intransitive(table))).unwrap();
        assert_eq!(p.classes.len(), 1);
        assert_eq!(p.classes[0].members, raw);
        assert_eq!(p.inconsistencies.len(), 1);
    }
}
