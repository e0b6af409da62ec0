//! Minimal sufficient and minimal necessary cause sets.
//!
//! Both searches walk candidates bottom-up (ascending cardinality,
//! lexicographic within a level) and skip every candidate that contains an
//! already recorded set. Because a recorded set is met before any of its
//! supersets, each recorded set is minimal by construction.
//!
//! The sufficient search also answers uncovered candidates without a query
//! when monotonicity implies the answer from earlier ones: a superset of an
//! achieving set achieves and a subset of a failing set fails. Run after the
//! necessary search on a shared [`Judge`], it reuses the large failing sets
//! that search found. The necessary search queries every uncovered
//! candidate, so its answers can expose violations before anything is
//! inferred from them.
//!
//! Pruning rests on monotonicity (adding causes never breaks achievement).
//! The oracle is not trusted to be monotone: a skipped candidate whose
//! answer is already cached and contradicts monotonicity is reported, and
//! from then on skipped candidates are queried too so further violations
//! surface. The returned families are the same either way.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sets::{combinations, CauseSet, CauseSetFamily, MAX_UNIVERSE};

/// Memoizing wrapper around a subset judgment. `queries` counts distinct
/// subsets actually passed to the underlying function.
pub struct Judge<F> {
    f: F,
    cache: HashMap<CauseSet, bool>,
    queries: usize,
    /// Inclusion-minimal achieving and inclusion-maximal failing answers.
    achieving: Vec<CauseSet>,
    failing: Vec<CauseSet>,
    contradictions: Vec<MonotonicityViolation>,
}

impl<F, E> Judge<F>
where
    F: FnMut(CauseSet) -> Result<bool, E>,
{
    pub fn new(f: F) -> Self {
        Judge {
            f,
            cache: HashMap::new(),
            queries: 0,
            achieving: Vec::new(),
            failing: Vec::new(),
            contradictions: Vec::new(),
        }
    }

    pub fn achieves(&mut self, set: CauseSet) -> Result<bool, E> {
        if let Some(&a) = self.cache.get(&set) {
            return Ok(a);
        }
        let a = (self.f)(set)?;
        self.queries += 1;
        self.cache.insert(set, a);
        let contradiction = if a {
            self.failing.iter().find(|f| set.is_subset_of(**f)).map(|&failing| {
                MonotonicityViolation { achieving: set, failing }
            })
        } else {
            self.achieving.iter().find(|s| s.is_subset_of(set)).map(|&achieving| {
                MonotonicityViolation { achieving, failing: set }
            })
        };
        self.contradictions.extend(contradiction);
        if a {
            if !self.achieving.iter().any(|s| s.is_subset_of(set)) {
                self.achieving.retain(|s| !set.is_subset_of(*s));
                self.achieving.push(set);
            }
        } else if !self.failing.iter().any(|s| set.is_subset_of(*s)) {
            self.failing.retain(|s| !s.is_subset_of(set));
            self.failing.push(set);
        }
        Ok(a)
    }

    /// The answer monotonicity implies for `set` from earlier answers: a
    /// known achieving subset, or a known failing superset. Nothing is
    /// implied once two answers have contradicted monotonicity.
    pub fn implied(&self, set: CauseSet) -> Option<bool> {
        if !self.contradictions.is_empty() {
            None
        } else if self.achieving.iter().any(|s| s.is_subset_of(set)) {
            Some(true)
        } else if self.failing.iter().any(|s| set.is_subset_of(*s)) {
            Some(false)
        } else {
            None
        }
    }

    /// The cached answer for `set`, without querying.
    pub fn peek(&self, set: CauseSet) -> Option<bool> {
        self.cache.get(&set).copied()
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    /// Pairs of answers that contradict monotonicity, in discovery order.
    pub fn contradictions(&self) -> &[MonotonicityViolation] {
        &self.contradictions
    }
}

/// `achieving` achieves the effect although its superset `failing` does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub achieving: CauseSet,
    pub failing: CauseSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub family: CauseSetFamily,
    pub violations: Vec<MonotonicityViolation>,
    /// Oracle queries issued by this search (cache hits excluded).
    pub queries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Sufficient,
    Necessary,
}

#[derive(Debug, Error)]
pub enum SearchError<E> {
    #[error("universe of {size} causes exceeds the limit of {limit}")]
    UniverseTooLarge { size: usize, limit: usize },
    #[error(transparent)]
    Oracle(E),
}

fn minimal_sets<F, E>(
    universe: &[String],
    judge: &mut Judge<F>,
    target: Target,
) -> Result<SearchOutcome, SearchError<E>>
where
    F: FnMut(CauseSet) -> Result<bool, E>,
{
    let n = universe.len();
    if n > MAX_UNIVERSE {
        return Err(SearchError::UniverseTooLarge {
            size: n,
            limit: MAX_UNIVERSE,
        });
    }
    let full = CauseSet::full(n);
    // The subset whose achievement decides `candidate`, and whether the
    // candidate qualifies given that answer.
    let query_of = |candidate: CauseSet| match target {
        Target::Sufficient => candidate,
        Target::Necessary => full.difference(candidate),
    };
    let qualifies = |achieves: bool| match target {
        Target::Sufficient => achieves,
        Target::Necessary => !achieves,
    };
    let before = judge.queries();
    let seen_contradictions = judge.contradictions().len();
    let mut found: Vec<CauseSet> = Vec::new();
    let mut violations = Vec::new();
    let mut pruning = judge.contradictions().is_empty();

    for k in 0..=n {
        let mut level_open = false;
        for candidate in combinations(n, k) {
            if let Some(&covered_by) = found.iter().find(|f| f.is_subset_of(candidate)) {
                let answer = if pruning {
                    judge.peek(query_of(candidate))
                } else {
                    Some(judge.achieves(query_of(candidate)).map_err(SearchError::Oracle)?)
                };
                if let Some(a) = answer {
                    if !qualifies(a) {
                        // Sufficient: covered_by achieves, its superset fails.
                        // Necessary: the complement of candidate achieves while
                        // the larger complement of covered_by fails.
                        let (achieving, failing) = match target {
                            Target::Sufficient => (covered_by, candidate),
                            Target::Necessary => (query_of(candidate), query_of(covered_by)),
                        };
                        log::warn!(
                            "non-monotone oracle: {achieving:?} achieves but {failing:?} fails"
                        );
                        violations.push(MonotonicityViolation { achieving, failing });
                        pruning = false;
                    }
                }
                continue;
            }
            level_open = true;
            let query = query_of(candidate);
            let infer = pruning && target == Target::Sufficient;
            let a = match judge.peek(query).or(if infer { judge.implied(query) } else { None }) {
                Some(a) => a,
                None => judge.achieves(query).map_err(SearchError::Oracle)?,
            };
            if qualifies(a) {
                found.push(candidate);
            }
            if pruning && !judge.contradictions().is_empty() {
                pruning = false;
            }
        }
        // Every larger candidate contains a covered one of this level.
        if !level_open && pruning {
            break;
        }
    }

    for v in &judge.contradictions()[seen_contradictions..] {
        if !violations.contains(v) {
            log::warn!("non-monotone oracle: {:?} achieves but {:?} fails", v.achieving, v.failing);
            violations.push(*v);
        }
    }

    if target == Target::Necessary && found == [CauseSet::EMPTY] {
        // The effect fails with every cause present, so no removal changes the
        // outcome; by convention there are no necessary sets.
        found.clear();
    }
    Ok(SearchOutcome {
        family: CauseSetFamily::new(universe.to_vec(), found),
        violations,
        queries: judge.queries() - before,
    })
}

/// Minimal subsets of `universe` that achieve the effect. The empty set is
/// tried first; if it achieves, the family is `{{}}`.
pub fn find_minimal_sufficient_sets<F, E>(
    universe: &[String],
    judge: &mut Judge<F>,
) -> Result<SearchOutcome, SearchError<E>>
where
    F: FnMut(CauseSet) -> Result<bool, E>,
{
    minimal_sets(universe, judge, Target::Sufficient)
}

/// Minimal removal sets `N` such that `universe \ N` no longer achieves the
/// effect. Empty when the full universe already fails.
pub fn find_minimal_necessary_sets<F, E>(
    universe: &[String],
    judge: &mut Judge<F>,
) -> Result<SearchOutcome, SearchError<E>>
where
    F: FnMut(CauseSet) -> Result<bool, E>,
{
    minimal_sets(universe, judge, Target::Necessary)
}

/// Largest universe the exhaustive reference accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceOutcome {
    pub minimal_sufficient: CauseSetFamily,
    pub minimal_necessary: CauseSetFamily,
    /// Every single-cause extension that turned achievement into failure.
    pub violations: Vec<MonotonicityViolation>,
    pub queries: usize,
}

/// Evaluates the oracle on all `2^n` subsets and derives both families from
/// their definitions, without pruning.
pub fn brute_force_families<F, E>(
    universe: &[String],
    judge: &mut Judge<F>,
) -> Result<BruteForceOutcome, SearchError<E>>
where
    F: FnMut(CauseSet) -> Result<bool, E>,
{
    let n = universe.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SearchError::UniverseTooLarge {
            size: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let before = judge.queries();
    let size = 1usize << n;
    let mut achieves = vec![false; size];
    for (bits, slot) in achieves.iter_mut().enumerate() {
        *slot = judge
            .achieves(CauseSet::from_bits(bits as u64))
            .map_err(SearchError::Oracle)?;
    }
    let full = size - 1;

    // below[s]: some proper subset of s satisfies `pred`.
    let minimal_of = |pred: &dyn Fn(usize) -> bool| -> Vec<CauseSet> {
        let mut below = vec![false; size];
        let mut out = Vec::new();
        for s in 0..size {
            let mut any = false;
            for i in 0..n {
                if s & (1 << i) != 0 {
                    let t = s & !(1 << i);
                    if pred(t) || below[t] {
                        any = true;
                        break;
                    }
                }
            }
            below[s] = any;
            if pred(s) && !any {
                out.push(CauseSet::from_bits(s as u64));
            }
        }
        out
    };

    let sufficient = minimal_of(&|s| achieves[s]);
    let necessary = if achieves[full] {
        minimal_of(&|removed| !achieves[full & !removed])
    } else {
        Vec::new()
    };

    let mut violations = Vec::new();
    for s in 0..size {
        if !achieves[s] {
            continue;
        }
        for i in 0..n {
            let t = s | (1 << i);
            if t != s && !achieves[t] {
                violations.push(MonotonicityViolation {
                    achieving: CauseSet::from_bits(s as u64),
                    failing: CauseSet::from_bits(t as u64),
                });
            }
        }
    }

    Ok(BruteForceOutcome {
        minimal_sufficient: CauseSetFamily::new(universe.to_vec(), sufficient),
        minimal_necessary: CauseSetFamily::new(universe.to_vec(), necessary),
        violations,
        queries: judge.queries() - before,
    })
}

/// All inclusion-minimal subsets of the universe meeting every member of
/// `family`. The empty family yields `{{}}`; a family containing the empty
/// set yields no transversal at all.
pub fn minimal_transversals(family: &CauseSetFamily) -> CauseSetFamily {
    let n = family.universe.len();
    let mut found: Vec<CauseSet> = Vec::new();
    if family.sets.iter().any(|s| s.is_empty()) {
        return CauseSetFamily::empty(family.universe.clone());
    }
    for k in 0..=n {
        let mut level_open = false;
        for candidate in combinations(n, k) {
            if found.iter().any(|f| f.is_subset_of(candidate)) {
                continue;
            }
            level_open = true;
            if family.sets.iter().all(|s| s.intersects(candidate)) {
                found.push(candidate);
            }
        }
        if !level_open {
            break;
        }
    }
    CauseSetFamily::new(family.universe.clone(), found)
}

#[cfg(test)]
mod tests {
    use std::convert::Infallible;

    use super::*;

    fn universe(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("c{i}")).collect()
    }

    fn sets(family: &CauseSetFamily) -> Vec<Vec<usize>> {
        family.sets.iter().map(|s| s.indices().collect()).collect()
    }

    /// achieves <=> contains some member of `antichain`.
    fn upward(antichain: Vec<CauseSet>) -> impl FnMut(CauseSet) -> Result<bool, Infallible> {
        move |s| Ok(antichain.iter().any(|a| a.is_subset_of(s)))
    }

    #[test]
    fn nonempty_oracle_gives_singletons() {
        let u = universe(3);
        let mut j = Judge::new(|s: CauseSet| Ok::<_, Infallible>(!s.is_empty()));
        let out = find_minimal_sufficient_sets(&u, &mut j).unwrap();
        assert_eq!(sets(&out.family), vec![vec![0], vec![1], vec![2]]);
        // {} and the three singletons; level 2 is entirely covered.
        assert_eq!(out.queries, 4);
    }

    #[test]
    fn always_achieving_oracle() {
        let u = universe(3);
        let mut j = Judge::new(|_| Ok::<_, Infallible>(true));
        let suf = find_minimal_sufficient_sets(&u, &mut j).unwrap();
        assert_eq!(sets(&suf.family), vec![Vec::<usize>::new()]);
        let nec = find_minimal_necessary_sets(&u, &mut j).unwrap();
        assert!(nec.family.is_empty());
    }

    #[test]
    fn unachievable_effect_conventions() {
        let u = universe(3);
        let mut j = Judge::new(|_| Ok::<_, Infallible>(false));
        assert!(find_minimal_sufficient_sets(&u, &mut j).unwrap().family.is_empty());
        assert!(find_minimal_necessary_sets(&u, &mut j).unwrap().family.is_empty());
        let bf = brute_force_families(&u, &mut Judge::new(|_| Ok::<_, Infallible>(false))).unwrap();
        assert!(bf.minimal_sufficient.is_empty() && bf.minimal_necessary.is_empty());
    }

    #[test]
    fn single_cause_universe() {
        let u = universe(1);
        let mut j = Judge::new(upward(vec![CauseSet::singleton(0)]));
        let bf = brute_force_families(&u, &mut j).unwrap();
        assert_eq!(sets(&bf.minimal_sufficient), vec![vec![0]]);
        assert_eq!(sets(&bf.minimal_necessary), vec![vec![0]]);
    }

    #[test]
    fn transversal_examples() {
        // {{a,b},{b,c}} -> {{b},{a,c}}, frozen from enumeration over 2^3.
        let fam = CauseSetFamily::new(
            universe(3),
            vec![CauseSet::from_indices([0, 1]), CauseSet::from_indices([1, 2])],
        );
        assert_eq!(sets(&minimal_transversals(&fam)), vec![vec![1], vec![0, 2]]);
        let single = CauseSetFamily::new(universe(1), vec![CauseSet::singleton(0)]);
        assert_eq!(sets(&minimal_transversals(&single)), vec![vec![0]]);
        let empty = CauseSetFamily::empty(universe(2));
        assert_eq!(sets(&minimal_transversals(&empty)), vec![Vec::<usize>::new()]);
        let with_empty = CauseSetFamily::new(universe(2), vec![CauseSet::EMPTY]);
        assert!(minimal_transversals(&with_empty).is_empty());
    }

    #[test]
    fn brute_force_limit() {
        let u = universe(21);
        let mut j = Judge::new(|_| Ok::<_, Infallible>(true));
        assert!(matches!(
            brute_force_families(&u, &mut j),
            Err(SearchError::UniverseTooLarge { size: 21, limit: 20 })
        ));
    }

    #[test]
    fn oracle_errors_propagate() {
        let u = universe(2);
        let mut j = Judge::new(|s: CauseSet| if s.len() == 1 { Err("down") } else { Ok(false) });
        assert!(matches!(
            find_minimal_sufficient_sets(&u, &mut j),
            Err(SearchError::Oracle("down"))
        ));
    }

    #[test]
    fn non_monotone_oracle_is_reported() {
        // {c1} achieves, {c1,c2} fails, {c1,c2,c3} achieves.
        let u = universe(3);
        let table = |s: CauseSet| {
            let b = s.bits();
            Ok::<_, Infallible>(b == 0b001 || b == 0b111 || b == 0b101)
        };
        let mut j = Judge::new(table);
        let suf = find_minimal_sufficient_sets(&u, &mut j).unwrap();
        assert_eq!(sets(&suf.family), vec![vec![0]]);
        // The necessary search finds {c1,c2} failing although {c1} achieves.
        let nec = find_minimal_necessary_sets(&u, &mut j).unwrap();
        assert!(nec.violations.contains(&MonotonicityViolation {
            achieving: CauseSet::singleton(0),
            failing: CauseSet::from_indices([0, 1]),
        }));
        assert_eq!(j.contradictions().len(), 1);
        assert_eq!(j.implied(CauseSet::EMPTY), None);
        let bf = brute_force_families(&u, &mut Judge::new(table)).unwrap();
        assert_eq!(bf.minimal_sufficient, suf.family);
        assert_eq!(bf.minimal_necessary, nec.family);
        assert!(!bf.violations.is_empty());
    }

    #[test]
    fn sufficient_search_reuses_necessary_failures() {
        let u = universe(4);
        let mut j = Judge::new(upward(vec![CauseSet::full(4)]));
        let nec = find_minimal_necessary_sets(&u, &mut j).unwrap();
        assert_eq!(nec.queries, 5);
        let suf = find_minimal_sufficient_sets(&u, &mut j).unwrap();
        assert_eq!(suf.queries, 0);
        assert_eq!(sets(&suf.family), vec![vec![0, 1, 2, 3]]);
        // Alone, the sufficient search must ask every subset.
        let mut fresh = Judge::new(upward(vec![CauseSet::full(4)]));
        assert_eq!(find_minimal_sufficient_sets(&u, &mut fresh).unwrap().queries, 16);
    }
}
