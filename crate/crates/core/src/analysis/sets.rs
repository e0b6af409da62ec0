//! Cause subsets as bitsets over an ordered universe, and antichain families.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest universe a [`CauseSet`] can index.
pub const MAX_UNIVERSE: usize = 64;

/// A subset of universe indices `0..n`, `n <= 64`.
///
/// Ordering is canonical: by cardinality, then lexicographically by the
/// sorted index sequence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CauseSet(u64);

impl CauseSet {
    pub const EMPTY: CauseSet = CauseSet(0);

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_UNIVERSE, "universe of {n} exceeds {MAX_UNIVERSE}");
        if n == MAX_UNIVERSE {
            CauseSet(u64::MAX)
        } else {
            CauseSet((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        CauseSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        CauseSet(indices.into_iter().fold(0u64, |acc, i| {
            assert!(i < MAX_UNIVERSE);
            acc | (1 << i)
        }))
    }

    pub fn singleton(i: usize) -> Self {
        Self::from_indices([i])
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_UNIVERSE && self.0 & (1 << i) != 0
    }

    pub fn with(self, i: usize) -> Self {
        CauseSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        CauseSet(self.0 & !(1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: CauseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: CauseSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: CauseSet) -> Self {
        CauseSet(self.0 | other.0)
    }

    pub fn intersection(self, other: CauseSet) -> Self {
        CauseSet(self.0 & other.0)
    }

    pub fn difference(self, other: CauseSet) -> Self {
        CauseSet(self.0 & !other.0)
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_UNIVERSE).filter(move |i| bits & (1 << i) != 0)
    }

    /// Names of the members, in universe order.
    pub fn names<'a>(self, universe: &'a [String]) -> Vec<&'a str> {
        self.indices().map(|i| universe[i].as_str()).collect()
    }
}

impl Ord for CauseSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.indices().cmp(other.indices()))
    }
}

impl PartialOrd for CauseSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CauseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices()).finish()
    }
}

impl Serialize for CauseSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.indices())
    }
}

impl<'de> Deserialize<'de> for CauseSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = indices.iter().find(|&&i| i >= MAX_UNIVERSE) {
            return Err(serde::de::Error::custom(format!("index {bad} out of range")));
        }
        Ok(CauseSet::from_indices(indices))
    }
}

/// All `k`-subsets of `0..n` in lexicographic order of their index sequences.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = CauseSet> {
    let mut idx: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let current = idx.as_ref()?.clone();
        let out = CauseSet::from_indices(current.iter().copied());
        // advance
        let v = idx.as_mut().expect("checked above");
        let mut i = k;
        loop {
            if i == 0 {
                idx = None;
                break;
            }
            i -= 1;
            if v[i] < n - k + i {
                v[i] += 1;
                for j in i + 1..k {
                    v[j] = v[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

/// A canonically sorted, duplicate-free family of subsets of `universe`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseSetFamily {
    pub universe: Vec<String>,
    pub sets: Vec<CauseSet>,
}

impl CauseSetFamily {
    pub fn new(universe: Vec<String>, mut sets: Vec<CauseSet>) -> Self {
        sets.sort();
        sets.dedup();
        CauseSetFamily { universe, sets }
    }

    pub fn empty(universe: Vec<String>) -> Self {
        CauseSetFamily {
            universe,
            sets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// No member is a proper subset of another.
    pub fn is_antichain(&self) -> bool {
        self.sets.iter().enumerate().all(|(i, a)| {
            self.sets
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.is_subset_of(*b))
        })
    }

    /// Members as lists of cause names.
    pub fn named(&self) -> Vec<Vec<String>> {
        self.sets
            .iter()
            .map(|s| s.names(&self.universe).into_iter().map(String::from).collect())
            .collect()
    }

    /// Intersection of all members; empty for an empty family.
    pub fn common_core(&self) -> CauseSet {
        match self.sets.split_first() {
            None => CauseSet::EMPTY,
            Some((first, rest)) => rest.iter().fold(*first, |acc, s| acc.intersection(*s)),
        }
    }
}

impl fmt::Display for CauseSetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets: Vec<String> = self
            .named()
            .iter()
            .map(|s| format!("{{{}}}", s.join(", ")))
            .collect();
        write!(f, "{{{}}}", sets.join(", "))
    }
}
