//! Abstract syntax of the rule language.
//!
//! A [`Rule`] is a universally quantified implication `head <- body`, where both
//! sides are conjunctions of (possibly negated) atoms and numeric comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::FolError;

/// Largest number of fractional digits a [`Number`] may carry.
pub const MAX_SCALE: u32 = 18;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Variable(String),
    Constant(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Constant(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Variable(n) | Term::Constant(n) => n,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

/// `[a-z][a-z0-9_]*`, the shape of predicate, attribute and constant names.
pub fn is_lower_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

/// `[A-Z][a-z0-9_]*`, the shape of variable names.
pub fn is_variable_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('A'..='Z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

pub const KEYWORDS: [&str; 4] = ["forall", "and", "not", "true"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "!=")]
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Eq,
        CmpOp::Ge,
        CmpOp::Gt,
        CmpOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }

    /// Evaluates `lhs op rhs`.
    pub fn holds(self, lhs: Number, rhs: Number) -> bool {
        let ord = lhs.cmp(&rhs);
        match self {
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ge => ord != Ordering::Less,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ne => ord != Ordering::Equal,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// An exact terminating decimal, `mantissa / 10^scale`, kept in lowest terms
/// (no trailing fractional zeros) so that equal values compare and render equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Number {
    mantissa: i64,
    scale: u32,
}

impl Number {
    pub fn new(mantissa: i64, scale: u32) -> Result<Self, FolError> {
        if scale > MAX_SCALE {
            return Err(FolError::Number(format!(
                "at most {MAX_SCALE} fractional digits are supported"
            )));
        }
        let mut n = Number { mantissa, scale };
        while n.scale > 0 && n.mantissa % 10 == 0 {
            n.mantissa /= 10;
            n.scale -= 1;
        }
        Ok(n)
    }

    pub fn integer(value: i64) -> Self {
        Number {
            mantissa: value,
            scale: 0,
        }
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    fn widened(&self, scale: u32) -> i128 {
        self.mantissa as i128 * 10i128.pow(scale - self.scale)
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        self.widened(scale).cmp(&other.widened(scale))
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let digits = self.mantissa.unsigned_abs().to_string();
        let scale = self.scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int, frac) = padded.split_at(padded.len() - scale);
        write!(f, "{sign}{int}.{frac}")
    }
}

impl FromStr for Number {
    type Err = FolError;

    /// Accepts `-?[0-9]+(\.[0-9]+)?`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FolError::Number(format!("malformed number `{s}`"));
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || (body.contains('.') && frac.is_empty())
        {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > MAX_SCALE as usize {
            return Err(FolError::Number(format!(
                "`{s}` has more than {MAX_SCALE} fractional digits"
            )));
        }
        let mut mantissa: i64 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add((b - b'0') as i64))
                .ok_or_else(|| FolError::Number(format!("`{s}` is out of range")))?;
        }
        if negative {
            mantissa = -mantissa;
        }
        Number::new(mantissa, frac.len() as u32)
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let value: serde_json::Number = self
            .to_string()
            .parse()
            .map_err(serde::ser::Error::custom)?;
        value.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let text = match Raw::deserialize(deserializer)? {
            Raw::Int(i) => return Ok(Number::integer(i)),
            // `{}` on f64 prints the shortest representation that round-trips.
            Raw::Float(x) => format!("{x}"),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comparison {
    pub attribute: String,
    pub subject: Term,
    pub op: CmpOp,
    pub value: Number,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Cmp(Comparison),
}

impl Formula {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Formula::Atom(a) => a.args.iter().collect(),
            Formula::Cmp(c) => vec![&c.subject],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub negated: bool,
    pub inner: Formula,
}

impl Literal {
    pub fn pos(inner: Formula) -> Self {
        Literal {
            negated: false,
            inner,
        }
    }

    pub fn neg(inner: Formula) -> Self {
        Literal {
            negated: true,
            inner,
        }
    }

    pub fn atom(predicate: &str, args: Vec<Term>) -> Self {
        Literal::pos(Formula::Atom(Atom::new(predicate, args)))
    }

    pub fn negate(&self) -> Self {
        Literal {
            negated: !self.negated,
            inner: self.inner.clone(),
        }
    }
}

/// `forall vars . head <- body`.
///
/// Equality (`==`) compares every field, including `id` and `origin`. Use
/// [`Rule::same_formula`] to compare only the logical content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub vars: Vec<String>,
    pub head: Vec<Literal>,
    pub body: Vec<Literal>,
    pub id: String,
    pub origin: String,
}

impl Rule {
    /// Builds a rule, checking the structural invariants: the head is
    /// nonempty and neither side nor the variable list repeats an entry.
    /// The id defaults to a digest of the canonical rendering.
    pub fn new(vars: Vec<String>, head: Vec<Literal>, body: Vec<Literal>) -> Result<Self, FolError> {
        if head.is_empty() {
            return Err(FolError::Structure("rule head must not be empty".into()));
        }
        if let Some(dup) = first_duplicate(&vars) {
            return Err(FolError::Structure(format!("variable {dup} is quantified twice")));
        }
        for (side, lits) in [("head", &head), ("body", &body)] {
            if let Some(dup) = first_duplicate(lits) {
                return Err(FolError::Structure(format!(
                    "literal `{}` repeats in the {side}",
                    super::render_literal(dup)
                )));
            }
        }
        let mut rule = Rule {
            vars,
            head,
            body,
            id: String::new(),
            origin: String::new(),
        };
        rule.id = rule.content_id();
        Ok(rule)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = origin.into();
        self
    }

    /// `r` followed by the first 16 hex digits of the SHA-256 of the canonical text.
    pub fn content_id(&self) -> String {
        let digest = Sha256::digest(super::render_rule(self).as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("r{hex}")
    }

    /// Structural equality on the formula alone; ids and origins are ignored
    /// and variable names matter.
    pub fn same_formula(&self, other: &Rule) -> bool {
        self.vars == other.vars && self.head == other.head && self.body == other.body
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.head.iter().chain(self.body.iter())
    }

    /// Variables occurring in the literals, in first-occurrence order.
    pub fn used_variables(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for lit in self.literals() {
            for t in lit.inner.terms() {
                if let Term::Variable(v) = t {
                    if !seen.contains(&v.as_str()) {
                        seen.push(v);
                    }
                }
            }
        }
        seen
    }
}

fn first_duplicate<T: PartialEq>(items: &[T]) -> Option<&T> {
    items
        .iter()
        .enumerate()
        .find(|(i, x)| items[..*i].contains(x))
        .map(|(_, x)| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_normalize_and_order() {
        let a: Number = "50.0".parse().unwrap();
        assert_eq!(a, Number::integer(50));
        assert_eq!(a.to_string(), "50");
        let b: Number = "0.30".parse().unwrap();
        assert_eq!(b.to_string(), "0.3");
        let c: Number = "-0.05".parse().unwrap();
        assert_eq!(c.to_string(), "-0.05");
        assert!(c < b && b < a);
        assert_eq!("-0".parse::<Number>().unwrap().to_string(), "0");
    }

    #[test]
    fn malformed_numbers_rejected() {
        for s in ["", "-", "1.", ".5", "1e3", "12a", "99999999999999999999"] {
            assert!(s.parse::<Number>().is_err(), "{s} accepted");
        }
    }

    #[test]
    fn number_json_roundtrip() {
        let n: Number = serde_json::from_str("0.7").unwrap();
        assert_eq!(n.to_string(), "0.7");
        assert_eq!(serde_json::to_string(&n).unwrap(), "0.7");
        let n: Number = serde_json::from_str("130").unwrap();
        assert_eq!(serde_json::to_string(&n).unwrap(), "130");
    }

    #[test]
    fn identifier_shapes() {
        assert!(is_lower_ident("sd_front"));
        assert!(!is_lower_ident("Sd"));
        assert!(is_variable_ident("X"));
        assert!(is_variable_ident("X1"));
        assert!(!is_variable_ident("XY"));
        assert!(!is_variable_ident("x"));
    }

    #[test]
    fn empty_head_rejected() {
        assert!(Rule::new(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn duplicate_literals_rejected() {
        let p = Literal::atom("p", vec![Term::var("X")]);
        assert!(Rule::new(vec!["X".into()], vec![p.clone(), p.clone()], vec![]).is_err());
        assert!(Rule::new(vec!["X".into(), "X".into()], vec![p], vec![]).is_err());
    }
}
