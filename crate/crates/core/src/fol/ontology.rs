//! Vocabulary a rule may draw on: predicates with sorted arguments, numeric
//! attributes with units and finite value domains, and sorted constants.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ast::{is_lower_ident, CmpOp, Number, KEYWORDS};
use super::FolError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateDecl {
    /// One sort per argument; the arity is `args.len()`.
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeDecl {
    /// Sort of the single term the attribute is applied to.
    pub subject: String,
    pub unit: String,
    /// Every value the attribute may take under finite-domain grounding.
    pub domain: Vec<Number>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ontology {
    pub predicates: BTreeMap<String, PredicateDecl>,
    #[serde(default)]
    pub numeric_attributes: BTreeMap<String, AttributeDecl>,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
    #[serde(default = "all_ops")]
    pub comparison_ops: BTreeSet<CmpOp>,
}

fn all_ops() -> BTreeSet<CmpOp> {
    CmpOp::ALL.into_iter().collect()
}

impl Ontology {
    pub fn from_json(text: &str) -> Result<Self, FolError> {
        let onto: Ontology =
            serde_json::from_str(text).map_err(|e| FolError::Ontology(e.to_string()))?;
        onto.check()?;
        Ok(onto)
    }

    pub fn load(path: &Path) -> Result<Self, FolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FolError::Ontology(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks name shapes, global name uniqueness and attribute domains.
    pub fn check(&self) -> Result<(), FolError> {
        let mut seen = BTreeSet::new();
        let names = self
            .predicates
            .keys()
            .chain(self.numeric_attributes.keys())
            .chain(self.constants.keys());
        for name in names {
            if !is_lower_ident(name) || KEYWORDS.contains(&name.as_str()) {
                return Err(FolError::Ontology(format!("`{name}` is not a valid name")));
            }
            if !seen.insert(name) {
                return Err(FolError::Ontology(format!("`{name}` is declared twice")));
            }
        }
        for (name, p) in &self.predicates {
            if p.args.is_empty() {
                return Err(FolError::Ontology(format!(
                    "predicate `{name}` must take at least one argument"
                )));
            }
        }
        for (name, attr) in &self.numeric_attributes {
            if attr.domain.is_empty() {
                return Err(FolError::Ontology(format!(
                    "attribute `{name}` has an empty value domain"
                )));
            }
            let distinct: BTreeSet<_> = attr.domain.iter().collect();
            if distinct.len() != attr.domain.len() {
                return Err(FolError::Ontology(format!(
                    "attribute `{name}` repeats a domain value"
                )));
            }
        }
        Ok(())
    }

    /// Every sort mentioned anywhere in the declarations, sorted.
    pub fn sorts(&self) -> BTreeSet<&str> {
        let mut sorts: BTreeSet<&str> = BTreeSet::new();
        for p in self.predicates.values() {
            sorts.extend(p.args.iter().map(String::as_str));
        }
        for a in self.numeric_attributes.values() {
            sorts.insert(&a.subject);
        }
        sorts.extend(self.constants.values().map(String::as_str));
        sorts
    }

    pub fn constants_of<'a>(&'a self, sort: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.constants
            .iter()
            .filter(move |(_, s)| s.as_str() == sort)
            .map(|(c, _)| c.as_str())
    }

    /// Prompt-ready description of the rule grammar and this vocabulary.
    pub fn grammar_doc(&self) -> String {
        let mut doc = String::from(
            "Rules must follow this grammar exactly:\n\
             rule := \"forall\" var {\",\" var} \".\" head \"<-\" body\n\
             head := lit {\"and\" lit}\n\
             body := \"true\" | lit {\"and\" lit}\n\
             lit  := [\"not\"] (atom | cmp)\n\
             atom := pred \"(\" term {\",\" term} \")\"\n\
             cmp  := attr \"(\" term \")\" op number\n\
             Variables are a capital letter optionally followed by lowercase letters, digits or underscores.\n\
             Every variable must be listed after forall.\n\nPredicates:\n",
        );
        for (name, p) in &self.predicates {
            doc.push_str(&format!("  {name}({})", p.args.join(", ")));
            if !p.description.is_empty() {
                doc.push_str(&format!(" -- {}", p.description));
            }
            doc.push('\n');
        }
        if !self.numeric_attributes.is_empty() {
            doc.push_str("Numeric attributes:\n");
            for (name, a) in &self.numeric_attributes {
                let values: Vec<String> = a.domain.iter().map(Number::to_string).collect();
                doc.push_str(&format!(
                    "  {name}({}) in {} with values {{{}}}",
                    a.subject,
                    a.unit,
                    values.join(", ")
                ));
                if !a.description.is_empty() {
                    doc.push_str(&format!(" -- {}", a.description));
                }
                doc.push('\n');
            }
        }
        if !self.constants.is_empty() {
            doc.push_str("Constants:\n");
            for (name, sort) in &self.constants {
                doc.push_str(&format!("  {name}: {sort}\n"));
            }
        }
        let ops: Vec<&str> = self.comparison_ops.iter().map(|o| o.symbol()).collect();
        doc.push_str(&format!("Comparison operators: {}\n", ops.join(" ")));
        doc
    }
}
