//! The constrained first-order rule language: AST, ontology, parser,
//! canonical renderer and schema validation.

mod ast;
mod ontology;
mod parser;
mod schema;

use thiserror::Error;

pub use ast::{
    is_lower_ident, is_variable_ident, Atom, CmpOp, Comparison, Formula, Literal, Number, Rule,
    Term, KEYWORDS, MAX_SCALE,
};
pub use ontology::{AttributeDecl, Ontology, PredicateDecl};
pub use parser::parse_rule_syntax;
pub use schema::{validate_schema, variable_sorts, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FolError {
    #[error("invalid number: {0}")]
    Number(String),
    #[error("malformed rule: {0}")]
    Structure(String),
    #[error("invalid ontology: {0}")]
    Ontology(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("schema error: {}", render_violations(.0))]
    Schema(Vec<Violation>),
}

fn render_violations(vs: &[Violation]) -> String {
    vs.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ")
}

/// Parses `text` and validates it against `onto`.
pub fn parse_rule(text: &str, onto: &Ontology) -> Result<Rule, ParseError> {
    let rule = parse_rule_syntax(text)?;
    let violations = validate_schema(&rule, onto);
    if violations.is_empty() {
        Ok(rule)
    } else {
        Err(ParseError::Schema(violations))
    }
}

pub fn render_term(t: &Term) -> &str {
    t.name()
}

pub fn render_formula(f: &Formula) -> String {
    match f {
        Formula::Atom(a) => {
            let args: Vec<&str> = a.args.iter().map(render_term).collect();
            format!("{}({})", a.predicate, args.join(", "))
        }
        Formula::Cmp(c) => format!(
            "{}({}) {} {}",
            c.attribute,
            render_term(&c.subject),
            c.op,
            c.value
        ),
    }
}

pub fn render_literal(l: &Literal) -> String {
    if l.negated {
        format!("not {}", render_formula(&l.inner))
    } else {
        render_formula(&l.inner)
    }
}

fn render_conjunction(lits: &[Literal]) -> String {
    lits.iter().map(render_literal).collect::<Vec<_>>().join(" and ")
}

/// Canonical text: single spaces, literals in source order, lowercase
/// keywords, `true` for an empty body.
pub fn render_rule(r: &Rule) -> String {
    let body = if r.body.is_empty() {
        "true".to_string()
    } else {
        render_conjunction(&r.body)
    };
    let quantifier = if r.vars.is_empty() {
        "forall .".to_string()
    } else {
        format!("forall {} .", r.vars.join(", "))
    };
    format!("{quantifier} {} <- {body}", render_conjunction(&r.head))
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_rule(self))
    }
}
