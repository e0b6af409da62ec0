//! Lexer and recursive-descent parser for the rule surface syntax.
//!
//! ```text
//! rule := "forall" var {"," var} "." head "<-" body
//! head := lit {"and" lit}
//! body := "true" | lit {"and" lit}
//! lit  := ["not"] (atom | cmp)
//! atom := pred "(" term {"," term} ")"
//! cmp  := attr "(" term ")" op number
//! op   := "<" | "<=" | "=" | ">=" | ">" | "!="
//! ```
//!
//! The parser never panics: every input yields a rule or a positioned error.

use super::ast::{
    is_lower_ident, is_variable_ident, Atom, CmpOp, Comparison, Formula, Literal, Number, Rule,
    Term, KEYWORDS,
};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lower(String),
    Var(String),
    Num(Number),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Op(CmpOp),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Lower(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::Op(op) => format!("`{op}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(position: usize, expected: &[&str], found: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        position,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let next = bytes.get(i + 1).copied();
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'.' => {
                i += 1;
                Tok::Dot
            }
            b'=' => {
                i += 1;
                Tok::Op(CmpOp::Eq)
            }
            b'<' => match next {
                Some(b'-') => {
                    i += 2;
                    Tok::Arrow
                }
                Some(b'=') => {
                    i += 2;
                    Tok::Op(CmpOp::Le)
                }
                _ => {
                    i += 1;
                    Tok::Op(CmpOp::Lt)
                }
            },
            b'>' => {
                if next == Some(b'=') {
                    i += 2;
                    Tok::Op(CmpOp::Ge)
                } else {
                    i += 1;
                    Tok::Op(CmpOp::Gt)
                }
            }
            b'!' => {
                if next != Some(b'=') {
                    return Err(syntax(start, &["`!=`"], "`!`"));
                }
                i += 2;
                Tok::Op(CmpOp::Ne)
            }
            b'-' | b'0'..=b'9' => {
                if b == b'-' {
                    i += 1;
                }
                let digits = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == digits {
                    return Err(syntax(start, &["digit"], "`-`"));
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lexeme = &text[start..i];
                let n = lexeme.parse::<Number>().map_err(|e| ParseError::Syntax {
                    position: start,
                    expected: vec!["number in range".into()],
                    found: e.to_string(),
                })?;
                Tok::Num(n)
            }
            b if b.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                if is_variable_ident(word) {
                    Tok::Var(word.to_string())
                } else if is_lower_ident(word) {
                    Tok::Lower(word.to_string())
                } else {
                    return Err(syntax(
                        start,
                        &["identifier [a-z][a-z0-9_]*", "variable [A-Z][a-z0-9_]*"],
                        format!("`{word}`"),
                    ));
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, &["token"], format!("character {ch:?}")));
            }
        };
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        syntax(self.offset(), expected, self.peek().describe())
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Lower(s) if s == kw)
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        if !self.is_keyword("forall") {
            return Err(self.error(&["`forall`"]));
        }
        self.bump();
        let mut vars: Vec<String> = Vec::new();
        // `forall .` introduces a ground rule.
        if *self.peek() == Tok::Dot {
            self.bump();
        } else {
            self.variables(&mut vars)?;
        }
        let head = self.conjunction()?;
        self.expect(Tok::Arrow, "`<-`")?;
        let body = if self.is_keyword("true") {
            self.bump();
            Vec::new()
        } else {
            self.conjunction()?
        };
        if *self.peek() != Tok::End {
            return Err(self.error(&["`and`", "end of input"]));
        }
        Rule::new(vars, head, body).map_err(|e| syntax(0, &["well-formed rule"], e.to_string()))
    }

    fn variables(&mut self, vars: &mut Vec<String>) -> Result<(), ParseError> {
        loop {
            let at = self.offset();
            match self.bump() {
                Tok::Var(v) => {
                    if vars.contains(&v) {
                        return Err(syntax(at, &["distinct variable"], format!("`{v}`")));
                    }
                    vars.push(v);
                }
                other => return Err(syntax(at, &["variable"], other.describe())),
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::Dot => {
                    self.bump();
                    return Ok(());
                }
                _ => return Err(self.error(&["`,`", "`.`"])),
            }
        }
    }

    fn conjunction(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut lits: Vec<Literal> = Vec::new();
        loop {
            let at = self.offset();
            let lit = self.literal()?;
            if lits.contains(&lit) {
                return Err(syntax(
                    at,
                    &["distinct literal"],
                    format!("repeated `{}`", super::render_literal(&lit)),
                ));
            }
            lits.push(lit);
            if self.is_keyword("and") {
                self.bump();
            } else {
                return Ok(lits);
            }
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let mut negated = false;
        while self.is_keyword("not") {
            self.bump();
            negated = !negated;
        }
        let at = self.offset();
        let name = match self.peek() {
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error(&["predicate or attribute name", "`not`"])),
        };
        self.bump();
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let inner = if let Tok::Op(op) = *self.peek() {
            self.bump();
            if args.len() != 1 {
                return Err(syntax(
                    at,
                    &["attribute applied to exactly one term"],
                    format!("`{name}` with {} terms", args.len()),
                ));
            }
            let value = match self.bump() {
                Tok::Num(n) => n,
                other => {
                    return Err(syntax(self.toks[self.pos - 1].0, &["number"], other.describe()))
                }
            };
            Formula::Cmp(Comparison {
                attribute: name,
                subject: args.pop().expect("one argument"),
                op,
                value,
            })
        } else {
            Formula::Atom(Atom::new(name, args))
        };
        Ok(Literal { negated, inner })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Variable(v))
            }
            Tok::Lower(c) if !KEYWORDS.contains(&c.as_str()) => {
                self.bump();
                Ok(Term::Constant(c))
            }
            _ => Err(self.error(&["variable", "constant"])),
        }
    }
}

/// Parses the surface syntax without consulting an ontology.
pub fn parse_rule_syntax(text: &str) -> Result<Rule, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.rule()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_pos(text: &str) -> usize {
        match parse_rule_syntax(text) {
            Err(ParseError::Syntax { position, .. }) => position,
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parses_comparisons_and_constants() {
        let r = parse_rule_syntax("forall X . speed(X) <= 130 and not friction(X) < 0.3 <- merging(X, ego)")
            .unwrap();
        assert_eq!(r.head.len(), 2);
        match &r.head[1].inner {
            Formula::Cmp(c) => {
                assert_eq!(c.op, CmpOp::Lt);
                assert_eq!(c.value.to_string(), "0.3");
            }
            f => panic!("{f:?}"),
        }
        assert!(r.head[1].negated);
        assert_eq!(r.body[0].inner.terms()[1], &Term::constant("ego"));
    }

    #[test]
    fn double_negation_collapses() {
        let a = parse_rule_syntax("forall X . not not p(X) <- true").unwrap();
        let b = parse_rule_syntax("forall X . p(X) <- true").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn positioned_errors() {
        assert_eq!(err_pos("exists X . p(X) <- true"), 0);
        assert_eq!(err_pos("forall X . p(X) <-"), 18);
        assert_eq!(err_pos("forall X . p(X) -> q(X)"), 16);
        assert_eq!(err_pos("forall X . p(X) and p(X) <- true"), 20);
        assert_eq!(err_pos("forall X, X . p(X) <- true"), 10);
        assert_eq!(err_pos("forall X . speed(X, X) > 3 <- true"), 11);
        assert_eq!(err_pos("forall X . p(X) <- true true"), 24);
        assert_eq!(err_pos("forall XY . p(XY) <- true"), 7);
        assert_eq!(err_pos("forall X . p(X) <- ü(X)"), 19);
    }

    #[test]
    fn keywords_are_not_names() {
        assert!(parse_rule_syntax("forall X . true(X) <- true").is_err());
        assert!(parse_rule_syntax("forall X . p(and) <- true").is_err());
    }

    #[test]
    fn tight_spacing_accepted() {
        let r = parse_rule_syntax("forall X,Y.p(X,Y)<-speed(X)>=50").unwrap();
        assert_eq!(r.vars, vec!["X", "Y"]);
        assert_eq!(r.body.len(), 1);
    }
}
