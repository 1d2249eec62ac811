//! Recursive-descent parser for the STL surface syntax.
//!
//! ```text
//! formula  = or ;
//! or       = and { "or" and } ;
//! and      = unary { "and" unary } ;
//! unary    = "not" unary | temporal | atom ;
//! temporal = ("F"|"G") [ "[" number "," number "]" ] "(" formula ")"
//!          | "U" "[" number "," number "]" "(" formula "," formula ")" ;
//! atom     = IDENT | "(" formula ")" ;
//! ```
//!
//! `F`, `G` and `U` are only treated as operators when followed by `[` or
//! `(`; otherwise they are ordinary predicate identifiers. An omitted
//! interval on `F`/`G` means "over the whole signal horizon".

use std::collections::BTreeMap;

use super::{Interval, Predicate, StlError, StlFormula};

/// Parses `text` into a formula, resolving atoms through `predicates`.
pub fn parse_stl(
    text: &str,
    predicates: &BTreeMap<String, Predicate>,
) -> Result<StlFormula, StlError> {
    let mut parser = Parser::new(text, predicates);
    let formula = parser.parse_or()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    predicates: &'a BTreeMap<String, Predicate>,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str, predicates: &'a BTreeMap<String, Predicate>) -> Self {
        Self { input, pos: 0, line: 1, col: 1, predicates }
    }

    fn error(&self, message: impl Into<String>) -> StlError {
        StlError::Parse { line: self.line, col: self.col, message: message.into() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.input.len()
    }

    fn peek(&self) -> Option<char> {
        self.input[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), StlError> {
        self.skip_ws();
        match self.peek() {
            Some(found) if found == c => {
                self.bump();
                Ok(())
            }
            Some(found) => Err(self.error(format!("expected `{c}`, found `{found}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    /// Identifier at the cursor, without consuming it.
    fn peek_ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = &self.input[self.pos..];
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let end = chars
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        Some(&rest[..end])
    }

    fn consume_ident(&mut self, ident: &str) {
        for _ in 0..ident.chars().count() {
            self.bump();
        }
    }

    /// True when the next non-space character after the identifier is one of
    /// `follow` — used to tell temporal operators apart from predicate names.
    fn ident_followed_by(&self, ident: &str, follow: &[char]) -> bool {
        let after = &self.input[self.pos + ident.len()..];
        after.chars().find(|c| !c.is_whitespace()).is_some_and(|c| follow.contains(&c))
    }

    fn parse_number(&mut self) -> Result<f64, StlError> {
        self.skip_ws();
        let rest = &self.input[self.pos..];
        let end = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_digit() || c == '.'))
            .map_or(rest.len(), |(i, _)| i);
        if end == 0 {
            return Err(self.error("expected a number"));
        }
        let text = &rest[..end];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(format!("malformed number `{text}`")))?;
        self.consume_ident(text);
        Ok(value)
    }

    fn parse_interval(&mut self) -> Result<Interval, StlError> {
        self.expect('[')?;
        let a = self.parse_number()?;
        self.expect(',')?;
        let b = self.parse_number()?;
        self.expect(']')?;
        Interval::bounded(a, b).map_err(|_| self.error(format!("invalid interval [{a}, {b}]")))
    }

    fn parse_or(&mut self) -> Result<StlFormula, StlError> {
        let mut children = vec![self.parse_and()?];
        while self.peek_ident() == Some("or") {
            self.consume_ident("or");
            children.push(self.parse_and()?);
        }
        Ok(StlFormula::or(children))
    }

    fn parse_and(&mut self) -> Result<StlFormula, StlError> {
        let mut children = vec![self.parse_unary()?];
        while self.peek_ident() == Some("and") {
            self.consume_ident("and");
            children.push(self.parse_unary()?);
        }
        Ok(StlFormula::and(children))
    }

    fn parse_unary(&mut self) -> Result<StlFormula, StlError> {
        match self.peek_ident() {
            Some("not") => {
                self.consume_ident("not");
                Ok(StlFormula::not(self.parse_unary()?))
            }
            Some(op @ ("F" | "G")) if self.ident_followed_by(op, &['[', '(']) => {
                let eventually = op == "F";
                self.consume_ident(op);
                self.skip_ws();
                let interval = if self.peek() == Some('[') {
                    self.parse_interval()?
                } else {
                    Interval::unbounded()
                };
                self.expect('(')?;
                let inner = self.parse_or()?;
                self.expect(')')?;
                Ok(if eventually {
                    StlFormula::eventually(interval, inner)
                } else {
                    StlFormula::globally(interval, inner)
                })
            }
            Some("U") if self.ident_followed_by("U", &['[']) => {
                self.consume_ident("U");
                let interval = self.parse_interval()?;
                self.expect('(')?;
                let lhs = self.parse_or()?;
                self.expect(',')?;
                let rhs = self.parse_or()?;
                self.expect(')')?;
                Ok(StlFormula::until(interval, lhs, rhs))
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<StlFormula, StlError> {
        self.skip_ws();
        if self.peek() == Some('(') {
            self.bump();
            let inner = self.parse_or()?;
            self.expect(')')?;
            return Ok(inner);
        }
        let Some(ident) = self.peek_ident() else {
            return Err(match self.peek() {
                Some(c) => self.error(format!("expected a predicate or `(`, found `{c}`")),
                None => self.error("expected a predicate or `(`, found end of input"),
            });
        };
        if matches!(ident, "and" | "or" | "not") {
            return Err(self.error(format!("expected a predicate, found keyword `{ident}`")));
        }
        match self.predicates.get(ident) {
            Some(p) => {
                let formula = StlFormula::Pred(p.clone());
                self.consume_ident(ident);
                Ok(formula)
            }
            None => Err(StlError::UnknownPredicate {
                name: ident.to_string(),
                line: self.line,
                col: self.col,
            }),
        }
    }
}
