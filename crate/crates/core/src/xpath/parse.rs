//! Recursive-descent parser for XPath queries.
//!
//! Accepts full axis syntax and the usual abbreviations (`a/b`, `//`, `.`,
//! `..`, `@name`), the boolean qualifier connectives, and the positional and
//! counting forms that have a rewriting into the core fragment.

use super::ast::{Axis, NodeTest, Path, Qualifier, Query, Step, Sugar};
use super::XPathError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Slash,
    DoubleSlash,
    Dot,
    DotDot,
    At,
    Star,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Pipe,
    Intersect,
    ColonColon,
    Eq,
    Gt,
    Name(String),
    Number(u32),
    End,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, XPathError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|(_, c)| *c);
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '/' if next == Some('/') => {
                i += 1;
                Tok::DoubleSlash
            }
            '/' => Tok::Slash,
            '.' if next == Some('.') => {
                i += 1;
                Tok::DotDot
            }
            '.' => Tok::Dot,
            '@' => Tok::At,
            '*' => Tok::Star,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '|' => Tok::Pipe,
            '∩' => Tok::Intersect,
            '=' => Tok::Eq,
            '>' => Tok::Gt,
            ':' if next == Some(':') => {
                i += 1;
                Tok::ColonColon
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().map(|(_, c)| c).collect();
                let n = text.parse().map_err(|_| XPathError::Syntax {
                    position: pos,
                    message: format!("number {text} out of range"),
                })?;
                out.push((Tok::Number(n), pos));
                i = j;
                continue;
            }
            c if is_name_start(c) => {
                let mut j = i;
                while j < chars.len() && is_name_char(chars[j].1) {
                    j += 1;
                }
                let text: String = chars[i..j].iter().map(|(_, c)| c).collect();
                out.push((Tok::Name(text), pos));
                i = j;
                continue;
            }
            other => {
                return Err(XPathError::Syntax {
                    position: pos,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        out.push((tok, pos));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

/// Parses a query of the supported fragment. Sugared forms are kept in the
/// tree; see [`super::desugar`].
pub fn parse_xpath(src: &str) -> Result<Query, XPathError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let q = p.union()?;
    if *p.peek() == Tok::Slash && *p.peek_at(1) == Tok::At {
        return Err(XPathError::UnsupportedAxis(
            "attribute step at the end of a query".into(),
        ));
    }
    if p.peek() != &Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(q)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> XPathError {
        XPathError::Syntax {
            position: self.offset(),
            message: format!("{message} (found {:?})", self.peek()),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), XPathError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn is_keyword(&self, k: usize, word: &str) -> bool {
        matches!(self.peek_at(k), Tok::Name(n) if n == word)
    }

    fn union(&mut self) -> Result<Query, XPathError> {
        let mut q = self.intersection()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let r = self.intersection()?;
            q = Query::Union(Box::new(q), Box::new(r));
        }
        Ok(q)
    }

    fn intersection(&mut self) -> Result<Query, XPathError> {
        let mut q = self.primary_query()?;
        loop {
            let is_op = *self.peek() == Tok::Intersect
                || (self.is_keyword(0, "intersect") && !matches!(self.peek_at(1), Tok::ColonColon | Tok::Slash | Tok::DoubleSlash | Tok::LBracket | Tok::End | Tok::RParen | Tok::Pipe));
            if !is_op {
                break;
            }
            self.bump();
            let r = self.primary_query()?;
            q = Query::Intersection(Box::new(q), Box::new(r));
        }
        Ok(q)
    }

    fn primary_query(&mut self) -> Result<Query, XPathError> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let q = self.union()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(q)
            }
            Tok::Slash => {
                self.bump();
                if matches!(self.peek(), Tok::End | Tok::Pipe | Tok::RParen) {
                    return Err(self.error("the document node alone cannot be selected"));
                }
                Ok(Query::Absolute(self.relative_path()?))
            }
            Tok::DoubleSlash => {
                self.bump();
                let first = self.step()?;
                let mut steps = absolute_descendant(first)?;
                steps.extend(self.continue_path()?);
                Ok(Query::Absolute(Path::new(steps)))
            }
            _ => Ok(Query::Relative(self.relative_path()?)),
        }
    }

    fn relative_path(&mut self) -> Result<Path, XPathError> {
        let first = self.step()?;
        let mut steps = vec![first];
        steps.extend(self.continue_path()?);
        Ok(Path::new(steps))
    }

    /// Steps after the first one: `/step` or `//step`. Stops before a
    /// trailing `/@name` so qualifier parsing can pick it up.
    fn continue_path(&mut self) -> Result<Vec<Step>, XPathError> {
        let mut steps = Vec::new();
        loop {
            match self.peek() {
                Tok::Slash if *self.peek_at(1) != Tok::At => {
                    self.bump();
                    steps.push(self.step()?);
                }
                Tok::DoubleSlash => {
                    self.bump();
                    let s = self.step()?;
                    steps.extend(relative_descendant(s));
                }
                _ => return Ok(steps),
            }
        }
    }

    fn node_test(&mut self) -> Result<NodeTest, XPathError> {
        match self.bump() {
            Tok::Star => Ok(NodeTest::Any),
            Tok::Name(n) => Ok(NodeTest::Name(n)),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a node test"))
            }
        }
    }

    fn step(&mut self) -> Result<Step, XPathError> {
        let (axis, test) = match self.peek().clone() {
            Tok::Dot => {
                self.bump();
                (Axis::SelfAxis, NodeTest::Any)
            }
            Tok::DotDot => {
                self.bump();
                (Axis::Parent, NodeTest::Any)
            }
            Tok::At => {
                return Err(XPathError::UnsupportedAxis(
                    "attribute step outside a qualifier".into(),
                ))
            }
            Tok::Name(n) if *self.peek_at(1) == Tok::ColonColon => {
                let axis = match Axis::from_name(&n) {
                    Some(a) => a,
                    None if n == "attribute" || n == "namespace" => {
                        return Err(XPathError::UnsupportedAxis(n))
                    }
                    None => return Err(self.error(&format!("unknown axis {n}"))),
                };
                self.bump();
                self.bump();
                (axis, self.node_test()?)
            }
            Tok::Name(_) | Tok::Star => (Axis::Child, self.node_test()?),
            _ => return Err(self.error("expected a location step")),
        };
        let mut step = Step::new(axis, test);
        while *self.peek() == Tok::LBracket {
            self.bump();
            let first = step.qualifiers.is_empty();
            let q = self.qualifier()?;
            self.expect(Tok::RBracket, "']'")?;
            check_position(&step, &q, first)?;
            step.qualifiers.push(q);
        }
        Ok(step)
    }

    fn qualifier(&mut self) -> Result<Qualifier, XPathError> {
        let mut q = self.qual_and()?;
        while self.is_keyword(0, "or") {
            self.bump();
            let r = self.qual_and()?;
            q = Qualifier::or(q, r);
        }
        Ok(q)
    }

    fn qual_and(&mut self) -> Result<Qualifier, XPathError> {
        let mut q = self.qual_unary()?;
        while self.is_keyword(0, "and") {
            self.bump();
            let r = self.qual_unary()?;
            q = Qualifier::and(q, r);
        }
        Ok(q)
    }

    fn qual_unary(&mut self) -> Result<Qualifier, XPathError> {
        let call = *self.peek_at(1) == Tok::LParen;
        if call && self.is_keyword(0, "not") {
            self.bump();
            self.bump();
            let q = self.qualifier()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(Qualifier::not(q));
        }
        if call && self.is_keyword(0, "position") {
            self.bump();
            self.bump();
            self.expect(Tok::RParen, "')'")?;
            self.expect(Tok::Eq, "'='")?;
            return match self.bump() {
                Tok::Number(0) => Err(XPathError::UnsupportedSugar("position()=0".into())),
                Tok::Number(k) => Ok(Qualifier::Sugar(Sugar::PositionEq(k))),
                Tok::Name(n) if n == "last" => {
                    self.expect(Tok::LParen, "'('")?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Qualifier::Sugar(Sugar::PositionLast))
                }
                _ => {
                    self.pos -= 1;
                    Err(self.error("expected a number or last()"))
                }
            };
        }
        if call && self.is_keyword(0, "count") {
            self.bump();
            self.bump();
            let path = self.relative_path()?;
            self.expect(Tok::RParen, "')'")?;
            let op = self.bump();
            let k = match self.bump() {
                Tok::Number(k) => k,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected a number"));
                }
            };
            return match (op, k) {
                (Tok::Eq, 0) => Ok(Qualifier::Sugar(Sugar::CountZero(path))),
                (Tok::Gt, 0) => Ok(Qualifier::Sugar(Sugar::CountGreater(path, 0))),
                (Tok::Gt, k) => {
                    let simple = path.steps.len() == 1
                        && path.steps[0].axis == Axis::Child
                        && path.steps[0].qualifiers.is_empty();
                    if simple {
                        Ok(Qualifier::Sugar(Sugar::CountGreater(path, k)))
                    } else {
                        Err(XPathError::UnsupportedSugar(format!("count({path})>{k}")))
                    }
                }
                (Tok::Eq, k) => Err(XPathError::UnsupportedSugar(format!("count({path})={k}"))),
                _ => {
                    self.pos -= 2;
                    Err(self.error("expected '=' or '>' after count()"))
                }
            };
        }
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let q = self.qualifier()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(q)
            }
            Tok::At => {
                self.bump();
                Ok(Qualifier::Attribute(Path::new(Vec::new()), self.attribute_name()?))
            }
            Tok::Slash | Tok::DoubleSlash => Err(XPathError::UnsupportedSugar(
                "absolute path inside a qualifier".into(),
            )),
            _ => {
                let path = self.relative_path()?;
                if *self.peek() == Tok::Slash && *self.peek_at(1) == Tok::At {
                    self.bump();
                    self.bump();
                    Ok(Qualifier::Attribute(path, self.attribute_name()?))
                } else {
                    Ok(Qualifier::Path(path))
                }
            }
        }
    }

    fn attribute_name(&mut self) -> Result<String, XPathError> {
        match self.bump() {
            Tok::Name(n) => Ok(n),
            Tok::Star => Err(XPathError::UnsupportedAxis("@*".into())),
            _ => {
                self.pos -= 1;
                Err(self.error("expected an attribute name"))
            }
        }
    }
}

/// Positional predicates have a rewriting only in the first qualifier of a
/// child step, or as `position()=last()` on a preceding-sibling step.
fn check_position(step: &Step, q: &Qualifier, first: bool) -> Result<(), XPathError> {
    fn positions(q: &Qualifier, out: &mut Vec<Sugar>) {
        match q {
            Qualifier::And(a, b) | Qualifier::Or(a, b) => {
                positions(a, out);
                positions(b, out);
            }
            Qualifier::Not(a) => positions(a, out),
            Qualifier::Sugar(s @ (Sugar::PositionEq(_) | Sugar::PositionLast)) => out.push(s.clone()),
            _ => {}
        }
    }
    let mut found = Vec::new();
    positions(q, &mut found);
    for s in found {
        let ok = first
            && match step.axis {
                Axis::Child => true,
                Axis::PrecedingSibling => s == Sugar::PositionLast,
                _ => false,
            };
        if !ok {
            return Err(XPathError::UnsupportedSugar(format!(
                "{s} on a {} step{}",
                step.axis.name(),
                if first { "" } else { " after another qualifier" }
            )));
        }
    }
    Ok(())
}

/// `x//step`: a child step becomes a descendant step; other axes go through
/// `descendant-or-self::*`.
fn relative_descendant(s: Step) -> Vec<Step> {
    if s.axis == Axis::Child && !s.qualifiers.iter().any(Qualifier::has_position) {
        vec![Step { axis: Axis::Descendant, ..s }]
    } else {
        vec![Step::new(Axis::DescendantOrSelf, NodeTest::Any), s]
    }
}

/// Leading `//step`, evaluated from the document node.
fn absolute_descendant(s: Step) -> Result<Vec<Step>, XPathError> {
    match s.axis {
        Axis::Child | Axis::SelfAxis | Axis::Descendant | Axis::DescendantOrSelf => {
            if s.qualifiers.iter().any(Qualifier::has_position) {
                return Err(XPathError::UnsupportedSugar(format!(
                    "positional predicate in //{s}"
                )));
            }
            Ok(vec![Step { axis: Axis::Descendant, ..s }])
        }
        _ => Ok(vec![Step::new(Axis::DescendantOrSelf, NodeTest::Any), s]),
    }
}
