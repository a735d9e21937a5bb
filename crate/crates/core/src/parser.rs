//! Problem specifications: formulas, built-in predicates and custom
//! predicate definitions, and their expansion into core formulas.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! spec    := (def ';')* formula
//! def     := name '(' param (',' param)* ')' '=' formula
//! formula := let-binder | mu-binder | equiv
//! equiv   := implies ('<=>' equiv)?
//! implies := or ('=>' implies)?
//! or      := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '~' unary | '<' program '>' unary | atom
//! atom    := T | F | # | name | @name | $var | call | '(' formula ')'
//! ```
//!
//! Binders are written `let $X = f, $Y = g in h`; the trace forms
//! `mu X1.f` and `let_mu X1=f, X2=g in h` are accepted as well, so printed
//! formulas parse back. Bare identifiers bound by an enclosing binder are
//! variables, other identifiers are element names. Comments run from `//` to
//! the end of the line.

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::formula::{Arg, Formula, Program, Var, CONTEXT_PROPOSITION};
use crate::schema::{compile_type, SchemaError, TypeReport};
use crate::xpath::{compile_query, is_root, parse_xpath, XPathError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{name}() expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("unknown predicate {0}()")]
    UnknownPredicate(String),
    #[error("predicate {0}() is recognized but has no defined semantics")]
    UnsupportedPredicate(String),
    #[error("predicate {0}() is defined twice")]
    DuplicateDefinition(String),
    #[error("bad argument to {name}(): {message}")]
    Argument { name: String, message: String },
    #[error("invalid XPath in select/exists: {0}")]
    XPath(#[from] XPathError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateDef {
    pub name: String,
    /// Placeholder variables standing for the arguments in `body`.
    pub params: Vec<Var>,
    pub body: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub definitions: Vec<PredicateDef>,
    pub goal: Formula,
}

/// Built-in predicates with their accepted argument counts.
const BUILTINS: [(&str, usize, usize); 7] = [
    ("select", 1, 2),
    ("exists", 1, 2),
    ("type", 2, 2),
    ("element", 1, 1),
    ("attribute", 1, 1),
    ("descendant", 1, 1),
    ("exclude", 1, 1),
];

/// Predicates named by the language whose meaning is not defined here.
const UNSUPPORTED: [&str; 8] = [
    "forward_incompatible",
    "backward_incompatible",
    "added_element",
    "added_attribute",
    "non_empty",
    "new_element_names",
    "new_regions",
    "new_contents",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Attr(String),
    Str(String),
    Int(i64),
    Hash,
    LParen,
    RParen,
    Lt,
    Gt,
    Minus,
    Comma,
    Semi,
    Dot,
    Eq,
    Tilde,
    Amp,
    Bar,
    Implies,
    Equiv,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':')
}

fn lex(text: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: &str| SpecError::Syntax {
        line,
        column,
        message: message.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let step = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            step(1, &mut i, &mut col);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if rest.starts_with("//") {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if rest.starts_with("(:") {
            return Err(err(l0, c0, "'(: ... :)' comments are not supported; use '//'"));
        }
        let push = |tok, out: &mut Vec<Token>| {
            out.push(Token {
                tok,
                line: l0,
                column: c0,
            })
        };
        if rest.starts_with("<=>") {
            push(Tok::Equiv, &mut out);
            step(3, &mut i, &mut col);
            continue;
        }
        if rest.starts_with("=>") {
            push(Tok::Implies, &mut out);
            step(2, &mut i, &mut col);
            continue;
        }
        let single = match c {
            '#' => Some(Tok::Hash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            '-' => Some(Tok::Minus),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '.' => Some(Tok::Dot),
            '=' => Some(Tok::Eq),
            '~' => Some(Tok::Tilde),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            _ => None,
        };
        if let Some(t) = single {
            push(t, &mut out);
            step(1, &mut i, &mut col);
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            let (mut ln, mut cl) = (line, col + 1);
            loop {
                match chars.get(j) {
                    None => return Err(err(l0, c0, "unterminated string literal")),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(j + 1) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(&e) => s.push(e),
                            None => return Err(err(l0, c0, "unterminated string literal")),
                        }
                        j += 2;
                        cl += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                        if ch == '\n' {
                            ln += 1;
                            cl = 1;
                        } else {
                            cl += 1;
                        }
                    }
                }
            }
            push(Tok::Str(s), &mut out);
            i = j + 1;
            line = ln;
            col = cl + 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let n: String = chars[start..i].iter().collect();
            col += i - start;
            let v = n.parse().map_err(|_| err(l0, c0, "integer too large"))?;
            push(Tok::Int(v), &mut out);
            continue;
        }
        if c == '$' || c == '@' || is_name_char(c) {
            let sigil = matches!(c, '$' | '@');
            let start = if sigil { i + 1 } else { i };
            let mut j = start;
            while j < chars.len() && is_name_char(chars[j]) {
                j += 1;
            }
            if j == start || chars[start] == '-' {
                return Err(err(l0, c0, "expected a name"));
            }
            let name: String = chars[start..j].iter().collect();
            let tok = match c {
                '$' => Tok::Var(name),
                '@' => Tok::Attr(name),
                _ => Tok::Ident(name),
            };
            push(tok, &mut out);
            col += j - i;
            i = j;
            continue;
        }
        return Err(err(l0, c0, &format!("unexpected character '{c}'")));
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Arity of a predicate known at this point of the spec.
enum Known {
    Builtin(usize, usize),
    Custom(usize),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Binder scopes, innermost last. Keys keep the sigil as written.
    scopes: Vec<Vec<(String, Var)>>,
    defined: HashMap<String, usize>,
}

/// Parses a problem specification.
pub fn parse_spec(text: &str) -> Result<ProblemSpec, SpecError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        scopes: Vec::new(),
        defined: HashMap::new(),
    };
    let mut definitions = Vec::new();
    while let Some(d) = p.try_definition()? {
        p.expect(Tok::Semi, "';' after a definition")?;
        definitions.push(d);
    }
    let goal = p.formula()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error("unexpected input after the formula"));
    }
    Ok(ProblemSpec { definitions, goal })
}

/// Parses a single formula (no definitions).
pub fn parse_formula(text: &str) -> Result<Formula, SpecError> {
    let spec = parse_spec(text)?;
    if !spec.definitions.is_empty() {
        return Err(SpecError::Syntax {
            line: 1,
            column: 1,
            message: "definitions are not allowed here".into(),
        });
    }
    Ok(spec.goal)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> SpecError {
        let t = &self.toks[self.pos];
        SpecError::Syntax {
            line: t.line,
            column: t.column,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SpecError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn lookup(&self, key: &str) -> Option<Var> {
        self.scopes
            .iter()
            .rev()
            .flat_map(|s| s.iter().rev())
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
    }

    fn known(&self, name: &str) -> Option<Known> {
        if let Some(&(_, lo, hi)) = BUILTINS.iter().find(|(n, _, _)| *n == name) {
            return Some(Known::Builtin(lo, hi));
        }
        self.defined.get(name).map(|&n| Known::Custom(n))
    }

    /// `name(p1, ..., pn) =` starts a definition; anything else is the goal.
    fn try_definition(&mut self) -> Result<Option<PredicateDef>, SpecError> {
        let Tok::Ident(name) = self.peek().clone() else {
            return Ok(None);
        };
        if *self.peek_at(1) != Tok::LParen {
            return Ok(None);
        }
        // scan the parameter list without consuming
        let mut k = 2;
        let mut params = Vec::new();
        loop {
            match self.peek_at(k) {
                Tok::Var(v) => params.push(format!("${v}")),
                Tok::Ident(v) => params.push(v.clone()),
                _ => return Ok(None),
            }
            k += 1;
            match self.peek_at(k) {
                Tok::Comma => k += 1,
                Tok::RParen => break,
                _ => return Ok(None),
            }
        }
        if *self.peek_at(k + 1) != Tok::Eq {
            return Ok(None);
        }
        if self.known(&name).is_some() {
            return Err(SpecError::DuplicateDefinition(name));
        }
        if UNSUPPORTED.contains(&name.as_str()) {
            return Err(SpecError::UnsupportedPredicate(name));
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].contains(p) {
                return Err(self.error(&format!("parameter {p} repeated")));
            }
        }
        self.pos += k + 2;
        let vars: Vec<Var> = params
            .iter()
            .map(|p| Var::fresh(p.trim_start_matches('$')))
            .collect();
        self.scopes
            .push(params.iter().cloned().zip(vars.iter().cloned()).collect());
        let body = self.formula();
        self.scopes.pop();
        let body = body?;
        self.defined.insert(name.clone(), vars.len());
        Ok(Some(PredicateDef {
            name,
            params: vars,
            body,
        }))
    }

    fn formula(&mut self) -> Result<Formula, SpecError> {
        match self.peek() {
            Tok::Ident(k) if k == "let" || k == "let_mu" => self.let_binder(),
            Tok::Ident(k) if k == "mu" => self.mu_binder(),
            _ => self.equiv(),
        }
    }

    fn binder_name(&mut self) -> Result<String, SpecError> {
        match self.bump() {
            Tok::Var(v) => Ok(format!("${v}")),
            Tok::Ident(v) => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a variable name"))
            }
        }
    }

    fn let_binder(&mut self) -> Result<Formula, SpecError> {
        self.bump();
        // names first, so that bindings may refer to each other
        let start = self.pos;
        let mut names = Vec::new();
        loop {
            let n = self.binder_name()?;
            if names.contains(&n) {
                return Err(self.error(&format!("variable {n} bound twice in one let")));
            }
            names.push(n);
            self.expect(Tok::Eq, "'='")?;
            self.skip_binding()?;
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::Ident(k) if k == "in" => break,
                _ => return Err(self.error("expected ',' or 'in'")),
            }
        }
        self.pos = start;
        let vars: Vec<Var> = names
            .iter()
            .map(|n| Var::fresh(n.trim_start_matches('$')))
            .collect();
        self.scopes
            .push(names.iter().cloned().zip(vars.iter().cloned()).collect());
        let result = (|| {
            let mut bindings = Vec::new();
            for v in &vars {
                self.bump();
                self.bump();
                bindings.push((v.clone(), self.formula()?));
                self.bump(); // ',' or 'in'
            }
            let body = self.formula()?;
            Ok(Formula::Let(bindings, Box::new(body)))
        })();
        self.scopes.pop();
        result
    }

    /// Skips one binding body: tokens up to a ',' or 'in' at depth zero.
    fn skip_binding(&mut self) -> Result<(), SpecError> {
        let mut depth = 0usize;
        let mut lets = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return Err(self.error("unterminated let binder")),
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    if depth == 0 {
                        return Err(self.error("unbalanced ')'"));
                    }
                    depth -= 1;
                }
                Tok::Ident(k) if k == "let" || k == "let_mu" => lets += 1,
                Tok::Ident(k) if k == "in" => {
                    if lets == 0 && depth == 0 {
                        return Ok(());
                    }
                    lets = lets.saturating_sub(1);
                }
                Tok::Comma if depth == 0 && lets == 0 => return Ok(()),
                _ => {}
            }
            self.bump();
        }
    }

    fn mu_binder(&mut self) -> Result<Formula, SpecError> {
        self.bump();
        let n = self.binder_name()?;
        self.expect(Tok::Dot, "'.' after the mu variable")?;
        let v = Var::fresh(n.trim_start_matches('$'));
        self.scopes.push(vec![(n, v.clone())]);
        let body = self.formula();
        self.scopes.pop();
        Ok(Formula::mu(v, body?))
    }

    fn equiv(&mut self) -> Result<Formula, SpecError> {
        let a = self.implies()?;
        if *self.peek() == Tok::Equiv {
            self.bump();
            let b = self.equiv_rhs()?;
            return Ok(Formula::equiv(a, b));
        }
        Ok(a)
    }

    fn equiv_rhs(&mut self) -> Result<Formula, SpecError> {
        match self.peek() {
            Tok::Ident(k) if matches!(k.as_str(), "let" | "let_mu" | "mu") => self.formula(),
            _ => self.equiv(),
        }
    }

    fn implies(&mut self) -> Result<Formula, SpecError> {
        let a = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let b = match self.peek() {
                Tok::Ident(k) if matches!(k.as_str(), "let" | "let_mu" | "mu") => self.formula()?,
                _ => self.implies()?,
            };
            return Ok(Formula::implies(a, b));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Formula, SpecError> {
        let mut a = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let b = self.operand(Self::and)?;
            a = Formula::or(a, b);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Formula, SpecError> {
        let mut a = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let b = self.operand(Self::unary)?;
            a = Formula::and(a, b);
        }
        Ok(a)
    }

    /// A right operand; a binder there extends as far as possible.
    fn operand(
        &mut self,
        next: fn(&mut Self) -> Result<Formula, SpecError>,
    ) -> Result<Formula, SpecError> {
        match self.peek() {
            Tok::Ident(k) if matches!(k.as_str(), "let" | "let_mu" | "mu") => self.formula(),
            _ => next(self),
        }
    }

    fn unary(&mut self) -> Result<Formula, SpecError> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                let a = self.operand(Self::unary)?;
                Ok(Formula::not(a))
            }
            Tok::Lt => {
                self.bump();
                if let Tok::Attr(a) = self.peek().clone() {
                    self.bump();
                    self.expect(Tok::Gt, "'>'")?;
                    match self.bump() {
                        Tok::Ident(t) if t == "T" => return Ok(Formula::attribute(a)),
                        _ => {
                            self.pos -= 1;
                            return Err(self.error("'<@name>' must be followed by T"));
                        }
                    }
                }
                let neg = if *self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                let code = match self.bump() {
                    Tok::Int(n @ (1 | 2)) => if neg { -n } else { n },
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected a program 1, 2, -1 or -2"));
                    }
                };
                self.expect(Tok::Gt, "'>'")?;
                let p = Program::from_code(code as i8).expect("checked program code");
                let a = self.operand(Self::unary)?;
                Ok(Formula::modal(p, a))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, SpecError> {
        match self.bump() {
            Tok::Hash => Ok(Formula::Context),
            Tok::Attr(a) => Ok(Formula::attribute(a)),
            Tok::Var(v) => match self.lookup(&format!("${v}")) {
                Some(var) => Ok(Formula::Var(var)),
                None => {
                    self.pos -= 1;
                    Err(self.error(&format!("unbound variable ${v}")))
                }
            },
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    return self.call(name);
                }
                if let Some(v) = self.lookup(&name) {
                    return Ok(Formula::Var(v));
                }
                Ok(match name.as_str() {
                    "T" => Formula::True,
                    "F" => Formula::False,
                    CONTEXT_PROPOSITION => Formula::Context,
                    "let" | "let_mu" | "mu" | "in" => {
                        self.pos -= 1;
                        return Err(self.error(&format!("unexpected keyword '{name}'")));
                    }
                    _ => Formula::element(name),
                })
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected a formula"))
            }
        }
    }

    fn call(&mut self, name: String) -> Result<Formula, SpecError> {
        if UNSUPPORTED.contains(&name.as_str()) {
            return Err(SpecError::UnsupportedPredicate(name));
        }
        let known = self
            .known(&name)
            .ok_or_else(|| SpecError::UnknownPredicate(name.clone()))?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                if let Tok::Str(s) = self.peek().clone() {
                    self.bump();
                    args.push(Arg::Str(s));
                } else {
                    args.push(Arg::Formula(self.formula()?));
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')' closing the argument list")?;
        let n = args.len();
        match known {
            Known::Builtin(lo, hi) if n < lo || n > hi => {
                // type(f, l, phi, phi') is a named but undefined form
                if name == "type" && n == 4 {
                    return Err(SpecError::UnsupportedPredicate("type/4".into()));
                }
                let expected = if lo == hi { lo.to_string() } else { format!("{lo} or {hi}") };
                Err(SpecError::Arity { name, expected, found: n })
            }
            Known::Custom(k) if n != k => Err(SpecError::Arity {
                name,
                expected: k.to_string(),
                found: n,
            }),
            _ => Ok(Formula::Call(name, args)),
        }
    }
}

/// Settings for predicate expansion.
#[derive(Debug, Clone, Default)]
pub struct ExpandOptions {
    /// Directory against which `type()` paths are resolved.
    pub base_dir: PathBuf,
    /// Reject DTDs that reference undeclared elements.
    pub strict_dtd: bool,
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub formula: Formula,
    /// One report per `type()` call, in expansion order.
    pub schema_reports: Vec<TypeReport>,
}

/// Replaces every predicate call by its definition, producing a closed
/// predicate-free formula.
pub fn expand_predicates(spec: &ProblemSpec, opts: &ExpandOptions) -> Result<Expansion, SpecError> {
    let mut ex = Expander {
        defs: spec.definitions.iter().map(|d| (d.name.clone(), d)).collect(),
        opts,
        reports: Vec::new(),
    };
    let formula = ex.expand(&spec.goal)?;
    Ok(Expansion {
        formula,
        schema_reports: ex.reports,
    })
}

struct Expander<'a> {
    defs: HashMap<String, &'a PredicateDef>,
    opts: &'a ExpandOptions,
    reports: Vec<TypeReport>,
}

/// `<1>mu Y.(phi | <1>Y | <2>Y)`: some strict descendant satisfies `phi`.
pub fn descendant(phi: Formula) -> Formula {
    Formula::modal(Program::FirstChild, subtree_exists(phi))
}

/// `mu Y.(phi | <1>Y | <2>Y)`: `phi` holds at the node, at a following
/// sibling, or below either.
fn subtree_exists(phi: Formula) -> Formula {
    let y = Var::fresh("Y");
    Formula::mu(
        y.clone(),
        Formula::or(
            phi,
            Formula::or(
                Formula::modal(Program::FirstChild, Formula::Var(y.clone())),
                Formula::modal(Program::NextSibling, Formula::Var(y)),
            ),
        ),
    )
}

/// Some node of the whole tree satisfies `phi`: climb to the root, then
/// search its subtree.
pub fn somewhere(phi: Formula) -> Formula {
    let x = Var::fresh("X");
    Formula::mu(
        x.clone(),
        Formula::or(
            subtree_exists(phi),
            Formula::or(
                Formula::modal(Program::Parent, Formula::Var(x.clone())),
                Formula::modal(Program::PrevSibling, Formula::Var(x)),
            ),
        ),
    )
}

impl Expander<'_> {
    fn expand(&mut self, f: &Formula) -> Result<Formula, SpecError> {
        Ok(match f {
            Formula::Or(a, b) => Formula::or(self.expand(a)?, self.expand(b)?),
            Formula::And(a, b) => Formula::and(self.expand(a)?, self.expand(b)?),
            Formula::Implies(a, b) => Formula::implies(self.expand(a)?, self.expand(b)?),
            Formula::Equiv(a, b) => Formula::equiv(self.expand(a)?, self.expand(b)?),
            Formula::Not(a) => Formula::not(self.expand(a)?),
            Formula::Modal(p, a) => Formula::modal(*p, self.expand(a)?),
            Formula::Let(bs, body) => Formula::Let(
                bs.iter()
                    .map(|(v, b)| Ok((v.clone(), self.expand(b)?)))
                    .collect::<Result<_, SpecError>>()?,
                Box::new(self.expand(body)?),
            ),
            Formula::Call(name, args) => self.call(name, args)?,
            _ => f.clone(),
        })
    }

    fn string_arg(name: &str, a: &Arg, what: &str) -> Result<String, SpecError> {
        match a {
            Arg::Str(s) => Ok(s.clone()),
            Arg::Formula(_) => Err(SpecError::Argument {
                name: name.into(),
                message: format!("{what} must be a string literal"),
            }),
        }
    }

    fn formula_arg(&mut self, name: &str, a: &Arg) -> Result<Formula, SpecError> {
        match a {
            Arg::Formula(f) => self.expand(f),
            Arg::Str(_) => Err(SpecError::Argument {
                name: name.into(),
                message: "expected a formula, found a string".into(),
            }),
        }
    }

    /// Context of select/exists. A `type()` context describes the whole
    /// document, so it is anchored at the root.
    fn context_arg(&mut self, name: &str, args: &[Arg]) -> Result<Formula, SpecError> {
        match args.get(1) {
            None => Ok(Formula::Context),
            Some(a @ Arg::Formula(Formula::Call(c, _))) if c == "type" => {
                Ok(Formula::and(self.formula_arg(name, a)?, is_root()))
            }
            Some(a) => self.formula_arg(name, a),
        }
    }

    fn call(&mut self, name: &str, args: &[Arg]) -> Result<Formula, SpecError> {
        match name {
            "select" | "exists" => {
                let q = parse_xpath(&Self::string_arg(name, &args[0], "the query")?)?;
                let ctx = self.context_arg(name, args)?;
                let sel = compile_query(&q, &ctx);
                Ok(if name == "select" { sel } else { somewhere(sel) })
            }
            "type" => {
                let file = Self::string_arg(name, &args[0], "the DTD path")?;
                let start = Self::string_arg(name, &args[1], "the start element")?;
                let path = self.opts.base_dir.join(&file);
                let report = compile_type(&path, &start, self.opts.strict_dtd)?;
                let f = report.formula.clone();
                self.reports.push(report);
                Ok(f)
            }
            "element" | "attribute" => {
                let g = self.formula_arg(name, &args[0])?;
                let names = if name == "element" {
                    g.element_names().into_iter().map(Formula::element).collect::<Vec<_>>()
                } else {
                    g.attribute_names().into_iter().map(Formula::attribute).collect()
                };
                Ok(if names.is_empty() { Formula::False } else { Formula::or_all(names) })
            }
            "descendant" => Ok(descendant(self.formula_arg(name, &args[0])?)),
            "exclude" => Ok(Formula::not(somewhere(self.formula_arg(name, &args[0])?))),
            _ => {
                let def = *self
                    .defs
                    .get(name)
                    .ok_or_else(|| SpecError::UnknownPredicate(name.to_string()))?;
                let actual: HashMap<u32, &Arg> = def.params.iter().map(|v| v.id()).zip(args).collect();
                let body = instantiate(&def.body.freshen(), &actual, name)?;
                self.expand(&body)
            }
        }
    }
}

/// Substitutes call arguments for parameters. String arguments may only
/// stand in argument position of another call; formula arguments are
/// copied with fresh binders at each occurrence.
fn instantiate(f: &Formula, actual: &HashMap<u32, &Arg>, name: &str) -> Result<Formula, SpecError> {
    let go = |g: &Formula| instantiate(g, actual, name);
    Ok(match f {
        Formula::Var(v) => match actual.get(&v.id()) {
            Some(Arg::Formula(a)) => a.freshen(),
            Some(Arg::Str(_)) => {
                return Err(SpecError::Argument {
                    name: name.into(),
                    message: format!("string argument used as a formula for parameter {}", v.name()),
                })
            }
            None => f.clone(),
        },
        Formula::Or(a, b) => Formula::or(go(a)?, go(b)?),
        Formula::And(a, b) => Formula::and(go(a)?, go(b)?),
        Formula::Implies(a, b) => Formula::implies(go(a)?, go(b)?),
        Formula::Equiv(a, b) => Formula::equiv(go(a)?, go(b)?),
        Formula::Not(a) => Formula::not(go(a)?),
        Formula::Modal(p, a) => Formula::modal(*p, go(a)?),
        Formula::Let(bs, body) => Formula::Let(
            bs.iter()
                .map(|(v, b)| Ok((v.clone(), go(b)?)))
                .collect::<Result<_, SpecError>>()?,
            Box::new(go(body)?),
        ),
        Formula::Call(n, args) => Formula::Call(
            n.clone(),
            args.iter()
                .map(|a| match a {
                    Arg::Formula(Formula::Var(v)) if actual.contains_key(&v.id()) => {
                        Ok(match actual[&v.id()] {
                            Arg::Formula(x) => Arg::Formula(x.freshen()),
                            s => s.clone(),
                        })
                    }
                    Arg::Formula(g) => Ok(Arg::Formula(go(g)?)),
                    s => Ok(s.clone()),
                })
                .collect::<Result<_, SpecError>>()?,
        ),
        _ => f.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{alpha_eq, cycle_check, pretty_print};

    fn expand(text: &str) -> Formula {
        expand_predicates(&parse_spec(text).unwrap(), &ExpandOptions::default())
            .unwrap()
            .formula
    }

    #[test]
    fn goal_only() {
        let s = parse_spec("T").unwrap();
        assert!(s.definitions.is_empty());
        assert_eq!(s.goal, Formula::True);
    }

    #[test]
    fn precedence() {
        let f = parse_formula("~a & <1>b | c => d => e <=> f").unwrap();
        assert_eq!(pretty_print(&f), "((((~(a) & <1>b) | c) => (d => e)) <=> f)");
        let g = parse_formula("<-2>T & <@id>T & @lang").unwrap();
        assert_eq!(pretty_print(&g), "((<-2>T & @id) & @lang)");
    }

    #[test]
    fn calls() {
        let s = parse_spec(r#"select("a/b[following-sibling::c/parent::d]")"#).unwrap();
        assert!(matches!(&s.goal, Formula::Call(n, a) if n == "select" && a.len() == 1));
        let s = parse_spec("~( select(\"a\",#) => select(\"b\",#))").unwrap();
        match s.goal {
            Formula::Not(inner) => assert!(matches!(*inner, Formula::Implies(..))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binders_and_scoping() {
        let f = parse_formula("let $X = (a & <2>$Y) | <1>$X | <2>$X, $Y = b | <2>$Y in $X").unwrap();
        match &f {
            Formula::Let(bs, _) => assert_eq!(bs.len(), 2),
            _ => panic!(),
        }
        assert!(f.free_vars().is_empty());
        assert!(matches!(
            parse_formula("$Z | a"),
            Err(SpecError::Syntax { line: 1, column: 1, .. })
        ));
        // outside its binder a bare name is an element
        let g = parse_formula("(mu X1.(a | <1>X1)) & X1").unwrap();
        assert!(g.element_names().contains(&"X1".to_string()));
    }

    #[test]
    fn printed_formulas_parse_back() {
        let srcs = [
            "let $X = b | <2>$X in $X",
            "let $X = (a & <2>$Y) | <1>$X | <2>$X, $Y = b | <2>$Y in $X",
            "~(a & <-1>(_context | ~<2>T))",
            "a & (let $X = b | <1>$X in $X) & @k",
        ];
        for s in srcs {
            let f = parse_formula(s).unwrap();
            let g = parse_formula(&pretty_print(&f)).unwrap();
            assert!(alpha_eq(&f, &g), "{s}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_spec("select()"), Err(SpecError::Arity { .. })));
        assert!(matches!(parse_spec("type(\"a\")"), Err(SpecError::Arity { .. })));
        assert!(matches!(parse_spec("foo(a)"), Err(SpecError::UnknownPredicate(_))));
        assert!(matches!(parse_spec("non_empty(\"a\", b)"), Err(SpecError::UnsupportedPredicate(_))));
        assert!(matches!(parse_spec("p($X) = p($X); a"), Err(SpecError::UnknownPredicate(_))));
        assert!(matches!(parse_spec("p($X) = $X; p($X) = $X; a"), Err(SpecError::DuplicateDefinition(_))));
        assert!(matches!(
            parse_spec("a &\n  (: note :) b"),
            Err(SpecError::Syntax { line: 2, column: 3, .. })
        ));
        assert!(parse_spec("a // trailing comment\n & b").is_ok());
        assert!(matches!(
            expand_predicates(&parse_spec("select(a)").unwrap(), &ExpandOptions::default()),
            Err(SpecError::Argument { .. })
        ));
        assert!(matches!(
            expand_predicates(&parse_spec("select(\"a[\")").unwrap(), &ExpandOptions::default()),
            Err(SpecError::XPath(_))
        ));
    }

    #[test]
    fn custom_macro() {
        let f = expand("p($X) = $X & <1>b; p(a)");
        assert!(alpha_eq(&f, &parse_formula("a & <1>b").unwrap()));
        // a later definition may use an earlier one, and strings pass through
        let g = expand("q($Q) = select($Q, #); r($Q, $C) = q($Q) & $C; r(\"a\", b)");
        assert!(alpha_eq(&g, &Formula::and(expand("select(\"a\")"), Formula::element("b"))));
    }

    #[test]
    fn macro_expansion_avoids_capture() {
        let f = expand("p($X) = let $Y = $X | <2>$Y in $Y; let $Y = a & <1>p($Y) in $Y");
        let want = parse_formula("let $Y = a & <1>(let $Z = $Y | <2>$Z in $Z) in $Y").unwrap();
        assert!(alpha_eq(&f, &want), "{}", pretty_print(&f));
    }

    #[test]
    fn builtin_shapes() {
        assert!(alpha_eq(&expand("descendant(a)"), &parse_formula("<1>(let $Y = a | (<1>$Y | <2>$Y) in $Y)").unwrap()));
        assert!(alpha_eq(&expand("element(a & ~b | <1>c)"), &parse_formula("a | b | c").unwrap()));
        assert_eq!(expand("attribute(a)"), Formula::False);
        assert!(alpha_eq(&expand("attribute(@x & <1>@y)"), &parse_formula("@x | @y").unwrap()));
        for s in ["exclude(a)", "exists(\"a/b\")", "select(\"//a | b\", descendant(c))"] {
            let f = expand(s);
            assert!(cycle_check(&f).passed(), "{s}");
            assert!(f.free_vars().is_empty());
        }
    }
}
