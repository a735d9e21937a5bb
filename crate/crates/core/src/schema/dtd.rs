//! DTD parsing.
//!
//! Reads `<!ELEMENT>` and `<!ATTLIST>` declarations. Entity and notation
//! declarations are skipped with a warning; parameter-entity references are
//! rejected. Text content is irrelevant to the logic, so `#PCDATA` is dropped
//! from mixed content models.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;

use super::SchemaError;

/// Regular expression over element names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Regex {
    Name(String),
    Seq(Vec<Regex>),
    Choice(Vec<Regex>),
    Opt(Box<Regex>),
    Star(Box<Regex>),
    Plus(Box<Regex>),
}

impl Regex {
    /// Element names mentioned, in order of first occurrence.
    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            Regex::Name(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Regex::Seq(items) | Regex::Choice(items) => items.iter().for_each(|r| r.names(out)),
            Regex::Opt(r) | Regex::Star(r) | Regex::Plus(r) => r.names(out),
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, items: &[Regex], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, r) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{r}")?;
            }
            f.write_str(")")
        };
        match self {
            Regex::Name(n) => f.write_str(n),
            Regex::Seq(items) => list(f, items, ","),
            Regex::Choice(items) => list(f, items, "|"),
            Regex::Opt(r) => write!(f, "{r}?"),
            Regex::Star(r) => write!(f, "{r}*"),
            Regex::Plus(r) => write!(f, "{r}+"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentModel {
    Empty,
    Any,
    /// Mixed content; only the element names matter.
    Mixed(Vec<String>),
    Children(Regex),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub required: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dtd {
    pub elements: IndexMap<String, ContentModel>,
    pub attlists: IndexMap<String, Vec<AttributeDecl>>,
    pub warnings: Vec<String>,
}

impl Dtd {
    /// Attribute names every `label` element must carry.
    pub fn required_attributes(&self, label: &str) -> Vec<String> {
        self.attlists
            .get(label)
            .map(|l| l.iter().filter(|a| a.required).map(|a| a.name.clone()).collect())
            .unwrap_or_default()
    }

    /// Content model with `ANY` and mixed content spelled out as regular
    /// expressions over the declared names (`None` means no children).
    pub fn content_regex(&self, label: &str) -> Option<Regex> {
        let star_of = |names: Vec<String>| {
            if names.is_empty() {
                None
            } else {
                Some(Regex::Star(Box::new(Regex::Choice(
                    names.into_iter().map(Regex::Name).collect(),
                ))))
            }
        };
        match self.elements.get(label)? {
            ContentModel::Empty => None,
            ContentModel::Any => star_of(self.elements.keys().cloned().collect()),
            ContentModel::Mixed(names) => star_of(names.clone()),
            ContentModel::Children(r) => Some(r.clone()),
        }
    }
}

/// Reads and parses a DTD file.
pub fn load_dtd(path: &Path, strict: bool) -> Result<Dtd, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|e| SchemaError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_dtd(&text, strict)
}

/// Parses DTD text. Elements referenced in content models but never declared
/// are added with `ANY` content and a warning, or rejected when `strict`.
pub fn parse_dtd(text: &str, strict: bool) -> Result<Dtd, SchemaError> {
    let mut p = Cursor {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
    };
    let mut dtd = Dtd::default();
    loop {
        p.skip_ws();
        if p.at_end() {
            break;
        }
        if p.eat("<!--") {
            p.skip_until("-->")?;
        } else if p.eat("<?") {
            p.skip_until("?>")?;
        } else if p.eat("<!ELEMENT") {
            let line = p.line;
            p.require_ws()?;
            let name = p.name()?;
            p.require_ws()?;
            let model = p.content_model()?;
            p.skip_ws();
            p.expect('>')?;
            if dtd.elements.contains_key(&name) {
                return Err(SchemaError::Syntax {
                    line,
                    message: format!("element {name} declared twice"),
                });
            }
            dtd.elements.insert(name, model);
        } else if p.eat("<!ATTLIST") {
            p.require_ws()?;
            let element = p.name()?;
            let decls = p.attribute_defs()?;
            let list = dtd.attlists.entry(element).or_default();
            for d in decls {
                // the first declaration of an attribute is binding
                if !list.iter().any(|a| a.name == d.name) {
                    list.push(d);
                }
            }
        } else if p.eat("<!ENTITY") || p.eat("<!NOTATION") {
            let line = p.line;
            p.skip_declaration()?;
            dtd.warnings
                .push(format!("line {line}: entity/notation declaration ignored"));
        } else if p.peek() == Some('%') {
            return Err(p.error("parameter entities are not supported"));
        } else {
            return Err(p.error("expected a markup declaration"));
        }
    }

    let mut referenced = Vec::new();
    for model in dtd.elements.values() {
        match model {
            ContentModel::Children(r) => r.names(&mut referenced),
            ContentModel::Mixed(ns) => referenced.extend(ns.iter().cloned()),
            _ => {}
        }
    }
    for name in referenced {
        if !dtd.elements.contains_key(&name) {
            if strict {
                return Err(SchemaError::UndeclaredElement(name));
            }
            dtd.warnings
                .push(format!("element {name} is referenced but not declared; treated as ANY"));
            dtd.elements.insert(name, ContentModel::Any);
        }
    }
    Ok(dtd)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn advance(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn error(&self, message: &str) -> SchemaError {
        SchemaError::Syntax {
            line: self.line,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.advance();
        }
    }

    fn require_ws(&mut self) -> Result<(), SchemaError> {
        if !self.peek().is_some_and(char::is_whitespace) {
            return Err(self.error("expected whitespace"));
        }
        self.skip_ws();
        Ok(())
    }

    fn eat(&mut self, s: &str) -> bool {
        let n = s.chars().count();
        if self.pos + n <= self.chars.len() && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            for _ in 0..n {
                self.advance();
            }
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SchemaError> {
        if self.peek() == Some(c) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn skip_until(&mut self, end: &str) -> Result<(), SchemaError> {
        while !self.at_end() {
            if self.eat(end) {
                return Ok(());
            }
            self.advance();
        }
        Err(self.error(&format!("unterminated construct, expected {end}")))
    }

    fn skip_declaration(&mut self) -> Result<(), SchemaError> {
        while let Some(c) = self.advance() {
            match c {
                '"' | '\'' => {
                    while let Some(d) = self.advance() {
                        if d == c {
                            break;
                        }
                    }
                }
                '>' => return Ok(()),
                _ => {}
            }
        }
        Err(self.error("unterminated declaration"))
    }

    fn name(&mut self) -> Result<String, SchemaError> {
        if self.peek() == Some('%') {
            return Err(self.error("parameter entities are not supported"));
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'))
        {
            self.advance();
        }
        if start == self.pos || self.chars[start].is_ascii_digit() {
            return Err(self.error("expected a name"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn content_model(&mut self) -> Result<ContentModel, SchemaError> {
        if self.eat("EMPTY") {
            return Ok(ContentModel::Empty);
        }
        if self.eat("ANY") {
            return Ok(ContentModel::Any);
        }
        self.expect('(')?;
        self.skip_ws();
        if self.eat("#PCDATA") {
            let mut names = Vec::new();
            loop {
                self.skip_ws();
                if self.peek() == Some('|') {
                    self.advance();
                    self.skip_ws();
                    let n = self.name()?;
                    if !names.contains(&n) {
                        names.push(n);
                    }
                } else {
                    break;
                }
            }
            self.expect(')')?;
            let star = self.peek() == Some('*');
            if star {
                self.advance();
            } else if !names.is_empty() {
                return Err(self.error("mixed content with element names must end with ')*'"));
            }
            return Ok(ContentModel::Mixed(names));
        }
        let r = self.group_rest()?;
        Ok(ContentModel::Children(r))
    }

    /// Parses after the opening parenthesis of a group, including the
    /// closing parenthesis and an optional occurrence indicator.
    fn group_rest(&mut self) -> Result<Regex, SchemaError> {
        let mut items = vec![self.particle()?];
        let mut sep: Option<char> = None;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(')') => {
                    self.advance();
                    break;
                }
                Some(c @ (',' | '|')) => {
                    if sep.is_some_and(|s| s != c) {
                        return Err(self.error("mixed ',' and '|' in one group"));
                    }
                    sep = Some(c);
                    self.advance();
                    items.push(self.particle()?);
                }
                _ => return Err(self.error("expected ',', '|' or ')'")),
            }
        }
        let group = if items.len() == 1 {
            items.pop().expect("one item")
        } else if sep == Some('|') {
            Regex::Choice(items)
        } else {
            Regex::Seq(items)
        };
        Ok(self.occurrence(group))
    }

    fn particle(&mut self) -> Result<Regex, SchemaError> {
        self.skip_ws();
        if self.peek() == Some('(') {
            self.advance();
            self.skip_ws();
            return self.group_rest();
        }
        let n = self.name()?;
        Ok(self.occurrence(Regex::Name(n)))
    }

    fn occurrence(&mut self, r: Regex) -> Regex {
        match self.peek() {
            Some('?') => {
                self.advance();
                Regex::Opt(Box::new(r))
            }
            Some('*') => {
                self.advance();
                Regex::Star(Box::new(r))
            }
            Some('+') => {
                self.advance();
                Regex::Plus(Box::new(r))
            }
            _ => r,
        }
    }

    fn attribute_defs(&mut self) -> Result<Vec<AttributeDecl>, SchemaError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some('>') {
                self.advance();
                return Ok(out);
            }
            let name = self.name()?;
            self.require_ws()?;
            // attribute type
            if self.peek() == Some('(') {
                self.skip_enumeration()?;
            } else {
                let ty = self.name()?;
                const TYPES: [&str; 10] = [
                    "CDATA", "ID", "IDREF", "IDREFS", "ENTITY", "ENTITIES", "NMTOKEN", "NMTOKENS",
                    "NOTATION", "NUTOKEN",
                ];
                if !TYPES.contains(&ty.as_str()) {
                    return Err(self.error(&format!("unknown attribute type {ty}")));
                }
                if ty == "NOTATION" {
                    self.skip_ws();
                    self.skip_enumeration()?;
                }
            }
            self.require_ws()?;
            let required = if self.eat("#REQUIRED") {
                true
            } else if self.eat("#IMPLIED") {
                false
            } else {
                if self.eat("#FIXED") {
                    self.require_ws()?;
                }
                self.literal()?;
                false
            };
            out.push(AttributeDecl { name, required });
        }
    }

    fn skip_enumeration(&mut self) -> Result<(), SchemaError> {
        self.expect('(')?;
        while let Some(c) = self.advance() {
            if c == ')' {
                return Ok(());
            }
        }
        Err(self.error("unterminated enumeration"))
    }

    fn literal(&mut self) -> Result<(), SchemaError> {
        let q = match self.peek() {
            Some(c @ ('"' | '\'')) => c,
            _ => return Err(self.error("expected a default value")),
        };
        self.advance();
        while let Some(c) = self.advance() {
            if c == q {
                return Ok(());
            }
        }
        Err(self.error("unterminated literal"))
    }
}
