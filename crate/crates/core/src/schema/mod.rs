//! Schema front-end: DTDs are parsed, turned into binary tree types and
//! compiled into formulas holding exactly at the roots of valid documents.

pub mod btt;
pub mod dtd;
pub mod validate;

use std::path::Path;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use btt::{compile_btt, to_btt, Btt, Nonterminal};
pub use dtd::{load_dtd, parse_dtd, AttributeDecl, ContentModel, Dtd, Regex};
pub use validate::validate;

use crate::formula::Formula;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("DTD syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("element {0} is referenced but never declared")]
    UndeclaredElement(String),
    #[error("unknown start symbol {0}")]
    UnknownStartSymbol(String),
}

/// Outcome of compiling one `type(file, start)` call, with the timings the
/// trace reports.
#[derive(Debug, Clone)]
pub struct TypeReport {
    pub path: String,
    pub start: String,
    pub formula: Formula,
    pub parse_time: Duration,
    pub btt_time: Duration,
    pub compile_time: Duration,
    pub warnings: Vec<String>,
    /// Number of nonterminals reachable from the start symbol.
    pub nonterminals: usize,
}

/// Parses the DTD at `path`, converts it and compiles it for `start`.
pub fn compile_type(path: &Path, start: &str, strict: bool) -> Result<TypeReport, SchemaError> {
    let t0 = Instant::now();
    let dtd = load_dtd(path, strict)?;
    let t1 = Instant::now();
    let b = to_btt(&dtd);
    let t2 = Instant::now();
    let formula = compile_btt(&b, start)?;
    let t3 = Instant::now();
    Ok(TypeReport {
        path: path.display().to_string(),
        start: start.to_string(),
        nonterminals: b.reachable(b.start(start)?).len(),
        formula,
        parse_time: t1 - t0,
        btt_time: t2 - t1,
        compile_time: t3 - t2,
        warnings: dtd.warnings,
    })
}
