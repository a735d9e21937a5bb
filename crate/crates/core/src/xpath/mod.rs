//! XPath front-end: parsing, rewriting of sugared predicates, compilation
//! into the tree logic, and a reference evaluator.

pub mod ast;
pub mod compile;
pub mod desugar;
pub mod parse;
pub mod reference;

use thiserror::Error;

pub use ast::{Axis, NodeTest, Path, Qualifier, Query, Step, Sugar};
pub use compile::{compile_query, is_root};
pub use desugar::desugar;
pub use parse::parse_xpath;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum XPathError {
    #[error("XPath syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported axis: {0}")]
    UnsupportedAxis(String),
    #[error("unsupported XPath construct: {0}")]
    UnsupportedSugar(String),
}
