//! Satisfiability solver for a modal tree logic with XPath and DTD
//! front-ends.
//!
//! Problems are formulas over finite ordered trees. [`parser`] reads them and
//! expands predicates such as `select("a/b")` or `type("x.dtd", "r")` through
//! the [`xpath`] and [`schema`] compilers; [`solver`] decides satisfiability
//! and returns a witness tree, which [`tree`] decodes back into XML. Query
//! containment, emptiness and schema questions all reduce to one check:
//!
//! ```
//! use treesat::parser::{expand_predicates, parse_spec, ExpandOptions};
//! use treesat::solver::{solve, SolverOptions, Verdict};
//!
//! // a `b` child of an `a` whose following `c` sibling has parent `d`
//! let spec = parse_spec(r#"select("a/b[following-sibling::c/parent::d]")"#).unwrap();
//! let f = expand_predicates(&spec, &ExpandOptions::default()).unwrap().formula;
//! assert_eq!(solve(&f, &SolverOptions::default()).unwrap().verdict, Verdict::Unsatisfiable);
//! ```

pub mod cli;
pub mod formula;
pub mod parser;
pub mod schema;
pub mod solver;
pub mod tree;
pub mod xpath;
