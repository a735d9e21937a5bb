//! Translation of queries into the tree logic.
//!
//! A query is compiled backwards: the result holds at a node when the node is
//! reached by the last step from a node satisfying the previous steps, down to
//! a node satisfying the context formula. Qualifiers compile forwards from the
//! step node. Every axis becomes a modality chain over the binary encoding,
//! with one recursion per axis; recursions never mix a program with its
//! converse, so the output is always cycle-free.

use crate::formula::{Formula, Program, Var};

use super::ast::{Axis, NodeTest, Path, Qualifier, Query, Step};
use super::desugar::desugar;

/// Formula holding exactly at the nodes selected by `q` from the nodes where
/// `context` holds.
pub fn compile_query(q: &Query, context: &Formula) -> Formula {
    compile(&desugar(q), context)
}

fn compile(q: &Query, context: &Formula) -> Formula {
    match q {
        Query::Relative(p) => backward(&p.steps, context.clone()),
        Query::Absolute(p) => {
            let (first, rest) = p.steps.split_first().expect("absolute paths have a step");
            backward(rest, from_document(first))
        }
        // the context is copied, so its binders are renamed apart
        Query::Union(a, b) => Formula::or(compile(a, context), compile(b, &context.freshen())),
        Query::Intersection(a, b) => {
            Formula::and(compile(a, context), compile(b, &context.freshen()))
        }
    }
}

fn and(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::True, x) | (x, Formula::True) => x,
        (a, b) => Formula::and(a, b),
    }
}

fn or(a: Formula, b: Formula) -> Formula {
    Formula::or(a, b)
}

fn dia(p: Program, f: Formula) -> Formula {
    Formula::modal(p, f)
}

fn test(t: &NodeTest) -> Formula {
    match t {
        NodeTest::Name(n) => Formula::element(n.clone()),
        NodeTest::Any => Formula::True,
    }
}

/// `~<-1>T & ~<-2>T`: the node is the root of the binary tree.
pub fn is_root() -> Formula {
    Formula::and(
        Formula::not(Formula::has(Program::Parent)),
        Formula::not(Formula::has(Program::PrevSibling)),
    )
}

/// Top-level elements: the root and its next-sibling chain.
fn top_level() -> Formula {
    let x = Var::fresh("X");
    Formula::mu(x.clone(), or(is_root(), dia(Program::PrevSibling, Formula::Var(x))))
}

/// First step evaluated from the (virtual) document node.
fn from_document(s: &Step) -> Formula {
    let here = || and(test(&s.test), qualifiers(&s.qualifiers));
    match s.axis {
        Axis::Child => and(here(), top_level()),
        Axis::Descendant | Axis::DescendantOrSelf => here(),
        _ => Formula::False,
    }
}

fn backward(steps: &[Step], context: Formula) -> Formula {
    steps.iter().fold(context, |chi, s| {
        and(
            and(test(&s.test), along(s.axis.inverse(), chi)),
            qualifiers(&s.qualifiers),
        )
    })
}

fn qualifiers(qs: &[Qualifier]) -> Formula {
    qs.iter().map(qualifier).fold(Formula::True, and)
}

fn qualifier(q: &Qualifier) -> Formula {
    match q {
        Qualifier::And(a, b) => Formula::and(qualifier(a), qualifier(b)),
        Qualifier::Or(a, b) => Formula::or(qualifier(a), qualifier(b)),
        Qualifier::Not(a) => Formula::not(qualifier(a)),
        Qualifier::Path(p) => forward(p, Formula::True),
        Qualifier::Attribute(p, n) => forward(p, Formula::attribute(n.clone())),
        Qualifier::Sugar(s) => unreachable!("sugar {s} survived desugaring"),
    }
}

/// Holds at a node from which `p` reaches a node satisfying `target`.
fn forward(p: &Path, target: Formula) -> Formula {
    p.steps.iter().rev().fold(target, |psi, s| {
        along(
            s.axis,
            and(and(psi, test(&s.test)), qualifiers(&s.qualifiers)),
        )
    })
}

/// Holds at a node having some `axis`-related node satisfying `psi`.
pub fn along(axis: Axis, psi: Formula) -> Formula {
    use Program::*;
    let x = Var::fresh("X");
    let xv = || Formula::Var(x.clone());
    match axis {
        Axis::SelfAxis => psi,
        Axis::Child => dia(FirstChild, Formula::mu(x.clone(), or(psi, dia(NextSibling, xv())))),
        Axis::FollowingSibling => Formula::mu(x.clone(), or(dia(NextSibling, psi), dia(NextSibling, xv()))),
        Axis::PrecedingSibling => Formula::mu(x.clone(), or(dia(PrevSibling, psi), dia(PrevSibling, xv()))),
        Axis::Parent => Formula::mu(x.clone(), or(dia(Parent, psi), dia(PrevSibling, xv()))),
        Axis::Descendant => dia(
            FirstChild,
            Formula::mu(x.clone(), or(psi, or(dia(FirstChild, xv()), dia(NextSibling, xv())))),
        ),
        Axis::DescendantOrSelf => {
            let y = Var::fresh("Y");
            let inner = Formula::mu(y.clone(), or(xv(), dia(NextSibling, Formula::Var(y))));
            Formula::mu(x.clone(), or(psi, dia(FirstChild, inner)))
        }
        Axis::Ancestor => Formula::mu(
            x.clone(),
            or(dia(Parent, or(psi, xv())), dia(PrevSibling, xv())),
        ),
        Axis::AncestorOrSelf => {
            let y = Var::fresh("Y");
            let inner = Formula::mu(y.clone(), or(dia(Parent, xv()), dia(PrevSibling, Formula::Var(y))));
            Formula::mu(x.clone(), or(psi, inner))
        }
        Axis::Following => along(
            Axis::AncestorOrSelf,
            along(Axis::FollowingSibling, along(Axis::DescendantOrSelf, psi)),
        ),
        Axis::Preceding => along(
            Axis::AncestorOrSelf,
            along(Axis::PrecedingSibling, along(Axis::DescendantOrSelf, psi)),
        ),
    }
}
