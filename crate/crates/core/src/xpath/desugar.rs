//! Rewrites positional and counting predicates into the core fragment.
//!
//! | sugared form                                 | rewriting                                  |
//! |----------------------------------------------|--------------------------------------------|
//! | `nt[position()=1]`                           | `nt[not(preceding-sibling::nt)]`           |
//! | `nt[position()=last()]`                      | `nt[not(following-sibling::nt)]`           |
//! | `nt[position()=k]`, k>1                      | `nt[preceding-sibling::nt/...]` (k-1 steps)|
//! | `count(path)=0`                              | `not(path)`                                |
//! | `count(path)>0`                              | `path`                                     |
//! | `count(nt)>k`, k>0                           | `nt/following-sibling::nt/...` (k steps)   |
//! | `preceding-sibling::nt[position()=last()]`   | `preceding-sibling::nt[not(preceding-sibling::nt)]` |
//!
//! The `position()=k` rewriting requires at least k-1 earlier siblings, so it
//! selects every matching child from position k on, not only the k-th one.

use super::ast::{Axis, NodeTest, Path, Qualifier, Query, Step, Sugar};

/// Applies every rewriting. Idempotent; the identity on sugar-free queries.
pub fn desugar(q: &Query) -> Query {
    match q {
        Query::Absolute(p) => Query::Absolute(path(p)),
        Query::Relative(p) => Query::Relative(path(p)),
        Query::Union(a, b) => Query::Union(Box::new(desugar(a)), Box::new(desugar(b))),
        Query::Intersection(a, b) => {
            Query::Intersection(Box::new(desugar(a)), Box::new(desugar(b)))
        }
    }
}

fn path(p: &Path) -> Path {
    Path::new(p.steps.iter().map(step).collect())
}

fn step(s: &Step) -> Step {
    Step {
        axis: s.axis,
        test: s.test.clone(),
        qualifiers: s
            .qualifiers
            .iter()
            .map(|q| qualifier(q, s.axis, &s.test))
            .collect(),
    }
}

fn sibling(axis: Axis, test: &NodeTest) -> Step {
    Step::new(axis, test.clone())
}

fn qualifier(q: &Qualifier, axis: Axis, test: &NodeTest) -> Qualifier {
    match q {
        Qualifier::And(a, b) => Qualifier::and(qualifier(a, axis, test), qualifier(b, axis, test)),
        Qualifier::Or(a, b) => Qualifier::or(qualifier(a, axis, test), qualifier(b, axis, test)),
        Qualifier::Not(a) => Qualifier::not(qualifier(a, axis, test)),
        Qualifier::Path(p) => Qualifier::Path(path(p)),
        Qualifier::Attribute(p, n) => Qualifier::Attribute(path(p), n.clone()),
        Qualifier::Sugar(s) => match (s, axis) {
            (Sugar::PositionEq(1), _) => Qualifier::not(Qualifier::Path(Path::new(vec![
                sibling(Axis::PrecedingSibling, test),
            ]))),
            (Sugar::PositionEq(k), _) => Qualifier::Path(Path::repeat(
                &sibling(Axis::PrecedingSibling, test),
                (*k as usize).saturating_sub(1),
            )),
            (Sugar::PositionLast, Axis::PrecedingSibling) => Qualifier::not(Qualifier::Path(
                Path::new(vec![sibling(Axis::PrecedingSibling, test)]),
            )),
            (Sugar::PositionLast, _) => Qualifier::not(Qualifier::Path(Path::new(vec![
                sibling(Axis::FollowingSibling, test),
            ]))),
            (Sugar::CountZero(p), _) => Qualifier::not(Qualifier::Path(path(p))),
            (Sugar::CountGreater(p, 0), _) => Qualifier::Path(path(p)),
            (Sugar::CountGreater(p, k), _) => {
                let first = step(&p.steps[0]);
                let mut steps = vec![first.clone()];
                steps.extend(Path::repeat(&sibling(Axis::FollowingSibling, &first.test), *k as usize).steps);
                Qualifier::Path(Path::new(steps))
            }
        },
    }
}
