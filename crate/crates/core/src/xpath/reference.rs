//! Direct XPath evaluation on unranked documents.
//!
//! Works on the document as written (no binary encoding, no logic) and
//! follows the XPath data model: a virtual document node above the top-level
//! elements, reverse axes numbered in reverse document order, predicates
//! applied one after the other. Positional and counting forms are evaluated
//! natively, so this evaluator also checks the rewritings.

use std::collections::BTreeSet;

use super::ast::{Axis, NodeTest, Path, Qualifier, Query, Step, Sugar};
use crate::tree::UnrankedTree;

/// A document in preorder. Node 0 is the document node; elements are
/// numbered from 1 in document order.
#[derive(Debug, Clone)]
pub struct Document {
    labels: Vec<String>,
    attributes: Vec<BTreeSet<String>>,
    context: Vec<bool>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Index of the last node of each subtree.
    end: Vec<usize>,
}

impl Document {
    pub fn new(hedge: &[UnrankedTree]) -> Document {
        let mut d = Document {
            labels: vec![String::new()],
            attributes: vec![BTreeSet::new()],
            context: vec![false],
            parent: vec![None],
            children: vec![Vec::new()],
            end: vec![0],
        };
        for t in hedge {
            let c = d.add(t, 0);
            d.children[0].push(c);
        }
        d.end[0] = d.labels.len() - 1;
        d
    }

    fn add(&mut self, t: &UnrankedTree, parent: usize) -> usize {
        let ix = self.labels.len();
        self.labels.push(t.label.clone());
        self.attributes.push(t.attributes.clone());
        self.context.push(t.marks.context);
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.end.push(ix);
        for c in &t.children {
            let ci = self.add(c, ix);
            self.children[ix].push(ci);
        }
        self.end[ix] = self.labels.len() - 1;
        ix
    }

    /// Number of element nodes.
    pub fn len(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements carrying the context mark.
    pub fn marked_context(&self) -> Vec<usize> {
        (1..self.labels.len()).filter(|&i| self.context[i]).collect()
    }

    fn siblings(&self, n: usize) -> &[usize] {
        match self.parent[n] {
            Some(p) => &self.children[p],
            None => &[],
        }
    }

    /// Nodes on `axis` from `n`, in axis order (reverse document order for
    /// reverse axes).
    fn axis_nodes(&self, axis: Axis, n: usize) -> Vec<usize> {
        let total = self.labels.len();
        let mut out: Vec<usize> = match axis {
            Axis::SelfAxis => vec![n],
            Axis::Child => self.children[n].clone(),
            Axis::Parent => self.parent[n].into_iter().collect(),
            Axis::Descendant => (n + 1..=self.end[n]).collect(),
            Axis::DescendantOrSelf => (n..=self.end[n]).collect(),
            Axis::Ancestor | Axis::AncestorOrSelf => {
                let mut v = Vec::new();
                if axis == Axis::AncestorOrSelf {
                    v.push(n);
                }
                let mut cur = self.parent[n];
                while let Some(p) = cur {
                    v.push(p);
                    cur = self.parent[p];
                }
                v
            }
            Axis::FollowingSibling => {
                let s = self.siblings(n);
                s.iter().skip_while(|&&x| x != n).skip(1).copied().collect()
            }
            Axis::PrecedingSibling => {
                let s = self.siblings(n);
                let at = s.iter().position(|&x| x == n).unwrap_or(0);
                s[..at].iter().rev().copied().collect()
            }
            Axis::Following => (self.end[n] + 1..total).collect(),
            Axis::Preceding => {
                let ancestors: BTreeSet<usize> = self.axis_nodes(Axis::Ancestor, n).into_iter().collect();
                (1..n).rev().filter(|x| !ancestors.contains(x)).collect()
            }
        };
        if axis.is_reverse() {
            // already produced nearest-first
        } else {
            out.sort_unstable();
        }
        out
    }

    fn test(&self, t: &NodeTest, n: usize) -> bool {
        // the document node is not an element and matches no name test
        n != 0 && t.matches(&self.labels[n])
    }

    fn step(&self, s: &Step, n: usize) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .axis_nodes(s.axis, n)
            .into_iter()
            .filter(|&x| self.test(&s.test, x))
            .collect();
        for q in &s.qualifiers {
            let last = nodes.len();
            nodes = nodes
                .iter()
                .enumerate()
                .filter(|(i, &x)| self.qualifier(q, x, i + 1, last))
                .map(|(_, &x)| x)
                .collect();
        }
        nodes
    }

    fn path(&self, p: &Path, from: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut cur = from.clone();
        for s in &p.steps {
            cur = cur.iter().flat_map(|&n| self.step(s, n)).collect();
        }
        cur
    }

    fn qualifier(&self, q: &Qualifier, n: usize, pos: usize, last: usize) -> bool {
        let one = BTreeSet::from([n]);
        match q {
            Qualifier::And(a, b) => {
                self.qualifier(a, n, pos, last) && self.qualifier(b, n, pos, last)
            }
            Qualifier::Or(a, b) => {
                self.qualifier(a, n, pos, last) || self.qualifier(b, n, pos, last)
            }
            Qualifier::Not(a) => !self.qualifier(a, n, pos, last),
            Qualifier::Path(p) => !self.path(p, &one).is_empty(),
            Qualifier::Attribute(p, name) => self
                .path(p, &one)
                .iter()
                .any(|&x| self.attributes[x].contains(name)),
            Qualifier::Sugar(Sugar::PositionEq(k)) => pos == *k as usize,
            Qualifier::Sugar(Sugar::PositionLast) => pos == last,
            Qualifier::Sugar(Sugar::CountZero(p)) => self.path(p, &one).is_empty(),
            Qualifier::Sugar(Sugar::CountGreater(p, k)) => self.path(p, &one).len() > *k as usize,
        }
    }

    /// Nodes selected by `q` from the given context nodes, in document order.
    pub fn select(&self, q: &Query, context: &BTreeSet<usize>) -> BTreeSet<usize> {
        match q {
            Query::Relative(p) => self.path(p, context),
            Query::Absolute(p) => self.path(p, &BTreeSet::from([0])),
            Query::Union(a, b) => self.select(a, context).union(&self.select(b, context)).copied().collect(),
            Query::Intersection(a, b) => self
                .select(a, context)
                .intersection(&self.select(b, context))
                .copied()
                .collect(),
        }
    }
}

/// Nodes selected by `q` in `hedge` from the elements carrying the context
/// mark. Results are element positions in document order, starting at 0, so
/// they coincide with preorder positions in the binary encoding.
pub fn evaluate(q: &Query, hedge: &[UnrankedTree]) -> BTreeSet<usize> {
    let doc = Document::new(hedge);
    let ctx: BTreeSet<usize> = doc.marked_context().into_iter().collect();
    doc.select(q, &ctx).into_iter().filter(|&n| n > 0).map(|n| n - 1).collect()
}
