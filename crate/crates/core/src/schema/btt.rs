//! Binary tree types.
//!
//! A binary tree type is a regular tree grammar over first-child/next-sibling
//! encoded documents. Each nonterminal stands for an element occurring at a
//! given position of its parent's content model; its productions pick a
//! first child among the initial positions of the element's own content model
//! and a next sibling among the positions that may follow in the parent's.
//! Positions come from the Glushkov automaton of each content model.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use super::dtd::{Dtd, Regex};
use super::SchemaError;
use crate::formula::{Formula, Program, Var};
use crate::tree::BinaryTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonterminal {
    pub label: String,
    /// Attributes every node of this nonterminal carries.
    pub required: Vec<String>,
    /// Allowed first children; `None` admits the empty tree.
    pub first: Vec<Option<usize>>,
    /// Allowed next siblings; `None` admits the empty tree.
    pub next: Vec<Option<usize>>,
}

impl Nonterminal {
    /// The productions `(first child, next sibling)` of this nonterminal.
    pub fn productions(&self) -> impl Iterator<Item = (Option<usize>, Option<usize>)> + '_ {
        self.first
            .iter()
            .flat_map(move |f| self.next.iter().map(move |n| (*f, *n)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Btt {
    pub nonterminals: Vec<Nonterminal>,
    /// Start nonterminal of each element when used as a document root.
    pub roots: IndexMap<String, usize>,
}

/// Glushkov positions of a content model.
struct Glushkov {
    labels: Vec<String>,
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
    follow: Vec<BTreeSet<usize>>,
}

struct Part {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

impl Glushkov {
    fn new(r: Option<&Regex>) -> Glushkov {
        let mut g = Glushkov {
            labels: Vec::new(),
            nullable: true,
            first: BTreeSet::new(),
            last: BTreeSet::new(),
            follow: Vec::new(),
        };
        if let Some(r) = r {
            let p = g.walk(r);
            g.nullable = p.nullable;
            g.first = p.first;
            g.last = p.last;
        }
        g
    }

    fn link(&mut self, from: &BTreeSet<usize>, to: &BTreeSet<usize>) {
        for &i in from {
            self.follow[i].extend(to.iter().copied());
        }
    }

    fn walk(&mut self, r: &Regex) -> Part {
        match r {
            Regex::Name(n) => {
                let i = self.labels.len();
                self.labels.push(n.clone());
                self.follow.push(BTreeSet::new());
                Part {
                    nullable: false,
                    first: BTreeSet::from([i]),
                    last: BTreeSet::from([i]),
                }
            }
            Regex::Seq(items) => {
                let mut acc = Part {
                    nullable: true,
                    first: BTreeSet::new(),
                    last: BTreeSet::new(),
                };
                for it in items {
                    let p = self.walk(it);
                    self.link(&acc.last, &p.first);
                    if acc.nullable {
                        acc.first.extend(p.first.iter().copied());
                    }
                    if p.nullable {
                        acc.last.extend(p.last.iter().copied());
                    } else {
                        acc.last = p.last;
                    }
                    acc.nullable &= p.nullable;
                }
                acc
            }
            Regex::Choice(items) => {
                let mut acc = Part {
                    nullable: false,
                    first: BTreeSet::new(),
                    last: BTreeSet::new(),
                };
                for it in items {
                    let p = self.walk(it);
                    acc.nullable |= p.nullable;
                    acc.first.extend(p.first);
                    acc.last.extend(p.last);
                }
                acc
            }
            Regex::Opt(r) => {
                let p = self.walk(r);
                Part { nullable: true, ..p }
            }
            Regex::Star(r) => {
                let p = self.walk(r);
                self.link(&p.last, &p.first);
                Part { nullable: true, ..p }
            }
            Regex::Plus(r) => {
                let p = self.walk(r);
                self.link(&p.last, &p.first);
                p
            }
        }
    }
}

/// Builds the binary tree type of a DTD, with one start nonterminal per
/// declared element.
pub fn to_btt(dtd: &Dtd) -> Btt {
    // content automaton per element
    let autos: IndexMap<&str, Glushkov> = dtd
        .elements
        .keys()
        .map(|e| (e.as_str(), Glushkov::new(dtd.content_regex(e).as_ref())))
        .collect();

    // nonterminal ids: positions of every content model, then roots
    let mut position_nt: IndexMap<(&str, usize), usize> = IndexMap::new();
    let mut labels = Vec::new();
    for (e, g) in &autos {
        for (i, l) in g.labels.iter().enumerate() {
            position_nt.insert((e, i), labels.len());
            labels.push(l.clone());
        }
    }
    let mut roots = IndexMap::new();
    for e in autos.keys() {
        roots.insert(e.to_string(), labels.len());
        labels.push(e.to_string());
    }

    let children_of = |label: &str| -> Vec<Option<usize>> {
        let g = &autos[label];
        let mut out: Vec<Option<usize>> = g
            .first
            .iter()
            .map(|&j| Some(position_nt[&(label, j)]))
            .collect();
        if g.nullable {
            out.insert(0, None);
        }
        out
    };

    let mut nonterminals = Vec::with_capacity(labels.len());
    for ((e, i), _) in &position_nt {
        let g = &autos[e];
        let label = &g.labels[*i];
        let mut next: Vec<Option<usize>> = g.follow[*i]
            .iter()
            .map(|&j| Some(position_nt[&(*e, j)]))
            .collect();
        if g.last.contains(i) {
            next.insert(0, None);
        }
        nonterminals.push(Nonterminal {
            label: label.clone(),
            required: dtd.required_attributes(label),
            first: children_of(label),
            next,
        });
    }
    for e in autos.keys() {
        nonterminals.push(Nonterminal {
            label: e.to_string(),
            required: dtd.required_attributes(e),
            first: children_of(e),
            next: vec![None],
        });
    }
    Btt { nonterminals, roots }
}

impl Btt {
    pub fn start(&self, label: &str) -> Result<usize, SchemaError> {
        self.roots
            .get(label)
            .copied()
            .ok_or_else(|| SchemaError::UnknownStartSymbol(label.to_string()))
    }

    /// Nonterminals reachable from `start`, in discovery order.
    pub fn reachable(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.nonterminals.len()];
        let mut order = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < order.len() {
            let nt = &self.nonterminals[order[i]];
            for x in nt.first.iter().chain(&nt.next).flatten() {
                if !seen[*x] {
                    seen[*x] = true;
                    order.push(*x);
                }
            }
            i += 1;
        }
        order
    }

    /// Membership of a binary tree in the language of `start`, by a direct
    /// top-down run.
    pub fn accepts(&self, start: &str, t: &BinaryTree) -> bool {
        match self.roots.get(start) {
            Some(&s) => self.run(Some(s), t),
            None => false,
        }
    }

    fn run(&self, nt: Option<usize>, t: &BinaryTree) -> bool {
        match (nt, t) {
            (None, BinaryTree::Epsilon) => true,
            (None, _) | (Some(_), BinaryTree::Epsilon) => false,
            (Some(i), BinaryTree::Node(n)) => {
                let rule = &self.nonterminals[i];
                rule.label == n.label
                    && rule.required.iter().all(|a| n.attributes.contains(a))
                    && rule.first.iter().any(|f| self.run(*f, &n.first))
                    && rule.next.iter().any(|s| self.run(*s, &n.second))
            }
        }
    }
}

/// Translates a binary tree type into a formula holding at the root of
/// exactly the trees of the language of `start`: one recursion variable per
/// reachable nonterminal, forward modalities only.
pub fn compile_btt(btt: &Btt, start: &str) -> Result<Formula, SchemaError> {
    let s = btt.start(start)?;
    let mut order = btt.reachable(s);
    // the start symbol comes last, as the body of the binder
    order.rotate_left(1);
    let vars: IndexMap<usize, Var> = order.iter().map(|&i| (i, Var::fresh(&format!("N{i}")))).collect();

    let successors = |opts: &[Option<usize>], p: Program| -> Formula {
        let allow_empty = opts.contains(&None);
        let alts: Vec<Formula> = opts
            .iter()
            .flatten()
            .map(|i| Formula::Var(vars[i].clone()))
            .collect();
        let absent = Formula::not(Formula::has(p));
        match (allow_empty, alts.is_empty()) {
            (true, true) => absent,
            (true, false) => Formula::or(absent, Formula::modal(p, Formula::or_all(alts))),
            (false, _) => Formula::modal(p, Formula::or_all(alts)),
        }
    };

    let bindings = order
        .iter()
        .map(|&i| {
            let nt = &btt.nonterminals[i];
            let mut f = Formula::element(nt.label.clone());
            for a in &nt.required {
                f = Formula::and(f, Formula::attribute(a.clone()));
            }
            f = Formula::and(f, successors(&nt.first, Program::FirstChild));
            f = Formula::and(f, successors(&nt.next, Program::NextSibling));
            (vars[&i].clone(), f)
        })
        .collect();
    Ok(Formula::Let(bindings, Box::new(Formula::Var(vars[&s].clone()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{cycle_check, pretty_print};
    use crate::schema::dtd::parse_dtd;

    #[test]
    fn empty_element() {
        let d = parse_dtd("<!ELEMENT a EMPTY>", true).unwrap();
        let b = to_btt(&d);
        let f = compile_btt(&b, "a").unwrap();
        assert_eq!(pretty_print(&f), "(mu X1.((a & ~(<1>T)) & ~(<2>T)))");
        assert!(b.accepts("a", &BinaryTree::leaf("a")));
        assert!(!b.accepts("a", &BinaryTree::node("a", BinaryTree::leaf("a"), BinaryTree::Epsilon)));
        assert!(matches!(compile_btt(&b, "z"), Err(SchemaError::UnknownStartSymbol(_))));
    }

    #[test]
    fn star_content() {
        let d = parse_dtd("<!ELEMENT r (a|b)*>\n<!ELEMENT a EMPTY>\n<!ELEMENT b EMPTY>", true).unwrap();
        let b = to_btt(&d);
        let e = BinaryTree::Epsilon;
        assert!(b.accepts("r", &BinaryTree::leaf("r")));
        assert!(b.accepts("r", &BinaryTree::node("r", BinaryTree::leaf("a"), e.clone())));
        assert!(b.accepts(
            "r",
            &BinaryTree::node("r", BinaryTree::node("a", e.clone(), BinaryTree::leaf("b")), e.clone())
        ));
        assert!(!b.accepts("r", &BinaryTree::node("r", BinaryTree::leaf("r"), e)));
        let f = compile_btt(&b, "r").unwrap();
        assert!(cycle_check(&f).passed());
        assert!(f.programs().iter().all(|p| p.is_forward()));
    }

    #[test]
    fn plus_is_not_nullable() {
        let d = parse_dtd("<!ELEMENT r (a+)>\n<!ELEMENT a EMPTY>", true).unwrap();
        let b = to_btt(&d);
        assert!(!b.accepts("r", &BinaryTree::leaf("r")));
        let e = BinaryTree::Epsilon;
        assert!(b.accepts("r", &BinaryTree::node("r", BinaryTree::node("a", e.clone(), BinaryTree::leaf("a")), e)));
    }
}
