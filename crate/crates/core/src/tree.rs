//! Unranked and binary trees.
//!
//! Documents are ordered unranked trees whose elements carry an unordered set
//! of attribute names (values are ignored). The solver works on binary trees
//! obtained by the first-child/next-sibling encoding: the first child of a
//! node becomes its left successor, its next sibling its right successor.

use std::collections::BTreeSet;
use std::fmt::Write as _;

/// Namespace of the annotation attributes written on witness documents.
pub const SOLVER_NAMESPACE: &str = "http://wam.inrialpes.fr/xml";

/// Solver annotations on a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Marks {
    /// The node satisfies the start-context mark.
    pub context: bool,
    /// The node is a sample node selected by the tested formula.
    pub target: bool,
}

impl Marks {
    pub fn any(&self) -> bool {
        self.context || self.target
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnrankedTree {
    pub label: String,
    pub attributes: BTreeSet<String>,
    pub children: Vec<UnrankedTree>,
    pub marks: Marks,
}

impl UnrankedTree {
    pub fn new(label: impl Into<String>) -> UnrankedTree {
        UnrankedTree {
            label: label.into(),
            attributes: BTreeSet::new(),
            children: Vec::new(),
            marks: Marks::default(),
        }
    }

    pub fn with_children(label: impl Into<String>, children: Vec<UnrankedTree>) -> UnrankedTree {
        UnrankedTree {
            children,
            ..UnrankedTree::new(label)
        }
    }

    pub fn with_attributes<I, S>(mut self, attrs: I) -> UnrankedTree
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.attributes.extend(attrs.into_iter().map(Into::into));
        self
    }

    pub fn with_marks(mut self, marks: Marks) -> UnrankedTree {
        self.marks = marks;
        self
    }

    /// Number of element nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(UnrankedTree::size).sum::<usize>()
    }

    fn has_marks(&self) -> bool {
        self.marks.any() || self.children.iter().any(UnrankedTree::has_marks)
    }

    /// Indented XML rendering. Attribute values are empty; solver marks
    /// become `solver:` attributes with the namespace declared on the root.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        write_xml(self, 0, self.has_marks(), &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryNode {
    pub label: String,
    pub attributes: BTreeSet<String>,
    pub marks: Marks,
    /// Left successor (first child in the unranked view).
    pub first: BinaryTree,
    /// Right successor (next sibling in the unranked view).
    pub second: BinaryTree,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BinaryTree {
    Epsilon,
    Node(Box<BinaryNode>),
}

impl BinaryTree {
    pub fn node(label: impl Into<String>, first: BinaryTree, second: BinaryTree) -> BinaryTree {
        BinaryTree::Node(Box::new(BinaryNode {
            label: label.into(),
            attributes: BTreeSet::new(),
            marks: Marks::default(),
            first,
            second,
        }))
    }

    pub fn leaf(label: impl Into<String>) -> BinaryTree {
        BinaryTree::node(label, BinaryTree::Epsilon, BinaryTree::Epsilon)
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self, BinaryTree::Epsilon)
    }

    /// Number of labelled nodes.
    pub fn size(&self) -> usize {
        match self {
            BinaryTree::Epsilon => 0,
            BinaryTree::Node(n) => 1 + n.first.size() + n.second.size(),
        }
    }

    /// Functional term notation, `#` for the empty tree. A node whose two
    /// successors are empty prints as its bare label.
    pub fn term_print(&self) -> String {
        let mut out = String::new();
        write_term(self, &mut out);
        out
    }

    /// Preorder arena with navigation links.
    pub fn flatten(&self) -> FlatTree {
        let mut flat = FlatTree::default();
        if let BinaryTree::Node(n) = self {
            flatten_into(n, None, &mut flat);
        }
        flat
    }
}

fn write_term(t: &BinaryTree, out: &mut String) {
    match t {
        BinaryTree::Epsilon => out.push('#'),
        BinaryTree::Node(n) => {
            out.push_str(&n.label);
            if !(n.first.is_epsilon() && n.second.is_epsilon()) {
                out.push('(');
                write_term(&n.first, out);
                out.push_str(", ");
                write_term(&n.second, out);
                out.push(')');
            }
        }
    }
}

/// First-child/next-sibling encoding of a hedge.
pub fn encode(hedge: &[UnrankedTree]) -> BinaryTree {
    match hedge.split_first() {
        None => BinaryTree::Epsilon,
        Some((head, rest)) => BinaryTree::Node(Box::new(BinaryNode {
            label: head.label.clone(),
            attributes: head.attributes.clone(),
            marks: head.marks,
            first: encode(&head.children),
            second: encode(rest),
        })),
    }
}

/// Inverse of [`encode`].
pub fn decode(t: &BinaryTree) -> Vec<UnrankedTree> {
    let mut out = Vec::new();
    let mut cur = t;
    while let BinaryTree::Node(n) = cur {
        out.push(UnrankedTree {
            label: n.label.clone(),
            attributes: n.attributes.clone(),
            children: decode(&n.first),
            marks: n.marks,
        });
        cur = &n.second;
    }
    out
}

/// XML rendering of a hedge, one root after the other.
pub fn hedge_to_xml(hedge: &[UnrankedTree]) -> String {
    hedge.iter().map(UnrankedTree::to_xml).collect()
}

fn write_xml(t: &UnrankedTree, depth: usize, declare_ns: bool, out: &mut String) {
    let indent = "  ".repeat(depth);
    out.push_str(&indent);
    out.push('<');
    out.push_str(&t.label);
    if declare_ns {
        let _ = write!(out, " xmlns:solver=\"{SOLVER_NAMESPACE}\"");
    }
    for a in &t.attributes {
        let _ = write!(out, " {a}=\"\"");
    }
    if t.marks.context {
        out.push_str(" solver:context=\"true\"");
    }
    if t.marks.target {
        out.push_str(" solver:target=\"true\"");
    }
    if t.children.is_empty() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for c in &t.children {
        write_xml(c, depth + 1, false, out);
    }
    out.push_str(&indent);
    let _ = writeln!(out, "</{}>", t.label);
}

/// A binary tree laid out in preorder, with parent and successor links.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatTree {
    pub labels: Vec<String>,
    pub attributes: Vec<BTreeSet<String>>,
    pub marks: Vec<Marks>,
    pub first: Vec<Option<usize>>,
    pub second: Vec<Option<usize>>,
    /// Parent in the binary tree, with the program leading down to the node
    /// (`true` for the left successor).
    pub parent: Vec<Option<(usize, bool)>>,
}

impl FlatTree {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn flatten_into(n: &BinaryNode, parent: Option<(usize, bool)>, flat: &mut FlatTree) -> usize {
    let ix = flat.labels.len();
    flat.labels.push(n.label.clone());
    flat.attributes.push(n.attributes.clone());
    flat.marks.push(n.marks);
    flat.first.push(None);
    flat.second.push(None);
    flat.parent.push(parent);
    if let BinaryTree::Node(c) = &n.first {
        let ci = flatten_into(c, Some((ix, true)), flat);
        flat.first[ix] = Some(ci);
    }
    if let BinaryTree::Node(c) = &n.second {
        let ci = flatten_into(c, Some((ix, false)), flat);
        flat.second[ix] = Some(ci);
    }
    ix
}

/// Every binary tree with exactly `n` nodes, with each node labelled from
/// `labels`. The count grows as Catalan(n) * |labels|^n.
pub fn enumerate_binary(n: usize, labels: &[String]) -> Vec<BinaryTree> {
    fn shapes(n: usize) -> Vec<BinaryTree> {
        if n == 0 {
            return vec![BinaryTree::Epsilon];
        }
        let mut out = Vec::new();
        for left in 0..n {
            let ls = shapes(left);
            let rs = shapes(n - 1 - left);
            for l in &ls {
                for r in &rs {
                    out.push(BinaryTree::node("", l.clone(), r.clone()));
                }
            }
        }
        out
    }
    fn relabel(t: &BinaryTree, labels: &[String], code: &mut usize) -> BinaryTree {
        match t {
            BinaryTree::Epsilon => BinaryTree::Epsilon,
            BinaryTree::Node(n) => {
                let label = labels[*code % labels.len()].clone();
                *code /= labels.len();
                let first = relabel(&n.first, labels, code);
                let second = relabel(&n.second, labels, code);
                BinaryTree::node(label, first, second)
            }
        }
    }
    let mut out = Vec::new();
    if labels.is_empty() {
        return out;
    }
    let combos = labels.len().pow(n as u32);
    for shape in shapes(n) {
        for c in 0..combos {
            let mut code = c;
            out.push(relabel(&shape, labels, &mut code));
        }
    }
    out
}
