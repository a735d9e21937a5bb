//! Witness extraction: the proof records of a satisfying root signature are
//! unfolded into a binary tree.

use std::collections::BTreeSet;

use crate::formula::{Atom, Formula};
use crate::tree::{BinaryNode, BinaryTree, Marks};

use super::fixpoint::{Fixpoint, SigId};
use super::oracle::Evaluator;

/// Label given to nodes whose element name is irrelevant to the formula:
/// `elem`, or `elem1`, `elem2`, ... if the formula mentions `elem`.
pub fn fresh_label(atoms: &[Atom]) -> String {
    let taken = |s: &str| atoms.iter().any(|a| matches!(a, Atom::Element(n) if n == s));
    let mut name = "elem".to_string();
    let mut i = 0;
    while taken(&name) {
        i += 1;
        name = format!("elem{i}");
    }
    name
}

/// Rebuilds the tree proving the satisfying root signature. The context mark
/// is set where `_context` holds, the target mark on the first node in
/// preorder where `formula` holds.
pub fn extract(fp: &Fixpoint<'_>, formula: &Formula) -> Option<BinaryTree> {
    let root = fp.sat_root()?;
    let atoms = &fp.lean().atoms;
    let other = fresh_label(atoms);
    let mut tree = build(fp, Some(root), atoms, &other);
    let first = Evaluator::new(formula).ok()?.eval_tree(&tree).ones().next();
    if let Some(i) = first {
        mark_target(&mut tree, &mut 0, i);
    }
    Some(tree)
}

fn mark_target(t: &mut BinaryTree, next: &mut usize, target: usize) -> bool {
    let BinaryTree::Node(n) = t else {
        return false;
    };
    if *next == target {
        n.marks.target = true;
        return true;
    }
    *next += 1;
    mark_target(&mut n.first, next, target) || mark_target(&mut n.second, next, target)
}

fn build(fp: &Fixpoint<'_>, s: Option<SigId>, atoms: &[Atom], other: &str) -> BinaryTree {
    let Some(s) = s else {
        return BinaryTree::Epsilon;
    };
    let r = *fp.record(s).expect("proved signatures carry a record");
    let label = match r.label {
        Some(i) => match &atoms[i] {
            Atom::Element(n) => n.clone(),
            _ => unreachable!("labels are element atoms"),
        },
        None => other.to_string(),
    };
    let mut attributes = BTreeSet::new();
    let mut marks = Marks::default();
    for (bit, &a) in fp.prop_atoms().iter().enumerate() {
        if r.props >> bit & 1 == 1 {
            match &atoms[a] {
                Atom::Attribute(n) => {
                    attributes.insert(n.clone());
                }
                Atom::Context => marks.context = true,
                Atom::Element(_) => unreachable!(),
            }
        }
    }
    let first = build(fp, r.first, atoms, other);
    let second = build(fp, r.second, atoms, other);
    BinaryTree::Node(Box::new(BinaryNode {
        label,
        attributes,
        marks,
        first,
        second,
    }))
}
