//! Direct model checking on a finite binary tree.
//!
//! Independent of the decision procedure: formulas are evaluated as node sets,
//! fixpoints by Kleene iteration from the empty set. Used to validate
//! witnesses and as the reference in exhaustive tests.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::formula::{validate, Formula, FormulaError, Program};
use crate::tree::{BinaryTree, FlatTree};

/// A checked formula ready to be evaluated on many trees.
#[derive(Debug, Clone)]
pub struct Evaluator {
    formula: Formula,
}

impl Evaluator {
    /// Accepts closed, predicate-free, cycle-free formulas.
    pub fn new(f: &Formula) -> Result<Evaluator, FormulaError> {
        validate(f)?;
        Ok(Evaluator { formula: f.clone() })
    }

    /// Nodes (preorder indices) where the formula holds.
    pub fn eval(&self, tree: &FlatTree) -> FixedBitSet {
        let mut env = HashMap::new();
        eval(&self.formula, tree, &mut env)
    }

    pub fn eval_tree(&self, tree: &BinaryTree) -> FixedBitSet {
        self.eval(&tree.flatten())
    }

    /// Whether the formula holds at some node.
    pub fn holds_somewhere(&self, tree: &FlatTree) -> bool {
        !tree.is_empty() && self.eval(tree).count_ones(..) > 0
    }
}

/// Whether `f` holds at preorder node `node` of `t`.
pub fn model_check(f: &Formula, t: &BinaryTree, node: usize) -> Result<bool, FormulaError> {
    let flat = t.flatten();
    Ok(node < flat.len() && Evaluator::new(f)?.eval(&flat).contains(node))
}

/// Preorder indices of the nodes of `t` where `f` holds.
pub fn satisfying_nodes(f: &Formula, t: &BinaryTree) -> Result<Vec<usize>, FormulaError> {
    Ok(Evaluator::new(f)?.eval_tree(t).ones().collect())
}

fn full(n: usize) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

fn filter(tree: &FlatTree, pred: impl Fn(usize) -> bool) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(tree.len());
    for i in 0..tree.len() {
        if pred(i) {
            s.insert(i);
        }
    }
    s
}

fn step(p: Program, tree: &FlatTree, i: usize) -> Option<usize> {
    match p {
        Program::FirstChild => tree.first[i],
        Program::NextSibling => tree.second[i],
        Program::Parent => match tree.parent[i] {
            Some((j, true)) => Some(j),
            _ => None,
        },
        Program::PrevSibling => match tree.parent[i] {
            Some((j, false)) => Some(j),
            _ => None,
        },
    }
}

fn eval(f: &Formula, tree: &FlatTree, env: &mut HashMap<u32, FixedBitSet>) -> FixedBitSet {
    let n = tree.len();
    match f {
        Formula::True => full(n),
        Formula::False => FixedBitSet::with_capacity(n),
        Formula::Element(l) => filter(tree, |i| tree.labels[i] == *l),
        Formula::Attribute(a) => filter(tree, |i| tree.attributes[i].contains(a)),
        Formula::Context => filter(tree, |i| tree.marks[i].context),
        Formula::Or(a, b) => {
            let mut s = eval(a, tree, env);
            s.union_with(&eval(b, tree, env));
            s
        }
        Formula::And(a, b) => {
            let mut s = eval(a, tree, env);
            s.intersect_with(&eval(b, tree, env));
            s
        }
        Formula::Implies(a, b) => {
            let mut s = eval(a, tree, env);
            s.toggle_range(..);
            s.union_with(&eval(b, tree, env));
            s
        }
        Formula::Equiv(a, b) => {
            let mut s = eval(a, tree, env);
            s.symmetric_difference_with(&eval(b, tree, env));
            s.toggle_range(..);
            s
        }
        Formula::Not(a) => {
            let mut s = eval(a, tree, env);
            s.toggle_range(..);
            s
        }
        Formula::Modal(p, a) => {
            let inner = eval(a, tree, env);
            filter(tree, |i| step(*p, tree, i).is_some_and(|j| inner.contains(j)))
        }
        Formula::Var(v) => env
            .get(&v.id())
            .cloned()
            .expect("closed formula: every variable is bound"),
        Formula::Let(bs, body) => {
            let saved: Vec<(u32, Option<FixedBitSet>)> = bs
                .iter()
                .map(|(v, _)| (v.id(), env.insert(v.id(), FixedBitSet::with_capacity(n))))
                .collect();
            loop {
                let next: Vec<FixedBitSet> = bs.iter().map(|(_, b)| eval(b, tree, env)).collect();
                let mut changed = false;
                for ((v, _), s) in bs.iter().zip(next) {
                    if env[&v.id()] != s {
                        changed = true;
                        env.insert(v.id(), s);
                    }
                }
                if !changed {
                    break;
                }
            }
            let r = eval(body, tree, env);
            for (id, old) in saved {
                match old {
                    Some(s) => env.insert(id, s),
                    None => env.remove(&id),
                };
            }
            r
        }
        Formula::Call(..) => unreachable!("predicates rejected by validation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Var;
    use crate::tree::{encode, UnrankedTree};

    fn el(n: &str) -> Formula {
        Formula::element(n)
    }

    #[test]
    fn first_child_modality() {
        // a & <1>b on <a><b/></a>
        let f = Formula::and(el("a"), Formula::modal(Program::FirstChild, el("b")));
        let t = BinaryTree::node("a", BinaryTree::leaf("b"), BinaryTree::Epsilon);
        assert!(model_check(&f, &t, 0).unwrap());
        assert!(!model_check(&f, &t, 1).unwrap());
    }

    #[test]
    fn parent_modality() {
        // e & <-1>(d & <2>g) on <d><e/></d><g/>
        let f = Formula::and(
            el("e"),
            Formula::modal(
                Program::Parent,
                Formula::and(el("d"), Formula::modal(Program::NextSibling, el("g"))),
            ),
        );
        let t = encode(&[
            UnrankedTree::with_children("d", vec![UnrankedTree::new("e")]),
            UnrankedTree::new("g"),
        ]);
        assert_eq!(satisfying_nodes(&f, &t).unwrap(), vec![1]);
    }

    #[test]
    fn unsatisfiable_sample_has_no_model_among_small_trees() {
        // f & <-2>(g & ~<2>T)
        let f = Formula::and(
            el("f"),
            Formula::modal(
                Program::PrevSibling,
                Formula::and(el("g"), Formula::not(Formula::has(Program::NextSibling))),
            ),
        );
        let ev = Evaluator::new(&f).unwrap();
        let labels = vec!["f".to_string(), "g".to_string()];
        for n in 1..=4 {
            for t in crate::tree::enumerate_binary(n, &labels) {
                assert!(!ev.holds_somewhere(&t.flatten()));
            }
        }
    }

    #[test]
    fn fixpoint_reaches_siblings() {
        // let $X = b | <2>$X in $X
        let x = Var::fresh("X");
        let f = Formula::mu(
            x.clone(),
            Formula::or(el("b"), Formula::modal(Program::NextSibling, Formula::Var(x))),
        );
        let t = encode(&[UnrankedTree::new("a"), UnrankedTree::new("c"), UnrankedTree::new("b")]);
        assert_eq!(satisfying_nodes(&f, &t).unwrap(), vec![0, 1, 2]);
        let t2 = encode(&[UnrankedTree::new("b"), UnrankedTree::new("a")]);
        assert_eq!(satisfying_nodes(&f, &t2).unwrap(), vec![0]);
    }

    #[test]
    fn rejects_cyclic_formula() {
        let x = Var::fresh("X");
        let f = Formula::mu(
            x.clone(),
            Formula::or(
                Formula::modal(Program::Parent, Formula::Var(x.clone())),
                Formula::modal(Program::FirstChild, Formula::Var(x)),
            ),
        );
        assert!(matches!(Evaluator::new(&f), Err(FormulaError::Cycle(_))));
    }
}
