//! Fisher-Ladner closure and Lean.
//!
//! Closed subformulas are hash-consed into an arena. A fixpoint variable is
//! represented by a node standing for `let ... in $X` together with the
//! values of the binder's free variables; its one-step unfolding is the
//! binding body with the binder's variables replaced by such nodes. Two
//! unfoldings of the same binder instance share a node, which keeps the
//! closure finite.
//!
//! The Lean lists the atomic propositions and the modal formulas `<p>f` of
//! the closure, plus `<p>T` for every program. Truth of any closure formula
//! at a node is a function of the node's Lean assignment, because every
//! recursive reference is guarded by a modality.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use fixedbitset::FixedBitSet;

use crate::formula::{to_nnf, Atom, Formula, FormulaError, Nnf, Program, Var};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Atom(Atom),
    NotAtom(Atom),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Modal(Program, NodeId),
    NotModalTrue(Program),
    /// A fixpoint instance; evaluates as its unfolding.
    Fix(usize),
}

#[derive(Debug, Clone)]
struct FixInfo {
    /// The binder with the selected variable as body; free variables
    /// are the ids in `env`.
    formula: Rc<Formula>,
    env: Vec<(u32, NodeId)>,
    unfolding: Option<NodeId>,
}

/// One truth-table operation of the evaluation program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    True,
    False,
    Atom(usize),
    NotAtom(usize),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Lean(usize),
    NotLean(usize),
    Alias(NodeId),
}

/// Closure of a formula wrapped so that it holds somewhere below the root.
#[derive(Debug, Clone)]
pub struct Closure {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    fixes: Vec<FixInfo>,
    /// `mu R.(f | <1>R | <2>R)`, tested at the root.
    pub(crate) root: NodeId,
    /// The formula itself.
    pub(crate) target: NodeId,
    /// Closure members in evaluation order (operands first).
    pub(crate) order: Vec<NodeId>,
}

type LetKey = (usize, Vec<(u32, NodeId)>);

struct Builder {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    fixes: Vec<FixInfo>,
    lets: HashMap<LetKey, Vec<NodeId>>,
}

fn nnf_free_vars(f: &Nnf, bound: &mut Vec<u32>, out: &mut BTreeSet<u32>) {
    match f {
        Nnf::Var(v) => {
            if !bound.contains(&v.id()) {
                out.insert(v.id());
            }
        }
        Nnf::And(a, b) | Nnf::Or(a, b) => {
            nnf_free_vars(a, bound, out);
            nnf_free_vars(b, bound, out);
        }
        Nnf::Modal(_, a) => nnf_free_vars(a, bound, out),
        Nnf::Let(bs, body) => {
            let n = bound.len();
            bound.extend(bs.iter().map(|(v, _)| v.id()));
            for (_, b) in bs {
                nnf_free_vars(b, bound, out);
            }
            nnf_free_vars(body, bound, out);
            bound.truncate(n);
        }
        _ => {}
    }
}

impl Builder {
    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    fn translate(&mut self, f: &Nnf, env: &HashMap<u32, NodeId>) -> NodeId {
        match f {
            Nnf::True => self.intern(Node::True),
            Nnf::False => self.intern(Node::False),
            Nnf::Atom(a) => self.intern(Node::Atom(a.clone())),
            Nnf::NotAtom(a) => self.intern(Node::NotAtom(a.clone())),
            Nnf::And(a, b) => {
                let (x, y) = (self.translate(a, env), self.translate(b, env));
                self.intern(Node::And(x, y))
            }
            Nnf::Or(a, b) => {
                let (x, y) = (self.translate(a, env), self.translate(b, env));
                self.intern(Node::Or(x, y))
            }
            Nnf::Modal(p, a) => {
                let x = self.translate(a, env);
                self.intern(Node::Modal(*p, x))
            }
            Nnf::NotModalTrue(p) => self.intern(Node::NotModalTrue(*p)),
            Nnf::Var(v) => *env
                .get(&v.id())
                .expect("normalized formulas are closed"),
            Nnf::Let(bs, body) => {
                let mut free = BTreeSet::new();
                nnf_free_vars(f, &mut Vec::new(), &mut free);
                let captured: Vec<(u32, NodeId)> = free.iter().map(|id| (*id, env[id])).collect();
                let key = (f as *const Nnf as usize, captured.clone());
                let ids = match self.lets.get(&key) {
                    Some(ids) => ids.clone(),
                    None => self.instantiate(bs, captured, key),
                };
                let mut inner = env.clone();
                for ((v, _), id) in bs.iter().zip(&ids) {
                    inner.insert(v.id(), *id);
                }
                self.translate(body, &inner)
            }
        }
    }

    fn instantiate(&mut self, bs: &[(Var, Nnf)], captured: Vec<(u32, NodeId)>, key: LetKey) -> Vec<NodeId> {
        let template: Vec<(Var, Formula)> = bs.iter().map(|(v, b)| (v.clone(), Formula::from(b))).collect();
        let mut ids = Vec::with_capacity(bs.len());
        for (v, _) in bs {
            let k = self.fixes.len();
            self.fixes.push(FixInfo {
                formula: Rc::new(Formula::Let(template.clone(), Box::new(Formula::Var(v.clone())))),
                env: captured.clone(),
                unfolding: None,
            });
            ids.push(self.intern(Node::Fix(k)));
        }
        self.lets.insert(key, ids.clone());
        let mut env: HashMap<u32, NodeId> = captured.into_iter().collect();
        for ((v, _), id) in bs.iter().zip(&ids) {
            env.insert(v.id(), *id);
        }
        for ((_, b), id) in bs.iter().zip(&ids) {
            let u = self.translate(b, &env);
            let Node::Fix(k) = self.nodes[*id] else { unreachable!() };
            self.fixes[k].unfolding = Some(u);
        }
        ids
    }
}

impl Closure {
    /// Normalizes `f` and computes the closure of `mu R.(f | <1>R | <2>R)`.
    pub fn new(f: &Formula) -> Result<Closure, FormulaError> {
        let nnf = to_nnf(f)?;
        let r = Var::fresh("R");
        let wrapped = Nnf::Let(
            vec![(
                r.clone(),
                Nnf::or(
                    nnf,
                    Nnf::or(
                        Nnf::modal(Program::FirstChild, Nnf::Var(r.clone())),
                        Nnf::modal(Program::NextSibling, Nnf::Var(r.clone())),
                    ),
                ),
            )],
            Box::new(Nnf::Var(r)),
        );
        let mut b = Builder {
            nodes: Vec::new(),
            index: HashMap::new(),
            fixes: Vec::new(),
            lets: HashMap::new(),
        };
        let root = b.translate(&wrapped, &HashMap::new());
        let Nnf::Let(bs, _) = &wrapped else { unreachable!() };
        let Nnf::Or(inner, _) = &bs[0].1 else { unreachable!() };
        let target = b.translate(inner, &HashMap::new());
        let mut c = Closure {
            nodes: b.nodes,
            index: b.index,
            fixes: b.fixes,
            root,
            target,
            order: Vec::new(),
        };
        c.order = c.evaluation_order();
        Ok(c)
    }

    /// Post-order over the evaluation dependencies, from the root and from
    /// every modal body. Modal nodes are leaves of the evaluation, so guarded
    /// recursion leaves this graph acyclic.
    fn evaluation_order(&self) -> Vec<NodeId> {
        let mut state = vec![0u8; self.nodes.len()]; // 0 new, 1 open, 2 done
        let mut order = Vec::new();
        let mut roots = vec![self.root, self.target];
        let mut i = 0;
        while i < roots.len() {
            let start = roots[i];
            i += 1;
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((n, expanded)) = stack.pop() {
                if expanded {
                    state[n] = 2;
                    order.push(n);
                    continue;
                }
                if state[n] != 0 {
                    debug_assert!(state[n] == 2, "unguarded recursion in closure");
                    continue;
                }
                state[n] = 1;
                stack.push((n, true));
                match &self.nodes[n] {
                    Node::And(a, b) | Node::Or(a, b) => {
                        stack.push((*b, false));
                        stack.push((*a, false));
                    }
                    Node::Fix(k) => stack.push((self.fixes[*k].unfolding.expect("unfolded"), false)),
                    Node::Modal(_, a) => roots.push(*a),
                    _ => {}
                }
            }
        }
        order
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Number of formulas in the closure.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Closure members in evaluation order.
    pub fn members(&self) -> &[NodeId] {
        &self.order
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    /// The closure member as a formula.
    pub fn to_formula(&self, id: NodeId) -> Formula {
        match &self.nodes[id] {
            Node::True => Formula::True,
            Node::False => Formula::False,
            Node::Atom(a) => Formula::from(&Nnf::Atom(a.clone())),
            Node::NotAtom(a) => Formula::from(&Nnf::NotAtom(a.clone())),
            Node::And(a, b) => Formula::and(self.to_formula(*a), self.to_formula(*b)),
            Node::Or(a, b) => Formula::or(self.to_formula(*a), self.to_formula(*b)),
            Node::Modal(p, a) => Formula::modal(*p, self.to_formula(*a)),
            Node::NotModalTrue(p) => Formula::not(Formula::has(*p)),
            Node::Fix(k) => {
                let fx = &self.fixes[*k];
                let map = fx.env.iter().map(|(v, n)| (*v, self.to_formula(*n))).collect();
                fx.formula.substitute(&map).freshen()
            }
        }
    }

    /// Builds the Lean of this closure.
    pub fn lean(&self) -> Lean {
        Lean::new(self)
    }
}

/// The Lean: atoms first, then `<1>T, <2>T, <-1>T, <-2>T`, then the other
/// modal formulas of the closure in evaluation order.
#[derive(Debug, Clone)]
pub struct Lean {
    pub atoms: Vec<Atom>,
    /// Modal members `(program, body)`; the first four have body `T`.
    pub modals: Vec<(Program, NodeId)>,
    true_node: Option<NodeId>,
    modal_index: HashMap<NodeId, usize>,
    atom_index: HashMap<Atom, usize>,
    pub(crate) ops: Vec<Op>,
}

impl Lean {
    fn new(c: &Closure) -> Lean {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut modals: Vec<(Program, NodeId)> = Vec::new();
        let mut modal_index = HashMap::new();
        let true_node = c.index.get(&Node::True).copied();
        for &n in &c.order {
            match &c.nodes[n] {
                Node::Atom(a) | Node::NotAtom(a) => {
                    if !atoms.contains(a) {
                        atoms.push(a.clone());
                    }
                }
                Node::Modal(p, body) if Some(*body) != true_node => {
                    modal_index.insert(n, 4 + modals.len());
                    modals.push((*p, *body));
                }
                _ => {}
            }
        }
        // element atoms, then attributes, then the context mark
        atoms.sort_by_key(|a| match a {
            Atom::Element(_) => 0,
            Atom::Attribute(_) => 1,
            Atom::Context => 2,
        });
        let t = true_node.unwrap_or(usize::MAX);
        let mut all: Vec<(Program, NodeId)> = Program::ALL.iter().map(|p| (*p, t)).collect();
        all.extend(modals);
        for (i, p) in Program::ALL.iter().enumerate() {
            if let Some(&id) = c.index.get(&Node::Modal(*p, t)) {
                modal_index.insert(id, i);
            }
        }
        let atom_index: HashMap<Atom, usize> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let mut lean = Lean {
            atoms,
            modals: all,
            true_node,
            modal_index,
            atom_index,
            ops: Vec::new(),
        };
        // interned nodes outside the evaluation order (bindings of unused
        // variables) are never read
        let mut reachable = vec![false; c.nodes.len()];
        for &n in &c.order {
            reachable[n] = true;
        }
        lean.ops = (0..c.nodes.len())
            .map(|n| match &c.nodes[n] {
                _ if !reachable[n] => Op::False,
                Node::True => Op::True,
                Node::False => Op::False,
                Node::Atom(a) => Op::Atom(lean.atom_index[a]),
                Node::NotAtom(a) => Op::NotAtom(lean.atom_index[a]),
                Node::And(a, b) => Op::And(*a, *b),
                Node::Or(a, b) => Op::Or(*a, *b),
                Node::Modal(..) => Op::Lean(lean.modal_index.get(&n).copied().unwrap_or(usize::MAX)),
                Node::NotModalTrue(p) => Op::NotLean(lean.has_index(*p)),
                Node::Fix(k) => Op::Alias(c.fixes[*k].unfolding.expect("unfolded")),
            })
            .collect();
        lean
    }

    /// Index of `<p>T` among the modal members.
    pub fn has_index(&self, p: Program) -> usize {
        Program::ALL.iter().position(|q| *q == p).expect("four programs")
    }

    /// Number of atomic propositions.
    pub fn symbols(&self) -> usize {
        self.atoms.len()
    }

    /// Number of modal members.
    pub fn eventualities(&self) -> usize {
        self.modals.len()
    }

    pub fn size(&self) -> usize {
        self.symbols() + self.eventualities()
    }

    pub fn atom_index(&self, a: &Atom) -> Option<usize> {
        self.atom_index.get(a).copied()
    }

    /// Lean position (atoms first) of a modal closure member.
    pub fn modal_position(&self, node: NodeId) -> Option<usize> {
        self.modal_index.get(&node).map(|i| self.atoms.len() + i)
    }

    /// The Lean member at `pos` as a formula.
    pub fn member(&self, c: &Closure, pos: usize) -> Formula {
        if pos < self.atoms.len() {
            return Formula::from(&Nnf::Atom(self.atoms[pos].clone()));
        }
        let (p, body) = self.modals[pos - self.atoms.len()];
        if Some(body) == self.true_node || body == usize::MAX {
            Formula::has(p)
        } else {
            Formula::modal(p, c.to_formula(body))
        }
    }

    /// Whether a node whose Lean assignment is `t` (indexed like
    /// [`Lean::member`]) satisfies closure member `f`.
    pub fn entails(&self, c: &Closure, t: &FixedBitSet, f: NodeId) -> bool {
        let mut val = vec![false; self.ops.len()];
        for &n in &c.order {
            val[n] = self.eval_op(n, &val, |i| t.contains(i), |m| t.contains(self.atoms.len() + m));
        }
        val[f]
    }

    #[inline]
    pub(crate) fn eval_op(
        &self,
        n: NodeId,
        val: &[bool],
        atom: impl Fn(usize) -> bool,
        modal: impl Fn(usize) -> bool,
    ) -> bool {
        match self.ops[n] {
            Op::True => true,
            Op::False => false,
            Op::Atom(i) => atom(i),
            Op::NotAtom(i) => !atom(i),
            Op::And(a, b) => val[a] && val[b],
            Op::Or(a, b) => val[a] || val[b],
            Op::Lean(m) => modal(m),
            Op::NotLean(m) => !modal(m),
            Op::Alias(a) => val[a],
        }
    }
}
