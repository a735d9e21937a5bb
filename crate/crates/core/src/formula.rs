//! Formulas of the tree logic.
//!
//! The logic talks about finite binary trees obtained from XML documents by the
//! first-child/next-sibling encoding. Formulas combine node names, attribute
//! names, the context mark `#`, boolean connectives, existential modalities
//! over the four programs `1`, `2`, `-1`, `-2` and an n-ary least fixpoint
//! binder (`let $X = ... in ...`).
//!
//! This module owns the surface AST ([`Formula`]), its negation normal form
//! ([`Nnf`]), the cycle-freeness check, one-step unfolding and the
//! pretty-printer used in solver traces.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

/// Name of the reserved proposition the context mark `#` compiles to.
pub const CONTEXT_PROPOSITION: &str = "_context";

/// Navigation program inside a modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    /// `1`: from a node to its first child.
    FirstChild,
    /// `2`: from a node to its next sibling.
    NextSibling,
    /// `-1`: from a first child up to its parent.
    Parent,
    /// `-2`: from a node to its previous sibling.
    PrevSibling,
}

impl Program {
    pub const ALL: [Program; 4] = [
        Program::FirstChild,
        Program::NextSibling,
        Program::Parent,
        Program::PrevSibling,
    ];

    pub fn converse(self) -> Program {
        match self {
            Program::FirstChild => Program::Parent,
            Program::NextSibling => Program::PrevSibling,
            Program::Parent => Program::FirstChild,
            Program::PrevSibling => Program::NextSibling,
        }
    }

    /// Numeric code used by the concrete syntax (`1`, `2`, `-1`, `-2`).
    pub fn code(self) -> i8 {
        match self {
            Program::FirstChild => 1,
            Program::NextSibling => 2,
            Program::Parent => -1,
            Program::PrevSibling => -2,
        }
    }

    pub fn from_code(code: i8) -> Option<Program> {
        match code {
            1 => Some(Program::FirstChild),
            2 => Some(Program::NextSibling),
            -1 => Some(Program::Parent),
            -2 => Some(Program::PrevSibling),
            _ => None,
        }
    }

    pub fn is_forward(self) -> bool {
        matches!(self, Program::FirstChild | Program::NextSibling)
    }

    pub(crate) fn bit(self) -> u8 {
        match self {
            Program::FirstChild => 1,
            Program::NextSibling => 2,
            Program::Parent => 4,
            Program::PrevSibling => 8,
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

static NEXT_VAR_ID: AtomicU32 = AtomicU32::new(1);

/// A recursion variable.
///
/// Every binder gets a process-wide unique id when it is created, so
/// substitution never captures. The name is kept for diagnostics only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    id: u32,
    name: Arc<str>,
}

impl Var {
    pub fn fresh(name: &str) -> Var {
        Var {
            id: NEXT_VAR_ID.fetch_add(1, Ordering::Relaxed),
            name: Arc::from(name),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// Argument of a predicate call: a formula or a string literal (XPath
/// queries, DTD paths, element names).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Arg {
    Formula(Formula),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Element(String),
    Attribute(String),
    /// The start-context mark `#`.
    Context,
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Equiv(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Modal(Program, Box<Formula>),
    Var(Var),
    /// `let $X1 = f1, ..., $Xn = fn in body`, least fixpoint.
    Let(Vec<(Var, Formula)>, Box<Formula>),
    Call(String, Vec<Arg>),
}

impl Formula {
    pub fn element(name: impl Into<String>) -> Formula {
        Formula::Element(name.into())
    }

    pub fn attribute(name: impl Into<String>) -> Formula {
        Formula::Attribute(name.into())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: Formula, b: Formula) -> Formula {
        Formula::Equiv(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn modal(p: Program, a: Formula) -> Formula {
        Formula::Modal(p, Box::new(a))
    }

    /// `<p>T`: the node has a `p`-neighbour.
    pub fn has(p: Program) -> Formula {
        Formula::modal(p, Formula::True)
    }

    /// Single-variable fixpoint `let $v = body in $v`.
    pub fn mu(v: Var, body: Formula) -> Formula {
        Formula::Let(vec![(v.clone(), body)], Box::new(Formula::Var(v)))
    }

    /// Conjunction of all items; `T` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Disjunction of all items; `F` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::False)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True
            | Formula::False
            | Formula::Element(_)
            | Formula::Attribute(_)
            | Formula::Context
            | Formula::Var(_) => 1,
            Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::Implies(a, b)
            | Formula::Equiv(a, b) => 1 + a.size() + b.size(),
            Formula::Not(a) | Formula::Modal(_, a) => 1 + a.size(),
            Formula::Let(bs, body) => {
                1 + body.size() + bs.iter().map(|(_, b)| b.size()).sum::<usize>()
            }
            Formula::Call(_, args) => {
                1 + args
                    .iter()
                    .map(|a| match a {
                        Arg::Formula(f) => f.size(),
                        Arg::Str(_) => 1,
                    })
                    .sum::<usize>()
            }
        }
    }

    /// Element names occurring in the formula, in first-occurrence order.
    pub fn element_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Element(n) = f {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    /// Attribute names occurring in the formula, in first-occurrence order.
    pub fn attribute_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Attribute(n) = f {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    /// Programs occurring in modalities.
    pub fn programs(&self) -> BTreeSet<Program> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Modal(p, _) = f {
                out.insert(*p);
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::Implies(a, b)
            | Formula::Equiv(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Not(a) | Formula::Modal(_, a) => a.visit(f),
            Formula::Let(bs, body) => {
                for (_, b) in bs {
                    b.visit(f);
                }
                body.visit(f);
            }
            Formula::Call(_, args) => {
                for a in args {
                    if let Arg::Formula(g) = a {
                        g.visit(f);
                    }
                }
            }
            _ => {}
        }
    }

    /// Free recursion variables (by id).
    pub fn free_vars(&self) -> BTreeSet<u32> {
        fn go(f: &Formula, bound: &mut Vec<u32>, out: &mut BTreeSet<u32>) {
            match f {
                Formula::Var(v) => {
                    if !bound.contains(&v.id) {
                        out.insert(v.id);
                    }
                }
                Formula::Or(a, b)
                | Formula::And(a, b)
                | Formula::Implies(a, b)
                | Formula::Equiv(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Not(a) | Formula::Modal(_, a) => go(a, bound, out),
                Formula::Let(bs, body) => {
                    let n = bound.len();
                    bound.extend(bs.iter().map(|(v, _)| v.id));
                    for (_, b) in bs {
                        go(b, bound, out);
                    }
                    go(body, bound, out);
                    bound.truncate(n);
                }
                Formula::Call(_, args) => {
                    for a in args {
                        if let Arg::Formula(g) = a {
                            go(g, bound, out);
                        }
                    }
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Replaces free occurrences of variables by formulas.
    pub fn substitute(&self, map: &HashMap<u32, Formula>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::Var(v) => map.get(&v.id).cloned().unwrap_or_else(|| self.clone()),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Implies(a, b) => Formula::implies(a.substitute(map), b.substitute(map)),
            Formula::Equiv(a, b) => Formula::equiv(a.substitute(map), b.substitute(map)),
            Formula::Not(a) => Formula::not(a.substitute(map)),
            Formula::Modal(p, a) => Formula::modal(*p, a.substitute(map)),
            Formula::Let(bs, body) => {
                let mut inner = map.clone();
                for (v, _) in bs {
                    inner.remove(&v.id);
                }
                Formula::Let(
                    bs.iter()
                        .map(|(v, b)| (v.clone(), b.substitute(&inner)))
                        .collect(),
                    Box::new(body.substitute(&inner)),
                )
            }
            Formula::Call(name, args) => Formula::Call(
                name.clone(),
                args.iter()
                    .map(|a| match a {
                        Arg::Formula(f) => Arg::Formula(f.substitute(map)),
                        Arg::Str(s) => Arg::Str(s.clone()),
                    })
                    .collect(),
            ),
            _ => self.clone(),
        }
    }

    /// Gives every binder a fresh variable, so that no two binders in the
    /// result share an id.
    pub fn freshen(&self) -> Formula {
        fn go(f: &Formula, env: &mut Vec<(u32, Var)>) -> Formula {
            match f {
                Formula::Var(v) => env
                    .iter()
                    .rev()
                    .find(|(id, _)| *id == v.id)
                    .map(|(_, nv)| Formula::Var(nv.clone()))
                    .unwrap_or_else(|| f.clone()),
                Formula::Or(a, b) => Formula::or(go(a, env), go(b, env)),
                Formula::And(a, b) => Formula::and(go(a, env), go(b, env)),
                Formula::Implies(a, b) => Formula::implies(go(a, env), go(b, env)),
                Formula::Equiv(a, b) => Formula::equiv(go(a, env), go(b, env)),
                Formula::Not(a) => Formula::not(go(a, env)),
                Formula::Modal(p, a) => Formula::modal(*p, go(a, env)),
                Formula::Let(bs, body) => {
                    let n = env.len();
                    let fresh: Vec<Var> = bs.iter().map(|(v, _)| Var::fresh(v.name())).collect();
                    env.extend(bs.iter().zip(&fresh).map(|((v, _), nv)| (v.id, nv.clone())));
                    let nbs = bs
                        .iter()
                        .zip(fresh)
                        .map(|((_, b), nv)| (nv, go(b, env)))
                        .collect();
                    let nbody = go(body, env);
                    env.truncate(n);
                    Formula::Let(nbs, Box::new(nbody))
                }
                Formula::Call(name, args) => Formula::Call(
                    name.clone(),
                    args.iter()
                        .map(|a| match a {
                            Arg::Formula(g) => Arg::Formula(go(g, env)),
                            Arg::Str(s) => Arg::Str(s.clone()),
                        })
                        .collect(),
                ),
                _ => f.clone(),
            }
        }
        go(self, &mut Vec::new())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

/// Atomic propositions of the logic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Element(String),
    Attribute(String),
    Context,
}

impl Atom {
    fn to_formula(&self) -> Formula {
        match self {
            Atom::Element(n) => Formula::Element(n.clone()),
            Atom::Attribute(n) => Formula::Attribute(n.clone()),
            Atom::Context => Formula::Context,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Element(n) => f.write_str(n),
            Atom::Attribute(n) => write!(f, "@{n}"),
            Atom::Context => f.write_str(CONTEXT_PROPOSITION),
        }
    }
}

/// Negation normal form.
///
/// Negation only sits on atoms and on `<p>T`. Every fixpoint is guarded:
/// each recursive reference to a binder's variable from inside its own
/// bindings passes through at least one modality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Nnf {
    True,
    False,
    Atom(Atom),
    NotAtom(Atom),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Modal(Program, Box<Nnf>),
    /// `~<p>T`: the node has no `p`-neighbour.
    NotModalTrue(Program),
    Var(Var),
    Let(Vec<(Var, Nnf)>, Box<Nnf>),
}

impl Nnf {
    pub fn and(a: Nnf, b: Nnf) -> Nnf {
        Nnf::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Nnf, b: Nnf) -> Nnf {
        Nnf::Or(Box::new(a), Box::new(b))
    }

    pub fn modal(p: Program, a: Nnf) -> Nnf {
        Nnf::Modal(p, Box::new(a))
    }

    pub fn to_formula(&self) -> Formula {
        Formula::from(self)
    }

    fn substitute(&self, map: &HashMap<u32, Nnf>) -> Nnf {
        match self {
            Nnf::Var(v) => map.get(&v.id).cloned().unwrap_or_else(|| self.clone()),
            Nnf::And(a, b) => Nnf::and(a.substitute(map), b.substitute(map)),
            Nnf::Or(a, b) => Nnf::or(a.substitute(map), b.substitute(map)),
            Nnf::Modal(p, a) => Nnf::modal(*p, a.substitute(map)),
            Nnf::Let(bs, body) => {
                let mut inner = map.clone();
                for (v, _) in bs {
                    inner.remove(&v.id);
                }
                Nnf::Let(
                    bs.iter()
                        .map(|(v, b)| (v.clone(), b.substitute(&inner)))
                        .collect(),
                    Box::new(body.substitute(&inner)),
                )
            }
            _ => self.clone(),
        }
    }
}

impl From<&Nnf> for Formula {
    fn from(n: &Nnf) -> Formula {
        match n {
            Nnf::True => Formula::True,
            Nnf::False => Formula::False,
            Nnf::Atom(a) => a.to_formula(),
            Nnf::NotAtom(a) => Formula::not(a.to_formula()),
            Nnf::And(a, b) => Formula::and(a.as_ref().into(), b.as_ref().into()),
            Nnf::Or(a, b) => Formula::or(a.as_ref().into(), b.as_ref().into()),
            Nnf::Modal(p, a) => Formula::modal(*p, a.as_ref().into()),
            Nnf::NotModalTrue(p) => Formula::not(Formula::has(*p)),
            Nnf::Var(v) => Formula::Var(v.clone()),
            Nnf::Let(bs, body) => Formula::Let(
                bs.iter().map(|(v, b)| (v.clone(), b.into())).collect(),
                Box::new(body.as_ref().into()),
            ),
        }
    }
}

/// A variable whose recursion mixes a program with its converse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleViolation {
    pub variable: String,
    pub programs: (Program, Program),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleReport {
    pub violations: Vec<CycleViolation>,
}

impl CycleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for CycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("cycle-free");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("${} uses {} and {}", v.variable, v.programs.0, v.programs.1))
            .collect();
        write!(f, "not cycle-free: {}", parts.join("; "))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("formula is {0}")]
    Cycle(CycleReport),
    #[error("unbound variable ${0}")]
    UnboundVariable(String),
    #[error("predicate {0}() must be expanded before normalization")]
    UnexpandedPredicate(String),
    #[error("variable ${0} occurs under a negation inside its own recursion")]
    NegativeOccurrence(String),
    #[error("expected a let binder")]
    NotABinder,
}

/// Checks that no recursion mixes a program with its converse.
///
/// Variables are the nodes of a dependency graph: an occurrence of `$Y`
/// inside the binding of `$X` (or inside a let-body nested in it) adds an edge
/// `X -> Y` labelled with the programs crossed between the occurrence and the
/// root of that binding. Every strongly connected component that carries a
/// cycle must use a converse-free set of programs.
pub fn cycle_check(f: &Formula) -> CycleReport {
    struct Graph {
        graph: DiGraph<String, u8>,
        nodes: HashMap<u32, NodeIndex>,
    }
    impl Graph {
        fn node(&mut self, v: &Var) -> NodeIndex {
            if let Some(ix) = self.nodes.get(&v.id) {
                return *ix;
            }
            let ix = self.graph.add_node(v.name().to_string());
            self.nodes.insert(v.id, ix);
            ix
        }
    }
    fn walk(f: &Formula, owner: Option<NodeIndex>, progs: u8, g: &mut Graph) {
        match f {
            Formula::Var(v) => {
                let target = g.node(v);
                if let Some(o) = owner {
                    g.graph.add_edge(o, target, progs);
                }
            }
            Formula::Modal(p, a) => walk(a, owner, progs | p.bit(), g),
            Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::Implies(a, b)
            | Formula::Equiv(a, b) => {
                walk(a, owner, progs, g);
                walk(b, owner, progs, g);
            }
            Formula::Not(a) => walk(a, owner, progs, g),
            Formula::Let(bs, body) => {
                for (v, b) in bs {
                    let ix = g.node(v);
                    walk(b, Some(ix), 0, g);
                }
                walk(body, owner, progs, g);
            }
            Formula::Call(_, args) => {
                for a in args {
                    if let Arg::Formula(h) = a {
                        walk(h, owner, progs, g);
                    }
                }
            }
            _ => {}
        }
    }
    let mut g = Graph {
        graph: DiGraph::new(),
        nodes: HashMap::new(),
    };
    walk(f, None, 0, &mut g);

    let mut report = CycleReport::default();
    for scc in tarjan_scc(&g.graph) {
        let members: HashSet<NodeIndex> = scc.iter().copied().collect();
        let mut used = 0u8;
        let mut cyclic = false;
        for &n in &scc {
            for e in g.graph.edges(n) {
                use petgraph::visit::EdgeRef;
                if members.contains(&e.target()) {
                    cyclic = true;
                    used |= *e.weight();
                }
            }
        }
        if !cyclic {
            continue;
        }
        let clash = [Program::FirstChild, Program::NextSibling]
            .into_iter()
            .find(|p| used & p.bit() != 0 && used & p.converse().bit() != 0);
        if let Some(p) = clash {
            let mut names: Vec<&String> = scc.iter().map(|n| &g.graph[*n]).collect();
            names.sort();
            names.dedup();
            for name in names {
                report.violations.push(CycleViolation {
                    variable: name.clone(),
                    programs: (p, p.converse()),
                });
            }
        }
    }
    report
}

/// One-step unfolding of `var` in the binder `binder`: the variable's binding
/// with every variable of the binder replaced by its fixpoint.
pub fn unfold(binder: &Formula, var: &Var) -> Result<Formula, FormulaError> {
    let Formula::Let(bs, _) = binder else {
        return Err(FormulaError::NotABinder);
    };
    let (_, body) = bs
        .iter()
        .find(|(v, _)| v.id == var.id)
        .ok_or_else(|| FormulaError::UnboundVariable(var.name().to_string()))?;
    let map: HashMap<u32, Formula> = bs
        .iter()
        .map(|(v, _)| {
            (
                v.id,
                Formula::Let(bs.clone(), Box::new(Formula::Var(v.clone()))),
            )
        })
        .collect();
    Ok(body.substitute(&map))
}

fn check_closed_and_expanded(f: &Formula) -> Result<(), FormulaError> {
    fn go(f: &Formula, bound: &mut Vec<u32>) -> Result<(), FormulaError> {
        match f {
            Formula::Var(v) if !bound.contains(&v.id) => {
                Err(FormulaError::UnboundVariable(v.name().to_string()))
            }
            Formula::Call(name, _) => Err(FormulaError::UnexpandedPredicate(name.clone())),
            Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::Implies(a, b)
            | Formula::Equiv(a, b) => {
                go(a, bound)?;
                go(b, bound)
            }
            Formula::Not(a) | Formula::Modal(_, a) => go(a, bound),
            Formula::Let(bs, body) => {
                let n = bound.len();
                bound.extend(bs.iter().map(|(v, _)| v.id));
                for (_, b) in bs {
                    go(b, bound)?;
                }
                go(body, bound)?;
                bound.truncate(n);
                Ok(())
            }
            _ => Ok(()),
        }
    }
    go(f, &mut Vec::new())
}

/// Recursion variables must occur under an even number of negations relative
/// to their binder. Both sides of `<=>` have mixed polarity, so a variable
/// bound outside an equivalence may not occur inside it; binders nested in
/// the equivalence are judged relative to their own position.
fn check_positive(f: &Formula) -> Result<(), FormulaError> {
    // binders: (id, parity at the binder, mixed)
    fn go(f: &Formula, pol: bool, binders: &mut Vec<(u32, bool, bool)>) -> Result<(), FormulaError> {
        match f {
            Formula::Var(v) => match binders.iter().rev().find(|(id, _, _)| *id == v.id) {
                Some(&(_, bp, mixed)) if mixed || bp != pol => {
                    Err(FormulaError::NegativeOccurrence(v.name().to_string()))
                }
                _ => Ok(()),
            },
            Formula::Or(a, b) | Formula::And(a, b) => {
                go(a, pol, binders)?;
                go(b, pol, binders)
            }
            Formula::Implies(a, b) => {
                go(a, !pol, binders)?;
                go(b, pol, binders)
            }
            Formula::Equiv(a, b) => {
                let saved: Vec<bool> = binders.iter().map(|b| b.2).collect();
                binders.iter_mut().for_each(|b| b.2 = true);
                let r = go(a, pol, binders).and_then(|_| go(b, pol, binders));
                binders.iter_mut().zip(saved).for_each(|(b, m)| b.2 = m);
                r
            }
            Formula::Not(a) => go(a, !pol, binders),
            Formula::Modal(_, a) => go(a, pol, binders),
            Formula::Let(bs, body) => {
                let n = binders.len();
                binders.extend(bs.iter().map(|(v, _)| (v.id, pol, false)));
                for (_, b) in bs {
                    go(b, pol, binders)?;
                }
                go(body, pol, binders)?;
                binders.truncate(n);
                Ok(())
            }
            _ => Ok(()),
        }
    }
    go(f, true, &mut Vec::new())
}

/// Checks the preconditions shared by normalization and model checking:
/// closed, predicate-free, positive recursion, cycle-free.
pub fn validate(f: &Formula) -> Result<(), FormulaError> {
    check_closed_and_expanded(f)?;
    check_positive(f)?;
    let report = cycle_check(f);
    if !report.passed() {
        return Err(FormulaError::Cycle(report));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Least,
    Greatest,
}

/// Converts a closed, predicate-free, cycle-free formula into guarded
/// negation normal form.
///
/// Negated binders are dualized (negate the bindings, keep the variables).
/// Recursive references that do not cross a modality are then eliminated
/// using the fixpoint kind of their binder: on a single node a least fixpoint
/// cuts such a cycle to `F`, a greatest fixpoint to `T`. Once every recursion
/// is guarded and cycle-free, least and greatest fixpoints agree on finite
/// trees, so the result only uses the one binder the logic exposes.
pub fn to_nnf(f: &Formula) -> Result<Nnf, FormulaError> {
    validate(f)?;
    let mut kinds = HashMap::new();
    let pushed = push_negations(f, true, &mut Vec::new(), &mut kinds);
    Ok(guard(pushed, &kinds))
}

/// Formula whose models are exactly the non-models of `f`.
pub fn negate(f: &Formula) -> Result<Formula, FormulaError> {
    Ok(Formula::from(&to_nnf(&Formula::not(f.clone()))?))
}

fn push_negations(
    f: &Formula,
    positive: bool,
    env: &mut Vec<(u32, Var)>,
    kinds: &mut HashMap<u32, Fix>,
) -> Nnf {
    let atom = |a: Atom| if positive { Nnf::Atom(a) } else { Nnf::NotAtom(a) };
    match f {
        Formula::True => {
            if positive {
                Nnf::True
            } else {
                Nnf::False
            }
        }
        Formula::False => {
            if positive {
                Nnf::False
            } else {
                Nnf::True
            }
        }
        Formula::Element(n) => atom(Atom::Element(n.clone())),
        Formula::Attribute(n) => atom(Atom::Attribute(n.clone())),
        Formula::Context => atom(Atom::Context),
        Formula::And(a, b) | Formula::Or(a, b) => {
            let l = push_negations(a, positive, env, kinds);
            let r = push_negations(b, positive, env, kinds);
            if matches!(f, Formula::And(..)) == positive {
                Nnf::and(l, r)
            } else {
                Nnf::or(l, r)
            }
        }
        Formula::Implies(a, b) => push_negations(
            &Formula::Or(Box::new(Formula::Not(a.clone())), b.clone()),
            positive,
            env,
            kinds,
        ),
        Formula::Equiv(a, b) => push_negations(
            &Formula::and(
                Formula::Implies(a.clone(), b.clone()),
                Formula::Implies(b.clone(), a.clone()),
            ),
            positive,
            env,
            kinds,
        ),
        Formula::Not(a) => push_negations(a, !positive, env, kinds),
        Formula::Modal(p, a) => {
            if positive {
                Nnf::modal(*p, push_negations(a, true, env, kinds))
            } else if **a == Formula::True {
                Nnf::NotModalTrue(*p)
            } else {
                Nnf::or(
                    Nnf::modal(*p, push_negations(a, false, env, kinds)),
                    Nnf::NotModalTrue(*p),
                )
            }
        }
        Formula::Var(v) => {
            let nv = env
                .iter()
                .rev()
                .find(|(id, _)| *id == v.id)
                .map(|(_, nv)| nv.clone())
                .expect("closedness checked before normalization");
            Nnf::Var(nv)
        }
        Formula::Let(bs, body) => {
            let n = env.len();
            let kind = if positive { Fix::Least } else { Fix::Greatest };
            let fresh: Vec<Var> = bs.iter().map(|(v, _)| Var::fresh(v.name())).collect();
            for ((v, _), nv) in bs.iter().zip(&fresh) {
                env.push((v.id, nv.clone()));
                kinds.insert(nv.id, kind);
            }
            let nbs = bs
                .iter()
                .zip(fresh)
                .map(|((_, b), nv)| (nv, push_negations(b, positive, env, kinds)))
                .collect();
            let nbody = push_negations(body, positive, env, kinds);
            env.truncate(n);
            Nnf::Let(nbs, Box::new(nbody))
        }
        Formula::Call(..) => unreachable!("predicates checked before normalization"),
    }
}

/// Variables reachable from the root of `f` without crossing a modality.
/// Inner binders are assumed guarded already.
fn unguarded_free(f: &Nnf) -> HashSet<u32> {
    match f {
        Nnf::Var(v) => HashSet::from([v.id]),
        Nnf::And(a, b) | Nnf::Or(a, b) => {
            let mut s = unguarded_free(a);
            s.extend(unguarded_free(b));
            s
        }
        Nnf::Let(bs, body) => {
            let from_body = unguarded_free(body);
            let mut out = from_body.clone();
            for (v, b) in bs {
                if from_body.contains(&v.id) {
                    out.extend(unguarded_free(b));
                }
            }
            for (v, _) in bs {
                out.remove(&v.id);
            }
            out
        }
        _ => HashSet::new(),
    }
}

/// Exposes the top of a binder: its body with each variable replaced by its
/// fixpoint, or the selected binding when the body is just a variable.
fn unfold_nnf(bs: &[(Var, Nnf)], body: &Nnf) -> Nnf {
    let map: HashMap<u32, Nnf> = bs
        .iter()
        .map(|(v, _)| (v.id, Nnf::Let(bs.to_vec(), Box::new(Nnf::Var(v.clone())))))
        .collect();
    if let Nnf::Var(w) = body {
        if let Some((_, b)) = bs.iter().find(|(v, _)| v.id == w.id) {
            return b.substitute(&map);
        }
    }
    body.substitute(&map)
}

fn guard(f: Nnf, kinds: &HashMap<u32, Fix>) -> Nnf {
    match f {
        Nnf::And(a, b) => Nnf::and(guard(*a, kinds), guard(*b, kinds)),
        Nnf::Or(a, b) => Nnf::or(guard(*a, kinds), guard(*b, kinds)),
        Nnf::Modal(p, a) => Nnf::modal(p, guard(*a, kinds)),
        Nnf::Let(bs, body) => {
            let bs: Vec<(Var, Nnf)> = bs.into_iter().map(|(v, b)| (v, guard(b, kinds))).collect();
            let body = guard(*body, kinds);
            let kind = bs
                .first()
                .and_then(|(v, _)| kinds.get(&v.id).copied())
                .unwrap_or(Fix::Least);
            let block = Block { bindings: &bs, kind };
            let guarded = bs
                .iter()
                .map(|(v, b)| (v.clone(), block.eliminate(b, &mut vec![v.id])))
                .collect();
            Nnf::Let(guarded, Box::new(body))
        }
        other => other,
    }
}

struct Block<'a> {
    bindings: &'a [(Var, Nnf)],
    kind: Fix,
}

impl Block<'_> {
    fn binds(&self, id: u32) -> Option<&Nnf> {
        self.bindings
            .iter()
            .find(|(v, _)| v.id == id)
            .map(|(_, b)| b)
    }

    fn eliminate(&self, f: &Nnf, stack: &mut Vec<u32>) -> Nnf {
        match f {
            Nnf::Var(v) => match self.binds(v.id) {
                Some(_) if stack.contains(&v.id) => match self.kind {
                    Fix::Least => Nnf::False,
                    Fix::Greatest => Nnf::True,
                },
                Some(b) => {
                    stack.push(v.id);
                    let r = self.eliminate(b, stack);
                    stack.pop();
                    r
                }
                None => f.clone(),
            },
            Nnf::And(a, b) => Nnf::and(self.eliminate(a, stack), self.eliminate(b, stack)),
            Nnf::Or(a, b) => Nnf::or(self.eliminate(a, stack), self.eliminate(b, stack)),
            Nnf::Let(bs, body) => {
                let exposed = unguarded_free(f)
                    .iter()
                    .any(|id| self.binds(*id).is_some());
                if exposed {
                    self.eliminate(&unfold_nnf(bs, body), stack)
                } else {
                    f.clone()
                }
            }
            _ => f.clone(),
        }
    }
}

/// Renders a formula in the solver-trace syntax: fully parenthesized binary
/// connectives, `~(...)` negation, `(mu Xn.(...))` for single-variable
/// fixpoints and `(let_mu X1=..., ... in ...)` for the general binder.
/// Variables are numbered `X1, X2, ...` in post-order of their binders.
pub fn pretty_print(f: &Formula) -> String {
    let mut numbering = HashMap::new();
    let mut next = 1usize;
    number_binders(f, &mut numbering, &mut next);
    let mut out = String::new();
    render(f, &numbering, &mut out);
    out
}

fn number_binders(f: &Formula, numbering: &mut HashMap<u32, usize>, next: &mut usize) {
    match f {
        Formula::Or(a, b) | Formula::And(a, b) | Formula::Implies(a, b) | Formula::Equiv(a, b) => {
            number_binders(a, numbering, next);
            number_binders(b, numbering, next);
        }
        Formula::Not(a) | Formula::Modal(_, a) => number_binders(a, numbering, next),
        Formula::Let(bs, body) => {
            for (_, b) in bs {
                number_binders(b, numbering, next);
            }
            number_binders(body, numbering, next);
            for (v, _) in bs {
                numbering.insert(v.id, *next);
                *next += 1;
            }
        }
        Formula::Call(_, args) => {
            for a in args {
                if let Arg::Formula(g) = a {
                    number_binders(g, numbering, next);
                }
            }
        }
        _ => {}
    }
}

fn render(f: &Formula, numbering: &HashMap<u32, usize>, out: &mut String) {
    let binary = |a: &Formula, op: &str, b: &Formula, out: &mut String| {
        out.push('(');
        render(a, numbering, out);
        out.push(' ');
        out.push_str(op);
        out.push(' ');
        render(b, numbering, out);
        out.push(')');
    };
    match f {
        Formula::True => out.push('T'),
        Formula::False => out.push('F'),
        Formula::Element(n) => out.push_str(n),
        Formula::Attribute(n) => {
            out.push('@');
            out.push_str(n);
        }
        Formula::Context => out.push_str(CONTEXT_PROPOSITION),
        Formula::Or(a, b) => binary(a, "|", b, out),
        Formula::And(a, b) => binary(a, "&", b, out),
        Formula::Implies(a, b) => binary(a, "=>", b, out),
        Formula::Equiv(a, b) => binary(a, "<=>", b, out),
        Formula::Not(a) => {
            out.push_str("~(");
            render(a, numbering, out);
            out.push(')');
        }
        Formula::Modal(p, a) => {
            out.push('<');
            out.push_str(&p.to_string());
            out.push('>');
            render(a, numbering, out);
        }
        Formula::Var(v) => match numbering.get(&v.id) {
            Some(n) => {
                out.push('X');
                out.push_str(&n.to_string());
            }
            None => {
                out.push('$');
                out.push_str(v.name());
            }
        },
        Formula::Let(bs, body) => {
            let single = match (bs.as_slice(), body.as_ref()) {
                ([(v, b)], Formula::Var(w)) if v.id == w.id => Some((v, b)),
                _ => None,
            };
            if let Some((v, b)) = single {
                out.push_str("(mu X");
                out.push_str(&numbering[&v.id].to_string());
                out.push('.');
                render(b, numbering, out);
                out.push(')');
            } else {
                out.push_str("(let_mu ");
                for (i, (v, b)) in bs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push('X');
                    out.push_str(&numbering[&v.id].to_string());
                    out.push('=');
                    render(b, numbering, out);
                }
                out.push_str(" in ");
                render(body, numbering, out);
                out.push(')');
            }
        }
        Formula::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match a {
                    Arg::Formula(g) => render(g, numbering, out),
                    Arg::Str(s) => {
                        out.push('"');
                        for c in s.chars() {
                            if c == '"' || c == '\\' {
                                out.push('\\');
                            }
                            out.push(c);
                        }
                        out.push('"');
                    }
                }
            }
            out.push(')');
        }
    }
}

/// Structural equality up to renaming of bound variables.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    fn go(a: &Formula, b: &Formula, env: &mut Vec<(u32, u32)>) -> bool {
        match (a, b) {
            (Formula::Var(x), Formula::Var(y)) => {
                let bx = env.iter().rev().find(|(l, _)| *l == x.id);
                let by = env.iter().rev().find(|(_, r)| *r == y.id);
                match (bx, by) {
                    (Some(p), Some(q)) => p == q,
                    (None, None) => x.id == y.id,
                    _ => false,
                }
            }
            (Formula::Or(a1, a2), Formula::Or(b1, b2))
            | (Formula::And(a1, a2), Formula::And(b1, b2))
            | (Formula::Implies(a1, a2), Formula::Implies(b1, b2))
            | (Formula::Equiv(a1, a2), Formula::Equiv(b1, b2)) => {
                go(a1, b1, env) && go(a2, b2, env)
            }
            (Formula::Not(x), Formula::Not(y)) => go(x, y, env),
            (Formula::Modal(p, x), Formula::Modal(q, y)) => p == q && go(x, y, env),
            (Formula::Let(xs, xb), Formula::Let(ys, yb)) => {
                if xs.len() != ys.len() {
                    return false;
                }
                let n = env.len();
                env.extend(xs.iter().zip(ys).map(|((x, _), (y, _))| (x.id, y.id)));
                let ok = xs.iter().zip(ys).all(|((_, f), (_, g))| go(f, g, env)) && go(xb, yb, env);
                env.truncate(n);
                ok
            }
            (Formula::Call(n, xs), Formula::Call(m, ys)) => {
                n == m
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| match (x, y) {
                        (Arg::Formula(f), Arg::Formula(g)) => go(f, g, env),
                        (Arg::Str(s), Arg::Str(t)) => s == t,
                        _ => false,
                    })
            }
            _ => a == b,
        }
    }
    go(a, b, &mut Vec::new())
}
