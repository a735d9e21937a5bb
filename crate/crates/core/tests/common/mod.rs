//! Shared oracles and generators for the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use treesat::formula::{validate, Formula, Program, Var};
use treesat::solver::Evaluator;
use treesat::tree::{decode, enumerate_binary, BinaryTree, FlatTree, UnrankedTree};

pub const ALPHABET: [&str; 3] = ["a", "b", "c"];

/// Program sets a recursion may use without mixing a program and its
/// converse.
const DIRECTIONS: [[Program; 2]; 4] = [
    [Program::FirstChild, Program::NextSibling],
    [Program::Parent, Program::PrevSibling],
    [Program::FirstChild, Program::PrevSibling],
    [Program::Parent, Program::NextSibling],
];

struct Bound {
    var: Var,
    allowed: [Program; 2],
}

/// Random closed, cycle-free formulas over `ALPHABET` with at most
/// `max_binders` recursion binders and nesting depth at most `depth`.
pub struct FormulaGen {
    rng: StdRng,
    binders_left: usize,
    max_binders: usize,
    depth: usize,
}

impl FormulaGen {
    pub fn new(seed: u64, depth: usize, max_binders: usize) -> FormulaGen {
        FormulaGen {
            rng: StdRng::seed_from_u64(seed),
            binders_left: max_binders,
            max_binders,
            depth,
        }
    }

    pub fn next(&mut self) -> Formula {
        loop {
            self.binders_left = self.max_binders;
            let d = self.depth;
            let f = self.gen(d, &mut Vec::new());
            if validate(&f).is_ok() {
                return f;
            }
        }
    }

    fn program(&mut self) -> Program {
        Program::ALL[self.rng.gen_range(0..4)]
    }

    fn leaf(&mut self, env: &[Bound]) -> Formula {
        let k = self.rng.gen_range(0..10);
        if !env.is_empty() && k < 4 {
            let b = &env[self.rng.gen_range(0..env.len())];
            return Formula::Var(b.var.clone());
        }
        match k {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::element(ALPHABET[self.rng.gen_range(0..ALPHABET.len())]),
        }
    }

    fn gen(&mut self, depth: usize, env: &mut Vec<Bound>) -> Formula {
        if depth == 0 {
            return self.leaf(env);
        }
        match self.rng.gen_range(0..12) {
            0 | 1 => self.leaf(env),
            2 | 3 => Formula::and(self.gen(depth - 1, env), self.gen(depth - 1, env)),
            4 | 5 => Formula::or(self.gen(depth - 1, env), self.gen(depth - 1, env)),
            // variables never occur under a negation
            6 => Formula::not(self.gen(depth - 1, &mut Vec::new())),
            7 => Formula::implies(self.gen(depth - 1, &mut Vec::new()), self.gen(depth - 1, env)),
            8 | 9 => {
                let p = self.program();
                // a variable stays visible only through programs its
                // recursion allows
                let (keep, hide): (Vec<Bound>, Vec<Bound>) =
                    env.drain(..).partition(|b| b.allowed.contains(&p));
                let mut inner = keep;
                let body = self.gen(depth - 1, &mut inner);
                env.extend(inner);
                env.extend(hide);
                Formula::modal(p, body)
            }
            _ if self.binders_left > 0 => {
                self.binders_left -= 1;
                let allowed = DIRECTIONS[self.rng.gen_range(0..DIRECTIONS.len())];
                let n = if self.rng.gen_bool(0.25) { 2 } else { 1 };
                let vars: Vec<Var> = (0..n).map(|i| Var::fresh(["X", "Y"][i])).collect();
                // bindings only see their own block
                let mut block: Vec<Bound> = vars
                    .iter()
                    .map(|v| Bound {
                        var: v.clone(),
                        allowed,
                    })
                    .collect();
                let bindings: Vec<(Var, Formula)> = vars
                    .iter()
                    .map(|v| {
                        let p = allowed[self.rng.gen_range(0..2)];
                        let base = self.gen(depth - 1, &mut Vec::new());
                        let rec = self.gen(depth - 1, &mut block);
                        (v.clone(), Formula::or(base, Formula::modal(p, rec)))
                    })
                    .collect();
                let body = if self.rng.gen_bool(0.7) {
                    Formula::Var(vars[0].clone())
                } else {
                    env.extend(block);
                    let b = self.gen(depth - 1, env);
                    env.truncate(env.len() - n);
                    b
                };
                Formula::Let(bindings, Box::new(body))
            }
            _ => self.leaf(env),
        }
    }
}

/// Labels for exhaustive enumeration: the formula's element names, padded
/// with one unused name when there is room, at most three.
pub fn enumeration_labels(f: &Formula) -> Vec<String> {
    let mut labels: Vec<String> = f.element_names();
    labels.sort();
    labels.dedup();
    if labels.len() < 3 {
        labels.push("z".to_string());
    }
    labels.truncate(3);
    labels
}

/// Every binary tree with 1 to `max_nodes` nodes over `labels`, flattened.
pub fn all_binary(max_nodes: usize, labels: &[String]) -> Vec<(BinaryTree, FlatTree)> {
    (1..=max_nodes)
        .flat_map(|n| enumerate_binary(n, labels))
        .map(|t| {
            let flat = t.flatten();
            (t, flat)
        })
        .collect()
}

/// Every unranked document (single root) with 1 to `max_nodes` nodes.
pub fn all_documents(max_nodes: usize, labels: &[String]) -> Vec<UnrankedTree> {
    (1..=max_nodes)
        .flat_map(|n| enumerate_binary(n, labels))
        .filter(|t| matches!(t, BinaryTree::Node(n) if n.second.is_epsilon()))
        .map(|t| decode(&t).remove(0))
        .collect()
}

/// First enumerated tree where `f` holds at some node.
pub fn brute_force_model<'t>(f: &Formula, trees: &'t [(BinaryTree, FlatTree)]) -> Option<&'t BinaryTree> {
    let ev = Evaluator::new(f).expect("closed cycle-free formula");
    trees.iter().find(|(_, flat)| ev.holds_somewhere(flat)).map(|(t, _)| t)
}

/// Random unranked document with at most `max_nodes` nodes, attributes and
/// marks included.
pub fn random_document(rng: &mut StdRng, max_nodes: usize) -> UnrankedTree {
    let budget = rng.gen_range(1..=max_nodes);
    let mut left = budget - 1;
    random_node(rng, &mut left)
}

fn random_node(rng: &mut StdRng, left: &mut usize) -> UnrankedTree {
    let label = ["a", "b", "c", "d"][rng.gen_range(0..4)];
    let attrs: BTreeSet<String> = ["x", "y"]
        .iter()
        .filter(|_| rng.gen_bool(0.3))
        .map(|s| s.to_string())
        .collect();
    let mut t = UnrankedTree::new(label).with_attributes(attrs);
    t.marks.context = rng.gen_bool(0.2);
    t.marks.target = rng.gen_bool(0.2);
    while *left > 0 && rng.gen_bool(0.6) {
        *left -= 1;
        let c = random_node(rng, left);
        t.children.push(c);
    }
    t
}

/// Random hedge (possibly empty) with at most `max_nodes` nodes in total.
pub fn random_hedge(rng: &mut StdRng, max_nodes: usize) -> Vec<UnrankedTree> {
    let mut left = rng.gen_range(0..=max_nodes);
    let mut out = Vec::new();
    while left > 0 {
        left -= 1;
        out.push(random_node(rng, &mut left));
    }
    out
}

/// One query per axis, plus nested qualifiers, unions, intersections,
/// absolute paths and the exact positional rewritings. `position()=k` for
/// k > 1 is left out: its rewriting only demands k-1 earlier siblings.
pub const XPATH_CORPUS: &[&str] = &[
    "self::a",
    "child::b",
    "parent::a",
    "descendant::c",
    "ancestor::b",
    "descendant-or-self::a",
    "ancestor-or-self::d",
    "following-sibling::b",
    "preceding-sibling::c",
    "following::a",
    "preceding::d",
    "a/b[following-sibling::c/parent::d]",
    "descendant::a[ancestor::b and not(child::c)]",
    "*[preceding-sibling::a or following-sibling::b]",
    "descendant::*[parent::a]/following-sibling::*",
    "child::a | descendant::b",
    "descendant::a intersect ancestor-or-self::*/descendant::*",
    "/a/b",
    "//c[parent::b]",
    "ancestor::*/following::b[not(descendant::c)]",
    "b[position()=1]",
    "b[position()=last()]",
    "a[count(child::b)=0]",
];

/// Small DTDs with their start symbols.
pub const DTD_CORPUS: &[(&str, &str)] = &[
    ("<!ELEMENT a EMPTY>", "a"),
    ("<!ELEMENT r ((a|b)*)>\n<!ELEMENT a EMPTY>\n<!ELEMENT b EMPTY>", "r"),
    ("<!ELEMENT r (a, b?, c+)>\n<!ELEMENT a EMPTY>\n<!ELEMENT b (c*)>\n<!ELEMENT c EMPTY>", "r"),
    ("<!ELEMENT a (b | (c, a))>\n<!ELEMENT b EMPTY>\n<!ELEMENT c (b?)>", "a"),
    ("<!ELEMENT a ((a, b)*, c?)>\n<!ELEMENT b ANY>\n<!ELEMENT c (#PCDATA)>", "a"),
    ("<!ELEMENT r (#PCDATA | a | b)*>\n<!ELEMENT a (b)>\n<!ELEMENT b EMPTY>", "r"),
];

/// Compares compiled-formula selection with the reference evaluator on every
/// document, with the context mark on the root. Returns the first mismatch.
pub fn xpath_mismatch(query: &str, docs: &[UnrankedTree]) -> Option<String> {
    use treesat::tree::encode;
    use treesat::xpath::{compile_query, parse_xpath, reference};
    let q = parse_xpath(query).unwrap_or_else(|e| panic!("{query}: {e}"));
    let f = compile_query(&q, &Formula::Context);
    let ev = Evaluator::new(&f).expect("compiled queries are closed and cycle-free");
    for d in docs {
        let mut d = d.clone();
        d.marks.context = true;
        let hedge = [d];
        let expected = reference::evaluate(&q, &hedge);
        let got: BTreeSet<usize> = ev.eval_tree(&encode(&hedge)).ones().collect();
        if expected != got {
            return Some(format!(
                "{query} on {}: reference {expected:?}, formula {got:?}",
                encode(&hedge).term_print()
            ));
        }
    }
    None
}

/// Checks `oracle(negate(f)) = not oracle(f)` at every node of every tree.
pub fn duality_mismatch(f: &Formula, trees: &[(BinaryTree, FlatTree)]) -> Option<String> {
    use treesat::formula::{negate, pretty_print};
    let g = negate(f).expect("valid formula");
    let (ef, eg) = (Evaluator::new(f).unwrap(), Evaluator::new(&g).unwrap());
    for (t, flat) in trees {
        let mut pos = ef.eval(flat);
        let neg = eg.eval(flat);
        pos.toggle_range(..);
        if pos != neg {
            return Some(format!("{} on {}", pretty_print(f), t.term_print()));
        }
    }
    None
}

/// Outcome of comparing the solver with exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverCheck {
    /// SAT with a witness that model-checks.
    Sat,
    /// UNSAT and no enumerated tree is a model.
    Unsat,
    Mismatch(String),
}

/// Runs the solver on `f` and checks its verdict against `universe`: a SAT
/// witness must model-check, an UNSAT verdict must have no enumerated model.
pub fn solver_check(f: &Formula, universe: &[(BinaryTree, FlatTree)]) -> SolverCheck {
    use treesat::formula::pretty_print;
    use treesat::solver::{solve, SolverOptions, Verdict};
    let r = match solve(f, &SolverOptions::default()) {
        Ok(r) => r,
        Err(e) => return SolverCheck::Mismatch(format!("{}: {e}", pretty_print(f))),
    };
    match r.verdict {
        Verdict::Satisfiable => {
            let w = r.witness.expect("SAT carries a witness");
            if Evaluator::new(f).unwrap().holds_somewhere(&w.flatten()) {
                SolverCheck::Sat
            } else {
                SolverCheck::Mismatch(format!("{}: witness {} is not a model", pretty_print(f), w.term_print()))
            }
        }
        Verdict::Unsatisfiable => match brute_force_model(f, universe) {
            None => SolverCheck::Unsat,
            Some(t) => SolverCheck::Mismatch(format!("{}: UNSAT but {} is a model", pretty_print(f), t.term_print())),
        },
        Verdict::Timeout => SolverCheck::Mismatch(format!("{}: timeout", pretty_print(f))),
    }
}
