//! Bottom-up fixpoint over node types.
//!
//! A node type is a consistent truth assignment over the Lean. Instead of
//! enumerating assignments, a candidate node is assembled from its label, its
//! attribute and context bits, the kind of edge leading to it (root, first
//! child, next sibling) and the *profiles* of its two successors. Everything
//! else in its assignment follows, except its assumptions about the node
//! above: the truth at the parent of every `f` with `<-p>f` in the Lean.
//!
//! Those assumptions are not enumerated up front. A candidate is evaluated in
//! three-valued logic with all of them unknown, and split only on the
//! assumptions that decide an observable result. The outcome is a signature
//! with a *partial* guess: the profile of the node (the truth of every `f`
//! with `<p>f` in the Lean, as seen from its parent) plus the assumptions it
//! actually relies on.
//!
//! A parent accepts a successor when the successor's profile is the one it
//! was built from and the successor's partial guess agrees with the parent's
//! own truth values. Signatures are proved bottom-up; a candidate whose
//! successors are not proved yet waits until they are. The search stops at
//! the first root signature in which the formula holds somewhere, or when no
//! new signature can be proved.

use std::collections::HashMap;
use std::time::Instant;

use crate::formula::{Atom, Program};

use super::closure::{Closure, Lean, NodeId, Op};

/// Assumptions about the node above, one bit per upward formula of a side.
type Guess = u64;

/// Upward formulas per side that a guess can hold.
pub const MAX_UPWARD: usize = Guess::BITS as usize;

type RoleOf = fn(usize, usize) -> Role;

/// Edge through which a node is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Root,
    /// Left successor: first child.
    First,
    /// Right successor: next sibling.
    Second,
}

impl Kind {
    fn side(self) -> Option<usize> {
        match self {
            Kind::Root => None,
            Kind::First => Some(0),
            Kind::Second => Some(1),
        }
    }
}

pub type SigId = usize;

/// How a node was built: enough to rebuild a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    /// Element atom index, or `None` for a label outside the formula.
    pub label: Option<usize>,
    /// Bits over the non-element atoms (see [`Fixpoint::prop_atoms`]).
    pub props: u64,
    pub first: Option<SigId>,
    pub second: Option<SigId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// New signatures were proved; another iteration is needed.
    Progress,
    /// A root signature satisfying the formula was proved.
    Satisfiable,
    /// Nothing new can be proved.
    Saturated,
    /// The wall-clock budget ran out.
    TimedOut,
}

/// Modal member `<p>f` seen from a node: downward members read the profile
/// of successor `side`, upward ones are assumptions about the parent.
#[derive(Debug, Clone, Copy)]
enum Role {
    Down(usize, usize),
    Up(usize, usize),
}

type Bits = Box<[u64]>;

/// Root signatures carry only the truth of the wrapped formula; successor
/// signatures carry side, profile, guessed values and which guesses count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum SigKey {
    Root(bool),
    Inner { side: usize, profile: Bits, guess: Guess, mask: Guess },
}

/// A successor a parent needs: side, profile and the parent's truth values
/// of the upward bodies.
type ReqKey = (usize, Bits, Guess);
type ReqId = usize;

struct Rule {
    head: SigId,
    reqs: [Option<ReqId>; 2],
    label: Option<usize>,
    props: u64,
}

struct Req {
    key: ReqKey,
    resolved: Option<SigId>,
    /// Rules blocked on this requirement.
    waiting: Vec<usize>,
}

fn pack(bits: impl Iterator<Item = bool>, n: usize) -> Bits {
    let mut out = vec![0u64; n.div_ceil(64).max(1)];
    for (i, b) in bits.enumerate() {
        if b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out.into_boxed_slice()
}

fn bit(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

/// Three-valued truth: `None` is unknown.
type T3 = Option<bool>;

fn and3(a: T3, b: T3) -> T3 {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: T3, b: T3) -> T3 {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// Candidate attributes that do not depend on the successors.
struct Base {
    label: Option<usize>,
    props: u64,
    kind: Kind,
}

pub struct Fixpoint<'a> {
    closure: &'a Closure,
    lean: &'a Lean,
    roles: Vec<Option<Role>>,
    down: [Vec<NodeId>; 2],
    up: [Vec<NodeId>; 2],
    /// Per side and closure node: the upward assumptions its value can
    /// depend on.
    cone: [Vec<Guess>; 2],
    /// Per side and assumption: the closure nodes depending on it, in
    /// evaluation order.
    affected: [Vec<Vec<NodeId>>; 2],
    /// Non-element atoms: the context mark first (when present), then
    /// attributes.
    prop_atoms: Vec<usize>,
    /// Bit position of each atom in `props`, for non-element atoms.
    prop_bit: Vec<Option<usize>>,
    bases: Vec<Base>,

    sigs: HashMap<SigKey, SigId>,
    keys: Vec<SigKey>,
    proved: Vec<bool>,
    records: Vec<Option<Record>>,
    order: Vec<SigId>,
    /// Proved successor signatures by side and profile.
    by_profile: HashMap<(usize, Bits), Vec<SigId>>,
    reqs: Vec<Req>,
    req_index: HashMap<ReqKey, ReqId>,
    /// Unresolved requirements by side and profile.
    pending: HashMap<(usize, Bits), Vec<ReqId>>,
    rules: Vec<Option<Rule>>,
    /// Distinct profiles of proved first/second successors, in proof order.
    profiles: [Vec<Bits>; 2],
    /// Profiles already combined in earlier iterations.
    seen: [usize; 2],
    sat_root: Option<SigId>,
    iterations: usize,
    candidates: u64,
    deadline: Option<Instant>,
    /// One valuation buffer per split depth.
    buffers: Vec<Vec<T3>>,
}

impl<'a> Fixpoint<'a> {
    pub fn new(closure: &'a Closure, lean: &'a Lean, deadline: Option<Instant>) -> Fixpoint<'a> {
        let mut roles = vec![None; lean.modals.len()];
        let mut down: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
        let mut up: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
        for (m, &(p, body)) in lean.modals.iter().enumerate().skip(4) {
            let (list, role): (&mut Vec<NodeId>, RoleOf) = match p {
                Program::FirstChild => (&mut down[0], Role::Down),
                Program::NextSibling => (&mut down[1], Role::Down),
                Program::Parent => (&mut up[0], Role::Up),
                Program::PrevSibling => (&mut up[1], Role::Up),
            };
            let side = match p {
                Program::FirstChild | Program::Parent => 0,
                Program::NextSibling | Program::PrevSibling => 1,
            };
            roles[m] = Some(role(side, list.len()));
            list.push(body);
        }
        assert!(up.iter().all(|u| u.len() <= MAX_UPWARD), "too many upward formulas");

        let n = lean.ops.len();
        let mut cone = [vec![0; n], vec![0; n]];
        for &x in &closure.order {
            for (side, cone) in cone.iter_mut().enumerate() {
                cone[x] = match lean.ops[x] {
                    Op::And(a, b) | Op::Or(a, b) => cone[a] | cone[b],
                    Op::Alias(a) => cone[a],
                    Op::Lean(m) | Op::NotLean(m) => match roles[m] {
                        Some(Role::Up(s, j)) if s == side => 1 << j,
                        _ => 0,
                    },
                    _ => 0,
                };
            }
        }

        let mut affected: [Vec<Vec<NodeId>>; 2] = [vec![Vec::new(); up[0].len()], vec![Vec::new(); up[1].len()]];
        for &x in &closure.order {
            for side in 0..2 {
                for (j, list) in affected[side].iter_mut().enumerate() {
                    if cone[side][x] >> j & 1 == 1 {
                        list.push(x);
                    }
                }
            }
        }

        let mut elements = Vec::new();
        let mut prop_atoms = Vec::new();
        for (i, a) in lean.atoms.iter().enumerate() {
            match a {
                Atom::Element(_) => elements.push(i),
                Atom::Context => prop_atoms.insert(0, i),
                Atom::Attribute(_) => prop_atoms.push(i),
            }
        }
        assert!(prop_atoms.len() < 32, "too many attribute propositions");
        let mut prop_bit = vec![None; lean.atoms.len()];
        for (k, &a) in prop_atoms.iter().enumerate() {
            prop_bit[a] = Some(k);
        }

        let mut bases = Vec::new();
        let labels: Vec<Option<usize>> = elements.iter().map(|&e| Some(e)).chain([None]).collect();
        for &label in &labels {
            for props in 0..(1u64 << prop_atoms.len()) {
                for kind in [Kind::Root, Kind::First, Kind::Second] {
                    bases.push(Base { label, props, kind });
                }
            }
        }

        Fixpoint {
            closure,
            lean,
            roles,
            down,
            up,
            cone,
            affected,
            prop_atoms,
            prop_bit,
            bases,
            sigs: HashMap::new(),
            keys: Vec::new(),
            proved: Vec::new(),
            records: Vec::new(),
            order: Vec::new(),
            by_profile: HashMap::new(),
            reqs: Vec::new(),
            req_index: HashMap::new(),
            pending: HashMap::new(),
            rules: Vec::new(),
            profiles: [Vec::new(), Vec::new()],
            seen: [0, 0],
            sat_root: None,
            iterations: 0,
            candidates: 0,
            deadline,
            buffers: vec![vec![None; n]],
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Number of proved signatures.
    pub fn proved_count(&self) -> usize {
        self.order.len()
    }

    /// Number of candidate evaluations.
    pub fn candidates(&self) -> u64 {
        self.candidates
    }

    pub fn sat_root(&self) -> Option<SigId> {
        self.sat_root
    }

    pub fn record(&self, s: SigId) -> Option<&Record> {
        self.records[s].as_ref()
    }

    pub fn prop_atoms(&self) -> &[usize] {
        &self.prop_atoms
    }

    pub fn lean(&self) -> &Lean {
        self.lean
    }

    fn intern(&mut self, key: SigKey) -> SigId {
        if let Some(&id) = self.sigs.get(&key) {
            return id;
        }
        let id = self.keys.len();
        self.keys.push(key.clone());
        self.sigs.insert(key, id);
        self.proved.push(false);
        self.records.push(None);
        id
    }

    fn compatible(&self, s: SigId, g: Guess) -> bool {
        match &self.keys[s] {
            SigKey::Inner { guess, mask, .. } => (g ^ guess) & mask == 0,
            SigKey::Root(_) => false,
        }
    }

    /// Interns a requirement, resolving it at once if a proved signature
    /// already satisfies it.
    fn require(&mut self, key: ReqKey) -> ReqId {
        if let Some(&id) = self.req_index.get(&key) {
            return id;
        }
        let id = self.reqs.len();
        let pk = (key.0, key.1.clone());
        let resolved = self
            .by_profile
            .get(&pk)
            .and_then(|v| v.iter().copied().find(|&s| self.compatible(s, key.2)));
        if resolved.is_none() {
            self.pending.entry(pk).or_default().push(id);
        }
        self.req_index.insert(key.clone(), id);
        self.reqs.push(Req {
            key,
            resolved,
            waiting: Vec::new(),
        });
        id
    }

    fn unresolved(&self, rule: &Rule) -> Option<ReqId> {
        rule.reqs
            .iter()
            .flatten()
            .copied()
            .find(|&r| self.reqs[r].resolved.is_none())
    }

    fn fire(&self, rule: &Rule, work: &mut Vec<(SigId, Record)>) {
        let get = |r: Option<ReqId>| r.map(|r| self.reqs[r].resolved.expect("requirement resolved"));
        work.push((
            rule.head,
            Record {
                label: rule.label,
                props: rule.props,
                first: get(rule.reqs[0]),
                second: get(rule.reqs[1]),
            },
        ));
    }

    fn add_rule(&mut self, rule: Rule) {
        match self.unresolved(&rule) {
            Some(r) => {
                self.reqs[r].waiting.push(self.rules.len());
                self.rules.push(Some(rule));
            }
            None => {
                let mut work = Vec::new();
                self.fire(&rule, &mut work);
                self.prove(work);
            }
        }
    }

    /// Proves the queued signatures and everything waiting on them.
    fn prove(&mut self, mut work: Vec<(SigId, Record)>) {
        while let Some((s, r)) = work.pop() {
            if self.proved[s] {
                continue;
            }
            self.proved[s] = true;
            self.records[s] = Some(r);
            self.order.push(s);
            let (side, profile, guess, mask) = match &self.keys[s] {
                SigKey::Root(sat) => {
                    if *sat && self.sat_root.is_none() {
                        self.sat_root = Some(s);
                    }
                    continue;
                }
                SigKey::Inner {
                    side,
                    profile,
                    guess,
                    mask,
                } => (*side, profile.clone(), *guess, *mask),
            };
            let pk = (side, profile.clone());
            let known = self.by_profile.entry(pk.clone()).or_default();
            if known.is_empty() {
                self.profiles[side].push(profile);
            }
            known.push(s);

            let Some(waiting) = self.pending.get_mut(&pk) else {
                continue;
            };
            let reqs = &self.reqs;
            let mut woken = Vec::new();
            waiting.retain(|&q| {
                let hit = (reqs[q].key.2 ^ guess) & mask == 0;
                if hit {
                    woken.push(q);
                }
                !hit
            });
            for q in woken {
                self.reqs[q].resolved = Some(s);
                for rule_id in std::mem::take(&mut self.reqs[q].waiting) {
                    let rule = self.rules[rule_id].take().expect("a rule waits on one requirement");
                    match self.unresolved(&rule) {
                        Some(r) => {
                            self.reqs[r].waiting.push(rule_id);
                            self.rules[rule_id] = Some(rule);
                        }
                        None => self.fire(&rule, &mut work),
                    }
                }
            }
        }
    }

    /// Runs one iteration: every candidate using at least one successor
    /// profile that was not available before.
    pub fn step(&mut self) -> StepOutcome {
        if self.sat_root.is_some() {
            return StepOutcome::Satisfiable;
        }
        let first_round = self.iterations == 0;
        self.iterations += 1;
        let old = self.seen;
        let now = [self.profiles[0].len(), self.profiles[1].len()];
        self.seen = now;
        if !first_round && old == now {
            return StepOutcome::Saturated;
        }
        let opts = |n: usize| std::iter::once(None).chain((0..n).map(Some));
        let mut combos = Vec::new();
        for c1 in opts(now[0]) {
            for c2 in opts(now[1]) {
                let fresh = |c: Option<usize>, o: usize| c.is_some_and(|i| i >= o);
                if first_round || fresh(c1, old[0]) || fresh(c2, old[1]) {
                    combos.push((c1, c2));
                }
            }
        }
        for b in 0..self.bases.len() {
            for &(c1, c2) in &combos {
                if !self.candidate(b, c1, c2) {
                    return StepOutcome::TimedOut;
                }
                if self.sat_root.is_some() {
                    return StepOutcome::Satisfiable;
                }
            }
        }
        StepOutcome::Progress
    }

    fn candidate(&mut self, b: usize, c1: Option<usize>, c2: Option<usize>) -> bool {
        let base = &self.bases[b];
        let cand = Candidate {
            label: base.label,
            props: base.props,
            own: base.kind.side(),
            kind: base.kind,
            f: [c1, c2],
        };
        let mut val = std::mem::take(&mut self.buffers[0]);
        for &n in &self.closure.order {
            val[n] = self.eval_node(&cand, n, &val, 0, 0);
        }
        let ok = self.settle(&cand, &val, 0, 0, 1);
        self.buffers[0] = val;
        ok
    }

    fn eval_node(&self, cand: &Candidate, n: NodeId, val: &[T3], guess: Guess, mask: Guess) -> T3 {
        let atom = |i: usize| -> bool {
            match self.prop_bit[i] {
                Some(k) => cand.props >> k & 1 == 1,
                None => cand.label == Some(i),
            }
        };
        let profile = |s: usize| cand.f[s].map(|i| &self.profiles[s][i]);
        let modal = |m: usize| -> T3 {
            match m {
                0 => Some(cand.f[0].is_some()),
                1 => Some(cand.f[1].is_some()),
                2 => Some(cand.kind == Kind::First),
                3 => Some(cand.kind == Kind::Second),
                _ => match self.roles[m] {
                    Some(Role::Down(s, j)) => Some(profile(s).is_some_and(|p| bit(p, j))),
                    Some(Role::Up(s, j)) if cand.own == Some(s) => {
                        (mask >> j & 1 == 1).then_some(guess >> j & 1 == 1)
                    }
                    _ => Some(false),
                },
            }
        };
        match self.lean.ops[n] {
            Op::True => Some(true),
            Op::False => Some(false),
            Op::Atom(i) => Some(atom(i)),
            Op::NotAtom(i) => Some(!atom(i)),
            Op::And(a, b) => and3(val[a], val[b]),
            Op::Or(a, b) => or3(val[a], val[b]),
            Op::Lean(m) => modal(m),
            Op::NotLean(m) => modal(m).map(|v| !v),
            Op::Alias(a) => val[a],
        }
    }

    /// Emits the candidate once its observable results (its own profile, or
    /// satisfaction at the root, and what it demands from its successors)
    /// are decided, splitting on one more upward assumption otherwise.
    /// Returns false when the deadline has passed.
    fn settle(&mut self, cand: &Candidate, val: &[T3], guess: Guess, mask: Guess, depth: usize) -> bool {
        self.candidates += 1;
        if self.candidates.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return false;
        }
        if let Some(s) = cand.own {
            let cone = &self.cone[s];
            let demanded = (0..2).filter(|&t| cand.f[t].is_some()).flat_map(|t| &self.up[t]);
            // split on the open assumption shared by most undecided results
            let mut votes = [0u16; 32];
            let mut open: Guess = 0;
            for &x in self.down[s].iter().chain(demanded) {
                if val[x].is_none() {
                    let mut c = cone[x] & !mask;
                    open |= c;
                    while c != 0 {
                        votes[c.trailing_zeros() as usize] += 1;
                        c &= c - 1;
                    }
                }
            }
            if open != 0 {
                let j = (0..32).max_by_key(|&j| (votes[j], std::cmp::Reverse(j))).unwrap_or(0);
                if self.buffers.len() <= depth {
                    self.buffers.push(val.to_vec());
                }
                let mut next = std::mem::take(&mut self.buffers[depth]);
                for v in [false, true] {
                    let (g, m) = (guess | (v as Guess) << j, mask | 1 << j);
                    next.copy_from_slice(val);
                    for &n in &self.affected[s][j] {
                        next[n] = self.eval_node(cand, n, &next, g, m);
                    }
                    let ok = self.settle(cand, &next, g, m, depth + 1);
                    if !ok || self.sat_root.is_some() {
                        self.buffers[depth] = next;
                        return ok;
                    }
                }
                self.buffers[depth] = next;
                return true;
            }
        }
        let known = |x: NodeId| val[x].expect("observable results are decided");
        let head_key = match cand.own {
            None => SigKey::Root(known(self.closure.root)),
            Some(s) => SigKey::Inner {
                side: s,
                profile: pack(self.down[s].iter().map(|&x| known(x)), self.down[s].len()),
                guess,
                mask,
            },
        };
        let head = self.intern(head_key);
        if self.proved[head] {
            return true;
        }
        let mut req_keys: [Option<ReqKey>; 2] = [None, None];
        for (s, c) in cand.f.iter().enumerate() {
            if let Some(c) = c {
                let g = self.up[s]
                    .iter()
                    .enumerate()
                    .fold(0, |acc: Guess, (j, &x)| acc | (known(x) as Guess) << j);
                req_keys[s] = Some((s, self.profiles[s][*c].clone(), g));
            }
        }
        let reqs = req_keys.map(|k| k.map(|k| self.require(k)));
        self.add_rule(Rule {
            head,
            reqs,
            label: cand.label,
            props: cand.props,
        });
        true
    }
}

/// One candidate node before its upward assumptions are fixed.
struct Candidate {
    label: Option<usize>,
    props: u64,
    kind: Kind,
    own: Option<usize>,
    /// Profile indices of the successors.
    f: [Option<usize>; 2],
}
