//! Satisfiability checking.
//!
//! [`solve`] decides whether a closed, cycle-free formula holds at some node
//! of some finite binary tree, and builds such a tree when it does. The
//! [`oracle`] module evaluates formulas directly on given trees and is used to
//! check the solver.

pub mod closure;
pub mod fixpoint;
pub mod oracle;
pub mod witness;

use std::time::{Duration, Instant};

use thiserror::Error;

pub use closure::{Closure, Lean, NodeId};
pub use fixpoint::{Fixpoint, StepOutcome, MAX_UPWARD};
pub use oracle::{model_check, satisfying_nodes, Evaluator};

use crate::formula::{Formula, FormulaError, Program};
use crate::tree::BinaryTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("{count} upward modal formulas on one side; at most {max} are supported")]
    TooManyUpwardFormulas { count: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfiable,
    Unsatisfiable,
    /// The time budget ran out before a verdict was reached.
    Timeout,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Wall-clock budget; `None` means unbounded.
    pub timeout: Option<Duration>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            timeout: Some(Duration::from_secs(60)),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub closure_size: usize,
    pub lean_size: usize,
    pub eventualities: usize,
    pub symbols: usize,
    pub iterations: usize,
    /// Node signatures proved by the fixpoint.
    pub proved_types: usize,
    /// Candidate nodes evaluated.
    pub candidates: u64,
    pub closure_time: Duration,
    pub lean_time: Duration,
    pub fixpoint_time: Duration,
    pub witness_time: Duration,
    pub total_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub verdict: Verdict,
    /// Present exactly when the verdict is satisfiable.
    pub witness: Option<BinaryTree>,
    pub stats: SolverStats,
}

/// Progress notifications, in the order they happen.
#[derive(Debug, Clone, Copy)]
pub enum Progress<'a> {
    ClosureStarted,
    ClosureDone(Duration),
    LeanDone { time: Duration, lean: &'a Lean },
    FixpointStarted,
    Iteration(usize),
    FixpointDone(Duration),
}

/// Decides satisfiability of `f`.
pub fn solve(f: &Formula, opts: &SolverOptions) -> Result<SolverResult, SolveError> {
    solve_traced(f, opts, &mut |_| {})
}

/// Like [`solve`], reporting each phase to `progress`.
pub fn solve_traced(
    f: &Formula,
    opts: &SolverOptions,
    progress: &mut dyn FnMut(Progress<'_>),
) -> Result<SolverResult, SolveError> {
    let start = Instant::now();
    let deadline = opts.timeout.map(|t| start + t);
    let mut stats = SolverStats::default();

    progress(Progress::ClosureStarted);
    let closure = Closure::new(f)?;
    stats.closure_time = start.elapsed();
    stats.closure_size = closure.len();
    progress(Progress::ClosureDone(stats.closure_time));

    let t = Instant::now();
    let lean = closure.lean();
    stats.lean_time = t.elapsed();
    stats.lean_size = lean.size();
    stats.eventualities = lean.eventualities();
    stats.symbols = lean.symbols();
    progress(Progress::LeanDone {
        time: stats.lean_time,
        lean: &lean,
    });

    for side in [Program::Parent, Program::PrevSibling] {
        // the first four members are the `<p>T` of every program
        let count = lean.modals.iter().skip(4).filter(|(p, _)| *p == side).count();
        if count > MAX_UPWARD {
            return Err(SolveError::TooManyUpwardFormulas { count, max: MAX_UPWARD });
        }
    }

    let t = Instant::now();
    progress(Progress::FixpointStarted);
    let mut fp = Fixpoint::new(&closure, &lean, deadline);
    let outcome = loop {
        let o = fp.step();
        progress(Progress::Iteration(fp.iterations()));
        if o != StepOutcome::Progress {
            break o;
        }
    };
    stats.fixpoint_time = t.elapsed();
    stats.iterations = fp.iterations();
    stats.proved_types = fp.proved_count();
    stats.candidates = fp.candidates();
    progress(Progress::FixpointDone(stats.fixpoint_time));

    let t = Instant::now();
    let (verdict, witness) = match outcome {
        StepOutcome::Satisfiable => (Verdict::Satisfiable, witness::extract(&fp, f)),
        StepOutcome::Saturated => (Verdict::Unsatisfiable, None),
        StepOutcome::TimedOut => (Verdict::Timeout, None),
        StepOutcome::Progress => unreachable!("loop exits on a final outcome"),
    };
    stats.witness_time = t.elapsed();
    stats.total_time = start.elapsed();
    Ok(SolverResult {
        verdict,
        witness,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn run(s: &str) -> SolverResult {
        solve(&parse_formula(s).unwrap(), &SolverOptions::default()).unwrap()
    }

    fn check(s: &str, sat: bool) {
        let f = parse_formula(s).unwrap();
        let r = solve(&f, &SolverOptions::default()).unwrap();
        if sat {
            assert_eq!(r.verdict, Verdict::Satisfiable, "{s}");
            let w = r.witness.expect("witness");
            let nodes = satisfying_nodes(&f, &w).unwrap();
            assert!(!nodes.is_empty(), "{s}: witness {} fails", w.term_print());
        } else {
            assert_eq!(r.verdict, Verdict::Unsatisfiable, "{s}");
            assert!(r.witness.is_none());
        }
    }

    #[test]
    fn trivial_cases() {
        let r = run("T");
        assert_eq!(r.verdict, Verdict::Satisfiable);
        assert_eq!(r.witness.unwrap().size(), 1);
        check("a & ~a", false);
        check("F", false);
        let r = run("a");
        assert_eq!(r.witness.unwrap().term_print(), "a");
        check("a & b", false);
    }

    #[test]
    fn modal_examples() {
        check("a & <1>b", true);
        check("e & <-1>(d & <2>g)", true);
        check("f & <-2>(g & ~<2>T)", false);
        check("<-1>T & <-2>T", false);
        check("let $X = b | <2>$X in $X", true);
        check("a & ~(let $X = b | <1>$X | <2>$X in $X) & <1>b", false);
        check("(let $X = (a & <2>$Y) | <1>$X | <2>$X, $Y = b | <2>$Y in $X) & ~<-1>T", true);
        check("<1><1><2>a & ~<-1>T & ~<-2>T", true);
        check("a & <-1><-2><-1>b", true);
        check("a & <1>(b & <-1>c)", false);
    }

    #[test]
    fn context_and_attributes() {
        check("_context & @id & <1>(@id & ~@lang)", true);
        let r = run("b & <1>(_context & a)");
        let w = r.witness.unwrap();
        let flat = w.flatten();
        assert!(flat.marks[1].context);
        assert!(flat.marks[0].target);
    }

    #[test]
    fn timeout_is_reported() {
        let f = parse_formula("a & <1>b").unwrap();
        let r = solve(&f, &SolverOptions { timeout: Some(Duration::ZERO) }).unwrap();
        // tiny problems may finish before the first clock check
        assert!(matches!(r.verdict, Verdict::Timeout | Verdict::Satisfiable));
    }

    #[test]
    fn cyclic_formula_is_rejected() {
        let f = parse_formula("let $X = a | <-1>$X | <1>$X in $X").unwrap();
        assert!(matches!(solve(&f, &SolverOptions::default()), Err(SolveError::Formula(FormulaError::Cycle(_)))));
    }

    #[test]
    fn too_many_upward_formulas_is_an_error_not_a_panic() {
        let n = MAX_UPWARD + 1;
        let f = Formula::and_all((0..n).map(|i| Formula::modal(Program::Parent, Formula::element(format!("e{i}")))));
        match solve(&f, &SolverOptions::default()) {
            Err(SolveError::TooManyUpwardFormulas { count, max }) => assert_eq!((count, max), (n, MAX_UPWARD)),
            other => panic!("unexpected {:?}", other.map(|r| r.verdict)),
        }
    }
}
