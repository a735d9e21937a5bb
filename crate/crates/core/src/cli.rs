//! Command-line driver: reads a problem file, prints the solver trace and
//! returns the exit code (0 satisfiable, 1 unsatisfiable, 2 error, 3 timeout).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{CommandFactory, Parser};

use crate::formula::pretty_print;
use crate::parser::{expand_predicates, parse_spec, ExpandOptions};
use crate::solver::{solve_traced, Evaluator, Progress, SolverOptions, Verdict};
use crate::tree::{decode, hedge_to_xml};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_TIMEOUT: i32 = 3;

/// Satisfiability solver for a tree logic with XPath and DTD predicates.
#[derive(Debug, Parser)]
#[command(name = "treesat", version)]
pub struct RunConfig {
    /// Text file containing the formula to solve.
    pub input: Option<PathBuf>,
    /// Print only the verdict line.
    #[arg(long)]
    pub quiet: bool,
    /// Write the witness document to this file.
    #[arg(long, value_name = "PATH")]
    pub xml_out: Option<PathBuf>,
    /// Wall-clock budget for the solver, in seconds.
    #[arg(long, value_name = "SECONDS", default_value_t = 60.0)]
    pub timeout: f64,
    /// Reject DTDs that reference undeclared elements.
    #[arg(long)]
    pub strict_dtd: bool,
    /// Model-check the witness against the formula before printing it.
    #[arg(long)]
    pub oracle_check: bool,
}

fn ms(d: Duration) -> u128 {
    d.as_millis()
}

/// Parses `args` (program name first) and runs the solver, writing the trace
/// to `out` and diagnostics to `err`.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    if config.input.is_none() {
        let _ = writeln!(err, "error: missing input file\n");
        let _ = write!(err, "{}", RunConfig::command().render_help());
        return EXIT_ERROR;
    }
    match run(&config, out) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

/// Runs one problem file.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<i32, String> {
    let input = config.input.as_ref().ok_or("missing input file")?;
    let quiet = config.quiet;
    let say = |out: &mut dyn Write, s: &str| -> Result<(), String> {
        if !quiet {
            writeln!(out, "{s}").map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    say(out, &format!("Reading {}", input.display()))?;
    let text = std::fs::read_to_string(input).map_err(|e| format!("cannot read {}: {e}", input.display()))?;
    let spec = parse_spec(&text).map_err(|e| e.to_string())?;
    let opts = ExpandOptions {
        base_dir: input.parent().map(PathBuf::from).unwrap_or_default(),
        strict_dtd: config.strict_dtd,
    };
    let expansion = expand_predicates(&spec, &opts).map_err(|e| e.to_string())?;
    for r in &expansion.schema_reports {
        for w in &r.warnings {
            say(out, &format!("Warning: {}: {w}", r.path))?;
        }
        say(out, &format!("Converted tree grammar into BTT [{} ms].", ms(r.parse_time + r.btt_time)))?;
        say(out, &format!("Translated BTT into Tree Logic [{} ms].", ms(r.compile_time)))?;
    }
    let formula = expansion.formula;
    say(out, "")?;
    say(out, "Satisfiability Tested Formula:")?;
    say(out, &pretty_print(&formula))?;
    say(out, "")?;

    if !(config.timeout >= 0.0 && config.timeout.is_finite()) {
        return Err(format!("invalid timeout {}", config.timeout));
    }
    let solver = SolverOptions {
        timeout: Some(Duration::from_secs_f64(config.timeout)),
    };
    let mut io_error = None;
    let mut progress = |p: Progress<'_>| {
        if quiet {
            return;
        }
        let r = match p {
            Progress::ClosureStarted => writeln!(out, "Computing Relevant Closure"),
            Progress::ClosureDone(t) => writeln!(out, "Computed Relevant Closure [{} ms].", ms(t)),
            Progress::LeanDone { time, lean } => writeln!(
                out,
                "Computed Lean [{} ms].\nLean size is {}. It contains {} eventualities and {} symbols.",
                ms(time),
                lean.size(),
                lean.eventualities(),
                lean.symbols()
            ),
            Progress::FixpointStarted => write!(out, "Computing Fixpoint"),
            Progress::Iteration(_) => write!(out, "."),
            Progress::FixpointDone(t) => writeln!(out, "[{} ms].", ms(t)),
        };
        if let Err(e) = r {
            io_error.get_or_insert(e.to_string());
        }
    };
    let result = solve_traced(&formula, &solver, &mut progress).map_err(|e| e.to_string())?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let total = ms(result.stats.total_time);
    let line = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| e.to_string());
    match result.verdict {
        Verdict::Unsatisfiable => {
            line(out, format!("Formula is unsatisfiable [{total} ms]."))?;
            Ok(EXIT_UNSAT)
        }
        Verdict::Timeout => {
            line(out, format!("Solver timed out [{total} ms]."))?;
            Ok(EXIT_TIMEOUT)
        }
        Verdict::Satisfiable => {
            line(out, format!("Formula is satisfiable [{total} ms]."))?;
            let t = Instant::now();
            let witness = result.witness.ok_or("satisfiable verdict without a witness")?;
            if config.oracle_check {
                let ok = Evaluator::new(&formula)
                    .map(|e| e.holds_somewhere(&witness.flatten()))
                    .unwrap_or(false);
                if !ok {
                    return Err("witness does not satisfy the formula".into());
                }
            }
            let xml = hedge_to_xml(&decode(&witness));
            let witness_time = result.stats.witness_time + t.elapsed();
            say(out, &format!("A satisfying finite binary tree model was found [{} ms]:", ms(witness_time)))?;
            say(out, &witness.term_print())?;
            say(out, "In XML syntax:")?;
            if !quiet {
                write!(out, "{xml}").map_err(|e| e.to_string())?;
            }
            if config.oracle_check {
                say(out, "Witness model-checked: the formula holds.")?;
            }
            if let Some(path) = &config.xml_out {
                std::fs::write(path, &xml).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            Ok(EXIT_SAT)
        }
    }
}
