//! Acceptance suite: one PASS/FAIL line per criterion. Criterion 5 is
//! informational and never fails the run.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{
    all_binary, all_documents, duality_mismatch, solver_check, xpath_mismatch, FormulaGen, SolverCheck,
    XPATH_CORPUS, DTD_CORPUS,
};
use rand::rngs::StdRng;
use rand::SeedableRng;
use treesat::formula::{cycle_check, Formula};
use treesat::parser::{expand_predicates, parse_formula, parse_spec, ExpandOptions};
use treesat::schema::{compile_btt, load_dtd, parse_dtd, to_btt, validate};
use treesat::solver::{solve, Evaluator, SolverOptions, SolverResult, Verdict};
use treesat::tree::{decode, encode, BinaryTree, UnrankedTree};
use treesat::xpath::{compile_query, desugar, parse_xpath};

type Outcome = Result<String, String>;

/// Name, check, and whether a failure fails the run.
type Criterion = (&'static str, fn() -> Outcome, bool);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn expand_fixture(name: &str) -> Result<Formula, String> {
    let text = std::fs::read_to_string(fixtures().join(name)).map_err(|e| e.to_string())?;
    let spec = parse_spec(&text).map_err(|e| e.to_string())?;
    let opts = ExpandOptions {
        base_dir: fixtures(),
        strict_dtd: false,
    };
    Ok(expand_predicates(&spec, &opts).map_err(|e| e.to_string())?.formula)
}

fn solve_fixture(name: &str) -> Result<(Formula, SolverResult, Duration), String> {
    let f = expand_fixture(name)?;
    let t = Instant::now();
    let r = solve(&f, &SolverOptions::default()).map_err(|e| e.to_string())?;
    Ok((f, r, t.elapsed()))
}

fn model_checks(f: &Formula, w: &BinaryTree) -> bool {
    Evaluator::new(f).map(|e| e.holds_somewhere(&w.flatten())).unwrap_or(false)
}

fn expect_unsat(name: &str, limit: Duration) -> Outcome {
    let (_, r, t) = solve_fixture(name)?;
    match r.verdict {
        Verdict::Unsatisfiable if t < limit => Ok(format!("UNSAT in {} ms (limit {} s)", t.as_millis(), limit.as_secs())),
        Verdict::Unsatisfiable => Err(format!("UNSAT but took {} ms", t.as_millis())),
        v => Err(format!("verdict {v:?}")),
    }
}

fn example_one() -> Outcome {
    expect_unsat("example1.txt", Duration::from_secs(5))
}

fn example_three_containment() -> Outcome {
    expect_unsat("example3.txt", Duration::from_secs(10))
}

/// A `b` with consecutive children `d`, `a`, the `a` carrying both marks.
fn has_counter_example_shape(t: &UnrankedTree) -> bool {
    let here = t.label == "b"
        && t.children.windows(2).any(|w| {
            w[0].label == "d" && w[1].label == "a" && w[1].marks.context && w[1].marks.target
        });
    here || t.children.iter().any(has_counter_example_shape)
}

fn example_three_equivalence() -> Outcome {
    let (f, r, t) = solve_fixture("example3-equivalence.txt")?;
    if r.verdict != Verdict::Satisfiable {
        return Err(format!("verdict {:?}", r.verdict));
    }
    let w = r.witness.ok_or("no witness")?;
    if !model_checks(&f, &w) {
        return Err(format!("witness {} does not model-check", w.term_print()));
    }
    if !decode(&w).iter().any(has_counter_example_shape) {
        return Err(format!("witness {} lacks b(d, a[context, target])", w.term_print()));
    }
    Ok(format!("SAT in {} ms, witness {}", t.as_millis(), w.term_print()))
}

fn example_two() -> Outcome {
    let (f, r, t) = solve_fixture("example2.txt")?;
    if r.verdict != Verdict::Satisfiable {
        return Err(format!("verdict {:?}", r.verdict));
    }
    let w = r.witness.ok_or("no witness")?;
    if !model_checks(&f, &w) {
        return Err(format!("witness {} does not model-check", w.term_print()));
    }
    let dtd = load_dtd(&fixtures().join("sampleDTDs/smil.dtd"), false).map_err(|e| e.to_string())?;
    let doc = decode(&w);
    if doc.len() != 1 || !validate(&dtd, "smil", &doc[0]) {
        return Err(format!("witness {} is not a valid smil document", w.term_print()));
    }
    Ok(format!("SAT in {} ms, valid witness {}", t.as_millis(), w.term_print()))
}

fn lean_statistics() -> Outcome {
    let mut report = Vec::new();
    let mut within = true;
    for (name, reference) in [("example1.txt", [20, 14, 6]), ("example3.txt", [29, 23, 6])] {
        let (_, r, _) = solve_fixture(name)?;
        let ours = [r.stats.lean_size, r.stats.eventualities, r.stats.symbols];
        for (o, p) in ours.iter().zip(reference) {
            within &= (*o as f64 - p as f64).abs() <= 0.3 * p as f64;
        }
        report.push(format!(
            "{name} {}/{}/{} vs {}/{}/{}",
            ours[0], ours[1], ours[2], reference[0], reference[1], reference[2]
        ));
    }
    let text = report.join(", ");
    if within {
        Ok(format!("within 30%: {text}"))
    } else {
        Err(format!("outside 30%: {text}"))
    }
}

fn random_formula_oracle() -> Outcome {
    let t = Instant::now();
    let abc: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let mut universe = all_binary(6, &abc);
    let mut with_z = abc;
    with_z.push("z".into());
    universe.extend(all_binary(5, &with_z).into_iter().filter(|(t, _)| t.term_print().contains('z')));
    let (mut sat, mut unsat) = (0, 0);
    for seed in 0..200 {
        let f = FormulaGen::new(seed, 4, 4).next();
        match solver_check(&f, &universe) {
            SolverCheck::Sat => sat += 1,
            SolverCheck::Unsat => unsat += 1,
            SolverCheck::Mismatch(m) => return Err(format!("seed {seed}: {m}")),
        }
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(300) {
        return Err(format!("took {} s", elapsed.as_secs()));
    }
    Ok(format!(
        "200 formulas ({sat} SAT, {unsat} UNSAT), {} trees, {} ms",
        universe.len(),
        elapsed.as_millis()
    ))
}

fn xpath_oracle() -> Outcome {
    let labels: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    let docs = all_documents(5, &labels);
    if XPATH_CORPUS.len() < 12 {
        return Err(format!("corpus has {} queries", XPATH_CORPUS.len()));
    }
    for q in XPATH_CORPUS {
        if let Some(m) = xpath_mismatch(q, &docs) {
            return Err(m);
        }
    }
    Ok(format!("{} queries x {} documents", XPATH_CORPUS.len(), docs.len()))
}

fn reference_document() -> (UnrankedTree, &'static str) {
    let leaf = UnrankedTree::new;
    let doc = UnrankedTree::with_children(
        "r",
        vec![
            UnrankedTree::with_children("s", vec![leaf("v"), leaf("w"), leaf("x").with_attributes(["e"])])
                .with_attributes(["d"]),
            leaf("t"),
            leaf("u"),
        ],
    )
    .with_attributes(["a", "b", "c"]);
    (doc, "r(s(v(#, w(#, x)), t(#, u)), #)")
}

fn encoding_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..1000 {
        let doc = common::random_document(&mut rng, 8);
        let hedge = vec![doc];
        if decode(&encode(&hedge)) != hedge {
            return Err(format!("tree {i} does not round-trip: {}", hedge[0].to_xml()));
        }
    }
    let (doc, expected) = reference_document();
    let bin = encode(std::slice::from_ref(&doc));
    if bin.term_print() != expected || decode(&bin) != vec![doc] {
        return Err(format!("reference document encodes as {}", bin.term_print()));
    }
    Ok("1000 random trees round-trip; reference document matches".into())
}

fn desugaring() -> Outcome {
    let rules = [
        ("a[position()=1]", "child::a[not(preceding-sibling::a)]"),
        ("a[position()=last()]", "child::a[not(following-sibling::a)]"),
        ("a[position()=3]", "child::a[preceding-sibling::a/preceding-sibling::a]"),
        ("a[count(b/c)=0]", "child::a[not(child::b/child::c)]"),
        ("a[count(b/c)>0]", "child::a[child::b/child::c]"),
        ("a[count(b)>2]", "child::a[child::b/following-sibling::b/following-sibling::b]"),
        (
            "preceding-sibling::*[position()=last() and b]",
            "preceding-sibling::*[(not(preceding-sibling::*) and child::b)]",
        ),
    ];
    for (src, expected) in rules {
        let got = desugar(&parse_xpath(src).map_err(|e| e.to_string())?).to_string();
        if got != expected {
            return Err(format!("{src} rewrote to {got}"));
        }
    }
    for src in XPATH_CORPUS.iter().copied().chain(rules.iter().map(|r| r.0)) {
        let once = desugar(&parse_xpath(src).map_err(|e| e.to_string())?);
        if once.has_sugar() || desugar(&once) != once {
            return Err(format!("{src} is not desugared idempotently"));
        }
    }
    Ok(format!("{} literal rewritings, idempotent on {} queries", rules.len(), XPATH_CORPUS.len() + rules.len()))
}

fn cycle_freeness() -> Outcome {
    let fail = parse_formula("let $X = a | <-1>$X | <1>$X in $X").map_err(|e| e.to_string())?;
    if cycle_check(&fail).passed() {
        return Err("mixed recursion accepted".into());
    }
    let pass = parse_formula("let $X = a & (let $X = b | <1>$X in $X) | <-1>$X in $X").map_err(|e| e.to_string())?;
    if !cycle_check(&pass).passed() {
        return Err(format!("shadowed recursion rejected: {}", cycle_check(&pass)));
    }
    let mut generated = 0;
    for q in XPATH_CORPUS {
        let f = compile_query(&parse_xpath(q).map_err(|e| e.to_string())?, &Formula::Context);
        if !cycle_check(&f).passed() {
            return Err(format!("{q}: {}", cycle_check(&f)));
        }
        generated += 1;
    }
    for (text, start) in DTD_CORPUS {
        let dtd = parse_dtd(text, false).map_err(|e| e.to_string())?;
        let f = compile_btt(&to_btt(&dtd), start).map_err(|e| e.to_string())?;
        if !cycle_check(&f).passed() {
            return Err(format!("{text}: {}", cycle_check(&f)));
        }
        generated += 1;
    }
    for name in ["example1.txt", "example2.txt", "example3.txt", "example3-equivalence.txt"] {
        let f = expand_fixture(name)?;
        if !cycle_check(&f).passed() {
            return Err(format!("{name}: {}", cycle_check(&f)));
        }
        generated += 1;
    }
    Ok(format!("FAIL and PASS verdicts reproduced; {generated} generated formulas cycle-free"))
}

fn negation_duality() -> Outcome {
    let trees = all_binary(5, &["a", "b", "c"].map(String::from));
    for seed in 0..100 {
        let f = FormulaGen::new(seed, 4, 4).next();
        if let Some(m) = duality_mismatch(&f, &trees) {
            return Err(format!("seed {seed}: {m}"));
        }
    }
    Ok(format!("100 formulas x {} trees, every node", trees.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("example1.txt is unsatisfiable", example_one, true),
        ("example3.txt (containment) is unsatisfiable", example_three_containment, true),
        ("example3-equivalence.txt has a counter-example", example_three_equivalence, true),
        ("example2.txt witness model-checks and validates", example_two, true),
        ("Lean statistics (informational)", lean_statistics, false),
        ("Random formulas agree with enumeration", random_formula_oracle, true),
        ("XPath compilation agrees with the reference evaluator", xpath_oracle, true),
        ("Encoding round-trip and reference document", encoding_round_trip, true),
        ("Desugaring rules and idempotence", desugaring, true),
        ("Cycle-freeness verdicts", cycle_freeness, true),
        ("Negation duality", negation_duality, true),
    ];
    let mut failed = 0;
    for (i, (name, check, blocking)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match (&outcome, blocking) {
            (Ok(d), _) => ("PASS", d),
            (Err(d), true) => {
                failed += 1;
                ("FAIL", d)
            }
            (Err(d), false) => ("INFO", d),
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
