//! Properties of the logic core on random cycle-free formulas, checked with
//! the exhaustive model checker.

mod common;

use std::sync::OnceLock;

use common::{all_binary, duality_mismatch, FormulaGen, DTD_CORPUS, XPATH_CORPUS};
use proptest::prelude::*;
use treesat::formula::{alpha_eq, cycle_check, negate, pretty_print, to_nnf, unfold, Formula, Program};
use treesat::parser::parse_formula;
use treesat::schema::{compile_btt, parse_dtd, to_btt};
use treesat::solver::Evaluator;
use treesat::tree::FlatTree;
use treesat::xpath::{compile_query, parse_xpath};

/// All trees with at most five nodes over {a, b, c}.
fn universe() -> &'static [(treesat::tree::BinaryTree, FlatTree)] {
    static U: OnceLock<Vec<(treesat::tree::BinaryTree, FlatTree)>> = OnceLock::new();
    U.get_or_init(|| all_binary(5, &["a".to_string(), "b".to_string(), "c".to_string()]))
}

fn same_semantics(f: &Formula, g: &Formula) -> Option<String> {
    let (ef, eg) = (Evaluator::new(f).unwrap(), Evaluator::new(g).unwrap());
    universe()
        .iter()
        .find(|(_, flat)| ef.eval(flat) != eg.eval(flat))
        .map(|(t, _)| format!("{} vs {} on {}", pretty_print(f), pretty_print(g), t.term_print()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn negation_complements_truth_at_every_node(seed in any::<u64>()) {
        let f = FormulaGen::new(seed, 4, 4).next();
        if let Some(m) = duality_mismatch(&f, universe()) {
            return Err(TestCaseError::fail(m));
        }
    }

    #[test]
    fn double_negation_is_equivalent(seed in any::<u64>()) {
        let f = FormulaGen::new(seed, 4, 4).next();
        let g = negate(&negate(&f).unwrap()).unwrap();
        if let Some(m) = same_semantics(&f, &g) {
            return Err(TestCaseError::fail(m));
        }
    }

    #[test]
    fn negation_normal_form_is_equivalent(seed in any::<u64>()) {
        let f = FormulaGen::new(seed, 4, 4).next();
        let g = to_nnf(&f).unwrap().to_formula();
        if let Some(m) = same_semantics(&f, &g) {
            return Err(TestCaseError::fail(m));
        }
    }

    #[test]
    fn printing_then_parsing_is_identity_up_to_renaming(seed in any::<u64>()) {
        let f = FormulaGen::new(seed, 4, 4).next();
        let text = pretty_print(&f);
        let g = parse_formula(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert!(alpha_eq(&f, &g), "{} reparsed as {}", text, pretty_print(&g));
    }

    #[test]
    fn unfolding_a_binder_preserves_its_meaning(seed in any::<u64>()) {
        let mut generator = FormulaGen::new(seed, 4, 4);
        let f = generator.next();
        let mut binders = Vec::new();
        f.visit(&mut |g| if let Formula::Let(bs, _) = g {
            if g.free_vars().is_empty() {
                binders.push((bs.clone(), g.clone()));
            }
        });
        for (bs, binder) in binders {
            for (v, _) in &bs {
                let fix = Formula::Let(bs.clone(), Box::new(Formula::Var(v.clone())));
                let once = unfold(&binder, v).unwrap();
                if let Some(m) = same_semantics(&fix, &once) {
                    return Err(TestCaseError::fail(m));
                }
            }
        }
    }
}

#[test]
fn recursion_mixing_a_program_with_its_converse_is_rejected() {
    let f = parse_formula("let $X = a | <-1>$X | <1>$X in $X").unwrap();
    let report = cycle_check(&f);
    assert!(!report.passed());
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].variable, "X");
    let (p, q) = report.violations[0].programs;
    let mut pair = [p.code(), q.code()];
    pair.sort();
    assert_eq!(pair, [-1, 1]);
    assert!(negate(&f).is_err());
}

#[test]
fn shadowed_recursions_in_opposite_directions_are_accepted() {
    let f = parse_formula("let $X = a & (let $X = b | <1>$X in $X) | <-1>$X in $X").unwrap();
    assert!(cycle_check(&f).passed(), "{}", cycle_check(&f));
}

#[test]
fn front_end_translations_are_cycle_free() {
    for q in XPATH_CORPUS {
        let f = compile_query(&parse_xpath(q).unwrap(), &Formula::Context);
        assert!(cycle_check(&f).passed(), "{q}: {}", cycle_check(&f));
    }
    for (text, start) in DTD_CORPUS {
        let f = compile_btt(&to_btt(&parse_dtd(text, false).unwrap()), start).unwrap();
        assert!(cycle_check(&f).passed(), "{text}");
        assert!(f.programs().iter().all(|p| p.is_forward()));
    }
}

#[test]
fn unfolding_the_sibling_chain_matches_its_hand_expansion() {
    let f = parse_formula("let $X = b | <2>$X in $X").unwrap();
    let Formula::Let(bs, _) = &f else { panic!("expected a binder") };
    let once = unfold(&f, &bs[0].0).unwrap();
    assert_eq!(once, Formula::or(Formula::element("b"), Formula::modal(Program::NextSibling, f.clone())));
}
