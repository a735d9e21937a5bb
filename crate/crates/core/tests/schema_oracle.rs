//! DTD compilation against the direct validator on every small document.

mod common;

use std::path::Path;

use common::{all_documents, DTD_CORPUS};
use treesat::formula::{cycle_check, Formula, Program};
use treesat::schema::{compile_btt, compile_type, parse_dtd, to_btt, validate};
use treesat::solver::Evaluator;
use treesat::tree::encode;

fn uses_converse(f: &Formula) -> bool {
    f.programs().iter().any(|p| !p.is_forward())
}

#[test]
fn compiled_types_agree_with_validator_on_all_documents_up_to_six_nodes() {
    for (text, start) in DTD_CORPUS {
        let dtd = parse_dtd(text, false).unwrap();
        let btt = to_btt(&dtd);
        let f = compile_btt(&btt, start).unwrap();
        assert!(cycle_check(&f).passed());
        assert!(!uses_converse(&f), "{text}");
        let ev = Evaluator::new(&f).unwrap();
        let mut labels = vec![start.to_string()];
        labels.extend(dtd.elements.keys().filter(|k| *k != start).cloned());
        labels.truncate(4);
        if labels.len() < 4 {
            labels.push("q".into());
        }
        let mut valid = 0;
        for d in all_documents(6, &labels) {
            let expected = validate(&dtd, start, &d);
            let bin = encode(std::slice::from_ref(&d));
            assert_eq!(ev.eval_tree(&bin).contains(0), expected, "{text}: {}", bin.term_print());
            assert_eq!(btt.accepts(start, &bin), expected, "{text}: {}", bin.term_print());
            valid += expected as usize;
        }
        assert!(valid > 0, "{text} has no small valid document");
    }
}

#[test]
fn required_attributes_are_enforced() {
    let dtd = parse_dtd("<!ELEMENT r (a*)>\n<!ELEMENT a EMPTY>\n<!ATTLIST a k CDATA #REQUIRED j CDATA #IMPLIED>", true).unwrap();
    let f = compile_btt(&to_btt(&dtd), "r").unwrap();
    let ev = Evaluator::new(&f).unwrap();
    let doc = |attrs: &[&str]| {
        treesat::tree::UnrankedTree::with_children(
            "r",
            vec![treesat::tree::UnrankedTree::new("a").with_attributes(attrs.iter().copied())],
        )
    };
    for attrs in [&[][..], &["k"], &["j"], &["j", "k"]] {
        let d = doc(attrs);
        let bin = encode(std::slice::from_ref(&d));
        assert_eq!(ev.eval_tree(&bin).contains(0), validate(&dtd, "r", &d), "{attrs:?}");
    }
}

#[test]
fn empty_element_type_is_a_leaf_without_siblings() {
    let dtd = parse_dtd("<!ELEMENT a EMPTY>", true).unwrap();
    let f = compile_btt(&to_btt(&dtd), "a").unwrap();
    let g = Formula::and_all([
        Formula::element("a"),
        Formula::not(Formula::has(Program::FirstChild)),
        Formula::not(Formula::has(Program::NextSibling)),
    ]);
    let (ef, eg) = (Evaluator::new(&f).unwrap(), Evaluator::new(&g).unwrap());
    for t in common::all_binary(2, &["a".to_string(), "b".to_string()]) {
        assert_eq!(ef.eval(&t.1), eg.eval(&t.1), "{}", t.0.term_print());
    }
}

#[test]
fn translation_size_is_linear_in_the_grammar() {
    let mut ratio: f64 = 0.0;
    for (text, start) in DTD_CORPUS {
        let btt = to_btt(&parse_dtd(text, false).unwrap());
        let f = compile_btt(&btt, start).unwrap();
        let grammar: usize = btt.nonterminals.iter().map(|n| 1 + n.first.len() + n.next.len()).sum();
        ratio = ratio.max(f.size() as f64 / grammar as f64);
    }
    assert!(ratio <= 12.0, "size ratio {ratio}");
}

#[test]
fn reduced_smil_grammar_compiles() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sampleDTDs/smil.dtd");
    let report = compile_type(&path, "smil", false).unwrap();
    assert!(cycle_check(&report.formula).passed());
    assert!(!uses_converse(&report.formula));
    assert_eq!(report.warnings.len(), 1, "{:?}", report.warnings);
}
