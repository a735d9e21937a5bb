//! Reference DTD validation on unranked documents.
//!
//! Matches each element's children against its content model with a plain
//! backtracking matcher over the regex AST. Independent of the binary
//! encoding and of the Glushkov construction, so it serves as a test oracle.

use super::dtd::{Dtd, Regex};
use crate::tree::UnrankedTree;

/// True if `t` is a valid document of `dtd` rooted at `start`.
pub fn validate(dtd: &Dtd, start: &str, t: &UnrankedTree) -> bool {
    t.label == start && valid_element(dtd, t)
}

fn valid_element(dtd: &Dtd, t: &UnrankedTree) -> bool {
    if !dtd.elements.contains_key(&t.label) {
        return false;
    }
    if !dtd
        .required_attributes(&t.label)
        .iter()
        .all(|a| t.attributes.contains(a))
    {
        return false;
    }
    let labels: Vec<&str> = t.children.iter().map(|c| c.label.as_str()).collect();
    let content_ok = match dtd.content_regex(&t.label) {
        None => labels.is_empty(),
        Some(r) => matches(&r, &labels, 0, &mut |end| end == labels.len()),
    };
    content_ok && t.children.iter().all(|c| valid_element(dtd, c))
}

/// Calls `k` with every end position reachable by matching `r` from `at`;
/// stops at the first `true`.
fn matches(r: &Regex, w: &[&str], at: usize, k: &mut dyn FnMut(usize) -> bool) -> bool {
    match r {
        Regex::Name(n) => at < w.len() && w[at] == n && k(at + 1),
        Regex::Seq(items) => seq(items, w, at, k),
        Regex::Choice(items) => items.iter().any(|it| matches(it, w, at, k)),
        Regex::Opt(r) => k(at) || matches(r, w, at, k),
        Regex::Star(r) => star(r, w, at, k),
        Regex::Plus(r) => matches(r, w, at, &mut |e| star(r, w, e, k)),
    }
}

fn seq(items: &[Regex], w: &[&str], at: usize, k: &mut dyn FnMut(usize) -> bool) -> bool {
    match items.split_first() {
        None => k(at),
        Some((h, rest)) => matches(h, w, at, &mut |e| seq(rest, w, e, k)),
    }
}

fn star(r: &Regex, w: &[&str], at: usize, k: &mut dyn FnMut(usize) -> bool) -> bool {
    // only iterate on progress, which bounds the recursion by the word length
    k(at) || matches(r, w, at, &mut |e| e > at && star(r, w, e, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::dtd::parse_dtd;

    fn t(label: &str, children: Vec<UnrankedTree>) -> UnrankedTree {
        UnrankedTree::with_children(label, children)
    }

    #[test]
    fn sequence_and_repetition() {
        let d = parse_dtd(
            "<!ELEMENT r ((a|b)*, c?, d+)>\n<!ELEMENT a EMPTY>\n<!ELEMENT b EMPTY>\n<!ELEMENT c EMPTY>\n<!ELEMENT d EMPTY>",
            true,
        )
        .unwrap();
        let leaf = |l: &str| t(l, vec![]);
        assert!(validate(&d, "r", &t("r", vec![leaf("d")])));
        assert!(validate(&d, "r", &t("r", vec![leaf("a"), leaf("b"), leaf("a"), leaf("c"), leaf("d"), leaf("d")])));
        assert!(!validate(&d, "r", &t("r", vec![leaf("c")])));
        assert!(!validate(&d, "r", &t("r", vec![leaf("d"), leaf("a")])));
        assert!(!validate(&d, "a", &t("r", vec![leaf("d")])));
        assert!(!validate(&d, "r", &t("r", vec![t("d", vec![leaf("a")])])));
    }

    #[test]
    fn required_attributes() {
        let d = parse_dtd("<!ELEMENT x EMPTY>\n<!ATTLIST x e CDATA #REQUIRED f CDATA #IMPLIED>", true).unwrap();
        assert!(!validate(&d, "x", &t("x", vec![])));
        assert!(validate(&d, "x", &UnrankedTree::new("x").with_attributes(["e"])));
    }

    #[test]
    fn nested_stars_terminate() {
        let d = parse_dtd("<!ELEMENT r ((a*)*)>\n<!ELEMENT a EMPTY>", true).unwrap();
        assert!(validate(&d, "r", &t("r", vec![t("a", vec![]), t("a", vec![])])));
        assert!(!validate(&d, "r", &t("r", vec![t("r", vec![])])));
    }
}
