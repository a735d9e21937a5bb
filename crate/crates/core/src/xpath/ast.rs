//! Abstract syntax of the supported XPath fragment.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    SelfAxis,
    Child,
    Parent,
    Descendant,
    Ancestor,
    DescendantOrSelf,
    AncestorOrSelf,
    FollowingSibling,
    PrecedingSibling,
    Following,
    Preceding,
}

impl Axis {
    pub const ALL: [Axis; 11] = [
        Axis::SelfAxis,
        Axis::Child,
        Axis::Parent,
        Axis::Descendant,
        Axis::Ancestor,
        Axis::DescendantOrSelf,
        Axis::AncestorOrSelf,
        Axis::FollowingSibling,
        Axis::PrecedingSibling,
        Axis::Following,
        Axis::Preceding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::SelfAxis => "self",
            Axis::Child => "child",
            Axis::Parent => "parent",
            Axis::Descendant => "descendant",
            Axis::Ancestor => "ancestor",
            Axis::DescendantOrSelf => "descendant-or-self",
            Axis::AncestorOrSelf => "ancestor-or-self",
            Axis::FollowingSibling => "following-sibling",
            Axis::PrecedingSibling => "preceding-sibling",
            Axis::Following => "following",
            Axis::Preceding => "preceding",
        }
    }

    pub fn from_name(s: &str) -> Option<Axis> {
        Axis::ALL.into_iter().find(|a| a.name() == s)
    }

    /// The axis relating the same pairs of nodes in the other direction.
    pub fn inverse(self) -> Axis {
        match self {
            Axis::SelfAxis => Axis::SelfAxis,
            Axis::Child => Axis::Parent,
            Axis::Parent => Axis::Child,
            Axis::Descendant => Axis::Ancestor,
            Axis::Ancestor => Axis::Descendant,
            Axis::DescendantOrSelf => Axis::AncestorOrSelf,
            Axis::AncestorOrSelf => Axis::DescendantOrSelf,
            Axis::FollowingSibling => Axis::PrecedingSibling,
            Axis::PrecedingSibling => Axis::FollowingSibling,
            Axis::Following => Axis::Preceding,
            Axis::Preceding => Axis::Following,
        }
    }

    /// Reverse axes number their nodes in reverse document order.
    pub fn is_reverse(self) -> bool {
        matches!(
            self,
            Axis::Parent
                | Axis::Ancestor
                | Axis::AncestorOrSelf
                | Axis::PrecedingSibling
                | Axis::Preceding
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeTest {
    Name(String),
    Any,
}

impl NodeTest {
    pub fn matches(&self, label: &str) -> bool {
        match self {
            NodeTest::Name(n) => n == label,
            NodeTest::Any => true,
        }
    }
}

impl fmt::Display for NodeTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeTest::Name(n) => f.write_str(n),
            NodeTest::Any => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub axis: Axis,
    pub test: NodeTest,
    pub qualifiers: Vec<Qualifier>,
}

impl Step {
    pub fn new(axis: Axis, test: NodeTest) -> Step {
        Step {
            axis,
            test,
            qualifiers: Vec::new(),
        }
    }

    pub fn with(mut self, q: Qualifier) -> Step {
        self.qualifiers.push(q);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub steps: Vec<Step>,
}

impl Path {
    pub fn new(steps: Vec<Step>) -> Path {
        Path { steps }
    }

    /// `k` copies of the same step.
    pub fn repeat(step: &Step, k: usize) -> Path {
        Path::new(vec![step.clone(); k])
    }
}

/// Constructs that are rewritten into the core fragment before compilation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sugar {
    /// `position()=k`
    PositionEq(u32),
    /// `position()=last()`
    PositionLast,
    /// `count(path)=0`
    CountZero(Path),
    /// `count(path)>k`
    CountGreater(Path, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Qualifier {
    And(Box<Qualifier>, Box<Qualifier>),
    Or(Box<Qualifier>, Box<Qualifier>),
    Not(Box<Qualifier>),
    Path(Path),
    /// `path/@name`; an empty path is the attribute step `@name`.
    Attribute(Path, String),
    Sugar(Sugar),
}

impl Qualifier {
    pub fn and(a: Qualifier, b: Qualifier) -> Qualifier {
        Qualifier::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Qualifier, b: Qualifier) -> Qualifier {
        Qualifier::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Qualifier) -> Qualifier {
        Qualifier::Not(Box::new(a))
    }

    pub fn has_sugar(&self) -> bool {
        match self {
            Qualifier::And(a, b) | Qualifier::Or(a, b) => a.has_sugar() || b.has_sugar(),
            Qualifier::Not(a) => a.has_sugar(),
            Qualifier::Path(p) | Qualifier::Attribute(p, _) => p.has_sugar(),
            Qualifier::Sugar(_) => true,
        }
    }

    pub fn has_position(&self) -> bool {
        match self {
            Qualifier::And(a, b) | Qualifier::Or(a, b) => a.has_position() || b.has_position(),
            Qualifier::Not(a) => a.has_position(),
            Qualifier::Sugar(Sugar::PositionEq(_) | Sugar::PositionLast) => true,
            _ => false,
        }
    }
}

impl Path {
    pub fn has_sugar(&self) -> bool {
        self.steps
            .iter()
            .any(|s| s.qualifiers.iter().any(Qualifier::has_sugar))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Absolute(Path),
    Relative(Path),
    Union(Box<Query>, Box<Query>),
    Intersection(Box<Query>, Box<Query>),
}

impl Query {
    pub fn has_sugar(&self) -> bool {
        match self {
            Query::Absolute(p) | Query::Relative(p) => p.has_sugar(),
            Query::Union(a, b) | Query::Intersection(a, b) => a.has_sugar() || b.has_sugar(),
        }
    }

    /// Number of steps and qualifier connectives, used to relate query and
    /// translation sizes.
    pub fn size(&self) -> usize {
        fn path(p: &Path) -> usize {
            p.steps
                .iter()
                .map(|s| 1 + s.qualifiers.iter().map(qual).sum::<usize>())
                .sum()
        }
        fn qual(q: &Qualifier) -> usize {
            match q {
                Qualifier::And(a, b) | Qualifier::Or(a, b) => 1 + qual(a) + qual(b),
                Qualifier::Not(a) => 1 + qual(a),
                Qualifier::Path(p) => path(p),
                Qualifier::Attribute(p, _) => 1 + path(p),
                Qualifier::Sugar(Sugar::CountZero(p) | Sugar::CountGreater(p, _)) => 1 + path(p),
                Qualifier::Sugar(_) => 1,
            }
        }
        match self {
            Query::Absolute(p) | Query::Relative(p) => path(p),
            Query::Union(a, b) | Query::Intersection(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.axis.name(), self.test)?;
        for q in &self.qualifiers {
            write!(f, "[{q}]")?;
        }
        Ok(())
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Sugar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sugar::PositionEq(k) => write!(f, "position()={k}"),
            Sugar::PositionLast => f.write_str("position()=last()"),
            Sugar::CountZero(p) => write!(f, "count({p})=0"),
            Sugar::CountGreater(p, k) => write!(f, "count({p})>{k}"),
        }
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qualifier::And(a, b) => write!(f, "({a} and {b})"),
            Qualifier::Or(a, b) => write!(f, "({a} or {b})"),
            Qualifier::Not(a) => write!(f, "not({a})"),
            Qualifier::Path(p) => write!(f, "{p}"),
            Qualifier::Attribute(p, n) if p.steps.is_empty() => write!(f, "@{n}"),
            Qualifier::Attribute(p, n) => write!(f, "{p}/@{n}"),
            Qualifier::Sugar(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Absolute(p) => write!(f, "/{p}"),
            Query::Relative(p) => write!(f, "{p}"),
            Query::Union(a, b) => write!(f, "({a} | {b})"),
            Query::Intersection(a, b) => write!(f, "({a} intersect {b})"),
        }
    }
}
