//! Propositional language over a finite, ordered set of propositions.
//!
//! Atoms are total truth assignments. With `n` propositions there are
//! `N = 2^n` atoms, indexed `0..N`. Index `i` corresponds to the bit vector
//! `N - 1 - i` read with the first proposition as the most significant bit,
//! so atom `0` makes every proposition true and atom `N - 1` makes every
//! proposition false.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// An ordered, duplicate-free, nonempty list of proposition names.
#[derive(Debug, Clone)]
pub struct PropSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for PropSet {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for PropSet {}

impl std::hash::Hash for PropSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.names.hash(state);
    }
}

impl PropSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidPropSet("no propositions".into()));
        }
        if names.len() >= usize::BITS as usize {
            return Err(Error::InvalidPropSet(format!(
                "{} propositions is too many",
                names.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) || is_keyword(name) {
                return Err(Error::InvalidPropSet(format!("`{name}` is not a valid name")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidPropSet(format!("duplicate proposition `{name}`")));
            }
        }
        Ok(Self { names, index })
    }

    /// Parses a comma-separated list such as `p,q,r`.
    pub fn parse_list(list: &str) -> Result<Self> {
        Self::new(list.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, prop: usize) -> &str {
        &self.names[prop]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Number of atoms, `2^n`.
    pub fn atom_count(&self) -> usize {
        1 << self.names.len()
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> {
        (0..self.atom_count()).map(Atom)
    }

    /// Whether `prop` is true at `atom`.
    pub fn holds(&self, atom: Atom, prop: usize) -> bool {
        let bits = self.atom_count() - 1 - atom.0;
        (bits >> (self.names.len() - 1 - prop)) & 1 == 1
    }

    /// The atom whose true propositions are exactly `true_props`.
    pub fn atom_of_assignment(&self, true_props: &[usize]) -> Atom {
        let n = self.names.len();
        let bits = true_props.iter().fold(0usize, |acc, &p| acc | (1 << (n - 1 - p)));
        Atom(self.atom_count() - 1 - bits)
    }

    /// Names of the propositions true at `atom`, in proposition order.
    pub fn true_props(&self, atom: Atom) -> Vec<&str> {
        (0..self.len())
            .filter(|&p| self.holds(atom, p))
            .map(|p| self.name(p))
            .collect()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_keyword(s: &str) -> bool {
    matches!(s, "true" | "false" | "noop" | "do" | "if" | "then" | "else")
}

/// A total truth assignment, identified by its rank in the atom enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(pub usize);

impl Atom {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A set of atoms, kept sorted by atom index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomSet(Vec<usize>);

impl AtomSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn all(props: &PropSet) -> Self {
        Self((0..props.atom_count()).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Atom> + '_ {
        self.0.iter().map(|&i| Atom(i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, atom: Atom) -> bool {
        self.0.binary_search(&atom.0).is_ok()
    }

    pub fn is_subset(&self, other: &AtomSet) -> bool {
        self.0.iter().all(|&i| other.0.binary_search(&i).is_ok())
    }

    pub fn is_proper_superset(&self, other: &AtomSet) -> bool {
        self.len() > other.len() && other.is_subset(self)
    }
}

/// Propositional formulas. Proposition leaves hold an index into the
/// ambient [`PropSet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Bottom,
    Prop(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn prop(p: usize) -> Self {
        Formula::Prop(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Evaluates under an arbitrary valuation of the propositions.
    pub fn eval_with(&self, val: &dyn Fn(usize) -> bool) -> bool {
        match self {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Prop(p) => val(*p),
            Formula::Not(f) => !f.eval_with(val),
            Formula::And(a, b) => a.eval_with(val) && b.eval_with(val),
            Formula::Or(a, b) => a.eval_with(val) || b.eval_with(val),
            Formula::Implies(a, b) => !a.eval_with(val) || b.eval_with(val),
            Formula::Iff(a, b) => a.eval_with(val) == b.eval_with(val),
        }
    }

    pub fn eval(&self, props: &PropSet, atom: Atom) -> bool {
        self.eval_with(&|p| props.holds(atom, p))
    }

    /// Largest proposition index mentioned, if any.
    pub fn max_prop(&self) -> Option<usize> {
        match self {
            Formula::Top | Formula::Bottom => None,
            Formula::Prop(p) => Some(*p),
            Formula::Not(f) => f.max_prop(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.max_prop().max(b.max_prop())
            }
        }
    }

    pub fn display<'a>(&'a self, props: &'a PropSet) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, props }
    }
}

/// Which of `φ_a → f` or `φ_a → ¬f` is valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entailment {
    Implies,
    ImpliesNegation,
}

pub fn eval_formula(f: &Formula, props: &PropSet, atom: Atom) -> bool {
    f.eval(props, atom)
}

/// The unique atom set `A` with `φ_A` equivalent to `f`.
pub fn atoms_of(f: &Formula, props: &PropSet) -> AtomSet {
    AtomSet(props.atoms().filter(|&a| f.eval(props, a)).map(Atom::index).collect())
}

pub fn entails_atom(atom: Atom, f: &Formula, props: &PropSet) -> Entailment {
    if f.eval(props, atom) {
        Entailment::Implies
    } else {
        Entailment::ImpliesNegation
    }
}

pub fn equivalent(f: &Formula, g: &Formula, props: &PropSet) -> bool {
    props.atoms().all(|a| f.eval(props, a) == g.eval(props, a))
}

/// `φ_a`: the conjunction of literals settling every proposition.
pub fn atom_formula(atom: Atom, props: &PropSet) -> Formula {
    (0..props.len())
        .map(|p| {
            if props.holds(atom, p) {
                Formula::prop(p)
            } else {
                Formula::not(Formula::prop(p))
            }
        })
        .reduce(Formula::and)
        .expect("proposition sets are nonempty")
}

/// `φ_A`: the disjunction of the member atoms; `false` for the empty set.
pub fn atom_set_formula(set: &AtomSet, props: &PropSet) -> Formula {
    set.iter()
        .map(|a| atom_formula(a, props))
        .reduce(Formula::or)
        .unwrap_or(Formula::Bottom)
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    props: &'a PropSet,
}

// Binding strength, loosest first.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(_) => 5,
        Formula::Top | Formula::Bottom | Formula::Prop(_) => 6,
    }
}

impl FormulaDisplay<'_> {
    fn child(&self, f: &Formula, min_prec: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if precedence(f) < min_prec {
            write!(out, "(")?;
            write_formula(f, self.props, out)?;
            write!(out, ")")
        } else {
            write_formula(f, self.props, out)
        }
    }
}

fn write_formula(f: &Formula, props: &PropSet, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    let d = FormulaDisplay { formula: f, props };
    let prec = precedence(f);
    // Left-associative operators parenthesize an equal-precedence right child;
    // `->` is right-associative and parenthesizes the left one instead.
    let (op, a, b, left_min, right_min) = match f {
        Formula::Top => return write!(out, "true"),
        Formula::Bottom => return write!(out, "false"),
        Formula::Prop(p) => return write!(out, "{}", props.name(*p)),
        Formula::Not(g) => {
            write!(out, "~")?;
            return d.child(g, prec, out);
        }
        Formula::And(a, b) => ("&", a, b, prec, prec + 1),
        Formula::Or(a, b) => ("|", a, b, prec, prec + 1),
        Formula::Implies(a, b) => ("->", a, b, prec + 1, prec),
        Formula::Iff(a, b) => ("<->", a, b, prec, prec + 1),
    };
    d.child(a, left_min, out)?;
    write!(out, " {op} ")?;
    d.child(b, right_min, out)
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self.formula, self.props, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pq() -> PropSet {
        PropSet::new(["p", "q"]).unwrap()
    }

    #[test]
    fn atom_enumeration_is_descending_bit_vector() {
        let props = pq();
        assert_eq!(props.atom_count(), 4);
        // a_1 = pq, a_2 = p~q, a_3 = ~pq, a_4 = ~p~q
        let expected = [(true, true), (true, false), (false, true), (false, false)];
        for (i, &(p, q)) in expected.iter().enumerate() {
            assert_eq!(props.holds(Atom(i), 0), p);
            assert_eq!(props.holds(Atom(i), 1), q);
        }
        assert_eq!(props.atom_of_assignment(&[1]), Atom(2));
        assert_eq!(props.atom_of_assignment(&[]), Atom(3));
    }

    #[test]
    fn rejects_bad_prop_sets() {
        assert!(PropSet::new(Vec::<String>::new()).is_err());
        assert!(PropSet::new(["p", "p"]).is_err());
        assert!(PropSet::new(["if"]).is_err());
        assert!(PropSet::new(["1x"]).is_err());
    }

    #[test]
    fn atoms_of_basic_cases() {
        let props = pq();
        let p = Formula::prop(0);
        let q = Formula::prop(1);
        assert_eq!(
            atoms_of(&Formula::or(p.clone(), q.clone()), &props),
            AtomSet::from_indices([0, 1, 2])
        );
        assert_eq!(atoms_of(&Formula::Top, &props), AtomSet::all(&props));
        let contradiction = Formula::and(p.clone(), Formula::not(p.clone()));
        assert!(atoms_of(&contradiction, &props).is_empty());
        for a in props.atoms() {
            assert!(!contradiction.eval(&props, a));
        }
    }

    #[test]
    fn atom_formulas_are_mutually_exclusive() {
        let props = PropSet::new(["a", "b", "c"]).unwrap();
        for a in props.atoms() {
            let phi = atom_formula(a, &props);
            for b in props.atoms() {
                assert_eq!(phi.eval(&props, b), a == b);
            }
        }
    }

    #[test]
    fn entailment_branches() {
        let props = pq();
        let p_or_q = Formula::or(Formula::prop(0), Formula::prop(1));
        let atom_p = props.atom_of_assignment(&[0]);
        assert_eq!(entails_atom(atom_p, &p_or_q, &props), Entailment::Implies);
        let atom_none = props.atom_of_assignment(&[]);
        assert_eq!(
            entails_atom(atom_none, &Formula::prop(0), &props),
            Entailment::ImpliesNegation
        );
        assert_eq!(entails_atom(atom_none, &Formula::Top, &props), Entailment::Implies);
    }

    #[test]
    fn equivalence_is_semantic() {
        let props = pq();
        let (p, q) = (Formula::prop(0), Formula::prop(1));
        assert!(equivalent(
            &Formula::or(p.clone(), q.clone()),
            &Formula::or(q.clone(), p.clone()),
            &props
        ));
        let taut = Formula::or(q.clone(), Formula::not(q.clone()));
        assert!(equivalent(&p, &Formula::and(p.clone(), taut), &props));
        assert!(!equivalent(&p, &q, &props));
    }

    #[test]
    fn empty_atom_set_is_bottom() {
        let props = pq();
        assert_eq!(atom_set_formula(&AtomSet::empty(), &props), Formula::Bottom);
    }

    #[test]
    fn display_keeps_structure() {
        let props = pq();
        let (p, q) = (Formula::prop(0), Formula::prop(1));
        let f = Formula::implies(Formula::implies(p.clone(), q.clone()), p.clone());
        assert_eq!(f.display(&props).to_string(), "(p -> q) -> p");
        let g = Formula::and(p.clone(), Formula::and(q.clone(), Formula::not(p.clone())));
        assert_eq!(g.display(&props).to_string(), "p & (q & ~p)");
        let h = Formula::not(Formula::or(p, q));
        assert_eq!(h.display(&props).to_string(), "~(p | q)");
    }
}
