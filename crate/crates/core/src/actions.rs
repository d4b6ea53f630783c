//! Sequential actions over a finite library of effect formulas.

use std::fmt;

use crate::error::{Error, Result};
use crate::logic::{atoms_of, AtomSet, Formula, PropSet};

/// The effect formulas `F` allowed inside `do(..)`, together with their
/// equivalence classes `F̃` (as atom sets, in order of first appearance).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionLibrary {
    props: PropSet,
    effects: Vec<Formula>,
    classes: Vec<AtomSet>,
}

impl ActionLibrary {
    /// Every effect must be satisfiable.
    pub fn new(props: PropSet, effects: Vec<Formula>) -> Result<Self> {
        let mut lib = Self {
            props,
            effects: Vec::new(),
            classes: Vec::new(),
        };
        for f in effects {
            lib.admit(f)?;
        }
        Ok(lib)
    }

    /// A library whose classes are exactly `classes` (each realized by `φ_A`).
    pub fn from_classes(props: PropSet, classes: &[AtomSet]) -> Result<Self> {
        let effects = classes
            .iter()
            .map(|c| crate::logic::atom_set_formula(c, &props))
            .collect();
        Self::new(props, effects)
    }

    /// Adds `f` to `F` (a no-op for formulas already present verbatim).
    pub fn admit(&mut self, f: Formula) -> Result<()> {
        if f.max_prop().is_some_and(|p| p >= self.props.len()) {
            return Err(Error::InvalidPropSet(
                "effect mentions a proposition outside the set".into(),
            ));
        }
        let set = atoms_of(&f, &self.props);
        if set.is_empty() {
            return Err(Error::UnsatisfiableEffect(f.display(&self.props).to_string()));
        }
        if !self.classes.contains(&set) {
            self.classes.push(set);
        }
        if !self.effects.contains(&f) {
            self.effects.push(f);
        }
        Ok(())
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn effects(&self) -> &[Formula] {
        &self.effects
    }

    /// `F̃`: the distinct atom sets of the effects.
    pub fn classes(&self) -> &[AtomSet] {
        &self.classes
    }

    pub fn atom_count(&self) -> usize {
        self.props.atom_count()
    }

    /// Effects are compared semantically: `f` is admissible iff its atom set
    /// is one of the classes.
    pub fn contains_effect(&self, f: &Formula) -> bool {
        self.classes.contains(&atoms_of(f, &self.props))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Noop,
    Do(Formula),
    Ite(Formula, Box<Action>, Box<Action>),
    Seq(Box<Action>, Box<Action>),
}

impl Action {
    pub fn act(f: Formula) -> Self {
        Action::Do(f)
    }

    pub fn ite(test: Formula, then: Action, otherwise: Action) -> Self {
        Action::Ite(test, Box::new(then), Box::new(otherwise))
    }

    pub fn seq(first: Action, second: Action) -> Self {
        Action::Seq(Box::new(first), Box::new(second))
    }

    pub fn is_noop(&self) -> bool {
        matches!(self, Action::Noop)
    }

    /// Minimal depth: `if` does not add depth, sequencing sums depths.
    pub fn depth(&self) -> usize {
        match self {
            Action::Noop => 0,
            Action::Do(_) => 1,
            Action::Ite(_, a, b) => a.depth().max(b.depth()),
            Action::Seq(a, b) => a.depth() + b.depth(),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Action::Noop | Action::Do(_) => 1,
            Action::Ite(_, a, b) | Action::Seq(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn display<'a>(&'a self, props: &'a PropSet) -> ActionDisplay<'a> {
        ActionDisplay { action: self, props }
    }
}

pub fn depth(action: &Action) -> usize {
    action.depth()
}

/// A grammar or library violation at a subterm. `path` lists the child
/// positions from the root (`then`, `else`, `first`, `second`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: Vec<&'static str>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "at root: {}", self.message)
        } else {
            write!(f, "at {}: {}", self.path.join("."), self.message)
        }
    }
}

/// Lists every subterm that violates the grammar or uses an effect outside
/// the library. An empty list means the action is well-formed.
pub fn validate(action: &Action, lib: &ActionLibrary) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    validate_into(action, lib, &mut path, &mut out);
    out
}

pub fn ensure_valid(action: &Action, lib: &ActionLibrary) -> Result<()> {
    let violations = validate(action, lib);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::IllFormed(violations.iter().map(ToString::to_string).collect()))
    }
}

fn validate_into(action: &Action, lib: &ActionLibrary, path: &mut Vec<&'static str>, out: &mut Vec<Violation>) {
    let props = lib.props();
    let mut report = |path: &Vec<&'static str>, message: String| {
        out.push(Violation {
            path: path.clone(),
            message,
        })
    };
    match action {
        Action::Noop => {}
        Action::Do(f) => {
            if f.max_prop().is_some_and(|p| p >= props.len()) {
                report(path, "effect mentions an unknown proposition".into());
            } else if atoms_of(f, props).is_empty() {
                report(path, format!("effect `{}` is unsatisfiable", f.display(props)));
            } else if !lib.contains_effect(f) {
                report(path, format!("effect `{}` is not in F", f.display(props)));
            }
        }
        Action::Ite(test, a, b) => {
            if test.max_prop().is_some_and(|p| p >= props.len()) {
                report(path, "test mentions an unknown proposition".into());
            }
            if a.is_noop() && b.is_noop() {
                report(path, "both branches of `if` are noop".into());
            }
            for (label, child) in [("then", a), ("else", b)] {
                path.push(label);
                validate_into(child, lib, path, out);
                path.pop();
            }
        }
        Action::Seq(a, b) => {
            if a.is_noop() && b.is_noop() {
                report(path, "both sides of `;` are noop".into());
            }
            for (label, child) in [("first", a), ("second", b)] {
                path.push(label);
                validate_into(child, lib, path, out);
                path.pop();
            }
        }
    }
}

pub struct ActionDisplay<'a> {
    action: &'a Action,
    props: &'a PropSet,
}

fn write_unit(a: &Action, props: &PropSet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if matches!(a, Action::Seq(..)) {
        write!(f, "(")?;
        write_action(a, props, f)?;
        write!(f, ")")
    } else {
        write_action(a, props, f)
    }
}

fn write_action(a: &Action, props: &PropSet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        Action::Noop => write!(f, "noop"),
        Action::Do(phi) => write!(f, "do({})", phi.display(props)),
        Action::Ite(test, then, otherwise) => {
            write!(f, "if {} then ", test.display(props))?;
            write_unit(then, props, f)?;
            write!(f, " else ")?;
            write_unit(otherwise, props, f)
        }
        Action::Seq(first, second) => {
            // `;` is left-associative: only a sequenced right side needs parens.
            write_action(first, props, f)?;
            write!(f, "; ")?;
            write_unit(second, props, f)
        }
    }
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_action(self.action, self.props, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> ActionLibrary {
        let props = PropSet::new(["p", "q"]).unwrap();
        ActionLibrary::new(props, vec![Formula::prop(0), Formula::prop(1)]).unwrap()
    }

    #[test]
    fn depth_rules() {
        let p = Formula::prop(0);
        let q = Formula::prop(1);
        assert_eq!(Action::Noop.depth(), 0);
        assert_eq!(Action::ite(p.clone(), Action::act(q.clone()), Action::Noop).depth(), 1);
        let three = Action::seq(Action::seq(Action::act(p.clone()), Action::act(q)), Action::act(p));
        assert_eq!(three.depth(), 3);
    }

    #[test]
    fn validate_flags_double_noop() {
        let lib = lib();
        let bad = Action::seq(Action::Noop, Action::Noop);
        assert_eq!(validate(&bad, &lib).len(), 1);
        let bad_ite = Action::ite(Formula::Top, Action::Noop, Action::Noop);
        assert_eq!(validate(&bad_ite, &lib).len(), 1);
    }

    #[test]
    fn validate_flags_effects_outside_f() {
        let lib = lib();
        let p = Formula::prop(0);
        let contradiction = Formula::and(p.clone(), Formula::not(p.clone()));
        let v = validate(&Action::act(contradiction), &lib);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("unsatisfiable"));
        let v = validate(&Action::act(Formula::not(p.clone())), &lib);
        assert!(v[0].message.contains("not in F"));
        // semantic membership: p & (q | ~q) is equivalent to p
        let q = Formula::prop(1);
        let p_equiv = Formula::and(p, Formula::or(q.clone(), Formula::not(q)));
        assert!(validate(&Action::act(p_equiv), &lib).is_empty());
    }

    #[test]
    fn nested_violations_report_paths() {
        let lib = lib();
        let inner = Action::seq(Action::Noop, Action::Noop);
        let a = Action::ite(Formula::prop(0), Action::act(Formula::prop(1)), inner);
        let v = validate(&a, &lib);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, vec!["else"]);
    }

    #[test]
    fn library_rejects_unsatisfiable_effect() {
        let props = PropSet::new(["p"]).unwrap();
        let p = Formula::prop(0);
        let err = ActionLibrary::new(props, vec![Formula::and(p.clone(), Formula::not(p))]);
        assert!(matches!(err, Err(Error::UnsatisfiableEffect(_))));
    }

    #[test]
    fn classes_deduplicate_equivalent_effects() {
        let props = PropSet::new(["p", "q"]).unwrap();
        let (p, q) = (Formula::prop(0), Formula::prop(1));
        let lib = ActionLibrary::new(
            props,
            vec![Formula::or(p.clone(), q.clone()), Formula::or(q, p.clone()), p],
        )
        .unwrap();
        assert_eq!(lib.effects().len(), 3);
        assert_eq!(lib.classes().len(), 2);
    }
}
