//! Canonical maps `c_α` and canonical actions `γ_α`.
//!
//! A canonical map sends every atom to one of three normal-form first
//! steps: do nothing, `do(φ_A)`, or `do(φ_A)` followed by a canonical
//! action. `do(φ_A); noop` is identified with `do(φ_A)`, so the
//! continuation of a [`CanonicalEntry::DoASeq`] is never the all-noop map.

use std::sync::Arc;

use num_bigint::BigUint;
use serde_json::{json, Map, Value};

use crate::actions::{ensure_valid, Action, ActionLibrary};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::json::{atom_from_index, atom_set_from_json, atom_set_to_json};
use crate::logic::{atom_formula, atom_set_formula, atoms_of, Atom, AtomSet, PropSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalEntry {
    Noop,
    DoA(AtomSet),
    DoASeq(AtomSet, Arc<CanonicalMap>),
}

impl CanonicalEntry {
    pub fn depth(&self) -> usize {
        match self {
            CanonicalEntry::Noop => 0,
            CanonicalEntry::DoA(_) => 1,
            CanonicalEntry::DoASeq(_, rest) => 1 + rest.depth(),
        }
    }

    pub fn is_noop(&self) -> bool {
        matches!(self, CanonicalEntry::Noop)
    }

    /// The atom set of the first step, if any.
    pub fn first_step(&self) -> Option<&AtomSet> {
        match self {
            CanonicalEntry::Noop => None,
            CanonicalEntry::DoA(a) | CanonicalEntry::DoASeq(a, _) => Some(a),
        }
    }

    /// The continuation after the first step; `None` for `Noop` and `DoA`.
    pub fn rest(&self) -> Option<&Arc<CanonicalMap>> {
        match self {
            CanonicalEntry::DoASeq(_, rest) => Some(rest),
            _ => None,
        }
    }

    /// `do(φ_A); rest`, collapsing to `do(φ_A)` when `rest` is all noop.
    pub fn then(set: AtomSet, rest: Arc<CanonicalMap>) -> Self {
        if rest.is_noop() {
            CanonicalEntry::DoA(set)
        } else {
            CanonicalEntry::DoASeq(set, rest)
        }
    }

    /// The entry at `atom` of the map of `α; β`, where `self` is `c_α(atom)`
    /// and `second` is `c_β`.
    pub fn followed_by(&self, atom: Atom, second: &Arc<CanonicalMap>) -> CanonicalEntry {
        match self {
            CanonicalEntry::Noop => second.entries[atom.0].clone(),
            CanonicalEntry::DoA(a) => CanonicalEntry::then(a.clone(), Arc::clone(second)),
            CanonicalEntry::DoASeq(a, rest) => {
                CanonicalEntry::DoASeq(a.clone(), Arc::new(CanonicalMap::compose(rest, second)))
            }
        }
    }

    /// The action realizing this entry: `noop`, `do(φ_A)` or `do(φ_A); γ`.
    pub fn to_action(&self, props: &PropSet) -> Action {
        match self {
            CanonicalEntry::Noop => Action::Noop,
            CanonicalEntry::DoA(a) => Action::act(atom_set_formula(a, props)),
            CanonicalEntry::DoASeq(a, rest) => {
                Action::seq(Action::act(atom_set_formula(a, props)), rest.to_action(props))
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CanonicalEntry::Noop => json!("noop"),
            CanonicalEntry::DoA(a) => json!({ "doA": atom_set_to_json(a) }),
            CanonicalEntry::DoASeq(a, rest) => {
                json!({ "doA_seq": [atom_set_to_json(a), rest.to_json()] })
            }
        }
    }

    pub fn from_json(v: &Value, props: &PropSet) -> Result<Self> {
        if v.as_str() == Some("noop") {
            return Ok(CanonicalEntry::Noop);
        }
        if let Some(a) = v.get("doA") {
            return Ok(CanonicalEntry::DoA(atom_set_from_json(a, props)?));
        }
        if let Some(pair) = v.get("doA_seq").and_then(Value::as_array) {
            if pair.len() == 2 {
                let set = atom_set_from_json(&pair[0], props)?;
                let rest = CanonicalMap::from_json(&pair[1], props)?;
                return Ok(CanonicalEntry::then(set, Arc::new(rest)));
            }
        }
        Err(Error::Json(format!("not a canonical entry: {v}")))
    }
}

/// A total function from atoms to canonical entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalMap {
    entries: Vec<CanonicalEntry>,
}

impl CanonicalMap {
    pub fn new(entries: Vec<CanonicalEntry>) -> Self {
        Self { entries }
    }

    pub fn noop(atom_count: usize) -> Self {
        Self::constant(atom_count, CanonicalEntry::Noop)
    }

    pub fn constant(atom_count: usize, entry: CanonicalEntry) -> Self {
        Self {
            entries: vec![entry; atom_count],
        }
    }

    pub fn entries(&self) -> &[CanonicalEntry] {
        &self.entries
    }

    pub fn get(&self, atom: Atom) -> &CanonicalEntry {
        &self.entries[atom.0]
    }

    pub fn atom_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_noop(&self) -> bool {
        self.entries.iter().all(CanonicalEntry::is_noop)
    }

    pub fn depth(&self) -> usize {
        self.entries.iter().map(CanonicalEntry::depth).max().unwrap_or(0)
    }

    /// The map of `α; β` from the maps of `α` and `β`.
    pub fn compose(first: &CanonicalMap, second: &Arc<CanonicalMap>) -> CanonicalMap {
        let entries = first
            .entries
            .iter()
            .enumerate()
            .map(|(a, e)| e.followed_by(Atom(a), second))
            .collect();
        CanonicalMap { entries }
    }

    /// The nested `if φ_{a_1} then .. else ..` chain realizing this map.
    ///
    /// When the last two entries are both noop the chain is cut after the
    /// greatest index carrying a non-noop entry and closed with `else noop`.
    pub fn to_action(&self, props: &PropSet) -> Action {
        let n = self.entries.len();
        let Some(last) = self.entries.iter().rposition(|e| !e.is_noop()) else {
            return Action::Noop;
        };
        let (mut tail, ifs) = if last + 2 >= n {
            (self.entries[n - 1].to_action(props), n - 1)
        } else {
            (Action::Noop, last + 1)
        };
        for i in (0..ifs).rev() {
            tail = Action::ite(atom_formula(Atom(i), props), self.entries[i].to_action(props), tail);
        }
        tail
    }

    /// `{"1": entry, "2": entry, ...}` keyed by 1-based atom index.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        for (i, e) in self.entries.iter().enumerate() {
            obj.insert((i + 1).to_string(), e.to_json());
        }
        Value::Object(obj)
    }

    pub fn from_json(v: &Value, props: &PropSet) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Json(format!("not a canonical map: {v}")))?;
        let mut entries = vec![None; props.atom_count()];
        for (k, e) in obj {
            let idx: usize = k.parse().map_err(|_| Error::Json(format!("bad atom key `{k}`")))?;
            let atom = atom_from_index(idx, props)?;
            entries[atom.0] = Some(CanonicalEntry::from_json(e, props)?);
        }
        let entries = entries
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Json("canonical map is not total".into()))?;
        Ok(Self { entries })
    }
}

/// `γ_α` together with the map it realizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalAction {
    pub action: Action,
    pub map: CanonicalMap,
}

/// Computes `c_α`. The action must be well-formed over `lib`.
pub fn canonical_map(action: &Action, lib: &ActionLibrary) -> Result<CanonicalMap> {
    ensure_valid(action, lib)?;
    Ok(canonical_map_unchecked(action, lib.props()))
}

pub(crate) fn canonical_map_unchecked(action: &Action, props: &PropSet) -> CanonicalMap {
    let n = props.atom_count();
    match action {
        Action::Noop => CanonicalMap::noop(n),
        Action::Do(f) => CanonicalMap::constant(n, CanonicalEntry::DoA(atoms_of(f, props))),
        Action::Ite(test, then, otherwise) => {
            let t = canonical_map_unchecked(then, props);
            let e = canonical_map_unchecked(otherwise, props);
            let entries = props
                .atoms()
                .map(|a| {
                    if test.eval(props, a) {
                        t.entries[a.0].clone()
                    } else {
                        e.entries[a.0].clone()
                    }
                })
                .collect();
            CanonicalMap { entries }
        }
        Action::Seq(first, second) => {
            let f = canonical_map_unchecked(first, props);
            let s = Arc::new(canonical_map_unchecked(second, props));
            CanonicalMap::compose(&f, &s)
        }
    }
}

pub fn canonical_action(action: &Action, lib: &ActionLibrary) -> Result<CanonicalAction> {
    let map = canonical_map(action, lib)?;
    Ok(CanonicalAction {
        action: map.to_action(lib.props()),
        map,
    })
}

/// `|CA^{k,-}|` for a library with `classes` classes over `atoms` atoms.
pub fn ca_minus_count(k: usize, classes: usize, atoms: usize) -> BigUint {
    if k == 0 {
        return BigUint::from(1u32);
    }
    let maps = cm_count(k - 1, classes, atoms);
    BigUint::from(1u32) + BigUint::from(classes) * maps
}

/// `|CM^k| = |CA^k|`: every total map into `CA^{k,-}`.
pub fn cm_count(k: usize, classes: usize, atoms: usize) -> BigUint {
    ca_minus_count(k, classes, atoms).pow(atoms as u32)
}

/// `CA^{k,-}`: `Noop`, every `DoA(A)`, then every `DoASeq(A, m)` with `m`
/// a non-noop map of depth at most `k - 1`.
pub fn enumerate_ca_minus(k: usize, lib: &ActionLibrary, budget: Budget) -> Result<Vec<CanonicalEntry>> {
    let n = lib.atom_count();
    let classes = lib.classes();
    budget.check("CA^{k,-} entries", &ca_minus_count(k, classes.len(), n))?;
    let mut out = vec![CanonicalEntry::Noop];
    if k == 0 {
        return Ok(out);
    }
    out.extend(classes.iter().cloned().map(CanonicalEntry::DoA));
    if k >= 2 {
        let rests: Vec<Arc<CanonicalMap>> = enumerate_cm(k - 1, lib, budget)?
            .into_iter()
            .filter(|m| !m.is_noop())
            .map(Arc::new)
            .collect();
        for a in classes {
            for m in &rests {
                out.push(CanonicalEntry::DoASeq(a.clone(), Arc::clone(m)));
            }
        }
    }
    Ok(out)
}

/// `CM^k`: all total maps from atoms into `CA^{k,-}`, in mixed-radix order
/// with atom `a_1` varying slowest.
pub fn enumerate_cm(k: usize, lib: &ActionLibrary, budget: Budget) -> Result<Vec<CanonicalMap>> {
    let n = lib.atom_count();
    budget.check("CM^k maps", &cm_count(k, lib.classes().len(), n))?;
    let entries = enumerate_ca_minus(k, lib, budget)?;
    let radix = entries.len();
    let total = radix.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        out.push(CanonicalMap {
            entries: digits.iter().map(|&d| entries[d].clone()).collect(),
        });
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < radix {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// `CA^k`: the canonical actions of all maps in `CM^k`.
pub fn enumerate_ca(k: usize, lib: &ActionLibrary, budget: Budget) -> Result<Vec<CanonicalAction>> {
    Ok(enumerate_cm(k, lib, budget)?
        .into_iter()
        .map(|map| CanonicalAction {
            action: map.to_action(lib.props()),
            map,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Formula;
    use crate::syntax::{parse_action, parse_formula};

    fn lib_pq(effects: &[&str]) -> ActionLibrary {
        let props = PropSet::new(["p", "q"]).unwrap();
        let fs = effects.iter().map(|s| parse_formula(s, &props).unwrap()).collect();
        ActionLibrary::new(props, fs).unwrap()
    }

    fn lib_n2(classes: &[&[usize]]) -> ActionLibrary {
        let props = PropSet::new(["p"]).unwrap();
        let sets: Vec<AtomSet> = classes
            .iter()
            .map(|c| AtomSet::from_indices(c.iter().copied()))
            .collect();
        ActionLibrary::from_classes(props, &sets).unwrap()
    }

    #[test]
    fn noop_map_and_action() {
        let lib = lib_pq(&["p"]);
        let m = canonical_map(&Action::Noop, &lib).unwrap();
        assert!(m.is_noop());
        assert_eq!(canonical_action(&Action::Noop, &lib).unwrap().action, Action::Noop);
    }

    #[test]
    fn do_maps_to_its_atom_set_everywhere() {
        let lib = lib_pq(&["p | q"]);
        let a = parse_action("do(p | q)", &lib).unwrap();
        let m = canonical_map(&a, &lib).unwrap();
        let expected = CanonicalEntry::DoA(AtomSet::from_indices([0, 1, 2]));
        assert!(m.entries().iter().all(|e| *e == expected));
    }

    #[test]
    fn sequencing_clause_by_hand() {
        // if p then do(q) else noop; do(p)
        let lib = lib_pq(&["q", "p"]);
        let a = parse_action("if p then do(q) else noop; do(p)", &lib).unwrap();
        let m = canonical_map(&a, &lib).unwrap();
        let props = lib.props();
        let q_atoms = atoms_of(&Formula::prop(1), props);
        let p_atoms = atoms_of(&Formula::prop(0), props);
        let do_p = canonical_map(&parse_action("do(p)", &lib).unwrap(), &lib).unwrap();
        let pq = props.atom_of_assignment(&[0, 1]);
        let none = props.atom_of_assignment(&[]);
        assert_eq!(*m.get(pq), CanonicalEntry::DoASeq(q_atoms, Arc::new(do_p)));
        assert_eq!(*m.get(none), CanonicalEntry::DoA(p_atoms));
    }

    #[test]
    fn trailing_noop_collapses() {
        let lib = lib_pq(&["p"]);
        let a = Action::seq(Action::act(Formula::prop(0)), Action::Noop);
        let b = Action::act(Formula::prop(0));
        assert_eq!(canonical_map(&a, &lib).unwrap(), canonical_map(&b, &lib).unwrap());
    }

    #[test]
    fn equivalent_effects_share_canonical_action() {
        let lib = lib_pq(&["p", "p & (q | ~q)"]);
        let a = canonical_action(&parse_action("do(p)", &lib).unwrap(), &lib).unwrap();
        let b = canonical_action(&parse_action("do(p & (q | ~q))", &lib).unwrap(), &lib).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_map_gives_full_chain() {
        let lib = lib_pq(&["p"]);
        let props = lib.props();
        let entry = CanonicalEntry::DoA(atoms_of(&Formula::prop(0), props));
        let m = CanonicalMap::constant(4, entry.clone());
        let act = m.to_action(props);
        // if φ_a1 then X else (if φ_a2 then X else (if φ_a3 then X else X))
        let x = entry.to_action(props);
        let mut expected = x.clone();
        for i in (0..3).rev() {
            expected = Action::ite(atom_formula(Atom(i), props), x.clone(), expected);
        }
        assert_eq!(act, expected);
    }

    #[test]
    fn truncation_stops_at_last_non_noop() {
        let lib = lib_pq(&["p"]);
        let props = lib.props();
        let x = CanonicalEntry::DoA(atoms_of(&Formula::prop(0), props));
        let m = CanonicalMap::new(vec![
            CanonicalEntry::Noop,
            x.clone(),
            CanonicalEntry::Noop,
            CanonicalEntry::Noop,
        ]);
        let act = m.to_action(props);
        let expected = Action::ite(
            atom_formula(Atom(0), props),
            Action::Noop,
            Action::ite(atom_formula(Atom(1), props), x.to_action(props), Action::Noop),
        );
        assert_eq!(act, expected);
        assert!(crate::actions::validate(&act, &lib).is_empty());
        assert_eq!(canonical_map(&act, &lib).unwrap(), m);
    }

    #[test]
    fn enumeration_sizes() {
        let lib = lib_n2(&[&[0], &[1], &[0, 1]]);
        let b = Budget::DEFAULT;
        assert_eq!(enumerate_ca_minus(0, &lib, b).unwrap(), vec![CanonicalEntry::Noop]);
        assert_eq!(enumerate_ca_minus(1, &lib, b).unwrap().len(), 4);
        let ca1 = enumerate_ca(1, &lib, b).unwrap();
        assert_eq!(ca1.len(), 16);
        // DoASeq(A, noop) is DoA(A), so the noop map is not a continuation.
        assert_eq!(enumerate_ca_minus(2, &lib, b).unwrap().len(), 1 + 3 + 3 * (16 - 1));
        assert_eq!(ca_minus_count(2, 3, 2), BigUint::from(49u32));
        assert_eq!(enumerate_ca(0, &lib, b).unwrap().len(), 1);
    }

    #[test]
    fn enumerated_canonical_actions_are_fixed_points() {
        let lib = lib_n2(&[&[0], &[1], &[0, 1]]);
        for ca in enumerate_ca(2, &lib, Budget::DEFAULT).unwrap() {
            let again = canonical_action(&ca.action, &lib).unwrap();
            assert_eq!(again, ca);
            assert!(ca.action.depth() <= 2);
        }
    }

    #[test]
    fn enumeration_respects_budget() {
        let lib = lib_n2(&[&[0], &[1], &[0, 1]]);
        let err = enumerate_ca_minus(3, &lib, Budget(1000)).unwrap_err();
        match err {
            Error::BudgetExceeded { count, .. } => assert_eq!(count, "7204"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn map_json_roundtrip() {
        let lib = lib_pq(&["q", "p"]);
        let a = parse_action("if p then do(q) else noop; do(p)", &lib).unwrap();
        let m = canonical_map(&a, &lib).unwrap();
        let v = m.to_json();
        assert_eq!(CanonicalMap::from_json(&v, lib.props()).unwrap(), m);
    }
}
