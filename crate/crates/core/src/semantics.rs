//! Basic models, selection models and the interpretation of actions as
//! state transformers.

use std::collections::HashMap;

use serde_json::{json, Map, Value};

use crate::actions::{ensure_valid, Action, ActionLibrary};
use crate::error::{Error, Result};
use crate::json::{atom_set_from_json, atom_set_to_json};
use crate::logic::{atoms_of, Atom, AtomSet, Formula, PropSet};

/// A finite set of named states with a valuation of the propositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicModel {
    props: PropSet,
    states: Vec<String>,
    index: HashMap<String, usize>,
    // truth[state][prop]
    truth: Vec<Vec<bool>>,
}

impl BasicModel {
    /// `valuation[p]` lists the states where proposition `p` holds.
    pub fn new(props: PropSet, states: Vec<String>, valuation: &[Vec<usize>]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidModel("no states".into()));
        }
        if valuation.len() != props.len() {
            return Err(Error::InvalidModel(format!(
                "valuation covers {} of {} propositions",
                valuation.len(),
                props.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate state `{s}`")));
            }
        }
        let mut truth = vec![vec![false; props.len()]; states.len()];
        for (p, ext) in valuation.iter().enumerate() {
            for &s in ext {
                let row = truth
                    .get_mut(s)
                    .ok_or_else(|| Error::InvalidModel(format!("state index {s} out of range")))?;
                row[p] = true;
            }
        }
        Ok(Self {
            props,
            states,
            index,
            truth,
        })
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.states[state]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    /// The atom describing the state.
    pub fn atom_of(&self, state: usize) -> Atom {
        let true_props: Vec<usize> = (0..self.props.len()).filter(|&p| self.truth[state][p]).collect();
        self.props.atom_of_assignment(&true_props)
    }

    pub fn state_satisfies(&self, state: usize, f: &Formula) -> Result<bool> {
        let row = self
            .truth
            .get(state)
            .ok_or_else(|| Error::UnknownState(format!("#{state}")))?;
        Ok(f.eval_with(&|p| row[p]))
    }

    /// `⟦f⟧`: the states satisfying `f`.
    pub fn extension(&self, f: &Formula) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&s| f.eval_with(&|p| self.truth[s][p]))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let mut val = Map::new();
        for (p, name) in self.props.names().iter().enumerate() {
            let ext: Vec<&str> = (0..self.states.len())
                .filter(|&s| self.truth[s][p])
                .map(|s| self.states[s].as_str())
                .collect();
            val.insert(name.clone(), json!(ext));
        }
        json!({ "states": self.states, "valuation": val })
    }
}

/// The effects of `F` with an empty extension in `model`; empty when the
/// model is F-rich.
pub fn is_f_rich(model: &BasicModel, lib: &ActionLibrary) -> Vec<Formula> {
    lib.effects()
        .iter()
        .filter(|f| model.extension(f).is_empty())
        .cloned()
        .collect()
}

/// A basic model with a selection function, stored extensionally and keyed
/// by the effect's atom set so equivalent effects share entries.
#[derive(Debug, Clone)]
pub struct SelectionModel {
    model: BasicModel,
    sel: HashMap<(usize, AtomSet), usize>,
}

impl SelectionModel {
    pub fn new(model: BasicModel) -> Self {
        Self {
            model,
            sel: HashMap::new(),
        }
    }

    /// Sets `sel(from, φ_A) = to`; `to` must satisfy `φ_A`.
    pub fn set(&mut self, from: usize, effect: AtomSet, to: usize) -> Result<()> {
        if from >= self.model.state_count() || to >= self.model.state_count() {
            return Err(Error::InvalidModel("selection refers to an unknown state".into()));
        }
        if !effect.contains(self.model.atom_of(to)) {
            return Err(Error::InvalidModel(format!(
                "sel({}, ..) = {} does not satisfy the effect",
                self.model.state_name(from),
                self.model.state_name(to)
            )));
        }
        self.sel.insert((from, effect), to);
        Ok(())
    }

    pub fn model(&self) -> &BasicModel {
        &self.model
    }

    pub fn select(&self, from: usize, effect: &AtomSet) -> Result<usize> {
        self.sel
            .get(&(from, effect.clone()))
            .copied()
            .ok_or_else(|| Error::MissingSelection {
                state: self.model.state_name(from).to_string(),
                effect: effect.indices().iter().map(|i| i + 1).collect(),
            })
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &AtomSet, usize)> {
        self.sel.iter().map(|((from, a), to)| (*from, a, *to))
    }

    pub fn from_json(v: &Value, props: &PropSet) -> Result<Self> {
        let states: Vec<String> = v
            .get("states")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("model needs `states`".into()))?
            .iter()
            .map(state_name_from_json)
            .collect::<Result<_>>()?;
        let lookup: HashMap<&str, usize> = states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let find = |s: &str| lookup.get(s).copied().ok_or_else(|| Error::UnknownState(s.to_string()));
        let val = v
            .get("valuation")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Json("model needs `valuation`".into()))?;
        let mut valuation = Vec::with_capacity(props.len());
        for name in props.names() {
            let ext = val
                .get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidModel(format!("no valuation for `{name}`")))?;
            valuation.push(
                ext.iter()
                    .map(|s| find(&state_name_from_json(s)?))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if let Some(extra) = val.keys().find(|k| props.lookup(k).is_none()) {
            return Err(Error::UnknownProposition(extra.clone()));
        }
        let model = BasicModel::new(props.clone(), states.clone(), &valuation)?;
        let mut sm = SelectionModel::new(model);
        if let Some(entries) = v.get("sel").and_then(Value::as_array) {
            for e in entries {
                let from = find(&state_name_from_json(&e["from"])?)?;
                let to = find(&state_name_from_json(&e["to"])?)?;
                let effect = atom_set_from_json(&e["effect_atoms"], props)?;
                sm.set(from, effect, to)?;
            }
        }
        Ok(sm)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.model.to_json();
        let mut sel: Vec<_> = self.sel.iter().collect();
        sel.sort();
        v["sel"] = Value::Array(
            sel.into_iter()
                .map(|((from, a), to)| {
                    json!({
                        "from": self.model.state_name(*from),
                        "effect_atoms": atom_set_to_json(a),
                        "to": self.model.state_name(*to),
                    })
                })
                .collect(),
        );
        v
    }
}

fn state_name_from_json(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Json(format!("bad state id {other}"))),
    }
}

/// `⟦α⟧(ω)`. The action must be well-formed over `lib`.
pub fn interpret(action: &Action, sm: &SelectionModel, lib: &ActionLibrary, state: usize) -> Result<usize> {
    ensure_valid(action, lib)?;
    if state >= sm.model.state_count() {
        return Err(Error::UnknownState(format!("#{state}")));
    }
    run(action, sm, state)
}

fn run(action: &Action, sm: &SelectionModel, state: usize) -> Result<usize> {
    match action {
        Action::Noop => Ok(state),
        Action::Do(f) => sm.select(state, &atoms_of(f, sm.model.props())),
        Action::Ite(test, then, otherwise) => {
            if sm.model.state_satisfies(state, test)? {
                run(then, sm, state)
            } else {
                run(otherwise, sm, state)
            }
        }
        Action::Seq(first, second) => {
            let mid = run(first, sm, state)?;
            run(second, sm, mid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_action, parse_formula};

    fn setup() -> (ActionLibrary, SelectionModel) {
        let props = PropSet::new(["p", "q"]).unwrap();
        let lib = ActionLibrary::new(
            props.clone(),
            vec![parse_formula("p", &props).unwrap(), parse_formula("q", &props).unwrap()],
        )
        .unwrap();
        let v = json!({
            "states": ["w0", "w1", "w2"],
            "valuation": {"p": ["w1", "w2"], "q": ["w2"]},
            "sel": [
                {"from": "w0", "effect_atoms": [1, 2], "to": "w1"},
                {"from": "w1", "effect_atoms": [1, 2], "to": "w1"},
                {"from": "w2", "effect_atoms": [1, 2], "to": "w2"},
                {"from": "w0", "effect_atoms": [1, 3], "to": "w2"},
                {"from": "w1", "effect_atoms": [1, 3], "to": "w2"}
            ]
        });
        let sm = SelectionModel::from_json(&v, &props).unwrap();
        (lib, sm)
    }

    #[test]
    fn satisfaction() {
        let (lib, sm) = setup();
        let m = sm.model();
        let props = lib.props();
        let p = parse_formula("p", props).unwrap();
        let not_p = parse_formula("~p", props).unwrap();
        let p_or_q = parse_formula("p | q", props).unwrap();
        assert!(m.state_satisfies(1, &p).unwrap());
        assert!(m.state_satisfies(0, &not_p).unwrap());
        for s in 0..3 {
            let expected =
                m.state_satisfies(s, &p).unwrap() || m.state_satisfies(s, &parse_formula("q", props).unwrap()).unwrap();
            assert_eq!(m.state_satisfies(s, &p_or_q).unwrap(), expected);
        }
        assert!(m.state_satisfies(7, &p).is_err());
    }

    #[test]
    fn interpretation_clauses() {
        let (lib, sm) = setup();
        let noop = Action::Noop;
        assert_eq!(interpret(&noop, &sm, &lib, 0).unwrap(), 0);
        let do_p = parse_action("do(p)", &lib).unwrap();
        assert_eq!(interpret(&do_p, &sm, &lib, 0).unwrap(), 1);
        let seq = parse_action("do(p); do(q)", &lib).unwrap();
        assert_eq!(interpret(&seq, &sm, &lib, 0).unwrap(), 2);
        let ite = parse_action("if p then do(q) else do(p)", &lib).unwrap();
        assert_eq!(interpret(&ite, &sm, &lib, 0).unwrap(), 1);
        assert_eq!(interpret(&ite, &sm, &lib, 1).unwrap(), 2);
    }

    #[test]
    fn missing_selection_is_reported() {
        let (lib, sm) = setup();
        let a = parse_action("do(q)", &lib).unwrap();
        match interpret(&a, &sm, &lib, 2) {
            Err(Error::MissingSelection { state, effect }) => {
                assert_eq!(state, "w2");
                assert_eq!(effect, vec![1, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn selection_must_land_in_effect() {
        let (_, mut sm) = setup();
        // w0 satisfies neither p nor q
        assert!(sm.set(1, AtomSet::from_indices([0, 1]), 0).is_err());
    }

    #[test]
    fn f_richness() {
        let (lib, sm) = setup();
        assert!(is_f_rich(sm.model(), &lib).is_empty());
        let props = lib.props().clone();
        let poor = BasicModel::new(props, vec!["only".into()], &[vec![0], vec![]]).unwrap();
        let missing = is_f_rich(&poor, &lib);
        assert_eq!(missing, vec![Formula::prop(1)]);
    }

    #[test]
    fn model_json_roundtrip() {
        let (lib, sm) = setup();
        let again = SelectionModel::from_json(&sm.to_json(), lib.props()).unwrap();
        assert_eq!(again.to_json(), sm.to_json());
    }
}
