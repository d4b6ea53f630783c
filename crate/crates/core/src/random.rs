//! Seeded generators for formulas, libraries, actions, models, trees and
//! utility tables.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actions::{Action, ActionLibrary};
use crate::budget::Budget;
use crate::canonical::{canonical_map, enumerate_ca_minus};
use crate::error::Result;
use crate::json::Rational;
use crate::logic::{Atom, AtomSet, Formula, PropSet};
use crate::olt::{internal_count, Olt};
use crate::preferences::PreferenceOrder;
use crate::representation::StateDependentUtility;
use crate::semantics::{BasicModel, SelectionModel};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn formula(rng: &mut SeededRng, prop_count: usize, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..10) {
            0 => Formula::Top,
            1 => Formula::Bottom,
            _ => Formula::prop(rng.gen_range(0..prop_count)),
        };
    }
    let op = rng.gen_range(0..5);
    let a = formula(rng, prop_count, depth - 1);
    if op == 0 {
        return Formula::not(a);
    }
    let b = formula(rng, prop_count, depth - 1);
    match op {
        1 => Formula::and(a, b),
        2 => Formula::or(a, b),
        3 => Formula::implies(a, b),
        _ => Formula::iff(a, b),
    }
}

pub fn atom_set(rng: &mut SeededRng, atom_count: usize) -> AtomSet {
    loop {
        let set = AtomSet::from_indices((0..atom_count).filter(|_| rng.gen_bool(0.5)));
        if !set.is_empty() {
            return set;
        }
    }
}

/// A library with up to `classes` distinct classes, each given by a random
/// formula with that atom set.
pub fn library(rng: &mut SeededRng, props: &PropSet, classes: usize) -> ActionLibrary {
    let n = props.atom_count();
    let mut sets: Vec<AtomSet> = Vec::new();
    for _ in 0..classes * 4 {
        if sets.len() == classes {
            break;
        }
        let s = atom_set(rng, n);
        if !sets.contains(&s) {
            sets.push(s);
        }
    }
    ActionLibrary::from_classes(props.clone(), &sets).expect("nonempty classes")
}

/// A well-formed action of depth at most `depth`.
pub fn action(rng: &mut SeededRng, lib: &ActionLibrary, depth: usize) -> Action {
    action_sized(rng, lib, depth, 4)
}

fn action_sized(rng: &mut SeededRng, lib: &ActionLibrary, depth: usize, fuel: usize) -> Action {
    let effect = |rng: &mut SeededRng| Action::act(lib.effects().choose(rng).expect("nonempty library").clone());
    if depth == 0 {
        return Action::Noop;
    }
    if fuel == 0 {
        return if rng.gen_bool(0.2) { Action::Noop } else { effect(rng) };
    }
    match rng.gen_range(0..10) {
        0 => Action::Noop,
        1..=3 => effect(rng),
        4..=6 => {
            let test = formula(rng, lib.props().len(), 2);
            let a = action_sized(rng, lib, depth, fuel - 1);
            let mut b = action_sized(rng, lib, depth, fuel - 1);
            if a.is_noop() && b.is_noop() {
                b = effect(rng);
            }
            Action::ite(test, a, b)
        }
        _ => {
            let d1 = rng.gen_range(0..=depth);
            let a = action_sized(rng, lib, d1, fuel - 1);
            let mut b = action_sized(rng, lib, depth - d1, fuel - 1);
            if a.is_noop() && b.is_noop() {
                if depth - d1 == 0 {
                    return effect(rng);
                }
                b = effect(rng);
            }
            Action::seq(a, b)
        }
    }
}

/// Every atom gets one state, then up to `extra` more states on random
/// atoms; `sel` is total on every effect class.
pub fn selection_model(rng: &mut SeededRng, lib: &ActionLibrary, extra: usize) -> SelectionModel {
    let props = lib.props();
    let n = props.atom_count();
    let mut atoms: Vec<usize> = (0..n).collect();
    let more = rng.gen_range(0..=extra);
    atoms.extend((0..more).map(|_| rng.gen_range(0..n)));
    atoms.shuffle(rng);
    let names: Vec<String> = (0..atoms.len()).map(|i| format!("w{i}")).collect();
    let valuation: Vec<Vec<usize>> = (0..props.len())
        .map(|p| (0..atoms.len()).filter(|&s| props.holds(Atom(atoms[s]), p)).collect())
        .collect();
    let model = BasicModel::new(props.clone(), names, &valuation).expect("valid valuation");
    let mut sm = SelectionModel::new(model);
    for from in 0..atoms.len() {
        for set in lib.classes() {
            let targets: Vec<usize> = (0..atoms.len()).filter(|&s| set.contains(Atom(atoms[s]))).collect();
            let to = *targets.choose(rng).expect("every atom has a state");
            sm.set(from, set.clone(), to).expect("target satisfies the effect");
        }
    }
    sm
}

pub fn olt(rng: &mut SeededRng, k: usize, atom_count: usize) -> Olt {
    let root = Atom(rng.gen_range(0..atom_count));
    let orders = (0..internal_count(k, atom_count))
        .map(|_| {
            let mut p: Vec<usize> = (0..atom_count).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    Olt::new(k, atom_count, root, orders).expect("permutations")
}

/// Integer values in `0..=max` on every entry of `CA^{k,-}`.
pub fn utility(
    rng: &mut SeededRng,
    k: usize,
    lib: &ActionLibrary,
    max: i64,
    budget: Budget,
) -> Result<StateDependentUtility> {
    let mut v = StateDependentUtility::new(k, lib.atom_count());
    for e in enumerate_ca_minus(k, lib, budget)? {
        for a in lib.props().atoms() {
            v.set(a, e.clone(), Rational::from_integer(rng.gen_range(0..=max).into()));
        }
    }
    Ok(v)
}

pub fn pool(rng: &mut SeededRng, lib: &ActionLibrary, size: usize, depth: usize) -> Vec<Action> {
    (0..size).map(|_| action(rng, lib, depth)).collect()
}

/// The order on `pool` induced by per-atom sums of `v`.
pub fn induced_order(pool: Vec<Action>, v: &StateDependentUtility, lib: &ActionLibrary) -> Result<PreferenceOrder> {
    let scores = pool
        .iter()
        .map(|a| Ok(v.sum(&canonical_map(a, lib)?)))
        .collect::<Result<Vec<Rational>>>()?;
    Ok(PreferenceOrder::from_scores(pool, &scores))
}

/// A random tiering of `pool` into at most `tiers` tiers.
pub fn tiered_order(rng: &mut SeededRng, pool: Vec<Action>, tiers: usize) -> PreferenceOrder {
    let scores: Vec<usize> = (0..pool.len()).map(|_| rng.gen_range(0..tiers.max(1))).collect();
    PreferenceOrder::from_scores(pool, &scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::validate;

    #[test]
    fn generated_actions_are_valid_and_shallow() {
        let mut r = rng(7);
        let props = PropSet::new(["p", "q"]).unwrap();
        for _ in 0..300 {
            let lib = library(&mut r, &props, 3);
            let d = r.gen_range(0..4);
            let a = action(&mut r, &lib, d);
            assert!(validate(&a, &lib).is_empty(), "{}", a.display(&props));
            assert!(a.depth() <= d);
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let props = PropSet::new(["p"]).unwrap();
        let lib = ActionLibrary::new(props.clone(), vec![Formula::prop(0)]).unwrap();
        let a: Vec<Action> = pool(&mut rng(3), &lib, 5, 2);
        let b: Vec<Action> = pool(&mut rng(3), &lib, 5, 2);
        assert_eq!(a, b);
        assert_eq!(olt(&mut rng(9), 2, 4), olt(&mut rng(9), 2, 4));
    }
}
