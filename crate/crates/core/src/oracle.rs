//! Brute-force reference implementations used to cross-check the main
//! pipeline. Nothing here goes through canonical maps or the recursive
//! interpreter: formulas are evaluated from bit patterns, actions are run
//! by a small-step machine, and progress functions are rebuilt from action
//! derivatives.

use std::collections::HashMap;

use crate::actions::{Action, ActionLibrary};
use crate::canonical::CanonicalMap;
use crate::error::{Error, Result};
use crate::logic::{Formula, PropSet};
use crate::olt::{child, node_depth, Olt, ProgressFunction};
use crate::preferences::{pool_maps, PreferenceOrder};
use crate::semantics::SelectionModel;

/// The truth assignment of atom `i`: proposition `p` is the bit
/// `props − 1 − p` of `2^props − 1 − i`.
pub fn assignment(atom: usize, prop_count: usize) -> Vec<bool> {
    let bits = (1usize << prop_count) - 1 - atom;
    (0..prop_count).map(|p| bits >> (prop_count - 1 - p) & 1 == 1).collect()
}

pub fn eval(f: &Formula, val: &[bool]) -> bool {
    match f {
        Formula::Top => true,
        Formula::Bottom => false,
        Formula::Prop(p) => val[*p],
        Formula::Not(a) => !eval(a, val),
        Formula::And(a, b) => eval(a, val) && eval(b, val),
        Formula::Or(a, b) => eval(a, val) || eval(b, val),
        Formula::Implies(a, b) => !eval(a, val) || eval(b, val),
        Formula::Iff(a, b) => eval(a, val) == eval(b, val),
    }
}

/// The column of `f` in the truth table, indexed by atom.
pub fn truth_table(f: &Formula, prop_count: usize) -> Vec<bool> {
    (0..1usize << prop_count)
        .map(|a| eval(f, &assignment(a, prop_count)))
        .collect()
}

/// Atoms where `f` holds, ascending.
pub fn satisfying_atoms(f: &Formula, prop_count: usize) -> Vec<usize> {
    truth_table(f, prop_count)
        .into_iter()
        .enumerate()
        .filter_map(|(a, t)| t.then_some(a))
        .collect()
}

const STEP_LIMIT: usize = 1_000_000;

/// Runs `action` from `state` on an explicit stack of pending actions.
pub fn small_step(action: &Action, sm: &SelectionModel, state: usize) -> Result<usize> {
    let model = sm.model();
    let nprops = model.props().len();
    let sel: HashMap<(usize, Vec<usize>), usize> = sm
        .entries()
        .map(|(from, set, to)| ((from, set.indices().to_vec()), to))
        .collect();
    let mut stack: Vec<&Action> = vec![action];
    let mut current = state;
    let mut steps = 0;
    while let Some(a) = stack.pop() {
        steps += 1;
        if steps > STEP_LIMIT {
            return Err(Error::Inconsistent("small-step limit reached".into()));
        }
        let val = assignment(model.atom_of(current).0, nprops);
        match a {
            Action::Noop => {}
            Action::Do(f) => {
                let key = (current, satisfying_atoms(f, nprops));
                current = *sel.get(&key).ok_or_else(|| Error::MissingSelection {
                    state: model.state_name(current).to_string(),
                    effect: key.1.iter().map(|i| i + 1).collect(),
                })?;
            }
            Action::Ite(test, then, otherwise) => {
                stack.push(if eval(test, &val) { then } else { otherwise });
            }
            Action::Seq(first, second) => {
                stack.push(second);
                stack.push(first);
            }
        }
    }
    Ok(current)
}

/// The effect of the first `do` executed from a state at atom `atom`.
pub fn first_step(action: &Action, atom: usize, prop_count: usize) -> Option<&Formula> {
    match action {
        Action::Noop => None,
        Action::Do(f) => Some(f),
        Action::Ite(test, a, b) => {
            let branch = if eval(test, &assignment(atom, prop_count)) {
                a
            } else {
                b
            };
            first_step(branch, atom, prop_count)
        }
        Action::Seq(a, b) => first_step(a, atom, prop_count).or_else(|| first_step(b, atom, prop_count)),
    }
}

/// What remains of `action` after its first step, started at `atom`. Only
/// meaningful when `first_step` is some.
pub fn derivative(action: &Action, atom: usize, prop_count: usize) -> Action {
    match action {
        Action::Noop | Action::Do(_) => Action::Noop,
        Action::Ite(test, a, b) => {
            let branch = if eval(test, &assignment(atom, prop_count)) {
                a
            } else {
                b
            };
            derivative(branch, atom, prop_count)
        }
        Action::Seq(a, b) => {
            if first_step(a, atom, prop_count).is_some() {
                Action::seq(derivative(a, atom, prop_count), (**b).clone())
            } else {
                derivative(b, atom, prop_count)
            }
        }
    }
}

fn closest(olt: &Olt, node: usize, atoms: &[usize]) -> Option<usize> {
    olt.order(node)
        .iter()
        .find(|c| atoms.contains(c))
        .map(|&c| child(node, c, olt.atom_count()))
}

/// `g_{α,s}` rebuilt from derivatives: node `t` moves iff `α` takes a step
/// from `t`'s label, and then goes wherever the derivative leads from the
/// closest child satisfying the first effect.
pub fn progress(action: &Action, olt: &Olt, props: &PropSet) -> Result<ProgressFunction> {
    let mut moved = Vec::new();
    walk(action, olt, props.len(), 0, &mut moved)?;
    Ok(ProgressFunction::from_pairs(moved))
}

fn walk(
    action: &Action,
    olt: &Olt,
    nprops: usize,
    node: usize,
    out: &mut Vec<(usize, usize)>,
) -> Result<Option<usize>> {
    let n = olt.atom_count();
    let label = olt.label(node).0;
    let Some(f) = first_step(action, label, nprops) else {
        return Ok(None);
    };
    if node_depth(node, n) >= olt.depth() {
        return Err(Error::DepthExceeded {
            action: action.depth(),
            available: olt.depth(),
        });
    }
    let rest = derivative(action, label, nprops);
    let mut landing = HashMap::new();
    for c in 0..n {
        let t = child(node, c, n);
        landing.insert(t, walk(&rest, olt, nprops, t, out)?);
    }
    let b =
        closest(olt, node, &satisfying_atoms(f, nprops)).ok_or_else(|| Error::UnsatisfiableEffect(format!("{f:?}")))?;
    let target = landing[&b].unwrap_or(b);
    out.push((node, target));
    Ok(Some(target))
}

/// The node reached by running `action` from the root, moving to the
/// closest satisfying child at every `do`.
pub fn endpoint(action: &Action, olt: &Olt, props: &PropSet) -> Result<usize> {
    let n = olt.atom_count();
    let nprops = props.len();
    let mut stack = vec![action];
    let mut node = 0;
    while let Some(a) = stack.pop() {
        match a {
            Action::Noop => {}
            Action::Do(f) => {
                if node_depth(node, n) >= olt.depth() {
                    return Err(Error::DepthExceeded {
                        action: action.depth(),
                        available: olt.depth(),
                    });
                }
                node = closest(olt, node, &satisfying_atoms(f, nprops))
                    .ok_or_else(|| Error::UnsatisfiableEffect(format!("{f:?}")))?;
            }
            Action::Ite(test, t, e) => {
                let val = assignment(olt.label(node).0, nprops);
                stack.push(if eval(test, &val) { t } else { e });
            }
            Action::Seq(x, y) => {
                stack.push(y);
                stack.push(x);
            }
        }
    }
    Ok(node)
}

/// Smallest cancellation violation found by enumerating every multiset of
/// weakly ordered pool pairs of size at most `max_n`, as `(alphas, betas)`
/// with a strict pair last.
pub fn exhaustive_cancellation(
    po: &PreferenceOrder,
    lib: &ActionLibrary,
    max_n: usize,
) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    let maps = pool_maps(po, lib)?;
    let mut pairs = Vec::new();
    for i in 0..po.len() {
        for j in 0..po.len() {
            if i != j && po.weakly_prefers(i, j) {
                pairs.push((i, j, !po.weakly_prefers(j, i)));
            }
        }
    }
    for n in 1..=max_n {
        let mut chosen = vec![0usize; n];
        if let Some(found) = search(&pairs, &maps, &mut chosen, 0, 0) {
            let mut ordered: Vec<(usize, usize, bool)> = found.iter().map(|&q| pairs[q]).collect();
            let last = ordered
                .iter()
                .position(|p| p.2)
                .expect("violations contain a strict pair");
            let strict = ordered.remove(last);
            ordered.push(strict);
            return Ok(Some((
                ordered.iter().map(|p| p.0).collect(),
                ordered.iter().map(|p| p.1).collect(),
            )));
        }
    }
    Ok(None)
}

fn search(
    pairs: &[(usize, usize, bool)],
    maps: &[CanonicalMap],
    chosen: &mut Vec<usize>,
    pos: usize,
    start: usize,
) -> Option<Vec<usize>> {
    if pos == chosen.len() {
        let strict = chosen.iter().any(|&q| pairs[q].2);
        return (strict && balanced(pairs, maps, chosen)).then(|| chosen.clone());
    }
    for q in start..pairs.len() {
        chosen[pos] = q;
        if let Some(found) = search(pairs, maps, chosen, pos + 1, q) {
            return Some(found);
        }
    }
    None
}

fn balanced(pairs: &[(usize, usize, bool)], maps: &[CanonicalMap], chosen: &[usize]) -> bool {
    let atoms = maps.first().map_or(0, CanonicalMap::atom_count);
    (0..atoms).all(|a| {
        let mut lhs: Vec<_> = chosen.iter().map(|&q| maps[pairs[q].0].entries()[a].clone()).collect();
        let mut rhs: Vec<_> = chosen.iter().map(|&q| maps[pairs[q].1].entries()[a].clone()).collect();
        lhs.sort();
        rhs.sort();
        lhs == rhs
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::atoms_of;
    use crate::olt::progress_of;
    use crate::syntax::{parse_action, parse_formula};

    #[test]
    fn assignments_follow_the_atom_numbering() {
        assert_eq!(assignment(0, 2), vec![true, true]);
        assert_eq!(assignment(1, 2), vec![true, false]);
        assert_eq!(assignment(2, 2), vec![false, true]);
        assert_eq!(assignment(3, 2), vec![false, false]);
    }

    #[test]
    fn truth_tables_agree_with_atom_sets() {
        let props = PropSet::new(["p", "q", "r"]).unwrap();
        for text in ["p | ~q", "p -> (q <-> r)", "~(p & q & r)", "true", "false"] {
            let f = parse_formula(text, &props).unwrap();
            assert_eq!(satisfying_atoms(&f, 3), atoms_of(&f, &props).indices());
        }
    }

    #[test]
    fn derivative_progress_matches_canonical_progress() {
        let props = PropSet::new(["p", "q"]).unwrap();
        let effects = ["p | q", "p | ~q", "~p", "q"]
            .iter()
            .map(|t| parse_formula(t, &props).unwrap())
            .collect();
        let lib = ActionLibrary::new(props.clone(), effects).unwrap();
        let actions = [
            "do(p | q)",
            "if q then do(~p) else noop",
            "do(p | q); if p then do(q) else do(~p)",
            "(noop; do(q)); do(p | ~q)",
        ];
        let mut r = crate::random::rng(11);
        let olts: Vec<Olt> = (0..60).map(|_| crate::random::olt(&mut r, 2, 4)).collect();
        for text in actions {
            let a = parse_action(text, &lib).unwrap();
            for s in &olts {
                let g = progress_of(&a, s, &lib).unwrap();
                assert_eq!(progress(&a, s, &props).unwrap(), g, "{text}");
                assert_eq!(endpoint(&a, s, &props).unwrap(), g.get(0), "{text}");
            }
        }
    }
}
