use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use seqsavage_core::canonical::{canonical_action, canonical_map, enumerate_ca_minus, enumerate_cm};
use seqsavage_core::json::Rational;
use seqsavage_core::linalg::{self, Independence};
use seqsavage_core::olt::{apply_map, enumerate_olts, is_descendant_or_self, progress_of, OltState};
use seqsavage_core::preferences::{certify_cancellation, check_cancellation, induced_order_welldefined, Feasibility};
use seqsavage_core::random;
use seqsavage_core::representation::{
    assemble, build_matrix, dominates, dominates_strict_pointwise, guarantee_counterexample, stitch_u,
    verify_independence, verify_representation, witness_tree, Assembler,
};
use seqsavage_core::{ActionLibrary, AtomSet, Budget, CanonicalEntry, PropSet};

fn full_library(n_props: usize) -> ActionLibrary {
    let props = PropSet::new(["p", "q"].into_iter().take(n_props)).unwrap();
    let n = props.atom_count();
    let classes: Vec<AtomSet> = (1..1usize << n)
        .map(|m| AtomSet::from_indices((0..n).filter(|i| m >> i & 1 == 1)))
        .collect();
    ActionLibrary::from_classes(props, &classes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_action_is_a_fixed_point(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let lib = full_library(2);
        let a = random::action(&mut rng, &lib, 2);
        let ca = canonical_action(&a, &lib).unwrap();
        prop_assert_eq!(canonical_map(&ca.action, &lib).unwrap(), ca.map.clone());
        prop_assert!(ca.map.depth() <= a.depth());
    }

    #[test]
    fn progress_descends_and_is_bounded(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let lib = full_library(2);
        let depth = 1 + (seed % 2) as usize;
        let a = random::action(&mut rng, &lib, depth);
        let s = random::olt(&mut rng, 2, 4);
        let g = progress_of(&a, &s, &lib).unwrap();
        for (t, u) in g.moved() {
            prop_assert!(is_descendant_or_self(u, t, 4));
        }
        prop_assert!(g.is_bounded(a.depth(), 4));
        let moves_root = g.get(0) != 0;
        let map = canonical_map(&a, &lib).unwrap();
        prop_assert_eq!(moves_root, !map.get(s.root_atom()).is_noop());
    }

    #[test]
    fn induced_orders_pass_both_checkers(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let props = PropSet::new(["p"]).unwrap();
        let lib = random::library(&mut rng, &props, 3);
        let v = random::utility(&mut rng, 2, &lib, 5, Budget::DEFAULT).unwrap();
        let pool = random::pool(&mut rng, &lib, 8, 2);
        let po = random::induced_order(pool, &v, &lib).unwrap();
        prop_assert_eq!(induced_order_welldefined(&po, &lib).unwrap(), None);
        prop_assert!(check_cancellation(&po, &lib, 4, Budget::DEFAULT).unwrap().is_none());
        prop_assert!(matches!(certify_cancellation(&po, &lib, 2).unwrap(), Feasibility::Representable(_)));
    }

    #[test]
    fn equal_maps_get_equal_expected_utility(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let lib = full_library(1);
        let v = random::utility(&mut rng, 2, &lib, 9, Budget::DEFAULT).unwrap();
        let rep = assemble(&v, &lib, Budget::DEFAULT).unwrap();
        let a = random::action(&mut rng, &lib, 2);
        let gamma = canonical_action(&a, &lib).unwrap().action;
        prop_assert_eq!(rep.expected_utility(&a).unwrap(), rep.expected_utility(&gamma).unwrap());
        prop_assert_eq!(rep.expected_utility(&a).unwrap(), v.sum(&canonical_map(&a, &lib).unwrap()));
    }
}

#[test]
fn round_trip_at_four_atoms_depth_one() {
    let lib = full_library(2);
    let asm = Assembler::new(1, &lib, Budget::DEFAULT).unwrap();
    for seed in 0..10 {
        let mut rng = random::rng(seed);
        let v0 = random::utility(&mut rng, 1, &lib, 30, Budget::DEFAULT).unwrap();
        let pool = random::pool(&mut rng, &lib, 20, 1);
        let po = random::induced_order(pool, &v0, &lib).unwrap();
        let Feasibility::Representable(v) = certify_cancellation(&po, &lib, 1).unwrap() else {
            panic!("induced order must be representable");
        };
        let rep = asm.assemble(&v).unwrap();
        assert_eq!(verify_representation(&rep, &po).unwrap(), None);
        assert_eq!(rep.pr_total(), Rational::from_integer(1.into()));
    }
}

#[test]
fn transitions_do_not_depend_on_provenance() {
    // States reached by different canonical entries with the same progress
    // function must have the same successors.
    let lib = full_library(1);
    let budget = Budget::DEFAULT;
    let k = 2;
    let entries = enumerate_ca_minus(1, &lib, budget).unwrap();
    let maps: Vec<_> = enumerate_cm(1, &lib, budget)
        .unwrap()
        .into_iter()
        .map(Arc::new)
        .collect();
    let mut checked = 0;
    for s in enumerate_olts(k, 2, budget).unwrap() {
        let s = Arc::new(s);
        let mut by_progress: HashMap<_, Vec<OltState>> = HashMap::new();
        for e in &entries {
            let st = OltState::from_entry(Arc::clone(&s), e.clone()).unwrap();
            by_progress.entry(st.progress().clone()).or_default().push(st);
        }
        for group in by_progress.values().filter(|g| g.len() > 1) {
            for m in &maps {
                let first = apply_map(m, &group[0]).unwrap();
                for other in &group[1..] {
                    assert_eq!(apply_map(m, other).unwrap(), first);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn partial_order_is_strict_on_depth_two_entries() {
    let lib = full_library(1);
    let rows = enumerate_ca_minus(2, &lib, Budget::DEFAULT).unwrap();
    assert_eq!(rows.len(), 49);
    for x in &rows {
        assert!(!dominates(x, x));
        for y in &rows {
            if dominates(x, y) {
                assert!(!dominates(y, x));
                for z in &rows {
                    if dominates(y, z) {
                        assert!(dominates(x, z));
                    }
                }
            }
        }
    }
}

#[test]
fn strict_pointwise_reading_breaks_the_guarantee() {
    // Reading the third clause as strict domination at every atom leaves
    // some collisions on witness trees unexplained.
    let lib = full_library(1);
    let mut unexplained = 0;
    for a in lib.props().atoms() {
        let ms = build_matrix(a, 2, &lib, Budget::DEFAULT).unwrap();
        for row in 0..ms.rows().len() {
            assert_eq!(guarantee_counterexample(&ms, row, dominates).unwrap(), None);
            if guarantee_counterexample(&ms, row, dominates_strict_pointwise)
                .unwrap()
                .is_some()
            {
                unexplained += 1;
            }
        }
    }
    assert!(unexplained > 0);
}

#[test]
fn witness_tree_for_three_effect_atoms() {
    let e = CanonicalEntry::DoA(AtomSet::from_indices([1, 2, 3]));
    let s = witness_tree(&e, 1, 4, seqsavage_core::Atom(0)).unwrap();
    assert_eq!(&s.order(0)[1..], &[1, 2, 3]);
}

#[test]
fn duplicated_row_is_dependent() {
    let lib = full_library(1);
    let ms = build_matrix(seqsavage_core::Atom(0), 1, &lib, Budget::DEFAULT).unwrap();
    assert!(matches!(verify_independence(&ms), Independence::Independent { .. }));
    let mut rows = ms.sparse_rows();
    rows.push(rows[1].clone());
    match linalg::independence(&rows) {
        Independence::Dependent { combination, .. } => {
            let idx: Vec<usize> = combination.iter().map(|(i, _)| *i).collect();
            assert!(idx.contains(&1) && idx.contains(&(rows.len() - 1)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn stitching_one_depth_is_the_identity() {
    let lib = full_library(1);
    let mut rng = random::rng(3);
    let v = random::utility(&mut rng, 1, &lib, 5, Budget::DEFAULT).unwrap();
    let rep = assemble(&v, &lib, Budget::DEFAULT).unwrap();
    let out = stitch_u(&[rep.u().clone()], Budget::DEFAULT).unwrap();
    assert_eq!(out[0].entries(), rep.u().entries());
}
