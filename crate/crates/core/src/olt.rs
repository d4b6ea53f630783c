//! Ordered labeled trees (olts), progress functions and the transition
//! maps `f_α` on olt states.
//!
//! A k-olt over `N` atoms is the complete `N`-ary tree of depth `k`. Nodes
//! are numbered in heap order: the root is `0` and the child labeled with
//! atom `c` of node `t` is `t·N + 1 + c`. Numbering does not depend on `k`,
//! so projecting to a smaller depth keeps node ids. Every non-leaf node
//! carries a permutation of `0..N` listing its children closest first.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigUint;
use serde_json::{json, Map, Value};

use crate::actions::{ensure_valid, Action, ActionLibrary};
use crate::budget::Budget;
use crate::canonical::{canonical_map_unchecked, CanonicalEntry, CanonicalMap};
use crate::error::{Error, Result};
use crate::json::{atom_from_json, atom_to_json};
use crate::logic::{atoms_of, Atom, AtomSet, Formula, PropSet};
use crate::semantics::{BasicModel, SelectionModel};

/// Number of non-leaf nodes of a depth-`k` tree.
pub fn internal_count(k: usize, n: usize) -> usize {
    (0..k).map(|d| n.pow(d as u32)).sum()
}

/// Number of nodes of a depth-`k` tree.
pub fn node_count(k: usize, n: usize) -> usize {
    internal_count(k + 1, n)
}

pub fn child(node: usize, label: usize, n: usize) -> usize {
    node * n + 1 + label
}

pub fn node_depth(mut node: usize, n: usize) -> usize {
    let mut d = 0;
    while node > 0 {
        node = (node - 1) / n;
        d += 1;
    }
    d
}

/// Child labels on the way from the root to `node`.
pub fn node_path(mut node: usize, n: usize) -> Vec<usize> {
    let mut path = Vec::new();
    while node > 0 {
        path.push((node - 1) % n);
        node = (node - 1) / n;
    }
    path.reverse();
    path
}

pub fn node_of_path(path: &[usize], n: usize) -> usize {
    path.iter().fold(0, |node, &c| child(node, c, n))
}

/// Whether `node` lies in the subtree rooted at `ancestor`.
pub fn is_descendant_or_self(mut node: usize, ancestor: usize, n: usize) -> bool {
    loop {
        if node == ancestor {
            return true;
        }
        if node < ancestor || node == 0 {
            return false;
        }
        node = (node - 1) / n;
    }
}

/// `1.3.2` style path with 1-based atom indices; the root is `""`.
pub fn path_string(node: usize, n: usize) -> String {
    let mut s = String::new();
    for (i, c) in node_path(node, n).into_iter().enumerate() {
        if i > 0 {
            s.push('.');
        }
        let _ = write!(s, "{}", c + 1);
    }
    s
}

pub fn parse_path(s: &str, k: usize, n: usize) -> Result<usize> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(0);
    }
    let mut path = Vec::new();
    for part in s.split('.') {
        let i: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::Json(format!("bad node path `{s}`")))?;
        if i == 0 || i > n {
            return Err(Error::Json(format!("bad node path `{s}`")));
        }
        path.push(i - 1);
    }
    if path.len() > k {
        return Err(Error::Json(format!("node path `{s}` is deeper than {k}")));
    }
    Ok(node_of_path(&path, n))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i))
}

/// `|T^k| = N · (N!)^{(N^k − 1)/(N − 1)}`.
pub fn olt_count(k: usize, n: usize) -> BigUint {
    BigUint::from(n) * factorial(n).pow(internal_count(k, n) as u32)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Olt {
    k: usize,
    n: usize,
    root: Atom,
    orders: Vec<Vec<usize>>,
}

impl Olt {
    pub fn new(k: usize, n: usize, root: Atom, orders: Vec<Vec<usize>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel("olts need at least two atoms".into()));
        }
        if root.0 >= n {
            return Err(Error::InvalidModel(format!("root atom {} out of range", root.0 + 1)));
        }
        if orders.len() != internal_count(k, n) {
            return Err(Error::InvalidModel(format!(
                "a depth-{k} olt has {} ordered nodes, got {}",
                internal_count(k, n),
                orders.len()
            )));
        }
        for (node, order) in orders.iter().enumerate() {
            if !is_permutation(order, n) {
                return Err(Error::InvalidModel(format!(
                    "order at node `{}` is not a permutation of the atoms",
                    path_string(node, n)
                )));
            }
        }
        Ok(Self { k, n, root, orders })
    }

    /// Every node orders its children by atom index.
    pub fn identity(k: usize, n: usize, root: Atom) -> Self {
        Self {
            k,
            n,
            root,
            orders: vec![(0..n).collect(); internal_count(k, n)],
        }
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn atom_count(&self) -> usize {
        self.n
    }

    pub fn root_atom(&self) -> Atom {
        self.root
    }

    pub fn node_count(&self) -> usize {
        node_count(self.k, self.n)
    }

    /// Children of a non-leaf node, closest first.
    pub fn order(&self, node: usize) -> &[usize] {
        &self.orders[node]
    }

    pub fn set_order(&mut self, node: usize, order: Vec<usize>) -> Result<()> {
        if node >= self.orders.len() || !is_permutation(&order, self.n) {
            return Err(Error::InvalidModel(format!(
                "cannot set order at node `{}`",
                path_string(node, self.n)
            )));
        }
        self.orders[node] = order;
        Ok(())
    }

    /// The root carries the olt's root atom; other nodes are labeled by
    /// their position under the parent.
    pub fn label(&self, node: usize) -> Atom {
        if node == 0 {
            self.root
        } else {
            Atom((node - 1) % self.n)
        }
    }

    /// The closest child of `node` whose label is in `set`.
    pub fn closest_child_in(&self, node: usize, set: &AtomSet) -> Option<usize> {
        self.orders[node]
            .iter()
            .find(|&&c| set.contains(Atom(c)))
            .map(|&c| child(node, c, self.n))
    }

    /// The restriction to depth `k`.
    pub fn project(&self, k: usize) -> Olt {
        assert!(k <= self.k, "cannot project a depth-{} olt to depth {k}", self.k);
        Olt {
            k,
            n: self.n,
            root: self.root,
            orders: self.orders[..internal_count(k, self.n)].to_vec(),
        }
    }

    /// `|T^{k'}| / |T^k|`: the number of depth-`k2` olts projecting to `self`.
    pub fn extension_count(&self, k2: usize) -> BigUint {
        let extra = internal_count(k2, self.n) - internal_count(self.k, self.n);
        factorial(self.n).pow(extra as u32)
    }

    /// All depth-`k2` olts whose projection to `self.depth()` is `self`.
    pub fn extensions(&self, k2: usize, budget: Budget) -> Result<Vec<Olt>> {
        assert!(k2 >= self.k);
        budget.check("olt extensions", &self.extension_count(k2))?;
        let extra = internal_count(k2, self.n) - internal_count(self.k, self.n);
        let perms = permutations(self.n);
        Ok(mixed_radix(extra, perms.len())
            .map(|digits| {
                let mut orders = self.orders.clone();
                orders.extend(digits.iter().map(|&d| perms[d].clone()));
                Olt {
                    k: k2,
                    n: self.n,
                    root: self.root,
                    orders,
                }
            })
            .collect())
    }

    pub fn to_json(&self) -> Value {
        let mut orders = Map::new();
        for (node, order) in self.orders.iter().enumerate() {
            orders.insert(
                path_string(node, self.n),
                Value::Array(order.iter().map(|&c| atom_to_json(Atom(c))).collect()),
            );
        }
        json!({ "k": self.k, "root_atom": atom_to_json(self.root), "orders": orders })
    }

    /// Nodes without an `orders` entry get the identity order.
    pub fn from_json(v: &Value, props: &PropSet) -> Result<Self> {
        let n = props.atom_count();
        let k = v
            .get("k")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Json("olt needs `k`".into()))? as usize;
        let root = atom_from_json(
            v.get("root_atom")
                .ok_or_else(|| Error::Json("olt needs `root_atom`".into()))?,
            props,
        )?;
        let mut olt = Olt::identity(k, n, root);
        if let Some(orders) = v.get("orders") {
            let orders = orders
                .as_object()
                .ok_or_else(|| Error::Json("`orders` must be an object".into()))?;
            for (path, order) in orders {
                let node = parse_path(path, k, n)?;
                if node >= olt.orders.len() {
                    return Err(Error::Json(format!("`{path}` is a leaf")));
                }
                let order = order
                    .as_array()
                    .ok_or_else(|| Error::Json(format!("order at `{path}` must be a list")))?
                    .iter()
                    .map(|x| atom_from_json(x, props).map(Atom::index))
                    .collect::<Result<Vec<_>>>()?;
                olt.set_order(node, order)?;
            }
        }
        Ok(olt)
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&c| c < n && !std::mem::replace(&mut seen[c], true))
}

fn mixed_radix(len: usize, radix: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = radix.checked_pow(len as u32).expect("enumeration too large");
    let mut digits = vec![0usize; len];
    (0..total).map(move |i| {
        let cur = digits.clone();
        if i + 1 < total {
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < radix {
                    break;
                }
                *d = 0;
            }
        }
        cur
    })
}

/// `T^k`, root label varying slowest, then node orders in heap order.
pub fn enumerate_olts(k: usize, n: usize, budget: Budget) -> Result<Vec<Olt>> {
    budget.check("olts", &olt_count(k, n))?;
    let mut out = Vec::new();
    for root in 0..n {
        out.extend(enumerate_rooted(k, n, Atom(root)));
    }
    Ok(out)
}

/// `T^k_a`.
pub fn enumerate_olts_rooted(k: usize, n: usize, root: Atom, budget: Budget) -> Result<Vec<Olt>> {
    budget.check("olts", &(olt_count(k, n) / BigUint::from(n)))?;
    Ok(enumerate_rooted(k, n, root).collect())
}

fn enumerate_rooted(k: usize, n: usize, root: Atom) -> impl Iterator<Item = Olt> {
    let perms = permutations(n);
    mixed_radix(internal_count(k, n), perms.len()).map(move |digits| Olt {
        k,
        n,
        root,
        orders: digits.iter().map(|&d| perms[d].clone()).collect(),
    })
}

/// A progress function, stored as its non-fixed points.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProgressFunction {
    moved: BTreeMap<usize, usize>,
}

impl ProgressFunction {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        Self {
            moved: pairs.into_iter().filter(|(t, u)| t != u).collect(),
        }
    }

    pub fn get(&self, node: usize) -> usize {
        self.moved.get(&node).copied().unwrap_or(node)
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    pub fn moved(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.moved.iter().map(|(&t, &u)| (t, u))
    }

    /// Every node is sent into its own subtree.
    pub fn is_descending(&self, n: usize) -> bool {
        self.moved().all(|(t, u)| is_descendant_or_self(u, t, n))
    }

    /// Nodes of depth at most `k` stay within depth `k`; deeper nodes are
    /// fixed.
    pub fn is_bounded(&self, k: usize, n: usize) -> bool {
        self.moved()
            .all(|(t, u)| node_depth(t, n) <= k && node_depth(u, n) <= k)
    }

    /// Restriction to the nodes of depth at most `k`.
    pub fn project(&self, k: usize, n: usize) -> Self {
        Self {
            moved: self
                .moved
                .iter()
                .filter(|(&t, _)| node_depth(t, n) <= k)
                .map(|(&t, &u)| (t, u))
                .collect(),
        }
    }

    /// `{"path": "path"}` for the non-fixed points.
    pub fn to_json(&self, n: usize) -> Value {
        let mut obj = Map::new();
        for (t, u) in self.moved() {
            obj.insert(path_string(t, n), Value::String(path_string(u, n)));
        }
        Value::Object(obj)
    }

    pub fn from_json(v: &Value, k: usize, n: usize) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Json("progress function must be an object".into()))?;
        let mut pairs = Vec::new();
        for (t, u) in obj {
            let u = u
                .as_str()
                .ok_or_else(|| Error::Json(format!("progress target for `{t}` must be a path")))?;
            pairs.push((parse_path(t, k, n)?, parse_path(u, k, n)?));
        }
        let g = Self::from_pairs(pairs);
        if !g.is_descending(n) {
            return Err(Error::InvalidModel("progress function leaves a subtree".into()));
        }
        Ok(g)
    }

    fn compact(&self, n: usize) -> String {
        if self.is_identity() {
            return "id".into();
        }
        let path = |x| match path_string(x, n) {
            s if s.is_empty() => "r".to_string(),
            s => s,
        };
        self.moved()
            .map(|(t, u)| format!("{}>{}", path(t), path(u)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `g_{γ,s}` for a canonical entry `γ`.
pub fn progress_of_entry(entry: &CanonicalEntry, olt: &Olt) -> Result<ProgressFunction> {
    if entry.depth() > olt.k {
        return Err(Error::DepthExceeded {
            action: entry.depth(),
            available: olt.k,
        });
    }
    let mut moved = BTreeMap::new();
    fill(entry, olt, 0, &mut moved)?;
    Ok(ProgressFunction { moved })
}

fn fill(entry: &CanonicalEntry, olt: &Olt, node: usize, out: &mut BTreeMap<usize, usize>) -> Result<()> {
    let closest = |set: &AtomSet| {
        olt.closest_child_in(node, set)
            .ok_or_else(|| Error::InvalidModel("empty effect in canonical entry".into()))
    };
    match entry {
        CanonicalEntry::Noop => {}
        CanonicalEntry::DoA(set) => {
            out.insert(node, closest(set)?);
        }
        CanonicalEntry::DoASeq(set, rest) => {
            for (c, e) in rest.entries().iter().enumerate() {
                fill(e, olt, child(node, c, olt.n), out)?;
            }
            let b = closest(set)?;
            let target = out.get(&b).copied().unwrap_or(b);
            out.insert(node, target);
        }
    }
    Ok(())
}

/// `g_{α,s}`: progress through the canonical entry at the root atom.
pub fn progress_of(action: &Action, olt: &Olt, lib: &ActionLibrary) -> Result<ProgressFunction> {
    ensure_valid(action, lib)?;
    if action.depth() > olt.k {
        return Err(Error::DepthExceeded {
            action: action.depth(),
            available: olt.k,
        });
    }
    let map = canonical_map_unchecked(action, lib.props());
    progress_of_entry(map.get(olt.root), olt)
}

/// A point `(s, g)` of the olt state space. Equality and hashing look at
/// the tree and the progress function only; the provenance records the
/// canonical entry whose progress function `g` is, when known.
#[derive(Debug, Clone)]
pub struct OltState {
    olt: Arc<Olt>,
    progress: ProgressFunction,
    provenance: Option<CanonicalEntry>,
}

impl PartialEq for OltState {
    fn eq(&self, other: &Self) -> bool {
        self.olt == other.olt && self.progress == other.progress
    }
}

impl Eq for OltState {}

impl Hash for OltState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.olt.hash(state);
        self.progress.hash(state);
    }
}

impl OltState {
    /// `(s, id)`.
    pub fn initial(olt: Arc<Olt>) -> Self {
        Self {
            olt,
            progress: ProgressFunction::identity(),
            provenance: Some(CanonicalEntry::Noop),
        }
    }

    /// `(s, g_{γ,s})`.
    pub fn from_entry(olt: Arc<Olt>, entry: CanonicalEntry) -> Result<Self> {
        let progress = progress_of_entry(&entry, &olt)?;
        Ok(Self {
            olt,
            progress,
            provenance: Some(entry),
        })
    }

    /// A state whose progress function was produced elsewhere. Only the
    /// identity can be advanced without provenance.
    pub fn untracked(olt: Arc<Olt>, progress: ProgressFunction) -> Self {
        let provenance = progress.is_identity().then_some(CanonicalEntry::Noop);
        Self {
            olt,
            progress,
            provenance,
        }
    }

    pub fn olt(&self) -> &Arc<Olt> {
        &self.olt
    }

    pub fn progress(&self) -> &ProgressFunction {
        &self.progress
    }

    pub fn provenance(&self) -> Option<&CanonicalEntry> {
        self.provenance.as_ref()
    }

    /// The node `g(root)` whose label decides the valuation.
    pub fn current_node(&self) -> usize {
        self.progress.get(0)
    }

    pub fn current_atom(&self) -> Atom {
        self.olt.label(self.current_node())
    }

    pub fn to_json(&self) -> Value {
        json!({ "olt": self.olt.to_json(), "progress": self.progress.to_json(self.olt.n) })
    }
}

/// Whether `p` holds at the label of `g(root)`.
pub fn olt_valuation(state: &OltState, prop: usize, props: &PropSet) -> bool {
    props.holds(state.current_atom(), prop)
}

/// `f_α` given `c_α`: `f_α(s, g_{β,s}) = (s, g_{β;α,s})`.
pub fn apply_map(map: &Arc<CanonicalMap>, state: &OltState) -> Result<OltState> {
    let prov = state.provenance.as_ref().ok_or(Error::UnknownProvenance)?;
    let entry = prov.followed_by(state.olt.root, map);
    OltState::from_entry(Arc::clone(&state.olt), entry)
}

/// `f_α` on olt states.
pub fn apply_f(action: &Action, state: &OltState, lib: &ActionLibrary) -> Result<OltState> {
    ensure_valid(action, lib)?;
    apply_map(&Arc::new(canonical_map_unchecked(action, lib.props())), state)
}

/// The constructed selection function: `sel((s, g), φ) = f_{do(φ)}(s, g)`.
pub fn olt_selection(state: &OltState, effect: &Formula, props: &PropSet) -> Result<OltState> {
    select_atoms(state, atoms_of(effect, props))
}

fn select_atoms(state: &OltState, set: AtomSet) -> Result<OltState> {
    let map = CanonicalMap::constant(state.olt.n, CanonicalEntry::DoA(set));
    apply_map(&Arc::new(map), state)
}

/// The olt model of depth `k` packaged as a selection model: the states
/// reachable from the initial states `(s, id)` by selections, with `sel`
/// recorded wherever the depth bound allows another step.
#[derive(Debug, Clone)]
pub struct OltModel {
    k: usize,
    olts: Vec<Arc<Olt>>,
    states: Vec<OltState>,
    index: HashMap<OltState, usize>,
    selection: SelectionModel,
}

impl OltModel {
    pub fn build(k: usize, lib: &ActionLibrary, budget: Budget) -> Result<Self> {
        let props = lib.props();
        let n = props.atom_count();
        let olts: Vec<Arc<Olt>> = enumerate_olts(k, n, budget)?.into_iter().map(Arc::new).collect();
        let mut states: Vec<OltState> = olts.iter().cloned().map(OltState::initial).collect();
        let mut index: HashMap<OltState, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut sel = Vec::new();
        let mut next = 0;
        while next < states.len() {
            let state = states[next].clone();
            let used = state.provenance.as_ref().map_or(0, CanonicalEntry::depth);
            if used < k {
                for set in lib.classes() {
                    let to = select_atoms(&state, set.clone())?;
                    let j = match index.get(&to) {
                        Some(&j) => j,
                        None => {
                            if states.len() as u64 >= budget.0 {
                                return Err(Error::BudgetExceeded {
                                    what: "olt states",
                                    count: format!(">{}", budget.0),
                                    budget: budget.0,
                                });
                            }
                            states.push(to.clone());
                            index.insert(to, states.len() - 1);
                            states.len() - 1
                        }
                    };
                    sel.push((next, set.clone(), j));
                }
            }
            next += 1;
        }
        let olt_index: HashMap<&Olt, usize> = olts.iter().enumerate().map(|(i, o)| (o.as_ref(), i)).collect();
        let names: Vec<String> = states
            .iter()
            .map(|s| format!("{}|{}", olt_index[s.olt.as_ref()], s.progress.compact(n)))
            .collect();
        let valuation: Vec<Vec<usize>> = (0..props.len())
            .map(|p| {
                (0..states.len())
                    .filter(|&i| olt_valuation(&states[i], p, props))
                    .collect()
            })
            .collect();
        let model = BasicModel::new(props.clone(), names, &valuation)?;
        let mut selection = SelectionModel::new(model);
        for (from, set, to) in sel {
            selection.set(from, set, to)?;
        }
        Ok(Self {
            k,
            olts,
            states,
            index,
            selection,
        })
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn olts(&self) -> &[Arc<Olt>] {
        &self.olts
    }

    pub fn states(&self) -> &[OltState] {
        &self.states
    }

    /// State index of `(olts[i], id)`.
    pub fn initial_state(&self, olt: usize) -> usize {
        olt
    }

    pub fn state_index(&self, state: &OltState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn selection_model(&self) -> &SelectionModel {
        &self.selection
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{interpret, is_f_rich};
    use crate::syntax::{parse_action, parse_formula};

    fn lib_pq(effects: &[&str]) -> ActionLibrary {
        let props = PropSet::new(["p", "q"]).unwrap();
        let fs = effects.iter().map(|s| parse_formula(s, &props).unwrap()).collect();
        ActionLibrary::new(props, fs).unwrap()
    }

    #[test]
    fn node_numbering() {
        let n = 4;
        assert_eq!(child(0, 2, n), 3);
        assert_eq!(node_path(child(3, 1, n), n), vec![2, 1]);
        assert_eq!(node_depth(child(3, 1, n), n), 2);
        assert_eq!(path_string(child(3, 1, n), n), "3.2");
        assert_eq!(parse_path("3.2", 2, n).unwrap(), child(3, 1, n));
        assert!(parse_path("3.2", 1, n).is_err());
        assert!(is_descendant_or_self(child(3, 1, n), 3, n));
        assert!(!is_descendant_or_self(child(3, 1, n), 2, n));
        assert_eq!(node_count(2, 2), 7);
    }

    #[test]
    fn permutation_enumeration() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[1], vec![0, 2, 1]);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn olt_counts_match_enumeration() {
        for &(k, n, expected) in &[(1, 2, 4u32), (2, 2, 16), (1, 4, 96), (0, 2, 2), (3, 2, 256)] {
            assert_eq!(olt_count(k, n), BigUint::from(expected));
            let all = enumerate_olts(k, n, Budget::DEFAULT).unwrap();
            assert_eq!(all.len() as u32, expected);
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
        }
        assert!(matches!(
            enumerate_olts(2, 4, Budget::DEFAULT),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn worked_example_moves() {
        // root order ~p&q < ~p&~q < p&~q < p&q
        let lib = lib_pq(&["p | q", "p | ~q"]);
        let mut olt = Olt::identity(2, 4, Atom(0));
        olt.set_order(0, vec![2, 3, 1, 0]).unwrap();
        let g = progress_of(&parse_action("do(p | q)", &lib).unwrap(), &olt, &lib).unwrap();
        assert_eq!(g.get(0), child(0, 2, 4));
        let g = progress_of(&parse_action("do(p | ~q)", &lib).unwrap(), &olt, &lib).unwrap();
        assert_eq!(g.get(0), child(0, 3, 4));
        let seq = parse_action("do(p | q); do(p | ~q)", &lib).unwrap();
        let g = progress_of(&seq, &olt, &lib).unwrap();
        let t = child(0, 2, 4);
        assert_eq!(node_depth(g.get(0), 4), 2);
        assert!(is_descendant_or_self(g.get(0), t, 4));
    }

    #[test]
    fn olt_json_roundtrip() {
        let props = PropSet::new(["p"]).unwrap();
        let mut olt = Olt::identity(2, 2, Atom(1));
        olt.set_order(2, vec![1, 0]).unwrap();
        let v = olt.to_json();
        assert_eq!(v["orders"]["2"], json!([2, 1]));
        assert_eq!(Olt::from_json(&v, &props).unwrap(), olt);
        let sparse = json!({"k": 2, "root_atom": 2, "orders": {"2": [2, 1]}});
        assert_eq!(Olt::from_json(&sparse, &props).unwrap(), olt);
        assert!(Olt::from_json(&json!({"k": 1, "root_atom": 1, "orders": {"": [1, 1]}}), &props).is_err());
    }

    #[test]
    fn progress_json_roundtrip() {
        let g = ProgressFunction::from_pairs([(0, 4), (1, 3)]);
        let v = g.to_json(2);
        assert_eq!(v, json!({"": "1.2", "1": "1.1"}));
        assert_eq!(ProgressFunction::from_json(&v, 2, 2).unwrap(), g);
        assert!(ProgressFunction::from_json(&json!({"1": "2"}), 2, 2).is_err());
    }

    #[test]
    fn projection_and_extension() {
        let olt = Olt::identity(1, 2, Atom(0));
        let ext = olt.extensions(2, Budget::DEFAULT).unwrap();
        assert_eq!(ext.len(), 4);
        assert!(ext.iter().all(|e| e.project(1) == olt));
        assert_eq!(olt.extension_count(3), BigUint::from(64u32));
    }

    #[test]
    fn bounded_progress() {
        let g = ProgressFunction::from_pairs([(0, 1)]);
        assert!(g.is_bounded(1, 2));
        let h = ProgressFunction::from_pairs([(0, 3)]);
        assert!(!h.is_bounded(1, 2));
        assert!(h.is_bounded(2, 2));
        assert_eq!(h.project(1, 2), h);
    }

    #[test]
    fn provenance_is_required() {
        let olt = Arc::new(Olt::identity(2, 2, Atom(0)));
        let props = PropSet::new(["p"]).unwrap();
        let stray = OltState::untracked(Arc::clone(&olt), ProgressFunction::from_pairs([(0, 1)]));
        assert!(matches!(
            olt_selection(&stray, &Formula::prop(0), &props),
            Err(Error::UnknownProvenance)
        ));
        let fresh = OltState::untracked(olt, ProgressFunction::identity());
        assert!(olt_selection(&fresh, &Formula::prop(0), &props).is_ok());
    }

    #[test]
    fn packaged_model_agrees_with_apply_f() {
        let props = PropSet::new(["p"]).unwrap();
        let lib = ActionLibrary::new(
            props.clone(),
            vec![Formula::prop(0), Formula::not(Formula::prop(0)), Formula::Top],
        )
        .unwrap();
        let m = OltModel::build(2, &lib, Budget::DEFAULT).unwrap();
        assert!(is_f_rich(m.selection_model().model(), &lib).is_empty());
        let actions = [
            "noop",
            "do(p)",
            "do(p); do(~p)",
            "if p then do(true) else do(p); do(~p)",
            "if p then (do(p); do(p)) else noop",
        ];
        for text in actions {
            let a = parse_action(text, &lib).unwrap();
            for (i, olt) in m.olts().iter().enumerate() {
                let start = OltState::initial(Arc::clone(olt));
                let direct = apply_f(&a, &start, &lib).unwrap();
                let via = interpret(&a, m.selection_model(), &lib, m.initial_state(i)).unwrap();
                assert_eq!(m.state_index(&direct), Some(via), "{text}");
            }
        }
    }
}
