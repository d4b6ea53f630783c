//! State-dependent utilities, the per-atom matrix systems `MX = U`, and the
//! assembly and verification of the expected-utility representation on
//! olt states.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::actions::{Action, ActionLibrary};
use crate::budget::Budget;
use crate::canonical::{canonical_map, enumerate_ca_minus, CanonicalEntry, CanonicalMap};
use crate::error::{Error, Result};
use crate::json::{atom_from_json, atom_to_json, rational_from_json, rational_to_json, Rational};
use crate::linalg::{self, Independence, SparseRow};
use crate::logic::{Atom, Formula, PropSet};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::olt::{
    child, enumerate_olts, enumerate_olts_rooted, olt_count, progress_of_entry, Olt, OltState, ProgressFunction,
};
use crate::preferences::{integer_multiplicities, pool_maps, CancellationWitness, Feasibility, PreferenceOrder};
use crate::syntax::parse_formula;

fn int(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `v^k(a, γ)`, stored sparsely; entries never set read as 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDependentUtility {
    k: usize,
    n: usize,
    table: BTreeMap<(usize, CanonicalEntry), Rational>,
}

impl StateDependentUtility {
    pub fn new(k: usize, atom_count: usize) -> Self {
        Self {
            k,
            n: atom_count,
            table: BTreeMap::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn atom_count(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, atom: Atom, entry: CanonicalEntry, value: Rational) {
        self.table.insert((atom.0, entry), value);
    }

    pub fn value(&self, atom: Atom, entry: &CanonicalEntry) -> Rational {
        // Avoids cloning the entry for the lookup key in the common case.
        self.table
            .range((atom.0, entry.clone())..=(atom.0, entry.clone()))
            .next()
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Atom, &CanonicalEntry, &Rational)> {
        self.table.iter().map(|((a, e), v)| (Atom(*a), e, v))
    }

    /// `Σ_a v(a, c(a))`.
    pub fn sum(&self, map: &CanonicalMap) -> Rational {
        map.entries()
            .iter()
            .enumerate()
            .map(|(a, e)| self.value(Atom(a), e))
            .fold(Rational::zero(), |acc, x| acc + x)
    }

    /// Stores an explicit value, 0 if unset, for every entry of `CA^{k,-}`.
    pub fn complete(&mut self, lib: &ActionLibrary, budget: Budget) -> Result<()> {
        for e in enumerate_ca_minus(self.k, lib, budget)? {
            for a in 0..self.n {
                self.table.entry((a, e.clone())).or_insert_with(Rational::zero);
            }
        }
        Ok(())
    }

    /// The entries of depth at most `k`, as a depth-`k` table.
    pub fn restrict(&self, k: usize) -> Self {
        Self {
            k,
            n: self.n,
            table: self
                .table
                .iter()
                .filter(|((_, e), _)| e.depth() <= k)
                .map(|(key, v)| (key.clone(), v.clone()))
                .collect(),
        }
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        let mut it = self.table.values();
        let first = it.next()?.clone();
        Some(it.fold((first.clone(), first), |(lo, hi), v| {
            (
                if *v < lo { v.clone() } else { lo },
                if *v > hi { v.clone() } else { hi },
            )
        }))
    }

    fn map_values(&mut self, f: impl Fn(&Rational) -> Rational) {
        for v in self.table.values_mut() {
            *v = f(v);
        }
    }

    /// Rescales the stored values onto `[0, 1]` by one increasing affine
    /// map; a constant table becomes 0. Unset entries stay 0.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        if let Some((lo, hi)) = self.bounds() {
            if hi > lo {
                let span = &hi - &lo;
                out.map_values(|v| (v - &lo) / &span);
            } else {
                out.map_values(|_| Rational::zero());
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.table
                .iter()
                .map(|((a, e), v)| json!({ "atom": atom_to_json(Atom(*a)), "entry": e.to_json(), "value": rational_to_json(v) }))
                .collect(),
        )
    }

    pub fn from_json(v: &Value, k: usize, props: &PropSet) -> Result<Self> {
        let items = v
            .as_array()
            .ok_or_else(|| Error::Json("utility table must be a list".into()))?;
        let mut out = Self::new(k, props.atom_count());
        for item in items {
            let a = atom_from_json(&item["atom"], props)?;
            let e = CanonicalEntry::from_json(&item["entry"], props)?;
            if e.depth() > k {
                return Err(Error::Json(format!(
                    "entry of depth {} in a depth-{k} table",
                    e.depth()
                )));
            }
            out.set(a, e, rational_from_json(&item["value"])?);
        }
        Ok(out)
    }
}

fn check_pool_depth(po: &PreferenceOrder, k: usize) -> Result<()> {
    match po.pool().iter().map(Action::depth).max() {
        Some(d) if d > k => Err(Error::DepthExceeded {
            action: d,
            available: k,
        }),
        _ => Ok(()),
    }
}

type VarIndex = HashMap<(usize, CanonicalEntry), usize>;

fn index_vars<'a>(
    maps: impl IntoIterator<Item = &'a CanonicalMap>,
    index: &mut VarIndex,
    keys: &mut Vec<(usize, CanonicalEntry)>,
) {
    for m in maps {
        for (a, e) in m.entries().iter().enumerate() {
            index.entry((a, e.clone())).or_insert_with(|| {
                keys.push((a, e.clone()));
                keys.len() - 1
            });
        }
    }
}

/// Coefficients of `S(top) − S(bottom)` over the utility variables.
fn pair_coeffs(top: &CanonicalMap, bottom: &CanonicalMap, index: &VarIndex) -> Vec<(usize, Rational)> {
    let mut c: BTreeMap<usize, i64> = BTreeMap::new();
    for (a, (x, y)) in top.entries().iter().zip(bottom.entries()).enumerate() {
        if x != y {
            *c.entry(index[&(a, x.clone())]).or_default() += 1;
            *c.entry(index[&(a, y.clone())]).or_default() -= 1;
        }
    }
    c.into_iter()
        .filter(|(_, v)| *v != 0)
        .map(|(j, v)| (j, Rational::from_integer(v.into())))
        .collect()
}

/// One constraint per pool comparison: members of a tier tie with the tier's
/// first member, and consecutive tiers are separated.
fn tier_pairs(po: &PreferenceOrder) -> Vec<(usize, usize, bool)> {
    let tiers = po.tiers();
    let mut out = Vec::new();
    for (t, members) in tiers.iter().enumerate() {
        for &m in &members[1..] {
            out.push((m, members[0], false));
        }
        if let Some(next) = tiers.get(t + 1) {
            out.push((members[0], next[0], true));
        }
    }
    out
}

/// Solves for `v^k` with sum differences of at least 1 on strict
/// preferences, without rescaling. Values are nonnegative.
pub fn solve_state_dependent_raw(po: &PreferenceOrder, lib: &ActionLibrary, k: usize) -> Result<Feasibility> {
    check_pool_depth(po, k)?;
    let maps = pool_maps(po, lib)?;
    let mut index = VarIndex::new();
    let mut keys = Vec::new();
    index_vars(&maps, &mut index, &mut keys);
    let mut lp = LinearProgram::new(keys.len());
    let pairs = tier_pairs(po);
    for &(top, bottom, strict) in &pairs {
        let coeffs = pair_coeffs(&maps[top], &maps[bottom], &index);
        if strict {
            lp.add_row(coeffs, Relation::Ge, Rational::one());
        } else {
            lp.add_row(coeffs, Relation::Eq, Rational::zero());
        }
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let mut v = StateDependentUtility::new(k, lib.atom_count());
            for ((a, e), val) in keys.into_iter().zip(x) {
                v.set(Atom(a), e, val);
            }
            Ok(Feasibility::Representable(v))
        }
        LpOutcome::Infeasible { farkas } => {
            let w = witness_from_farkas(&pairs, &farkas)?;
            w.revalidate(po, lib)
                .map_err(|e| Error::Inconsistent(format!("extracted witness does not validate: {e}")))?;
            Ok(Feasibility::Violation(w))
        }
        LpOutcome::Unbounded => unreachable!("feasibility programs have no objective"),
    }
}

/// `v^k` normalized to `[0, 1]`, or a cancellation witness.
pub fn solve_state_dependent(po: &PreferenceOrder, lib: &ActionLibrary, k: usize) -> Result<Feasibility> {
    Ok(match solve_state_dependent_raw(po, lib, k)? {
        Feasibility::Representable(v) => Feasibility::Representable(v.normalized()),
        other => other,
    })
}

const MAX_WITNESS_LEN: u64 = 1_000_000;

/// Unfolds Farkas multipliers into tuples. Equalities with a negative
/// multiplier contribute the reversed pair.
fn witness_from_farkas(pairs: &[(usize, usize, bool)], farkas: &[Rational]) -> Result<CancellationWitness> {
    let mult = integer_multiplicities(farkas);
    let total: BigInt = mult.iter().sum();
    if total > BigInt::from(MAX_WITNESS_LEN) {
        return Err(Error::Inconsistent(format!("witness would have {total} pairs")));
    }
    let mut weak = Vec::new();
    let mut strict = Vec::new();
    for ((&(top, bottom, is_strict), y), m) in pairs.iter().zip(farkas).zip(&mult) {
        let m = m.to_usize().unwrap_or(0);
        let pair = if y.is_negative() { (bottom, top) } else { (top, bottom) };
        let dest = if is_strict { &mut strict } else { &mut weak };
        dest.extend(std::iter::repeat_n(pair, m));
    }
    if strict.is_empty() {
        return Err(Error::Inconsistent("certificate has no strict comparison".into()));
    }
    weak.extend(strict);
    Ok(CancellationWitness {
        alphas: weak.iter().map(|p| p.0).collect(),
        betas: weak.iter().map(|p| p.1).collect(),
    })
}

/// `MX = U` for one atom: one row per entry of `CA^{k,-}`, one column per
/// state `(s, g)` with `s ∈ T^k_a` hit by some row.
#[derive(Debug, Clone)]
pub struct MatrixSystem {
    atom: Atom,
    k: usize,
    rows: Vec<CanonicalEntry>,
    olts: Vec<Arc<Olt>>,
    columns: Vec<(usize, ProgressFunction)>,
    hits: Vec<Vec<usize>>,
}

impl MatrixSystem {
    pub fn atom(&self) -> Atom {
        self.atom
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[CanonicalEntry] {
        &self.rows
    }

    /// `T^k_a`.
    pub fn olts(&self) -> &[Arc<Olt>] {
        &self.olts
    }

    /// `(index into olts, g)` per column.
    pub fn columns(&self) -> &[(usize, ProgressFunction)] {
        &self.columns
    }

    /// `hits[row][olt]` is the column of `(s, g_{row,s})`.
    pub fn hits(&self) -> &[Vec<usize>] {
        &self.hits
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        self.hits[row][self.columns[col].0] == col
    }

    pub fn sparse_rows(&self) -> Vec<SparseRow> {
        self.hits
            .iter()
            .map(|cols| cols.iter().map(|&c| (c, Rational::one())).collect())
            .collect()
    }

    /// `U = |T^k| · v(a, row)`.
    pub fn rhs(&self, v: &StateDependentUtility) -> Vec<Rational> {
        let t = int(self.olts.len() * v.atom_count());
        self.rows.iter().map(|e| &t * v.value(self.atom, e)).collect()
    }
}

pub fn build_matrix(atom: Atom, k: usize, lib: &ActionLibrary, budget: Budget) -> Result<MatrixSystem> {
    let n = lib.atom_count();
    let rows = enumerate_ca_minus(k, lib, budget)?;
    let olts: Vec<Arc<Olt>> = enumerate_olts_rooted(k, n, atom, budget)?
        .into_iter()
        .map(Arc::new)
        .collect();
    budget.check(
        "matrix entries",
        &(num_bigint::BigUint::from(rows.len()) * num_bigint::BigUint::from(olts.len())),
    )?;
    let mut col_of: HashMap<(usize, ProgressFunction), usize> = HashMap::new();
    let mut columns = Vec::new();
    let mut hits = Vec::with_capacity(rows.len());
    for e in &rows {
        let mut row = Vec::with_capacity(olts.len());
        for (i, s) in olts.iter().enumerate() {
            let g = progress_of_entry(e, s)?;
            let key = (i, g);
            let c = match col_of.get(&key) {
                Some(&c) => c,
                None => {
                    columns.push(key.clone());
                    col_of.insert(key, columns.len() - 1);
                    columns.len() - 1
                }
            };
            row.push(c);
        }
        hits.push(row);
    }
    Ok(MatrixSystem {
        atom,
        k,
        rows,
        olts,
        columns,
        hits,
    })
}

pub fn verify_independence(ms: &MatrixSystem) -> Independence {
    linalg::independence(&ms.sparse_rows())
}

/// `γ ⊐ γ'`. Noop is minimal. Otherwise, with first steps `A`, `A'` and
/// continuations `β`, `β'`: `A ⊋ A'`; or `A = A'` with `β` non-noop and
/// `β'` noop; or `A = A'`, `β ≠ β'` and `c_β(a) ⊐ c_{β'}(a)` or equal at
/// every atom.
pub fn dominates(g: &CanonicalEntry, h: &CanonicalEntry) -> bool {
    let (Some(a), Some(b)) = (g.first_step(), h.first_step()) else {
        return !g.is_noop() && h.is_noop();
    };
    if a.is_proper_superset(b) {
        return true;
    }
    if a != b {
        return false;
    }
    match (g.rest(), h.rest()) {
        (Some(_), None) => true,
        (Some(x), Some(y)) => {
            x != y
                && x.entries()
                    .iter()
                    .zip(y.entries())
                    .all(|(p, q)| p == q || dominates(p, q))
        }
        _ => false,
    }
}

/// The same relation with the third clause read as strict domination at
/// every atom.
pub fn dominates_strict_pointwise(g: &CanonicalEntry, h: &CanonicalEntry) -> bool {
    let (Some(a), Some(b)) = (g.first_step(), h.first_step()) else {
        return !g.is_noop() && h.is_noop();
    };
    if a.is_proper_superset(b) {
        return true;
    }
    if a != b {
        return false;
    }
    match (g.rest(), h.rest()) {
        (Some(_), None) => true,
        (Some(x), Some(y)) => x
            .entries()
            .iter()
            .zip(y.entries())
            .all(|(p, q)| dominates_strict_pointwise(p, q)),
        _ => false,
    }
}

/// The olt `s^{k,γ}` on which `γ`'s row is separated from every row it
/// does not dominate. The root order lists the atoms outside `A` first,
/// then the smallest atom of `A`, then the rest of `A`. For a continuation
/// `β`, the subtree under the child labeled `c` is built for `c_β(c)`.
pub fn witness_tree(entry: &CanonicalEntry, k: usize, atom_count: usize, root: Atom) -> Result<Olt> {
    if entry.is_noop() {
        return Err(Error::InvalidModel("noop rows need no witness tree".into()));
    }
    if entry.depth() > k {
        return Err(Error::DepthExceeded {
            action: entry.depth(),
            available: k,
        });
    }
    let mut olt = Olt::identity(k, atom_count, root);
    shape_witness(entry, &mut olt, 0)?;
    Ok(olt)
}

fn shape_witness(entry: &CanonicalEntry, olt: &mut Olt, node: usize) -> Result<()> {
    let Some(set) = entry.first_step() else {
        return Ok(());
    };
    let n = olt.atom_count();
    let mut order: Vec<usize> = (0..n).filter(|&c| !set.contains(Atom(c))).collect();
    order.extend(set.indices());
    olt.set_order(node, order)?;
    if let Some(rest) = entry.rest() {
        for (c, e) in rest.entries().iter().enumerate() {
            shape_witness(e, olt, child(node, c, n))?;
        }
    }
    Ok(())
}

/// Checks the separation property of `witness_tree` for row `row` of `ms`:
/// every other row with the same progress function on the witness must be
/// dominated. Returns the first offending row.
pub fn guarantee_counterexample(
    ms: &MatrixSystem,
    row: usize,
    order: impl Fn(&CanonicalEntry, &CanonicalEntry) -> bool,
) -> Result<Option<usize>> {
    let gamma = &ms.rows[row];
    if gamma.is_noop() {
        // Every other row moves the root, so only noop yields the identity.
        return Ok(None);
    }
    let olt = witness_tree(gamma, ms.k, ms.olts[0].atom_count(), ms.atom)?;
    let g = progress_of_entry(gamma, &olt)?;
    for (j, other) in ms.rows.iter().enumerate() {
        if j != row && progress_of_entry(other, &olt)? == g && !order(gamma, other) {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

/// Solves `MX = U` for the given utility, returning the nonzero `x` by
/// column.
pub fn solve_utilities(v: &StateDependentUtility, ms: &MatrixSystem) -> Result<SparseRow> {
    let rows = ms.sparse_rows();
    let rhs = ms.rhs(v);
    let x = linalg::solve(&rows, &rhs)?;
    if linalg::apply(&rows, &x) != rhs {
        return Err(Error::Inconsistent("nonzero residual".into()));
    }
    Ok(x)
}

/// `u^k` on olt states. Unset states read as 0.
#[derive(Debug, Clone)]
pub struct UtilityTable {
    k: usize,
    n: usize,
    olts: Arc<Vec<Arc<Olt>>>,
    olt_index: Arc<HashMap<Olt, usize>>,
    values: HashMap<(usize, ProgressFunction), Rational>,
}

impl UtilityTable {
    /// An empty table over all of `T^k`.
    pub fn new(k: usize, atom_count: usize, budget: Budget) -> Result<Self> {
        let olts: Vec<Arc<Olt>> = enumerate_olts(k, atom_count, budget)?
            .into_iter()
            .map(Arc::new)
            .collect();
        let olt_index = olts.iter().enumerate().map(|(i, o)| ((**o).clone(), i)).collect();
        Ok(Self {
            k,
            n: atom_count,
            olts: Arc::new(olts),
            olt_index: Arc::new(olt_index),
            values: HashMap::new(),
        })
    }

    fn empty_like(&self) -> Self {
        Self {
            values: HashMap::new(),
            ..self.clone()
        }
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn atom_count(&self) -> usize {
        self.n
    }

    /// `T^k` in enumeration order.
    pub fn olts(&self) -> &[Arc<Olt>] {
        &self.olts
    }

    pub fn olt_position(&self, olt: &Olt) -> Option<usize> {
        self.olt_index.get(olt).copied()
    }

    /// `|T^k|`.
    pub fn olt_total(&self) -> usize {
        self.olts.len()
    }

    pub fn get(&self, olt: usize, g: &ProgressFunction) -> Rational {
        self.values
            .get(&(olt, g.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, olt: usize, g: ProgressFunction, value: Rational) {
        if value.is_zero() {
            self.values.remove(&(olt, g));
        } else {
            self.values.insert((olt, g), value);
        }
    }

    /// Nonzero entries, sorted.
    pub fn entries(&self) -> Vec<(usize, &ProgressFunction, &Rational)> {
        let mut out: Vec<_> = self.values.iter().map(|((o, g), v)| (*o, g, v)).collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// `Σ_{s ∈ T^k} (1/|T^k|) u(s, g_{c(root s), s})`.
    pub fn expected_utility(&self, map: &CanonicalMap) -> Result<Rational> {
        let mut total = Rational::zero();
        for (i, s) in self.olts.iter().enumerate() {
            let g = progress_of_entry(map.get(s.root_atom()), s)?;
            total += self.get(i, &g);
        }
        Ok(total / int(self.olts.len()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries()
                .into_iter()
                .map(|(o, g, v)| {
                    json!({ "olt": self.olts[o].to_json(), "progress": g.to_json(self.n), "value": rational_to_json(v) })
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value, k: usize, props: &PropSet, budget: Budget) -> Result<Self> {
        let mut table = Self::new(k, props.atom_count(), budget)?;
        let items = v.as_array().ok_or_else(|| Error::Json("`u` must be a list".into()))?;
        for item in items {
            let olt = Olt::from_json(&item["olt"], props)?;
            if olt.depth() != k {
                return Err(Error::Json(format!(
                    "olt of depth {} in a depth-{k} table",
                    olt.depth()
                )));
            }
            let pos = table.olt_position(&olt).expect("enumeration covers every olt");
            let g = ProgressFunction::from_json(&item["progress"], k, props.atom_count())?;
            table.set(pos, g, rational_from_json(&item["value"])?);
        }
        Ok(table)
    }
}

/// The representation at depth `k`: `Pr` uniform on the states `(s, id)`,
/// `u` from the per-atom systems, and selection through olt progress.
#[derive(Debug, Clone)]
pub struct Representation {
    lib: ActionLibrary,
    v: StateDependentUtility,
    u: UtilityTable,
}

impl Representation {
    pub fn new(lib: ActionLibrary, v: StateDependentUtility, u: UtilityTable) -> Self {
        Self { lib, v, u }
    }

    pub fn depth(&self) -> usize {
        self.u.depth()
    }

    pub fn library(&self) -> &ActionLibrary {
        &self.lib
    }

    pub fn v(&self) -> &StateDependentUtility {
        &self.v
    }

    pub fn u(&self) -> &UtilityTable {
        &self.u
    }

    pub fn u_mut(&mut self) -> &mut UtilityTable {
        &mut self.u
    }

    /// `Pr^k(s, g)`.
    pub fn pr(&self, state: &OltState) -> Rational {
        if state.progress().is_identity() && state.olt().depth() == self.depth() {
            Rational::new(BigInt::one(), BigInt::from(self.u.olt_total()))
        } else {
            Rational::zero()
        }
    }

    pub fn utility(&self, state: &OltState) -> Rational {
        match self.u.olt_position(state.olt()) {
            Some(i) => self.u.get(i, state.progress()),
            None => Rational::zero(),
        }
    }

    pub fn pr_total(&self) -> Rational {
        self.u
            .olts()
            .iter()
            .map(|s| self.pr(&OltState::initial(Arc::clone(s))))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn expected_utility(&self, action: &Action) -> Result<Rational> {
        if action.depth() > self.depth() {
            return Err(Error::DepthExceeded {
                action: action.depth(),
                available: self.depth(),
            });
        }
        self.u.expected_utility(&canonical_map(action, &self.lib)?)
    }

    pub fn to_json(&self) -> Value {
        let props = self.lib.props();
        json!({
            "k": self.depth(),
            "prop_set": props.names(),
            "F": self.lib.effects().iter().map(|f| f.display(props).to_string()).collect::<Vec<_>>(),
            "t_count": self.u.olt_total().to_string(),
            "pr": "uniform on (s, id)",
            "u": self.u.to_json(),
            "v": self.v.to_json(),
        })
    }

    pub fn from_json(v: &Value, budget: Budget) -> Result<Self> {
        let names: Vec<String> = v["prop_set"]
            .as_array()
            .ok_or_else(|| Error::Json("representation needs `prop_set`".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Json("bad proposition name".into()))
            })
            .collect::<Result<_>>()?;
        let props = PropSet::new(names)?;
        let effects: Vec<Formula> = v["F"]
            .as_array()
            .ok_or_else(|| Error::Json("representation needs `F`".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .ok_or_else(|| Error::Json("effects must be strings".into()))
                    .and_then(|s| parse_formula(s, &props))
            })
            .collect::<Result<_>>()?;
        let lib = ActionLibrary::new(props.clone(), effects)?;
        let k = v["k"]
            .as_u64()
            .ok_or_else(|| Error::Json("representation needs `k`".into()))? as usize;
        let u = UtilityTable::from_json(&v["u"], k, &props, budget)?;
        let vt = StateDependentUtility::from_json(&v["v"], k, &props)?;
        Ok(Self::new(lib, vt, u))
    }
}

/// Builds every per-atom system for a depth once, so many utilities can be
/// assembled against them.
#[derive(Debug, Clone)]
pub struct Assembler {
    lib: ActionLibrary,
    k: usize,
    systems: Vec<MatrixSystem>,
    template: UtilityTable,
}

impl Assembler {
    /// Fails with `Inconsistent` if some system has dependent rows.
    pub fn new(k: usize, lib: &ActionLibrary, budget: Budget) -> Result<Self> {
        let n = lib.atom_count();
        let template = UtilityTable::new(k, n, budget)?;
        let mut systems = Vec::with_capacity(n);
        for a in lib.props().atoms() {
            let ms = build_matrix(a, k, lib, budget)?;
            if let Independence::Dependent { rank, .. } = verify_independence(&ms) {
                return Err(Error::Inconsistent(format!(
                    "rows for atom {} are dependent (rank {rank} of {})",
                    a.0 + 1,
                    ms.rows.len()
                )));
            }
            systems.push(ms);
        }
        Ok(Self {
            lib: lib.clone(),
            k,
            systems,
            template,
        })
    }

    pub fn systems(&self) -> &[MatrixSystem] {
        &self.systems
    }

    pub fn assemble(&self, v: &StateDependentUtility) -> Result<Representation> {
        if v.depth() != self.k {
            return Err(Error::InvalidModel(format!(
                "utility of depth {} for a depth-{} assembly",
                v.depth(),
                self.k
            )));
        }
        let mut u = self.template.empty_like();
        for ms in &self.systems {
            let x = solve_utilities(v, ms)?;
            for (col, val) in x {
                let (i, g) = &ms.columns[col];
                let pos = u.olt_position(&ms.olts[*i]).expect("T^k_a lies in T^k");
                u.set(pos, g.clone(), val);
            }
        }
        Ok(Representation::new(self.lib.clone(), v.clone(), u))
    }
}

pub fn assemble(v: &StateDependentUtility, lib: &ActionLibrary, budget: Budget) -> Result<Representation> {
    Assembler::new(v.depth(), lib, budget)?.assemble(v)
}

pub fn expected_utility(rep: &Representation, action: &Action) -> Result<Rational> {
    rep.expected_utility(action)
}

/// Checks `α ⪰ β iff EU(α) ≥ EU(β)` on every pool pair; returns the first
/// failing pair.
pub fn verify_representation(rep: &Representation, po: &PreferenceOrder) -> Result<Option<(usize, usize)>> {
    check_pool_depth(po, rep.depth())?;
    let eu: Vec<Rational> = po
        .pool()
        .iter()
        .map(|a| rep.expected_utility(a))
        .collect::<Result<_>>()?;
    for i in 0..po.len() {
        for j in 0..po.len() {
            if po.weakly_prefers(i, j) != (eu[i] >= eu[j]) {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// Checks `Σ_{s ∈ T^k_a} u(s, g_{γ,s}) = |T^k| v(a, γ)` for every atom and
/// every `γ ∈ CA^{k,-}`; returns the first failure.
pub fn verify_utility_equations(
    u: &UtilityTable,
    v: &StateDependentUtility,
    lib: &ActionLibrary,
    budget: Budget,
) -> Result<Option<(Atom, CanonicalEntry)>> {
    let total = int(u.olt_total());
    let rows = enumerate_ca_minus(u.depth(), lib, budget)?;
    for a in lib.props().atoms() {
        for e in &rows {
            let mut sum = Rational::zero();
            for (i, s) in u.olts().iter().enumerate() {
                if s.root_atom() == a {
                    sum += u.get(i, &progress_of_entry(e, s)?);
                }
            }
            if sum != &total * v.value(a, e) {
                return Ok(Some((a, e.clone())));
            }
        }
    }
    Ok(None)
}

/// Derives a compatible family `v^1..v^K` from one depth-`K` table by
/// restriction. Depth-`k` pool constraints are a subset of the depth-`K`
/// ones, so each restriction still represents its sub-order.
pub fn restrict_family(
    top: &StateDependentUtility,
    lib: &ActionLibrary,
    budget: Budget,
) -> Result<Vec<StateDependentUtility>> {
    let mut full = top.clone();
    full.complete(lib, budget)?;
    Ok((1..=top.depth()).map(|k| full.restrict(k)).collect())
}

/// Whether `next` agrees with `prev` on every stored entry of `prev`.
pub fn v_compatible(prev: &StateDependentUtility, next: &StateDependentUtility) -> bool {
    prev.entries().all(|(a, e, x)| next.value(a, e) == *x)
}

/// Makes `v^1..v^K` compatible. A depth that already agrees with the
/// previous one is kept; otherwise it is re-solved with the shared entries
/// pinned, maximizing the common margin of strict preferences. If no
/// positive margin exists the step fails with `StitchInfeasible`. The
/// family is rescaled onto `[0, 1]` at the end if needed.
pub fn stitch_v(
    vs: &[StateDependentUtility],
    po: &PreferenceOrder,
    lib: &ActionLibrary,
    budget: Budget,
) -> Result<Vec<StateDependentUtility>> {
    let mut out: Vec<StateDependentUtility> = Vec::with_capacity(vs.len());
    for (i, v) in vs.iter().enumerate() {
        if v.depth() != i + 1 {
            return Err(Error::InvalidModel(format!("table {} has depth {}", i + 1, v.depth())));
        }
        let mut v = v.clone();
        v.complete(lib, budget)?;
        let next = match out.last() {
            None => v,
            Some(prev) if v_compatible(prev, &v) => v,
            Some(prev) => pinned_solve(prev, &v, po, lib, budget)?,
        };
        out.push(next);
    }
    let (lo, hi) = out
        .iter()
        .filter_map(StateDependentUtility::bounds)
        .fold(None, |acc: Option<(Rational, Rational)>, (l, h)| match acc {
            None => Some((l, h)),
            Some((a, b)) => Some((a.min(l), b.max(h))),
        })
        .unwrap_or((Rational::zero(), Rational::zero()));
    if lo.is_negative() || hi > Rational::one() {
        let span = &hi - &lo;
        for v in &mut out {
            v.map_values(|x| (x - &lo) / &span);
        }
    }
    Ok(out)
}

fn pinned_solve(
    prev: &StateDependentUtility,
    current: &StateDependentUtility,
    po: &PreferenceOrder,
    lib: &ActionLibrary,
    budget: Budget,
) -> Result<StateDependentUtility> {
    let k = current.depth();
    let (sub, _) = po.restrict(|a| a.depth() <= k);
    let maps = pool_maps(&sub, lib)?;
    let mut index = VarIndex::new();
    let mut keys: Vec<(usize, CanonicalEntry)> = Vec::new();
    for (a, e, _) in current.entries() {
        index.entry((a.0, e.clone())).or_insert_with(|| {
            keys.push((a.0, e.clone()));
            keys.len() - 1
        });
    }
    index_vars(&maps, &mut index, &mut keys);
    let mut lp = LinearProgram::new(keys.len());
    for j in 0..keys.len() {
        lp.set_free(j);
    }
    let margin = lp.add_var(true);
    for (a, e, x) in prev.entries() {
        lp.add_row(
            vec![(index[&(a.0, e.clone())], Rational::one())],
            Relation::Eq,
            x.clone(),
        );
    }
    for (top, bottom, strict) in tier_pairs(&sub) {
        let mut coeffs = pair_coeffs(&maps[top], &maps[bottom], &index);
        if strict {
            coeffs.push((margin, -Rational::one()));
            lp.add_row(coeffs, Relation::Ge, Rational::zero());
        } else {
            lp.add_row(coeffs, Relation::Eq, Rational::zero());
        }
    }
    lp.add_row(vec![(margin, Rational::one())], Relation::Le, Rational::one());
    lp.maximize(vec![(margin, Rational::one())]);
    let _ = budget;
    match lp.solve() {
        LpOutcome::Optimal { x, value } if value.is_positive() => {
            let mut out = StateDependentUtility::new(k, current.atom_count());
            for ((a, e), val) in keys.into_iter().zip(x) {
                out.set(Atom(a), e, val);
            }
            Ok(out)
        }
        _ => Err(Error::StitchInfeasible { depth: k }),
    }
}

/// The `w^k` construction: `w^1 = u^1`, and `w^{k+1}(t, g')` is
/// `w^k(t|_k, g')` when `g'` is k-bounded and `u^{k+1}(t, g')` otherwise.
pub fn stitch_u(us: &[UtilityTable], budget: Budget) -> Result<Vec<UtilityTable>> {
    let mut out: Vec<UtilityTable> = Vec::with_capacity(us.len());
    for u in us {
        let next = match out.last() {
            None => u.clone(),
            Some(prev) => {
                let k = prev.depth();
                if u.depth() != k + 1 {
                    return Err(Error::InvalidModel(
                        "utility tables must have consecutive depths".into(),
                    ));
                }
                let mut w = u.empty_like();
                for ((o, g), x) in &u.values {
                    if !g.is_bounded(k, u.n) {
                        w.set(*o, g.clone(), x.clone());
                    }
                }
                for ((o, g), x) in &prev.values {
                    for t in prev.olts[*o].extensions(k + 1, budget)? {
                        let pos = w.olt_position(&t).expect("extensions lie in T^{k+1}");
                        w.set(pos, g.clone(), x.clone());
                    }
                }
                w
            }
        };
        out.push(next);
    }
    Ok(out)
}

/// Where a family of utility tables fails to be u-compatible.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityViolation {
    pub depth: usize,
    pub olt: Olt,
    pub progress: ProgressFunction,
}

/// Checks `w^{k+1}(t, g) = w^k(t|_k, g|_k)` on every k-bounded state where
/// either side is nonzero.
pub fn check_u_compatibility(ws: &[UtilityTable], budget: Budget) -> Result<Option<CompatibilityViolation>> {
    for pair in ws.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let k = prev.depth();
        for ((o, g), x) in &next.values {
            if g.is_bounded(k, next.n) {
                let s = next.olts[*o].project(k);
                let i = prev.olt_position(&s).expect("projections lie in T^k");
                if prev.get(i, &g.project(k, next.n)) != *x {
                    return Ok(Some(CompatibilityViolation {
                        depth: k + 1,
                        olt: (*next.olts[*o]).clone(),
                        progress: g.clone(),
                    }));
                }
            }
        }
        for ((o, g), x) in &prev.values {
            for t in prev.olts[*o].extensions(k + 1, budget)? {
                let pos = next.olt_position(&t).expect("extensions lie in T^{k+1}");
                if next.get(pos, g) != *x {
                    return Ok(Some(CompatibilityViolation {
                        depth: k + 1,
                        olt: t,
                        progress: g.clone(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// `Pr^k(s, id) = 1/|T^k|`.
pub fn uniform_pr(olt: &Olt) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(olt_count(olt.depth(), olt.atom_count())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrViolation {
    pub k: usize,
    pub k2: usize,
    pub olt: Olt,
    pub expected: Rational,
    pub found: Rational,
}

/// For `1 ≤ k < k' ≤ K` and every `s ∈ T^k`, checks that `Pr^{k'}` summed
/// over the extensions of `(s, id)` equals `Pr^k(s, id)`.
pub fn check_pr_compatibility(
    max_k: usize,
    atom_count: usize,
    pr: &dyn Fn(&Olt) -> Rational,
    budget: Budget,
) -> Result<Option<PrViolation>> {
    for k in 1..max_k {
        for s in enumerate_olts(k, atom_count, budget)? {
            let expected = pr(&s);
            for k2 in k + 1..=max_k {
                let found = s
                    .extensions(k2, budget)?
                    .iter()
                    .map(pr)
                    .fold(Rational::zero(), |a, b| a + b);
                if found != expected {
                    return Ok(Some(PrViolation {
                        k,
                        k2,
                        olt: s,
                        expected,
                        found,
                    }));
                }
            }
        }
    }
    Ok(None)
}
