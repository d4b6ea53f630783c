//! Preference orders over finite pools of actions and the cancellation
//! axiom.
//!
//! An order is stored as tiers: tier 0 holds the most preferred actions and
//! actions sharing a tier are indifferent.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::actions::{Action, ActionLibrary};
use crate::budget::Budget;
use crate::canonical::{canonical_map, CanonicalEntry, CanonicalMap};
use crate::error::{Error, Result};
use crate::json::{atom_to_json, Rational};
use crate::representation::{solve_state_dependent, StateDependentUtility};
use crate::syntax::parse_action;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// `α ≻ β`
    Better,
    /// `β ≻ α`
    Worse,
    /// `α ∼ β`
    Indifferent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceOrder {
    pool: Vec<Action>,
    tier: Vec<usize>,
}

impl PreferenceOrder {
    /// `tiers[t]` lists pool indices; every index must appear exactly once.
    pub fn from_tiers(pool: Vec<Action>, tiers: &[Vec<usize>]) -> Result<Self> {
        let mut tier = vec![usize::MAX; pool.len()];
        let mut t = 0;
        for members in tiers {
            if members.is_empty() {
                continue;
            }
            for &i in members {
                let slot = tier
                    .get_mut(i)
                    .ok_or_else(|| Error::InvalidPreferences(format!("pool index {i} out of range")))?;
                if *slot != usize::MAX {
                    return Err(Error::InvalidPreferences(format!("pool index {i} is ranked twice")));
                }
                *slot = t;
            }
            t += 1;
        }
        if let Some(i) = tier.iter().position(|&t| t == usize::MAX) {
            return Err(Error::InvalidPreferences(format!("pool index {i} is not ranked")));
        }
        Ok(Self { pool, tier })
    }

    /// Higher scores are preferred; equal scores are indifferent.
    pub fn from_scores<T: Ord>(pool: Vec<Action>, scores: &[T]) -> Self {
        assert_eq!(pool.len(), scores.len());
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        idx.sort_by(|&a, &b| scores[b].cmp(&scores[a]));
        let mut tier = vec![0; pool.len()];
        let mut t = 0;
        for w in 0..idx.len() {
            if w > 0 && scores[idx[w]] != scores[idx[w - 1]] {
                t += 1;
            }
            tier[idx[w]] = t;
        }
        Self { pool, tier }
    }

    /// Builds the order from raw pairs `(i, j)` meaning `pool[i] ⪰ pool[j]`,
    /// rejecting incomplete or intransitive data.
    pub fn from_pairs(pool: Vec<Action>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = pool.len();
        let mut geq = vec![vec![false; n]; n];
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidPreferences(format!("pair ({i}, {j}) out of range")));
            }
            geq[i][j] = true;
        }
        for (i, row) in geq.iter_mut().enumerate() {
            row[i] = true;
        }
        for i in 0..n {
            for j in 0..n {
                if !geq[i][j] && !geq[j][i] {
                    return Err(Error::InvalidPreferences(format!(
                        "pool entries {i} and {j} are not compared"
                    )));
                }
                for k in 0..n {
                    if geq[i][j] && geq[j][k] && !geq[i][k] {
                        return Err(Error::InvalidPreferences(format!(
                            "not transitive: {i} ⪰ {j} ⪰ {k} but not {i} ⪰ {k}"
                        )));
                    }
                }
            }
        }
        // The number of entries an action weakly beats ranks it.
        let wins: Vec<usize> = (0..n).map(|i| geq[i].iter().filter(|&&b| b).count()).collect();
        Ok(Self::from_scores(pool, &wins))
    }

    pub fn pool(&self) -> &[Action] {
        &self.pool
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn tier(&self, i: usize) -> usize {
        self.tier[i]
    }

    pub fn tiers(&self) -> Vec<Vec<usize>> {
        let count = self.tier.iter().max().map_or(0, |t| t + 1);
        let mut out = vec![Vec::new(); count];
        for (i, &t) in self.tier.iter().enumerate() {
            out[t].push(i);
        }
        out
    }

    pub fn compare(&self, i: usize, j: usize) -> Comparison {
        match self.tier[i].cmp(&self.tier[j]) {
            std::cmp::Ordering::Less => Comparison::Better,
            std::cmp::Ordering::Greater => Comparison::Worse,
            std::cmp::Ordering::Equal => Comparison::Indifferent,
        }
    }

    /// `pool[i] ⪰ pool[j]`.
    pub fn weakly_prefers(&self, i: usize, j: usize) -> bool {
        self.tier[i] <= self.tier[j]
    }

    pub fn index_of(&self, action: &Action) -> Option<usize> {
        self.pool.iter().position(|a| a == action)
    }

    pub fn relation(&self, alpha: &Action, beta: &Action, props: &crate::logic::PropSet) -> Result<Comparison> {
        let find = |a: &Action| {
            self.index_of(a)
                .ok_or_else(|| Error::NotInPool(a.display(props).to_string()))
        };
        Ok(self.compare(find(alpha)?, find(beta)?))
    }

    /// The sub-order on the actions satisfying `keep`, with the original
    /// pool indices.
    pub fn restrict(&self, keep: impl Fn(&Action) -> bool) -> (PreferenceOrder, Vec<usize>) {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.pool[i])).collect();
        let pool = idx.iter().map(|&i| self.pool[i].clone()).collect();
        let tiers: Vec<usize> = idx.iter().map(|&i| self.tier[i]).collect();
        let neg: Vec<std::cmp::Reverse<usize>> = tiers.into_iter().map(std::cmp::Reverse).collect();
        (Self::from_scores(pool, &neg), idx)
    }

    pub fn max_depth(&self) -> usize {
        self.pool.iter().map(Action::depth).max().unwrap_or(0)
    }

    pub fn to_json(&self, lib: &ActionLibrary) -> Value {
        let pool: Vec<String> = self.pool.iter().map(|a| a.display(lib.props()).to_string()).collect();
        json!({ "pool": pool, "tiers": self.tiers() })
    }

    /// Accepts `{"pool", "tiers"}` or `{"pool", "pairs"}`, with 0-based
    /// pool indices. Pool actions must use effects from `lib`.
    pub fn from_json(v: &Value, lib: &ActionLibrary) -> Result<Self> {
        let pool = pool_from_json(v)?
            .iter()
            .map(|s| parse_action(s, lib))
            .collect::<Result<Vec<_>>>()?;
        Self::from_json_with_pool(v, pool)
    }

    pub fn from_json_with_pool(v: &Value, pool: Vec<Action>) -> Result<Self> {
        let index_list = |x: &Value| -> Result<Vec<usize>> {
            x.as_array()
                .ok_or_else(|| Error::InvalidPreferences(format!("expected a list, found {x}")))?
                .iter()
                .map(|i| {
                    i.as_u64()
                        .map(|i| i as usize)
                        .ok_or_else(|| Error::InvalidPreferences(format!("bad pool index {i}")))
                })
                .collect()
        };
        if let Some(tiers) = v.get("tiers") {
            let tiers = tiers
                .as_array()
                .ok_or_else(|| Error::InvalidPreferences("`tiers` must be a list".into()))?
                .iter()
                .map(index_list)
                .collect::<Result<Vec<_>>>()?;
            Self::from_tiers(pool, &tiers)
        } else if let Some(pairs) = v.get("pairs") {
            let pairs = pairs
                .as_array()
                .ok_or_else(|| Error::InvalidPreferences("`pairs` must be a list".into()))?
                .iter()
                .map(|p| match index_list(p)?.as_slice() {
                    [i, j] => Ok((*i, *j)),
                    _ => Err(Error::InvalidPreferences(format!("bad pair {p}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Self::from_pairs(pool, &pairs)
        } else {
            Err(Error::InvalidPreferences("need `tiers` or `pairs`".into()))
        }
    }
}

/// The action texts of a preferences document.
pub fn pool_from_json(v: &Value) -> Result<Vec<String>> {
    v.get("pool")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidPreferences("missing `pool`".into()))?
        .iter()
        .map(|s| {
            s.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::InvalidPreferences(format!("pool entries must be strings, found {s}")))
        })
        .collect()
}

pub fn pool_maps(po: &PreferenceOrder, lib: &ActionLibrary) -> Result<Vec<CanonicalMap>> {
    po.pool().iter().map(|a| canonical_map(a, lib)).collect()
}

/// A pair `(i, j)` with `c_i = c_j` but `pool[i] ≻ pool[j]`, if any.
pub fn induced_order_welldefined(po: &PreferenceOrder, lib: &ActionLibrary) -> Result<Option<(usize, usize)>> {
    let maps = pool_maps(po, lib)?;
    Ok(welldefined_counterexample(po, &maps))
}

fn welldefined_counterexample(po: &PreferenceOrder, maps: &[CanonicalMap]) -> Option<(usize, usize)> {
    let mut first: HashMap<&CanonicalMap, usize> = HashMap::new();
    for (i, m) in maps.iter().enumerate() {
        match first.get(m) {
            None => {
                first.insert(m, i);
            }
            Some(&j) => match po.compare(i, j) {
                Comparison::Better => return Some((i, j)),
                Comparison::Worse => return Some((j, i)),
                Comparison::Indifferent => {}
            },
        }
    }
    None
}

/// Two equal-length tuples of pool indices. For every atom the multisets
/// `{{c_{α_i}(a)}}` and `{{c_{β_i}(a)}}` agree, `α_i ⪰ β_i` for every
/// `i < n`, and `β_n ⪰ α_n` fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CancellationWitness {
    pub alphas: Vec<usize>,
    pub betas: Vec<usize>,
}

impl CancellationWitness {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Re-checks every defining property from scratch.
    pub fn revalidate(&self, po: &PreferenceOrder, lib: &ActionLibrary) -> std::result::Result<(), String> {
        let n = self.alphas.len();
        if n == 0 || self.betas.len() != n {
            return Err("tuples must be nonempty and of equal length".into());
        }
        if self.alphas.iter().chain(&self.betas).any(|&i| i >= po.len()) {
            return Err("pool index out of range".into());
        }
        for i in 0..n - 1 {
            if !po.weakly_prefers(self.alphas[i], self.betas[i]) {
                return Err(format!("premise {} fails", i + 1));
            }
        }
        if po.weakly_prefers(self.betas[n - 1], self.alphas[n - 1]) {
            return Err("the conclusion holds, so this is not a violation".into());
        }
        let maps = pool_maps(po, lib).map_err(|e| e.to_string())?;
        for a in lib.props().atoms() {
            let mut left: Vec<&CanonicalEntry> = self.alphas.iter().map(|&i| maps[i].get(a)).collect();
            let mut right: Vec<&CanonicalEntry> = self.betas.iter().map(|&i| maps[i].get(a)).collect();
            left.sort();
            right.sort();
            if left != right {
                return Err(format!("multisets differ at atom {}", a.0 + 1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self, po: &PreferenceOrder, lib: &ActionLibrary) -> Result<Value> {
        let props = lib.props();
        let maps = pool_maps(po, lib)?;
        let text = |i: &usize| po.pool()[*i].display(props).to_string();
        let multisets: Vec<Value> = props
            .atoms()
            .map(|a| {
                let mut entries: Vec<&CanonicalEntry> = self.alphas.iter().map(|&i| maps[i].get(a)).collect();
                entries.sort();
                json!({
                    "atom": atom_to_json(a),
                    "entries": entries.iter().map(|e| e.to_json()).collect::<Vec<_>>(),
                })
            })
            .collect();
        Ok(json!({
            "n": self.len(),
            "alphas": self.alphas.iter().map(text).collect::<Vec<_>>(),
            "betas": self.betas.iter().map(text).collect::<Vec<_>>(),
            "alpha_indices": self.alphas,
            "beta_indices": self.betas,
            "multisets": multisets,
            "failed": format!("beta_{n} ⪰ alpha_{n}", n = self.len()),
        }))
    }
}

type SumKey = Vec<(u32, i32)>;

fn add_into(sum: &SumKey, diff: &SumKey, sign: i32) -> SumKey {
    let mut out: Vec<(u32, i32)> = Vec::with_capacity(sum.len() + diff.len());
    let (mut i, mut j) = (0, 0);
    while i < sum.len() || j < diff.len() {
        let take_left = j >= diff.len() || (i < sum.len() && sum[i].0 < diff[j].0);
        let take_right = i >= sum.len() || (j < diff.len() && diff[j].0 < sum[i].0);
        if take_left {
            out.push(sum[i]);
            i += 1;
        } else if take_right {
            out.push((diff[j].0, sign * diff[j].1));
            j += 1;
        } else {
            let v = sum[i].1 + sign * diff[j].1;
            if v != 0 {
                out.push((sum[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Exhaustive search for a violation of cancellation with tuples of size at
/// most `max_n`, over all orderings of the tuples. Returns a smallest one.
///
/// A violation is a multiset of weakly ordered pairs, at least one strict,
/// whose outcome indicators cancel atom by atom. Pairs are searched on
/// distinct canonical maps with a meet-in-the-middle split.
pub fn check_cancellation(
    po: &PreferenceOrder,
    lib: &ActionLibrary,
    max_n: usize,
    budget: Budget,
) -> Result<Option<CancellationWitness>> {
    if max_n == 0 {
        return Err(Error::InvalidPreferences("max_n must be at least 1".into()));
    }
    let maps = pool_maps(po, lib)?;
    if let Some((i, j)) = welldefined_counterexample(po, &maps) {
        return Ok(Some(CancellationWitness {
            alphas: vec![i],
            betas: vec![j],
        }));
    }
    // One representative per canonical map; all members share a tier now.
    let mut reps: Vec<usize> = Vec::new();
    let mut seen: HashMap<&CanonicalMap, ()> = HashMap::new();
    for (i, m) in maps.iter().enumerate() {
        if seen.insert(m, ()).is_none() {
            reps.push(i);
        }
    }
    let mut entry_ids: HashMap<&CanonicalEntry, u32> = HashMap::new();
    for &i in &reps {
        for e in maps[i].entries() {
            let next = entry_ids.len() as u32;
            entry_ids.entry(e).or_insert(next);
        }
    }
    let width = entry_ids.len() as u32;
    let indicator = |i: usize| -> SumKey {
        let mut v: SumKey = maps[i]
            .entries()
            .iter()
            .enumerate()
            .map(|(a, e)| (a as u32 * width + entry_ids[e], 1))
            .collect();
        v.sort_unstable();
        v
    };
    struct Pair {
        alpha: usize,
        beta: usize,
        strict: bool,
        diff: SumKey,
    }
    let mut pairs = Vec::new();
    for &x in &reps {
        for &y in &reps {
            if x != y && po.weakly_prefers(x, y) {
                pairs.push(Pair {
                    alpha: x,
                    beta: y,
                    strict: !po.weakly_prefers(y, x),
                    diff: add_into(&indicator(x), &indicator(y), -1),
                });
            }
        }
    }

    let half = max_n.div_ceil(2);
    let p = pairs.len();
    // Multisets of size ≤ half drawn from p pairs: C(p + half, half).
    let mut count = BigInt::one();
    for i in 0..half {
        count = count * BigInt::from(p + half - i) / BigInt::from(i + 1);
    }
    budget.check("cancellation half-tuples", &count.to_biguint().unwrap_or_default())?;

    // (sum, size, strict) → one representative multiset.
    let mut table: HashMap<(SumKey, usize, bool), Vec<usize>> = HashMap::new();
    let mut stack: Vec<(SumKey, Vec<usize>, bool)> = vec![(Vec::new(), Vec::new(), false)];
    while let Some((sum, chosen, strict)) = stack.pop() {
        let size = chosen.len();
        table
            .entry((sum.clone(), size, strict))
            .or_insert_with(|| chosen.clone());
        if size == half {
            continue;
        }
        let start = chosen.last().copied().unwrap_or(0);
        for (q, pair) in pairs.iter().enumerate().skip(start) {
            let mut next = chosen.clone();
            next.push(q);
            stack.push((add_into(&sum, &pair.diff, 1), next, strict || pair.strict));
        }
    }

    for n in 1..=max_n {
        let mut found: Option<Vec<usize>> = None;
        for ((sum, s1, strict1), left) in &table {
            if *s1 > n || n - s1 > half {
                continue;
            }
            let neg: SumKey = sum.iter().map(|&(c, v)| (c, -v)).collect();
            for strict2 in [false, true] {
                if !(strict1 | strict2) {
                    continue;
                }
                if let Some(right) = table.get(&(neg.clone(), n - s1, strict2)) {
                    let mut all = left.clone();
                    all.extend(right);
                    all.sort_unstable();
                    if found.as_ref().is_none_or(|f| all < *f) {
                        found = Some(all);
                    }
                }
            }
        }
        if let Some(mut chosen) = found {
            let last = chosen.iter().position(|&q| pairs[q].strict).unwrap();
            let q = chosen.remove(last);
            chosen.push(q);
            return Ok(Some(CancellationWitness {
                alphas: chosen.iter().map(|&q| pairs[q].alpha).collect(),
                betas: chosen.iter().map(|&q| pairs[q].beta).collect(),
            }));
        }
    }
    Ok(None)
}

/// Outcome of the exact feasibility test for a state-dependent
/// representation.
#[derive(Debug, Clone)]
pub enum Feasibility {
    Representable(StateDependentUtility),
    Violation(CancellationWitness),
}

/// Decides cancellation at every tuple size: a representable order yields
/// its utility table, anything else a witness built from the infeasibility
/// certificate.
pub fn certify_cancellation(po: &PreferenceOrder, lib: &ActionLibrary, k: usize) -> Result<Feasibility> {
    solve_state_dependent(po, lib, k)
}

/// Integer multiplicities proportional to `ys` (all nonnegative).
pub(crate) fn integer_multiplicities(ys: &[Rational]) -> Vec<BigInt> {
    let lcm = ys
        .iter()
        .filter(|y| !y.is_zero())
        .fold(BigInt::one(), |acc, y| acc.lcm(y.denom()));
    let ints: Vec<BigInt> = ys
        .iter()
        .map(|y| (y * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = ints
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| (x / &gcd).abs()).collect()
}
