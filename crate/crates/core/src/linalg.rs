//! Exact sparse Gaussian elimination over the rationals.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::json::Rational;

pub type SparseRow = BTreeMap<usize, Rational>;

#[derive(Debug, Clone, PartialEq)]
pub enum Independence {
    Independent {
        rank: usize,
    },
    /// Nonzero coefficients `d_r` with `Σ d_r row_r = 0`.
    Dependent {
        rank: usize,
        combination: Vec<(usize, Rational)>,
    },
}

struct Pivot {
    col: usize,
    row: SparseRow,
    combo: SparseRow,
    rhs: Rational,
}

// Subtracts `factor · src` from `dst`, dropping cancelled entries.
fn axpy(dst: &mut SparseRow, factor: &Rational, src: &SparseRow) {
    for (j, v) in src {
        let e = dst.entry(*j).or_insert_with(Rational::zero);
        *e -= factor * v;
        if e.is_zero() {
            dst.remove(j);
        }
    }
}

/// Forward elimination. Each pivot row is reduced against all earlier
/// pivots, and its pivot is its smallest remaining column.
fn eliminate(rows: &[SparseRow], rhs: &[Rational]) -> (Vec<Pivot>, Vec<(SparseRow, Rational)>) {
    let mut pivots: Vec<Pivot> = Vec::new();
    let mut zero_rows = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        r.retain(|_, v| !v.is_zero());
        let mut combo = SparseRow::from([(i, Rational::one())]);
        let mut b = rhs[i].clone();
        for p in &pivots {
            if let Some(f) = r.get(&p.col).cloned() {
                let f = f / &p.row[&p.col];
                axpy(&mut r, &f, &p.row);
                axpy(&mut combo, &f, &p.combo);
                b -= &f * &p.rhs;
            }
        }
        match r.keys().next().copied() {
            Some(col) => pivots.push(Pivot {
                col,
                row: r,
                combo,
                rhs: b,
            }),
            None => zero_rows.push((combo, b)),
        }
    }
    (pivots, zero_rows)
}

pub fn independence(rows: &[SparseRow]) -> Independence {
    let zeros = vec![Rational::zero(); rows.len()];
    let (pivots, zero_rows) = eliminate(rows, &zeros);
    let rank = pivots.len();
    match zero_rows.into_iter().next() {
        None => Independence::Independent { rank },
        Some((combo, _)) => Independence::Dependent {
            rank,
            combination: combo.into_iter().collect(),
        },
    }
}

pub fn rank(rows: &[SparseRow]) -> usize {
    match independence(rows) {
        Independence::Independent { rank } | Independence::Dependent { rank, .. } => rank,
    }
}

/// A solution of `rows · x = rhs` supported on pivot columns; the free
/// columns are zero. Only nonzero entries are returned.
pub fn solve(rows: &[SparseRow], rhs: &[Rational]) -> Result<SparseRow> {
    assert_eq!(rows.len(), rhs.len());
    let (pivots, zero_rows) = eliminate(rows, rhs);
    if zero_rows.iter().any(|(_, b)| !b.is_zero()) {
        return Err(Error::Inconsistent("linear system has no solution".into()));
    }
    let mut x = SparseRow::new();
    for p in pivots.iter().rev() {
        let mut acc = p.rhs.clone();
        for (j, v) in &p.row {
            if *j != p.col {
                if let Some(xj) = x.get(j) {
                    acc -= v * xj;
                }
            }
        }
        let val = acc / &p.row[&p.col];
        if !val.is_zero() {
            x.insert(p.col, val);
        }
    }
    Ok(x)
}

/// `rows · x`.
pub fn apply(rows: &[SparseRow], x: &SparseRow) -> Vec<Rational> {
    rows.iter()
        .map(|row| {
            row.iter()
                .filter_map(|(j, v)| x.get(j).map(|xj| v * xj))
                .fold(Rational::zero(), |a, b| a + b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn row(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|&(j, v)| (j, r(v))).collect()
    }

    #[test]
    fn duplicate_row_is_dependent() {
        let rows = vec![row(&[(0, 1), (1, 1)]), row(&[(1, 1), (2, 1)]), row(&[(0, 1), (1, 1)])];
        match independence(&rows) {
            Independence::Dependent { rank, combination } => {
                assert_eq!(rank, 2);
                let mut sum = SparseRow::new();
                for (i, d) in &combination {
                    axpy(&mut sum, &-d.clone(), &rows[*i]);
                }
                assert!(sum.is_empty());
                assert!(combination.iter().all(|(_, d)| !d.is_zero()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn underdetermined_solve() {
        // x0 + x1 = 3, x1 + x2 = 5
        let rows = vec![row(&[(0, 1), (1, 1)]), row(&[(1, 1), (2, 1)])];
        let x = solve(&rows, &[r(3), r(5)]).unwrap();
        assert_eq!(apply(&rows, &x), vec![r(3), r(5)]);
        assert!(!x.contains_key(&2));
    }

    #[test]
    fn inconsistent_system() {
        let rows = vec![row(&[(0, 1)]), row(&[(0, 2)])];
        assert!(solve(&rows, &[r(1), r(3)]).is_err());
        assert!(solve(&rows, &[r(1), r(2)]).is_ok());
    }

    proptest! {
        #[test]
        fn solutions_have_zero_residual(
            entries in prop::collection::vec(prop::collection::vec(-3i64..4, 6), 1..5),
            target in prop::collection::vec(-5i64..6, 6),
        ) {
            let rows: Vec<SparseRow> = entries
                .iter()
                .map(|e| e.iter().enumerate().filter(|(_, v)| **v != 0).map(|(j, v)| (j, r(*v))).collect())
                .collect();
            // Right-hand sides from a known point are always consistent.
            let point: SparseRow = target.iter().enumerate().map(|(j, v)| (j, r(*v))).collect();
            let rhs = apply(&rows, &point);
            let x = solve(&rows, &rhs).unwrap();
            prop_assert_eq!(apply(&rows, &x), rhs);
            prop_assert!(rank(&rows) <= rows.len().min(6));
        }
    }
}
