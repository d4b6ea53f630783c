//! Exact two-phase simplex over the rationals with Bland's rule.
//!
//! An infeasible program yields a Farkas certificate `y`, one multiplier
//! per row, with `y ≥ 0` on `≥` rows, `y ≤ 0` on `≤` rows, `y` free on
//! equalities, `Σ y_i a_i ≤ 0` on nonnegative variables, `Σ y_i a_i = 0` on
//! free variables and `Σ y_i b_i > 0`.

use num_traits::{One, Signed, Zero};

use crate::json::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub rel: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible { farkas: Vec<Rational> },
    Unbounded,
}

/// Variables are nonnegative unless marked free.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    free: Vec<bool>,
    rows: Vec<Row>,
    objective: Vec<(usize, Rational)>,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        Self {
            free: vec![false; vars],
            rows: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.free.len()
    }

    pub fn add_var(&mut self, free: bool) -> usize {
        self.free.push(free);
        self.free.len() - 1
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) -> usize {
        self.rows.push(Row { coeffs, rel, rhs });
        self.rows.len() - 1
    }

    /// Sets the objective to maximize; without one, `solve` only decides
    /// feasibility and reports value 0.
    pub fn maximize(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = coeffs;
    }

    /// Whether `y` proves infeasibility.
    pub fn is_farkas_certificate(&self, y: &[Rational]) -> bool {
        if y.len() != self.rows.len() {
            return false;
        }
        let mut combo = vec![Rational::zero(); self.free.len()];
        let mut rhs = Rational::zero();
        for (row, yi) in self.rows.iter().zip(y) {
            let sign_ok = match row.rel {
                Relation::Ge => !yi.is_negative(),
                Relation::Le => !yi.is_positive(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return false;
            }
            for (j, a) in &row.coeffs {
                combo[*j] += yi * a;
            }
            rhs += yi * &row.rhs;
        }
        rhs.is_positive()
            && combo
                .iter()
                .zip(&self.free)
                .all(|(c, &free)| if free { c.is_zero() } else { !c.is_positive() })
    }

    pub fn solve(&self) -> LpOutcome {
        let m = self.rows.len();
        // Structural columns: one per variable, plus a negative part for free ones.
        let mut pos = Vec::with_capacity(self.free.len());
        let mut neg = vec![None; self.free.len()];
        let mut ncols = 0;
        for (v, &free) in self.free.iter().enumerate() {
            pos.push(ncols);
            ncols += 1;
            if free {
                neg[v] = Some(ncols);
                ncols += 1;
            }
        }
        let structural = ncols;
        // Rows with a negative right-hand side are negated first.
        let flipped: Vec<bool> = self.rows.iter().map(|r| r.rhs.is_negative()).collect();
        let rels: Vec<Relation> = self
            .rows
            .iter()
            .zip(&flipped)
            .map(|(r, &f)| match (r.rel, f) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            })
            .collect();
        let mut slack = vec![None; m];
        for (i, rel) in rels.iter().enumerate() {
            if *rel != Relation::Eq {
                slack[i] = Some(ncols);
                ncols += 1;
            }
        }
        let first_artificial = ncols;
        let mut basis = vec![0; m];
        let mut init_col = vec![0; m];
        for (i, rel) in rels.iter().enumerate() {
            if *rel == Relation::Le {
                basis[i] = slack[i].unwrap();
            } else {
                basis[i] = ncols;
                ncols += 1;
            }
            init_col[i] = basis[i];
        }

        let mut t = Tableau {
            a: vec![vec![Rational::zero(); ncols]; m],
            b: vec![Rational::zero(); m],
            basis,
        };
        for (i, row) in self.rows.iter().enumerate() {
            let s = if flipped[i] { -Rational::one() } else { Rational::one() };
            for (v, c) in &row.coeffs {
                t.a[i][pos[*v]] += &s * c;
                if let Some(nc) = neg[*v] {
                    t.a[i][nc] -= &s * c;
                }
            }
            t.b[i] = &s * &row.rhs;
            if let Some(sc) = slack[i] {
                t.a[i][sc] = if rels[i] == Relation::Le {
                    Rational::one()
                } else {
                    -Rational::one()
                };
            }
            if t.basis[i] >= first_artificial {
                t.a[i][t.basis[i]] = Rational::one();
            }
        }

        // Phase 1: minimize the sum of artificials.
        let mut cost1 = vec![Rational::zero(); ncols];
        for c in cost1.iter_mut().skip(first_artificial) {
            *c = Rational::one();
        }
        let all = vec![true; ncols];
        t.run(&cost1, &all);
        let infeas = t.objective(&cost1);
        if infeas.is_positive() {
            let d = t.reduced_costs(&cost1);
            let farkas = (0..m)
                .map(|i| {
                    let col = init_col[i];
                    // Phase 1 minimizes; its dual maximizes b'y with y ≤ cost.
                    let y = &cost1[col] - &d[col];
                    if flipped[i] {
                        -y
                    } else {
                        y
                    }
                })
                .collect::<Vec<_>>();
            debug_assert!(self.is_farkas_certificate(&farkas));
            return LpOutcome::Infeasible { farkas };
        }

        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= first_artificial {
                if let Some(c) = (0..first_artificial).find(|&c| !t.a[i][c].is_zero()) {
                    t.pivot(i, c);
                }
            }
        }

        let mut allowed = vec![true; ncols];
        for a in allowed.iter_mut().skip(first_artificial) {
            *a = false;
        }
        let mut cost2 = vec![Rational::zero(); ncols];
        for (v, c) in &self.objective {
            cost2[pos[*v]] -= c;
            if let Some(nc) = neg[*v] {
                cost2[nc] += c;
            }
        }
        if !self.objective.is_empty() && !t.run(&cost2, &allowed) {
            return LpOutcome::Unbounded;
        }

        let mut col_val = vec![Rational::zero(); structural];
        for (i, &c) in t.basis.iter().enumerate() {
            if c < structural {
                col_val[c] = t.b[i].clone();
            }
        }
        let x: Vec<Rational> = (0..self.free.len())
            .map(|v| match neg[v] {
                Some(nc) => &col_val[pos[v]] - &col_val[nc],
                None => col_val[pos[v]].clone(),
            })
            .collect();
        let value = self
            .objective
            .iter()
            .fold(Rational::zero(), |acc, (v, c)| acc + c * &x[*v]);
        LpOutcome::Optimal { x, value }
    }
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (i, &bc) in self.basis.iter().enumerate() {
            let cb = &cost[bc];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.a[i].iter().enumerate() {
                if !a.is_zero() {
                    d[j] -= cb * a;
                }
            }
        }
        d
    }

    fn objective(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .zip(&self.b)
            .fold(Rational::zero(), |acc, (&c, b)| acc + &cost[c] * b)
    }

    /// Minimizes `cost`; returns false when unbounded.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..d.len()).find(|&j| allowed[j] && d[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][enter];
                if !aij.is_positive() {
                    continue;
                }
                let ratio = &self.b[i] / aij;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, enter),
                None => return false,
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for x in self.a[r].iter_mut() {
            if !x.is_zero() {
                *x /= &p;
            }
        }
        self.b[r] /= &p;
        let pivot_row = self.a[r].clone();
        let pivot_b = self.b[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                self.a[i][j] -= delta;
            }
            self.b[i] -= &f * &pivot_b;
        }
        self.basis[r] = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn small_optimum() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::new(2);
        lp.add_row(vec![(0, r(1)), (1, r(2))], Relation::Le, r(4));
        lp.add_row(vec![(0, r(3)), (1, r(1))], Relation::Le, r(6));
        lp.maximize(vec![(0, r(1)), (1, r(1))]);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, Rational::new(14.into(), 5.into()));
                assert_eq!(
                    x,
                    vec![Rational::new(8.into(), 5.into()), Rational::new(6.into(), 5.into())]
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_yields_certificate() {
        // x - y >= 1, y - x >= 1 with x, y free
        let mut lp = LinearProgram::new(2);
        lp.set_free(0);
        lp.set_free(1);
        lp.add_row(vec![(0, r(1)), (1, r(-1))], Relation::Ge, r(1));
        lp.add_row(vec![(0, r(-1)), (1, r(1))], Relation::Ge, r(1));
        match lp.solve() {
            LpOutcome::Infeasible { farkas } => {
                assert!(lp.is_farkas_certificate(&farkas));
                assert_eq!(farkas[0], farkas[1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_with_equalities_and_negative_rhs() {
        // x + y = 1, x >= 2, y >= 0, and -x <= -3 (i.e. x >= 3)
        let mut lp = LinearProgram::new(2);
        lp.add_row(vec![(0, r(1)), (1, r(1))], Relation::Eq, r(1));
        lp.add_row(vec![(0, r(-1))], Relation::Le, r(-3));
        match lp.solve() {
            LpOutcome::Infeasible { farkas } => assert!(lp.is_farkas_certificate(&farkas)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_and_feasibility_only() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![(0, r(1))], Relation::Ge, r(2));
        assert!(matches!(lp.solve(), LpOutcome::Optimal { .. }));
        lp.maximize(vec![(0, r(1))]);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_go_negative() {
        // max -x s.t. x >= -5, x free
        let mut lp = LinearProgram::new(1);
        lp.set_free(0);
        lp.add_row(vec![(0, r(1))], Relation::Ge, r(-5));
        lp.maximize(vec![(0, r(-1))]);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(x[0], r(-5));
                assert_eq!(value, r(5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.add_row(vec![(0, r(1)), (1, r(1))], Relation::Eq, r(2));
        lp.add_row(vec![(0, r(2)), (1, r(2))], Relation::Eq, r(4));
        lp.maximize(vec![(0, r(1))]);
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => assert_eq!(x, vec![r(2), r(0)]),
            other => panic!("{other:?}"),
        }
    }
}
