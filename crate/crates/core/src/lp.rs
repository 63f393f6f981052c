//! Exact rational linear programming: dense two-phase simplex with Bland's rule.

use num::{Signed, Zero};

use crate::rational::{one, zero, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Q)>,
    pub rel: Relation,
    pub rhs: Q,
}

/// `minimize objective . x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Q>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Q)>, rel: Relation, rhs: Q) {
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
    nvars: usize,
    first_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let nslack = lp
            .constraints
            .iter()
            .filter(|c| c.rel != Relation::Eq)
            .count();
        let mut dense = Vec::with_capacity(m);
        let mut slack_of = Vec::with_capacity(m);
        let mut next_slack = n;
        for c in &lp.constraints {
            let mut row = vec![zero(); n + nslack];
            for (j, a) in &c.coeffs {
                row[*j] += a;
            }
            let mut rhs = c.rhs.clone();
            let slack = match c.rel {
                Relation::Le => Some((next_slack, one())),
                Relation::Ge => Some((next_slack, -one())),
                Relation::Eq => None,
            };
            if let Some((j, s)) = &slack {
                row[*j] = s.clone();
                next_slack += 1;
            }
            let mut slack_sign_pos = matches!(c.rel, Relation::Le);
            if rhs.is_negative() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
                rhs = -rhs;
                slack_sign_pos = matches!(c.rel, Relation::Ge);
            }
            row.push(rhs);
            slack_of.push(slack.filter(|_| slack_sign_pos).map(|(j, _)| j));
            dense.push(row);
        }
        let first_artificial = n + nslack;
        let nart = slack_of.iter().filter(|s| s.is_none()).count();
        let ncols = first_artificial + nart;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = first_artificial;
        for (mut row, slack) in dense.into_iter().zip(slack_of) {
            let rhs = row.pop().unwrap();
            row.resize(ncols, zero());
            match slack {
                Some(j) => basis.push(j),
                None => {
                    row[next_art] = one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            row.push(rhs);
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            ncols,
            nvars: n,
            first_artificial,
        }
    }

    fn run(mut self, objective: &[Q]) -> LpOutcome {
        // phase one: minimize the sum of artificials
        if self.first_artificial < self.ncols {
            let mut cost = vec![zero(); self.ncols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = one();
            }
            let mut obj = self.reduced_costs(&cost);
            if !self.optimize(&mut obj, self.ncols) {
                unreachable!("phase one is bounded");
            }
            if !obj[self.ncols].is_zero() {
                return LpOutcome::Infeasible;
            }
            self.expel_artificials();
        }
        let mut cost = vec![zero(); self.ncols];
        cost[..self.nvars].clone_from_slice(objective);
        let mut obj = self.reduced_costs(&cost);
        if !self.optimize(&mut obj, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![zero(); self.nvars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.nvars {
                x[b] = self.rows[i][self.ncols].clone();
            }
        }
        let value = x
            .iter()
            .zip(objective)
            .fold(zero(), |acc, (a, c)| acc + a * c);
        LpOutcome::Optimal { x, value }
    }

    /// Objective row `c_j - c_B B^-1 A_j`, with the negated value in the last slot.
    fn reduced_costs(&self, cost: &[Q]) -> Vec<Q> {
        let mut obj: Vec<Q> = cost.to_vec();
        obj.push(zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, t) in obj.iter_mut().zip(&self.rows[i]) {
                if !t.is_zero() {
                    *o -= cb * t;
                }
            }
        }
        obj
    }

    /// Runs simplex pivots over columns `< limit`; false when unbounded.
    fn optimize(&mut self, obj: &mut [Q], limit: usize) -> bool {
        loop {
            let Some(enter) = (0..limit).find(|&j| obj[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[self.ncols] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, enter, obj);
        }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Q]) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (v, pv) in obj.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Pivots zero-level artificials out of the basis, dropping redundant rows.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            match (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                Some(j) => {
                    let mut dummy = vec![zero(); self.ncols + 1];
                    self.pivot(i, j, &mut dummy);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn optimal(o: LpOutcome) -> (Vec<Q>, Q) {
        match o {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_covering_lp() {
        // min x + y, x + 2y >= 3, 2x + y >= 3
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![q(1), q(1)];
        lp.add(vec![(0, q(1)), (1, q(2))], Relation::Ge, q(3));
        lp.add(vec![(0, q(2)), (1, q(1))], Relation::Ge, q(3));
        let (x, v) = optimal(lp.solve());
        assert_eq!(v, q(2));
        assert_eq!(x, vec![q(1), q(1)]);
    }

    #[test]
    fn fractional_optimum() {
        // max x + y s.t. 2x + y <= 2, x + 2y <= 2
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![q(-1), q(-1)];
        lp.add(vec![(0, q(2)), (1, q(1))], Relation::Le, q(2));
        lp.add(vec![(0, q(1)), (1, q(2))], Relation::Le, q(2));
        let (x, v) = optimal(lp.solve());
        assert_eq!(v, qf(-4, 3));
        assert_eq!(x, vec![qf(2, 3), qf(2, 3)]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, q(1))], Relation::Le, q(-1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![q(-1)];
        lp.add(vec![(0, q(1))], Relation::Ge, q(1));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn equalities_with_redundant_row() {
        // x + y = 1 twice, minimize x
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![q(1), q(0)];
        lp.add(vec![(0, q(1)), (1, q(1))], Relation::Eq, q(1));
        lp.add(vec![(0, q(2)), (1, q(2))], Relation::Eq, q(2));
        let (x, v) = optimal(lp.solve());
        assert_eq!(v, q(0));
        assert_eq!(x[1], q(1));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example (Beale) under Bland's rule
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![qf(-3, 4), q(150), qf(-1, 50), q(6)];
        lp.add(
            vec![(0, qf(1, 4)), (1, q(-60)), (2, qf(-1, 25)), (3, q(9))],
            Relation::Le,
            q(0),
        );
        lp.add(
            vec![(0, qf(1, 2)), (1, q(-90)), (2, qf(-1, 50)), (3, q(3))],
            Relation::Le,
            q(0),
        );
        lp.add(vec![(2, q(1))], Relation::Le, q(1));
        let (_, v) = optimal(lp.solve());
        assert_eq!(v, qf(-1, 20));
    }
}
