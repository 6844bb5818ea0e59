//! Dense two-phase tableau simplex for the small LPs of the tradeoff solver.
//!
//! Minimizes `c'x` subject to linear rows and `x >= 0`. Entering columns are
//! chosen by Dantzig's rule; after a run of degenerate pivots the solver falls
//! back to Bland's rule until progress resumes, which rules out cycling.

use num_traits::Float;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) struct LinearProgram<T> {
    num_vars: usize,
    objective: Vec<T>,
    rows: Vec<(Vec<T>, Relation, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome<T> {
    Optimal { x: Vec<T>, objective: T, pivots: usize },
    Infeasible { pivots: usize },
    Unbounded { pivots: usize },
    IterationLimit { pivots: usize },
}

const MAX_PIVOTS: usize = 50_000;
const DEGENERATE_STREAK: usize = 16;

impl<T: Real> LinearProgram<T> {
    pub(crate) fn new(objective: Vec<T>) -> Self {
        LinearProgram {
            num_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    pub(crate) fn add_row(&mut self, coeffs: Vec<T>, rel: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.num_vars, "row width must match variable count");
        self.rows.push((coeffs, rel, rhs));
    }

    pub(crate) fn solve(&self) -> LpOutcome<T> {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau<T> {
    /// Constraint rows; the last entry of each row is the right-hand side.
    a: Vec<Vec<T>>,
    basis: Vec<usize>,
    num_vars: usize,
    /// Columns `[first_artificial, width)` are artificial.
    first_artificial: usize,
    width: usize,
    pivots: usize,
}

impl<T: Real> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let zero = T::zero();
        let n = lp.num_vars;
        // orient every row so the right-hand side is nonnegative
        let rows: Vec<(Vec<T>, Relation, T)> = lp
            .rows
            .iter()
            .map(|(c, rel, b)| {
                if *b < zero {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.iter().map(|&v| -v).collect(), flipped, -*b)
                } else {
                    (c.clone(), *rel, *b)
                }
            })
            .collect();
        let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let num_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + num_slack;
        let width = first_artificial + num_art;

        let mut a = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut slack, mut art) = (n, first_artificial);
        for (coeffs, rel, rhs) in rows {
            let mut row = vec![zero; width + 1];
            row[..n].copy_from_slice(&coeffs);
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[slack] = T::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -T::one();
                    slack += 1;
                    row[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
            }
            a.push(row);
        }
        Tableau {
            a,
            basis,
            num_vars: n,
            first_artificial,
            width,
            pivots: 0,
        }
    }

    /// Reduced-cost row for costs `c` (indexed by column) with the current basis.
    fn reduced_costs(&self, c: &[T]) -> Vec<T> {
        let mut r: Vec<T> = c.to_vec();
        r.push(T::zero());
        for (row, &b) in self.a.iter().zip(&self.basis) {
            let cb = c[b];
            if cb == T::zero() {
                continue;
            }
            for (rj, &aj) in r.iter_mut().zip(row) {
                *rj = *rj - cb * aj;
            }
        }
        r
    }

    fn pivot(&mut self, cost: &mut [T], row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v = *v / p;
        }
        self.a[row][col] = T::one();
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f == T::zero() {
                continue;
            }
            for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            r[col] = T::zero();
        }
        let f = cost[col];
        if f != T::zero() {
            for (v, &pv) in cost.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            cost[col] = T::zero();
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs primal simplex on `cost` over columns `[0, allowed)`.
    fn optimize(&mut self, cost: &mut [T], allowed: usize) -> Result<(), LpOutcome<T>> {
        let cost_tol = T::cost_tol();
        let pivot_tol = T::pivot_tol();
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(LpOutcome::IterationLimit { pivots: self.pivots });
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..allowed).find(|&j| cost[j] < -cost_tol)
            } else {
                (0..allowed)
                    .filter(|&j| cost[j] < -cost_tol)
                    .min_by(|&i, &j| cost[i].partial_cmp(&cost[j]).expect("finite costs"))
            };
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.a.iter().enumerate() {
                let aij = row[col];
                if aij <= pivot_tol {
                    continue;
                }
                let ratio = row[self.width] / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((row, ratio)) = leave else {
                return Err(LpOutcome::Unbounded { pivots: self.pivots });
            };
            if ratio <= pivot_tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(cost, row, col);
        }
    }

    fn run(mut self, objective: &[T]) -> LpOutcome<T> {
        let zero = T::zero();
        // phase one: minimize the sum of artificials
        if self.first_artificial < self.width {
            let mut c1 = vec![zero; self.width];
            for v in c1.iter_mut().skip(self.first_artificial) {
                *v = T::one();
            }
            let mut cost = self.reduced_costs(&c1);
            if let Err(stop) = self.optimize(&mut cost, self.width) {
                return match stop {
                    LpOutcome::Unbounded { pivots } => LpOutcome::Infeasible { pivots },
                    other => other,
                };
            }
            let residual = -cost[self.width];
            let scale = T::max_of(
                T::one(),
                self.a.iter().fold(zero, |m, r| T::max_of(m, r[self.width])),
            );
            if residual > T::feasibility_tol() * scale {
                return LpOutcome::Infeasible { pivots: self.pivots };
            }
            self.expel_artificials();
        }

        let mut c2 = vec![zero; self.width];
        c2[..self.num_vars].copy_from_slice(objective);
        let mut cost = self.reduced_costs(&c2);
        if let Err(stop) = self.optimize(&mut cost, self.first_artificial) {
            return stop;
        }
        let mut x = vec![zero; self.num_vars];
        for (row, &b) in self.a.iter().zip(&self.basis) {
            if b < self.num_vars {
                x[b] = T::max_of(row[self.width], zero);
            }
        }
        let objective_value = x.iter().zip(objective).fold(zero, |s, (&xi, &ci)| s + xi * ci);
        LpOutcome::Optimal {
            x,
            objective: objective_value,
            pivots: self.pivots,
        }
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and are dropped.
    fn expel_artificials(&mut self) {
        let pivot_tol = T::pivot_tol();
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            let col = (0..self.first_artificial)
                .filter(|&j| Float::abs(self.a[i][j]) > pivot_tol)
                .max_by(|&j, &k| {
                    Float::abs(self.a[i][j])
                        .partial_cmp(&Float::abs(self.a[i][k]))
                        .expect("finite entries")
                });
            match col {
                Some(j) => {
                    let mut dummy = vec![T::zero(); self.width + 1];
                    self.pivot(&mut dummy, i, j);
                    i += 1;
                }
                None => {
                    self.a.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(out: LpOutcome<f64>) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective, .. } => (x, objective),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.add_row(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_row(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_row(vec![3.0, 2.0], Relation::Le, 18.0);
        let (x, obj) = optimal(lp.solve());
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        assert!((obj + 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y + 3z st x + y + z = 1, y + z >= 0.5, z >= 0.2
        let mut lp = LinearProgram::new(vec![1.0, 2.0, 3.0]);
        lp.add_row(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![0.0, 1.0, 1.0], Relation::Ge, 0.5);
        lp.add_row(vec![0.0, 0.0, 1.0], Relation::Ge, 0.2);
        let (x, obj) = optimal(lp.solve());
        assert!((obj - (0.5 + 0.6 + 0.6)).abs() < 1e-12, "{x:?} {obj}");
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_row(vec![-1.0, -1.0], Relation::Le, -1.0);
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![2.0, 2.0], Relation::Eq, 2.0);
        let (_, obj) = optimal(lp.solve());
        assert!((obj - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![1.0, 1.0], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), LpOutcome::Infeasible { .. }));

        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_row(vec![0.0, 1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), LpOutcome::Unbounded { .. }));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic Beale cycling example
        let mut lp = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let (_, obj) = optimal(lp.solve());
        assert!((obj + 0.05).abs() < 1e-12);
    }

    #[test]
    fn single_precision() {
        let mut lp = LinearProgram::<f32>::new(vec![-1.0, -1.0]);
        lp.add_row(vec![1.0, 2.0], Relation::Le, 4.0);
        lp.add_row(vec![3.0, 1.0], Relation::Le, 6.0);
        match lp.solve() {
            LpOutcome::Optimal { objective, .. } => assert!((objective + 2.8).abs() < 1e-5),
            other => panic!("{other:?}"),
        }
    }
}
