use rayon::prelude::*;

use super::{solve_cdp, solve_scdp, ProblemInstance, TradeoffResult};
use crate::error::{CdpError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tradeoff {
    /// Fixed classifier, `C(D, P)`.
    Cdp,
    /// Bayes classifier on the restored signal, `C_S(D, P)`.
    Scdp,
}

impl Tradeoff {
    pub fn name(&self) -> &'static str {
        match self {
            Tradeoff::Cdp => "cdp",
            Tradeoff::Scdp => "scdp",
        }
    }
}

/// Results over a `D x P` grid, one row per `D`.
#[derive(Debug, Clone)]
pub struct SurfaceTable<T> {
    pub which: Tradeoff,
    pub d_grid: Vec<T>,
    pub p_grid: Vec<T>,
    cells: Vec<TradeoffResult<T>>,
}

/// A midpoint triple where the value at the midpoint exceeds the average of
/// the endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityViolation<T> {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub midpoint: (usize, usize),
    /// `C(mid) - (C(first) + C(second)) / 2`, positive for a violation.
    pub gap: T,
}

fn check_grid<T: Real>(name: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(CdpError::Argument(format!("{name} grid is empty")));
    }
    for w in grid.windows(2) {
        if !(w[0] <= w[1]) {
            return Err(CdpError::Argument(format!("{name} grid must be sorted ascending")));
        }
    }
    if grid.iter().any(|v| v.is_nan() || *v < T::zero()) {
        return Err(CdpError::Argument(format!("{name} grid values must be nonnegative")));
    }
    Ok(())
}

/// Solves every grid cell independently (in parallel); the table is
/// identical regardless of evaluation order.
pub fn sweep_surface<T: Real>(
    prob: &ProblemInstance<T>,
    d_grid: &[T],
    p_grid: &[T],
    which: Tradeoff,
) -> Result<SurfaceTable<T>> {
    check_grid("D", d_grid)?;
    check_grid("P", p_grid)?;
    let np = p_grid.len();
    let cells = (0..d_grid.len() * np)
        .into_par_iter()
        .map(|idx| {
            let (d, p) = (d_grid[idx / np], p_grid[idx % np]);
            match which {
                Tradeoff::Cdp => solve_cdp(prob, d, p),
                Tradeoff::Scdp => solve_scdp(prob, d, p),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceTable {
        which,
        d_grid: d_grid.to_vec(),
        p_grid: p_grid.to_vec(),
        cells,
    })
}

impl<T: Real> SurfaceTable<T> {
    pub fn get(&self, d_index: usize, p_index: usize) -> &TradeoffResult<T> {
        &self.cells[d_index * self.p_grid.len() + p_index]
    }

    pub fn cells(&self) -> &[TradeoffResult<T>] {
        &self.cells
    }

    /// Iterates `(d_index, p_index, result)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &TradeoffResult<T>)> {
        let np = self.p_grid.len();
        self.cells.iter().enumerate().map(move |(i, c)| (i / np, i % np, c))
    }

    fn optimal_value(&self, i: usize, j: usize) -> Option<T> {
        let c = self.get(i, j);
        if c.status.is_optimal() {
            c.value
        } else {
            None
        }
    }

    /// Largest increase of the value when `D` or `P` grows along a grid line,
    /// over pairs of Optimal cells. Zero means non-increasing everywhere.
    pub fn monotonicity_violation(&self) -> T {
        let (nd, np) = (self.d_grid.len(), self.p_grid.len());
        let mut worst = T::zero();
        for i in 0..nd {
            for j in 0..np {
                let Some(v) = self.optimal_value(i, j) else { continue };
                for i2 in i + 1..nd {
                    if let Some(w) = self.optimal_value(i2, j) {
                        worst = T::max_of(worst, w - v);
                    }
                }
                for j2 in j + 1..np {
                    if let Some(w) = self.optimal_value(i, j2) {
                        worst = T::max_of(worst, w - v);
                    }
                }
            }
        }
        worst
    }

    /// Every grid-aligned midpoint triple of Optimal cells whose midpoint
    /// value exceeds the endpoint average by more than `tol`.
    ///
    /// A pair qualifies when both index sums are even and the grid values at
    /// the middle indices are the arithmetic midpoints (within `1e-9`).
    pub fn convexity_violations(&self, tol: T) -> Vec<ConvexityViolation<T>> {
        midpoint_violations(&self.d_grid, &self.p_grid, |i, j| self.optimal_value(i, j), tol)
    }

    /// Largest midpoint gap over all grid-aligned triples (may be negative).
    pub fn max_convexity_gap(&self) -> Option<T> {
        midpoint_violations(&self.d_grid, &self.p_grid, |i, j| self.optimal_value(i, j), T::neg_infinity())
            .into_iter()
            .map(|v| v.gap)
            .fold(None, |acc, g| Some(acc.map_or(g, |a: T| T::max_of(a, g))))
    }

    /// Largest certified gap over Optimal cells.
    pub fn max_solver_gap(&self) -> T {
        self.cells
            .iter()
            .filter(|c| c.status.is_optimal())
            .map(|c| c.certificate.gap)
            .fold(T::zero(), T::max_of)
    }
}

fn is_midpoint<T: Real>(grid: &[T], a: usize, b: usize) -> bool {
    if !(a + b).is_multiple_of(2) {
        return false;
    }
    let (x, y, m) = (grid[a], grid[b], grid[(a + b) / 2]);
    if x.is_infinite() || y.is_infinite() {
        return x == y && m == x;
    }
    let mid = (x + y) * T::lit(0.5);
    num_traits::Float::abs(m - mid) <= T::lit(1e-9) * T::max_of(T::one(), num_traits::Float::abs(mid))
}

/// Midpoint-convexity audit over a grid-valued function, shared with the
/// oracle-based probe.
pub fn midpoint_violations<T: Real>(
    d_grid: &[T],
    p_grid: &[T],
    value: impl Fn(usize, usize) -> Option<T>,
    tol: T,
) -> Vec<ConvexityViolation<T>> {
    let (nd, np) = (d_grid.len(), p_grid.len());
    let mut out = Vec::new();
    for a in 0..nd * np {
        for b in a + 1..nd * np {
            let (i1, j1, i2, j2) = (a / np, a % np, b / np, b % np);
            if !is_midpoint(d_grid, i1, i2) || !is_midpoint(p_grid, j1, j2) {
                continue;
            }
            let (im, jm) = ((i1 + i2) / 2, (j1 + j2) / 2);
            if (im, jm) == (i1, j1) {
                continue;
            }
            let (Some(v1), Some(v2), Some(vm)) = (value(i1, j1), value(i2, j2), value(im, jm)) else {
                continue;
            };
            let gap = vm - (v1 + v2) * T::lit(0.5);
            if gap > tol {
                out.push(ConvexityViolation {
                    first: (i1, j1),
                    second: (i2, j2),
                    midpoint: (im, jm),
                    gap,
                });
            }
        }
    }
    out
}
