//! Brute-force ground truth for tiny instances.
//!
//! The oracle never touches the solver's cost vectors or optimization code:
//! each candidate kernel is pushed through the source and degradation with
//! [`push_forward`] and scored with [`error_rate`], [`bayes_error`],
//! [`expected_distortion`] and [`divergence`].
//!
//! Lattice kernels have rows `counts / n` where `counts` is a composition of
//! `n = 1 / step` into `|X̂|` parts. Counts are integers, so every lattice row
//! sums to one exactly before its single conversion to the scalar type.
//! Lattices with `n` dividing `n'` are nested, hence refining the step never
//! increases the oracle minimum.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::classify::{bayes_error, error_rate};
use crate::error::{CdpError, Result};
use crate::metrics::{divergence, expected_distortion, DivergenceKind};
use crate::prob::{push_forward, Alphabet, Channel};
use crate::scalar::{Real, Scalar};
use crate::solver::{midpoint_violations, ConvexityViolation, ProblemInstance};

/// Upper bound on deterministic kernels enumerated at once.
pub const MAX_DETERMINISTIC_KERNELS: u128 = 1_000_000;
/// Upper bound on lattice kernels scanned by one grid search.
pub const MAX_LATTICE_KERNELS: u128 = 10_000_000;

/// Every deterministic channel from `input` to `output`, in lexicographic
/// order of the symbol map.
pub fn enumerate_deterministic_kernels<T: Scalar>(input: Alphabet, output: Alphabet) -> Result<Vec<Channel<T>>> {
    let count = (output.size() as u128)
        .checked_pow(input.size() as u32)
        .filter(|&c| c <= MAX_DETERMINISTIC_KERNELS)
        .ok_or_else(|| {
            CdpError::Size(format!(
                "{}^{} deterministic kernels exceed {MAX_DETERMINISTIC_KERNELS}",
                output.size(),
                input.size()
            ))
        })?;
    let mut map = vec![0usize; input.size()];
    let mut out = Vec::with_capacity(count as usize);
    loop {
        out.push(Channel::deterministic(&map, output)?);
        let mut pos = input.size();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            map[pos] += 1;
            if map[pos] < output.size() {
                break;
            }
            map[pos] = 0;
        }
    }
}

/// Regular lattice on the kernels `input -> output` with spacing `1 / n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelGrid {
    input: Alphabet,
    output: Alphabet,
    divisions: u32,
}

impl KernelGrid {
    /// `step` must divide one within `1e-12`.
    pub fn new(input: Alphabet, output: Alphabet, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(CdpError::Argument(format!("lattice step {step} is outside (0, 1]")));
        }
        let n = (1.0 / step).round();
        if (n * step - 1.0).abs() > 1e-12 || n > u32::MAX as f64 {
            return Err(CdpError::Argument(format!("lattice step {step} does not divide 1")));
        }
        Ok(KernelGrid {
            input,
            output,
            divisions: n as u32,
        })
    }

    pub fn with_divisions(input: Alphabet, output: Alphabet, divisions: u32) -> Result<Self> {
        if divisions == 0 {
            return Err(CdpError::Argument("lattice needs at least one division".into()));
        }
        Ok(KernelGrid {
            input,
            output,
            divisions,
        })
    }

    pub fn input(&self) -> Alphabet {
        self.input
    }

    pub fn output(&self) -> Alphabet {
        self.output
    }

    pub fn divisions(&self) -> u32 {
        self.divisions
    }

    pub fn step(&self) -> f64 {
        1.0 / self.divisions as f64
    }

    /// Compositions of `n` into `|output|` nonnegative parts.
    pub fn row_points(&self) -> Vec<Vec<u32>> {
        fn fill(rest: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if slots == 1 {
                prefix.push(rest);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for c in (0..=rest).rev() {
                prefix.push(c);
                fill(rest - c, slots - 1, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        fill(self.divisions, self.output.size(), &mut Vec::new(), &mut out);
        out
    }

    /// Number of lattice kernels, `None` on overflow.
    pub fn cardinality(&self) -> Option<u128> {
        let per_row = binomial(self.divisions as u128 + self.output.size() as u128 - 1, self.output.size() as u128 - 1)?;
        per_row.checked_pow(self.input.size() as u32)
    }

    /// Worst-case l1 distance from a point of the simplex to its nearest
    /// lattice point: `2 floor(k/2) ceil(k/2) / (k n)`.
    pub fn rounding_radius(&self) -> f64 {
        let k = self.output.size();
        2.0 * (k / 2) as f64 * k.div_ceil(2) as f64 / (k as f64 * self.divisions as f64)
    }
}

fn binomial(n: u128, r: u128) -> Option<u128> {
    let r = r.min(n - r.min(n));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// One lattice kernel as exact integer counts over a common denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeKernel {
    pub counts: Vec<Vec<u32>>,
    pub denominator: u32,
}

impl LatticeKernel {
    pub fn to_channel<T: Scalar>(&self) -> Result<Channel<T>> {
        let den = T::from_u32(self.denominator).expect("representable");
        Channel::from_rows(
            self.counts
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&c| T::from_u32(c).expect("representable") / den.clone())
                        .collect()
                })
                .collect(),
        )
    }
}

/// Outcome of an exhaustive lattice search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    /// Minimum over lattice kernels meeting both constraints, `None` when no
    /// lattice kernel is feasible.
    pub value: Option<T>,
    pub kernel: Option<LatticeKernel>,
    /// Objective-plus-constraint sensitivity per unit of lattice step.
    pub lipschitz: T,
    /// `lipschitz * step`.
    pub slack: T,
    /// Certified lower bound on the true optimum: the lattice minimum with
    /// both constraints loosened by their own rounding sensitivity, minus the
    /// objective rounding sensitivity.
    pub lower_bound: Option<T>,
    pub evaluated: usize,
    pub feasible: usize,
}

#[derive(Debug, Clone, Copy)]
enum OracleObjective {
    Fixed,
    Bayes,
}

/// Exhaustive minimum of `ε(X̂ | c0)` over lattice kernels.
pub fn grid_search_cdp<T: Real>(prob: &ProblemInstance<T>, d: T, p: T, grid: &KernelGrid) -> Result<OracleResult<T>> {
    grid_search(prob, d, p, grid, OracleObjective::Fixed)
}

/// Exhaustive minimum of the Bayes error of `X̂` over lattice kernels.
pub fn grid_search_scdp<T: Real>(prob: &ProblemInstance<T>, d: T, p: T, grid: &KernelGrid) -> Result<OracleResult<T>> {
    grid_search(prob, d, p, grid, OracleObjective::Bayes)
}

struct Sensitivity<T> {
    objective: T,
    distortion: T,
    perception: T,
}

/// Per-unit-step sensitivities from moving each kernel row by at most the
/// lattice rounding radius.
fn sensitivity<T: Real>(prob: &ProblemInstance<T>, grid: &KernelGrid, objective: OracleObjective) -> Sensitivity<T> {
    let src = prob.source();
    let ch = prob.degrade();
    let delta = prob.delta();
    let half = T::lit(0.5);
    let radius = T::lit(grid.rounding_radius() / grid.step());
    let marginal = src.marginal();
    let mut obj = T::zero();
    let mut dist = T::zero();
    for y in ch.output().symbols() {
        let mut a = T::zero();
        let mut b = T::zero();
        for x in src.alphabet().symbols() {
            a = a + src.weighted1(x) * *ch.entry(x, y);
            b = b + src.weighted2(x) * *ch.entry(x, y);
        }
        obj = obj
            + match objective {
                OracleObjective::Fixed if prob.classifier().is_proper() => half * num_traits::Float::abs(a - b),
                OracleObjective::Fixed => T::zero(),
                OracleObjective::Bayes => T::max_of(a, b),
            };
        let costs: Vec<T> = delta
            .restored()
            .symbols()
            .map(|xh| {
                src.alphabet()
                    .symbols()
                    .fold(T::zero(), |s, x| s + *marginal.get(x) * *ch.entry(x, y) * *delta.cost(x, xh))
            })
            .collect();
        let hi = costs.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = costs.iter().copied().fold(T::infinity(), T::min);
        dist = dist + half * (hi - lo);
    }
    let perception = match prob.divergence() {
        DivergenceKind::TotalVariation => half,
        _ => T::infinity(),
    };
    Sensitivity {
        objective: radius * obj,
        distortion: radius * dist,
        perception: radius * perception,
    }
}

fn grid_search<T: Real>(
    prob: &ProblemInstance<T>,
    d: T,
    p: T,
    grid: &KernelGrid,
    objective: OracleObjective,
) -> Result<OracleResult<T>> {
    for (name, v) in [("D", d), ("P", p)] {
        if v.is_nan() || v < T::zero() {
            return Err(CdpError::Argument(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if grid.input() != prob.observed_alphabet() || grid.output() != prob.restore_alphabet() {
        return Err(CdpError::Dimension {
            context: "lattice shape vs instance",
            expected: prob.observed_alphabet().size() * 100 + prob.restore_alphabet().size(),
            found: grid.input().size() * 100 + grid.output().size(),
        });
    }
    if p.is_finite() && !prob.perception_defined() {
        return Err(CdpError::Dimension {
            context: "perception constraint needs restored alphabet equal to source alphabet",
            expected: prob.source().alphabet().size(),
            found: prob.restore_alphabet().size(),
        });
    }
    let total = grid
        .cardinality()
        .filter(|&c| c <= MAX_LATTICE_KERNELS)
        .ok_or_else(|| CdpError::Size(format!("lattice exceeds {MAX_LATTICE_KERNELS} kernels")))?;

    let rows = grid.row_points();
    let m = grid.input().size();
    let sens = sensitivity(prob, grid, objective);
    let step = T::lit(grid.step());
    let noise = T::lit(1e-12);
    let loose_d = d + sens.distortion * step;
    let loose_p = if p.is_finite() { p + sens.perception * step } else { p };
    let degraded = push_forward(prob.source(), prob.degrade())?;
    let source_marginal = prob.source().marginal();

    let decode = |index: u128| -> LatticeKernel {
        let mut rest = index;
        let mut counts = vec![Vec::new(); m];
        for row in counts.iter_mut().rev() {
            let r = (rest % rows.len() as u128) as usize;
            rest /= rows.len() as u128;
            *row = rows[r].clone();
        }
        LatticeKernel {
            counts,
            denominator: grid.divisions(),
        }
    };

    type Candidate<T> = Option<(T, u128)>;
    let better = |a: Candidate<T>, b: Candidate<T>| -> Candidate<T> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => match x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1)) {
                Ordering::Greater => Some(y),
                _ => Some(x),
            },
        }
    };

    let scored = (0..total)
        .into_par_iter()
        .map(|index| -> Result<(Candidate<T>, Candidate<T>)> {
            let kernel = decode(index).to_channel::<T>()?;
            let restored = push_forward(&degraded, &kernel)?;
            let value = match objective {
                OracleObjective::Fixed => error_rate(&restored, prob.classifier())?,
                OracleObjective::Bayes => bayes_error(&restored),
            };
            let dist = expected_distortion(prob.source(), prob.degrade(), &kernel, prob.delta())?;
            let perc = if p.is_finite() {
                divergence(prob.divergence(), &source_marginal, &restored.marginal())?
            } else {
                T::zero()
            };
            let tight = dist <= d + noise && perc <= p + noise;
            let loose = dist <= loose_d + noise && perc <= loose_p + noise;
            Ok((
                if tight { Some((value, index)) } else { None },
                if loose { Some((value, index)) } else { None },
            ))
        })
        .try_fold(
            || (None, None, 0usize),
            |(bt, bl, nf), item| {
                let (t, l) = item?;
                Ok::<_, CdpError>((better(bt, t), better(bl, l), nf + usize::from(t.is_some())))
            },
        )
        .try_reduce(
            || (None, None, 0usize),
            |(at, al, an), (bt, bl, bn)| Ok((better(at, bt), better(al, bl), an + bn)),
        )?;
    let (tight, loose, feasible) = scored;

    let lipschitz = sens.objective
        + sens.distortion
        + if p.is_finite() { sens.perception } else { T::zero() };
    Ok(OracleResult {
        value: tight.map(|t| t.0),
        kernel: tight.map(|t| decode(t.1)),
        lipschitz,
        slack: lipschitz * step,
        lower_bound: loose.map(|l| l.0 - sens.objective * step),
        evaluated: total as usize,
        feasible,
    })
}

/// Report of the SCDP midpoint-convexity probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityProbe<T> {
    pub d_grid: Vec<T>,
    pub p_grid: Vec<T>,
    /// Oracle `C_S` per cell, `None` when the lattice has no feasible kernel.
    pub values: Vec<Vec<Option<T>>>,
    /// Midpoint triples whose gap exceeds the Lipschitz slack.
    pub violations: Vec<ConvexityViolation<T>>,
    /// Largest midpoint gap over all triples, `None` without triples.
    pub max_violation: Option<T>,
    /// Largest oracle slack over the grid.
    pub lipschitz_slack: T,
}

/// Evaluates `C_S` on a grid with the lattice oracle and lists every
/// grid-aligned midpoint triple that breaks convexity by more than the
/// oracle's own resolution.
pub fn probe_scdp_convexity<T: Real>(
    prob: &ProblemInstance<T>,
    d_grid: &[T],
    p_grid: &[T],
    grid: &KernelGrid,
) -> Result<ConvexityProbe<T>> {
    if d_grid.is_empty() || p_grid.is_empty() {
        return Err(CdpError::Argument("probe grids must be nonempty".into()));
    }
    let mut values = Vec::with_capacity(d_grid.len());
    let mut slack = T::zero();
    for &d in d_grid {
        let mut row = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let r = grid_search_scdp(prob, d, p, grid)?;
            if r.value.is_some() {
                slack = T::max_of(slack, r.slack);
            }
            row.push(r.value);
        }
        values.push(row);
    }
    let lookup = |i: usize, j: usize| values[i][j];
    let all = midpoint_violations(d_grid, p_grid, lookup, T::neg_infinity());
    let max_violation = all.iter().map(|v| v.gap).fold(None, |acc: Option<T>, g| Some(acc.map_or(g, |a| T::max_of(a, g))));
    let violations = all.into_iter().filter(|v| v.gap > slack).collect();
    Ok(ConvexityProbe {
        d_grid: d_grid.to_vec(),
        p_grid: p_grid.to_vec(),
        values,
        violations,
        max_violation,
        lipschitz_slack: slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_kernel_counts() {
        let a = |n| Alphabet::new(n).unwrap();
        assert_eq!(enumerate_deterministic_kernels::<f64>(a(1), a(3)).unwrap().len(), 3);
        assert_eq!(enumerate_deterministic_kernels::<f64>(a(2), a(2)).unwrap().len(), 4);
        let eight = enumerate_deterministic_kernels::<f64>(a(3), a(2)).unwrap();
        assert_eq!(eight.len(), 8);
        for (i, k) in eight.iter().enumerate() {
            assert!(k.is_deterministic());
            for other in &eight[i + 1..] {
                assert_ne!(k, other);
            }
        }
        assert!(matches!(
            enumerate_deterministic_kernels::<f64>(a(7), a(8)),
            Err(CdpError::Size(_))
        ));
    }

    #[test]
    fn lattice_shape() {
        let a = |n| Alphabet::new(n).unwrap();
        let g = KernelGrid::new(a(2), a(2), 0.05).unwrap();
        assert_eq!(g.divisions(), 20);
        assert_eq!(g.row_points().len(), 21);
        assert_eq!(g.cardinality(), Some(441));
        let g3 = KernelGrid::new(a(2), a(3), 0.25).unwrap();
        assert_eq!(g3.row_points().len(), 15);
        for row in g3.row_points() {
            assert_eq!(row.iter().sum::<u32>(), 4);
        }
        assert!(KernelGrid::new(a(2), a(2), 0.3).is_err());
        assert!(KernelGrid::new(a(2), a(2), 0.0).is_err());
        assert!((g.rounding_radius() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rounding_radius_is_attained_and_never_exceeded() {
        // brute force over a fine set of simplex points in 3 symbols
        let a = |n| Alphabet::new(n).unwrap();
        let g = KernelGrid::with_divisions(a(1), a(3), 2).unwrap();
        let pts = g.row_points();
        let mut worst: f64 = 0.0;
        for i in 0..=60 {
            for j in 0..=(60 - i) {
                let x = [i as f64 / 60.0, j as f64 / 60.0, (60 - i - j) as f64 / 60.0];
                let best = pts
                    .iter()
                    .map(|p| p.iter().zip(&x).map(|(&c, &v)| (c as f64 / 2.0 - v).abs()).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        assert!(worst <= g.rounding_radius() + 1e-12);
        assert!((worst - g.rounding_radius()).abs() < 1e-12);
    }

    #[test]
    fn lattice_rows_are_exact() {
        let k = LatticeKernel {
            counts: vec![vec![1, 2], vec![3, 0]],
            denominator: 3,
        };
        let exact = k.to_channel::<num_rational::BigRational>().unwrap();
        assert_eq!(exact.entry(0, 1), &crate::scalar::exact(2, 3));
    }
}
