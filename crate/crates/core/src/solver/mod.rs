//! Tradeoff functions `C(D, P)` (fixed classifier) and `C_S(D, P)` (Bayes
//! classifier on the restored signal), optimized over restoration kernels
//! `p(x̂ | y)`.
//!
//! Every functional of the kernel that matters here is affine in the kernel
//! entries once the source and degradation are fixed:
//!
//! * `p_{X̂i}(x̂) = sum_y p_{Yi}(y) K[y][x̂]`,
//! * the fixed-classifier error is `sum_{y,x̂} K[y][x̂] c[y][x̂]` with
//!   `c[y][x̂] = P2 p_{Y2}(y)` inside the region and `P1 p_{Y1}(y)` outside,
//! * the expected distortion is `sum_{y,x̂} K[y][x̂] w[y][x̂]` with
//!   `w[y][x̂] = sum_x p_X(x) p(y|x) Δ(x, x̂)`.
//!
//! With total variation the perception constraint is polyhedral and `C` is a
//! linear program. Smooth divergences go through a Lagrangian search whose
//! inner problems are solved by away-step Frank-Wolfe. `C_S` is the minimum of
//! `C` over all decision regions of the restored alphabet.

mod fw;
pub(crate) mod lp;
mod scdp;
mod surface;

use std::fmt;

use crate::classify::{bayes_error, error_rate, DecisionRegion};
use crate::error::{check_dim, CdpError, Result};
use crate::metrics::{divergence, expected_distortion, DistortionMatrix, DivergenceKind};
use crate::prob::{push_forward, Alphabet, Channel, MixtureSource, ProbVector};
use crate::scalar::Real;

pub use scdp::{solve_scdp, SCDP_SEED};
pub use surface::{midpoint_violations, sweep_surface, ConvexityViolation, SurfaceTable, Tradeoff};

use lp::{LinearProgram, LpOutcome, Relation};

/// Optimality tolerance of the smooth-divergence path.
pub const SMOOTH_GAP_TOL: f64 = 1e-6;
/// Frank-Wolfe iteration cap per inner solve.
pub const FW_MAX_ITERATIONS: usize = 10_000;

/// Everything entering the tradeoff functions: source, degradation,
/// distortion, divergence and the fixed classifier on the restored alphabet.
#[derive(Debug, Clone)]
pub struct ProblemInstance<T> {
    source: MixtureSource<T>,
    degrade: Channel<T>,
    delta: DistortionMatrix<T>,
    divergence: DivergenceKind,
    classifier: DecisionRegion,
    degraded: MixtureSource<T>,
    source_marginal: ProbVector<T>,
    degraded_marginal: ProbVector<T>,
    /// `w[y][x̂]`, the distortion contributed by `K[y][x̂] = 1`.
    distortion_weights: Vec<Vec<T>>,
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(
        source: MixtureSource<T>,
        degrade: Channel<T>,
        delta: DistortionMatrix<T>,
        divergence: DivergenceKind,
        classifier: DecisionRegion,
    ) -> Result<Self> {
        check_dim("degradation input vs source", source.alphabet().size(), degrade.input().size())?;
        check_dim("distortion rows vs source", source.alphabet().size(), delta.source().size())?;
        check_dim("classifier vs restored alphabet", delta.restored().size(), classifier.alphabet().size())?;
        let degraded = push_forward(&source, &degrade)?;
        let source_marginal = source.marginal();
        let degraded_marginal = degraded.marginal();
        let k = delta.restored().size();
        let distortion_weights = degrade
            .output()
            .symbols()
            .map(|y| {
                (0..k)
                    .map(|xh| {
                        source.alphabet().symbols().fold(T::zero(), |acc, x| {
                            acc + *source_marginal.get(x) * *degrade.entry(x, y) * *delta.cost(x, xh)
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(ProblemInstance {
            source,
            degrade,
            delta,
            divergence,
            classifier,
            degraded,
            source_marginal,
            degraded_marginal,
            distortion_weights,
        })
    }

    pub fn source(&self) -> &MixtureSource<T> {
        &self.source
    }

    pub fn degrade(&self) -> &Channel<T> {
        &self.degrade
    }

    pub fn delta(&self) -> &DistortionMatrix<T> {
        &self.delta
    }

    pub fn divergence(&self) -> DivergenceKind {
        self.divergence
    }

    pub fn classifier(&self) -> &DecisionRegion {
        &self.classifier
    }

    /// The degraded mixture `(P1, P2, p_Y1, p_Y2)`.
    pub fn degraded(&self) -> &MixtureSource<T> {
        &self.degraded
    }

    pub fn source_marginal(&self) -> &ProbVector<T> {
        &self.source_marginal
    }

    pub fn degraded_marginal(&self) -> &ProbVector<T> {
        &self.degraded_marginal
    }

    pub fn observed_alphabet(&self) -> Alphabet {
        self.degrade.output()
    }

    pub fn restore_alphabet(&self) -> Alphabet {
        self.delta.restored()
    }

    /// Whether `d(p_X, p_X̂)` is defined (restored and source alphabets agree).
    pub fn perception_defined(&self) -> bool {
        self.restore_alphabet() == self.source.alphabet()
    }

    pub fn distortion_weights(&self) -> &[Vec<T>] {
        &self.distortion_weights
    }

    /// Linear cost of the fixed-classifier error rate for `region`.
    pub fn error_cost(&self, region: &DecisionRegion) -> Vec<Vec<T>> {
        let k = self.restore_alphabet().size();
        self.observed_alphabet()
            .symbols()
            .map(|y| {
                let inside = self.degraded.weighted2(y);
                let outside = self.degraded.weighted1(y);
                (0..k)
                    .map(|xh| if region.contains(xh) { inside } else { outside })
                    .collect()
            })
            .collect()
    }

    /// Mixture of the restored signal under `kernel`.
    pub fn restored(&self, kernel: &Channel<T>) -> Result<MixtureSource<T>> {
        push_forward(&self.degraded, kernel)
    }

    /// Recomputes every reported quantity of `kernel` through the generic
    /// probability, classification and metric routines.
    pub fn replay(&self, kernel: &Channel<T>) -> Result<Replay<T>> {
        check_dim("kernel output vs restored alphabet", self.restore_alphabet().size(), kernel.output().size())?;
        let restored = self.restored(kernel)?;
        let perception = if self.perception_defined() {
            divergence(self.divergence, &self.source_marginal, &restored.marginal())?
        } else {
            T::nan()
        };
        Ok(Replay {
            fixed_error: error_rate(&restored, &self.classifier)?,
            bayes_error: bayes_error(&restored),
            distortion: expected_distortion(&self.source, &self.degrade, kernel, &self.delta)?,
            perception,
        })
    }
}

/// Quantities of one restoration kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replay<T> {
    pub fixed_error: T,
    pub bayes_error: T,
    pub distortion: T,
    pub perception: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfeasibleReason {
    /// `D` is below the minimum achievable distortion.
    Distortion,
    /// No kernel meets the perception bound even without a distortion bound.
    Perception,
    /// Every kernel meeting the distortion bound has infinite divergence.
    Support,
    /// Each bound is achievable alone but not both together.
    Joint,
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfeasibleReason::Distortion => "distortion",
            InfeasibleReason::Perception => "perception",
            InfeasibleReason::Support => "support",
            InfeasibleReason::Joint => "joint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible(InfeasibleReason),
    IterationLimit,
}

impl Status {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Status::Optimal)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "Optimal",
            Status::Infeasible(_) => "Infeasible",
            Status::IterationLimit => "IterationLimit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Per-row argmin, no constraint active.
    Unconstrained,
    /// Closed-form knapsack relaxation (distortion bound only).
    Greedy,
    Simplex,
    FrankWolfe,
    /// Minimum over every decision region of the restored alphabet.
    RegionEnumeration,
    /// Seeded multi-start descent over decision regions (upper bound only).
    RegionDescent,
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub method: Method,
    /// Simplex pivots or Frank-Wolfe iterations, summed over subproblems.
    pub iterations: usize,
    /// Certified lower bound on the optimum, when one is available.
    pub lower_bound: Option<T>,
    /// `value - lower_bound`, zero for simplex optima.
    pub gap: T,
    /// Whether `value` is certified optimal (up to `gap`) rather than an
    /// upper bound.
    pub exact: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffResult<T> {
    pub value: Option<T>,
    pub kernel: Option<Channel<T>>,
    pub achieved_distortion: Option<T>,
    pub achieved_perception: Option<T>,
    pub status: Status,
    pub certificate: Certificate<T>,
}

impl<T: Real> TradeoffResult<T> {
    pub(crate) fn infeasible(reason: InfeasibleReason, method: Method, iterations: usize, note: String) -> Self {
        TradeoffResult {
            value: None,
            kernel: None,
            achieved_distortion: None,
            achieved_perception: None,
            status: Status::Infeasible(reason),
            certificate: Certificate {
                method,
                iterations,
                lower_bound: None,
                gap: T::zero(),
                exact: true,
                note,
            },
        }
    }
}

/// Raw outcome of minimizing one linear cost over the constrained kernels.
#[derive(Debug, Clone)]
pub(crate) enum Subproblem<T> {
    Solved {
        /// Row-major `|Y| x |X̂|` kernel entries.
        kernel: Vec<T>,
        upper: T,
        lower: T,
        optimal: bool,
        iterations: usize,
        method: Method,
    },
    Infeasible {
        reason: InfeasibleReason,
        iterations: usize,
        method: Method,
    },
    /// No feasible kernel was found before the iteration cap.
    Failed { iterations: usize, method: Method },
}

/// Validated constraint levels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bounds<T> {
    /// Distortion budget, `None` when unconstrained.
    pub distortion: Option<T>,
    pub perception: Option<T>,
}

pub(crate) fn validate_bounds<T: Real>(prob: &ProblemInstance<T>, d: T, p: T) -> Result<std::result::Result<Bounds<T>, InfeasibleReason>> {
    for (name, v) in [("D", d), ("P", p)] {
        if v.is_nan() || v < T::zero() {
            return Err(CdpError::Argument(format!("{name} must be nonnegative, got {v}")));
        }
    }
    let perception = if p.is_infinite() { None } else { Some(p) };
    if perception.is_some() && !prob.perception_defined() {
        return Err(CdpError::Dimension {
            context: "perception constraint needs restored alphabet equal to source alphabet",
            expected: prob.source.alphabet().size(),
            found: prob.restore_alphabet().size(),
        });
    }
    let distortion = if d.is_infinite() {
        None
    } else {
        let dmin = min_distortion(prob);
        let slack = T::lit(1e-12) * T::max_of(T::one(), dmin);
        if d < dmin - slack {
            return Ok(Err(InfeasibleReason::Distortion));
        }
        Some(T::max_of(d, dmin))
    };
    Ok(Ok(Bounds { distortion, perception }))
}

/// Smallest expected distortion over all restoration kernels.
///
/// The objective is linear over a product of simplices, so a deterministic
/// kernel attains it: each `y` maps to the `x̂` minimizing `w[y][x̂]`.
pub fn min_distortion<T: Real>(prob: &ProblemInstance<T>) -> T {
    prob.distortion_weights
        .iter()
        .map(|row| row.iter().copied().fold(T::infinity(), T::min))
        .fold(T::zero(), |acc, m| acc + m)
}

/// Minimizes the fixed-classifier error `ε(X̂ | c0)` subject to
/// `E[Δ(X, X̂)] <= d` and `d(p_X, p_X̂) <= p`. Infinite bounds drop the
/// constraint.
pub fn solve_cdp<T: Real>(prob: &ProblemInstance<T>, d: T, p: T) -> Result<TradeoffResult<T>> {
    let bounds = match validate_bounds(prob, d, p)? {
        Ok(b) => b,
        Err(reason) => {
            return Ok(TradeoffResult::infeasible(
                reason,
                Method::Unconstrained,
                0,
                format!("D = {d} is below the minimum distortion {}", min_distortion(prob)),
            ))
        }
    };
    let cost = prob.error_cost(&prob.classifier);
    let sub = minimize_linear(prob, &cost, bounds);
    finish(prob, sub, Objective::Fixed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Objective {
    Fixed,
    Bayes,
}

/// Turns a raw subproblem outcome into a replayed [`TradeoffResult`].
pub(crate) fn finish<T: Real>(prob: &ProblemInstance<T>, sub: Subproblem<T>, objective: Objective) -> Result<TradeoffResult<T>> {
    match sub {
        Subproblem::Infeasible {
            reason,
            iterations,
            method,
        } => Ok(TradeoffResult::infeasible(reason, method, iterations, format!("{reason} constraint cannot be met"))),
        Subproblem::Failed { iterations, method } => {
            let mut r = TradeoffResult::infeasible(InfeasibleReason::Joint, method, iterations, "iteration cap reached without a feasible kernel".into());
            r.status = Status::IterationLimit;
            r.certificate.exact = false;
            Ok(r)
        }
        Subproblem::Solved {
            kernel,
            upper,
            lower,
            optimal,
            iterations,
            method,
        } => {
            let channel = kernel_channel(&kernel, prob.restore_alphabet().size())?;
            let replay = prob.replay(&channel)?;
            let value = match objective {
                Objective::Fixed => replay.fixed_error,
                Objective::Bayes => replay.bayes_error,
            };
            let gap = T::max_of(upper - lower, T::zero());
            Ok(TradeoffResult {
                value: Some(value),
                kernel: Some(channel),
                achieved_distortion: Some(replay.distortion),
                achieved_perception: if prob.perception_defined() { Some(replay.perception) } else { None },
                status: if optimal { Status::Optimal } else { Status::IterationLimit },
                certificate: Certificate {
                    method,
                    iterations,
                    lower_bound: Some(lower),
                    gap,
                    exact: true,
                    note: match method {
                        Method::Simplex => "simplex basis optimal".into(),
                        Method::Unconstrained => "per-row argmin".into(),
                        Method::Greedy => "greedy knapsack relaxation".into(),
                        _ => format!("duality gap {gap}"),
                    },
                },
            })
        }
    }
}

/// Cleans solver output into a channel: clamps tiny negatives and rescales
/// each row to unit mass.
pub(crate) fn kernel_channel<T: Real>(flat: &[T], k: usize) -> Result<Channel<T>> {
    let rows = flat
        .chunks(k)
        .map(|row| {
            let clean: Vec<T> = row.iter().map(|&v| T::max_of(v, T::zero())).collect();
            let s = clean.iter().fold(T::zero(), |a, &v| a + v);
            clean.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::from_rows(rows)
}

/// Minimizes `<cost, K>` over kernels meeting `bounds`.
pub(crate) fn minimize_linear<T: Real>(prob: &ProblemInstance<T>, cost: &[Vec<T>], bounds: Bounds<T>) -> Subproblem<T> {
    match bounds.perception {
        None if bounds.distortion.is_none() => unconstrained(cost),
        None => fw::knapsack_only(prob, cost, bounds),
        Some(p) if prob.divergence == DivergenceKind::TotalVariation || p == T::zero() => simplex(prob, cost, bounds),
        Some(_) => fw::smooth(prob, cost, bounds),
    }
}

fn unconstrained<T: Real>(cost: &[Vec<T>]) -> Subproblem<T> {
    let k = cost[0].len();
    let mut kernel = vec![T::zero(); cost.len() * k];
    let mut value = T::zero();
    for (y, row) in cost.iter().enumerate() {
        let (j, &c) = row
            .iter()
            .enumerate()
            .fold((0, &row[0]), |best, (j, c)| if *c < *best.1 { (j, c) } else { best });
        kernel[y * k + j] = T::one();
        value = value + c;
    }
    Subproblem::Solved {
        kernel,
        upper: value,
        lower: value,
        optimal: true,
        iterations: 0,
        method: Method::Unconstrained,
    }
}

/// LP over kernel entries (plus absolute-value slacks for total variation).
fn simplex<T: Real>(prob: &ProblemInstance<T>, cost: &[Vec<T>], bounds: Bounds<T>) -> Subproblem<T> {
    let m = cost.len();
    let k = cost[0].len();
    let nk = m * k;
    let p = bounds.perception.expect("perception bound present");
    let exact_match = p == T::zero();
    let nvars = if exact_match { nk } else { nk + k };
    let zero = T::zero();

    let mut objective = vec![zero; nvars];
    for (y, row) in cost.iter().enumerate() {
        objective[y * k..(y + 1) * k].copy_from_slice(row);
    }
    let mut lp = LinearProgram::new(objective);
    for y in 0..m {
        let mut row = vec![zero; nvars];
        for v in &mut row[y * k..(y + 1) * k] {
            *v = T::one();
        }
        lp.add_row(row, Relation::Eq, T::one());
    }
    if let Some(budget) = bounds.distortion {
        let mut row = vec![zero; nvars];
        for (y, w) in prob.distortion_weights.iter().enumerate() {
            row[y * k..(y + 1) * k].copy_from_slice(w);
        }
        lp.add_row(row, Relation::Le, budget);
    }
    let py = prob.degraded_marginal.mass();
    let px = prob.source_marginal.mass();
    for j in 0..k {
        let mut row = vec![zero; nvars];
        for y in 0..m {
            row[y * k + j] = py[y];
        }
        if exact_match {
            lp.add_row(row, Relation::Eq, px[j]);
        } else {
            let mut neg: Vec<T> = row.iter().map(|&v| -v).collect();
            row[nk + j] = -T::one();
            neg[nk + j] = -T::one();
            lp.add_row(row, Relation::Le, px[j]);
            lp.add_row(neg, Relation::Le, -px[j]);
        }
    }
    if !exact_match {
        let mut row = vec![zero; nvars];
        for v in &mut row[nk..] {
            *v = T::lit(0.5);
        }
        lp.add_row(row, Relation::Le, p);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, objective, pivots } => Subproblem::Solved {
            kernel: x[..nk].to_vec(),
            upper: objective,
            lower: objective,
            optimal: true,
            iterations: pivots,
            method: Method::Simplex,
        },
        LpOutcome::Infeasible { pivots } => Subproblem::Infeasible {
            // the constant kernel with rows p_X meets any perception bound, so
            // an infeasible LP here means the two bounds conflict
            reason: InfeasibleReason::Joint,
            iterations: pivots,
            method: Method::Simplex,
        },
        LpOutcome::Unbounded { pivots } | LpOutcome::IterationLimit { pivots } => Subproblem::Failed {
            iterations: pivots,
            method: Method::Simplex,
        },
    }
}
