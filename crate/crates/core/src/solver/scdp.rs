//! `C_S(D, P)`: minimum Bayes error of the restored signal.
//!
//! The Bayes error is the minimum of the fixed-classifier error over all
//! decision regions, so
//! `C_S(D, P) = min_R min_K ε(X̂_K | R) = min_R C_R(D, P)`.
//! Each `C_R` is an instance of the fixed-classifier problem. For restored
//! alphabets of up to [`EXACT_REGION_LIMIT`] symbols every region is solved
//! (regions whose unconstrained optimum already exceeds the incumbent are
//! skipped), which certifies the minimum. Larger alphabets fall back to a
//! seeded multi-start descent that alternates between solving `C_R` and
//! replacing `R` by the Bayes region of the resulting restored mixture; that
//! branch only reports an upper bound.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    finish, minimize_linear, validate_bounds, Bounds, InfeasibleReason, Method, Objective, ProblemInstance,
    Subproblem, TradeoffResult,
};
use crate::classify::{bayes_region, DecisionRegion};
use crate::error::Result;
use crate::scalar::Real;

/// Restored alphabets up to this size are solved by full region enumeration.
pub const EXACT_REGION_LIMIT: usize = 12;
/// Seed of the multi-start descent used above [`EXACT_REGION_LIMIT`].
pub const SCDP_SEED: u64 = 0x5CD9_2019_C0FF_EE00;
const DESCENT_STARTS: usize = 64;
const DESCENT_ROUNDS: usize = 100;

struct Best<T> {
    sub: Option<Subproblem<T>>,
    upper: T,
    lower: T,
    iterations: usize,
    all_optimal: bool,
    infeasible: Option<InfeasibleReason>,
    failed: bool,
}

impl<T: Real> Best<T> {
    fn new() -> Self {
        Best {
            sub: None,
            upper: T::infinity(),
            lower: T::infinity(),
            iterations: 0,
            all_optimal: true,
            infeasible: None,
            failed: false,
        }
    }

    fn absorb(&mut self, sub: Subproblem<T>) {
        match &sub {
            Subproblem::Solved {
                upper,
                lower,
                optimal,
                iterations,
                ..
            } => {
                self.iterations += iterations;
                self.all_optimal &= *optimal;
                self.lower = T::min_of(self.lower, *lower);
                if *upper < self.upper {
                    self.upper = *upper;
                    self.sub = Some(sub);
                }
            }
            Subproblem::Infeasible { reason, iterations, .. } => {
                self.iterations += iterations;
                self.infeasible = Some(*reason);
            }
            Subproblem::Failed { iterations, .. } => {
                self.iterations += iterations;
                self.failed = true;
                self.all_optimal = false;
                self.lower = T::neg_infinity();
            }
        }
    }
}

/// Unconstrained optimum of `C_R`, a lower bound for every `(D, P)`.
fn unconstrained_bound<T: Real>(cost: &[Vec<T>]) -> T {
    cost.iter()
        .map(|row| row.iter().copied().fold(T::infinity(), T::min))
        .fold(T::zero(), |a, b| a + b)
}

pub fn solve_scdp<T: Real>(prob: &ProblemInstance<T>, d: T, p: T) -> Result<TradeoffResult<T>> {
    let bounds = match validate_bounds(prob, d, p)? {
        Ok(b) => b,
        Err(reason) => {
            return Ok(TradeoffResult::infeasible(
                reason,
                Method::RegionEnumeration,
                0,
                format!("D = {d} is below the minimum distortion {}", super::min_distortion(prob)),
            ))
        }
    };
    let k = prob.restore_alphabet().size();
    let (best, method, exact) = if k <= EXACT_REGION_LIMIT {
        (enumerate_regions(prob, bounds), Method::RegionEnumeration, true)
    } else {
        (descend_regions(prob, bounds), Method::RegionDescent, false)
    };
    let Best {
        sub,
        upper,
        lower,
        iterations,
        all_optimal,
        infeasible,
        failed,
    } = best;
    let Some(Subproblem::Solved { kernel, .. }) = sub else {
        let sub = match (infeasible, failed) {
            (Some(reason), false) => Subproblem::Infeasible {
                reason,
                iterations,
                method,
            },
            _ => Subproblem::Failed { iterations, method },
        };
        return finish(prob, sub, Objective::Bayes);
    };
    let lower = if exact { T::min_of(lower, upper) } else { T::neg_infinity() };
    let mut result = finish(
        prob,
        Subproblem::Solved {
            kernel,
            upper,
            lower,
            optimal: all_optimal,
            iterations,
            method,
        },
        Objective::Bayes,
    )?;
    if !exact {
        result.certificate.exact = false;
        result.certificate.lower_bound = None;
        result.certificate.note = format!("upper bound from {DESCENT_STARTS} seeded region descents");
    } else {
        result.certificate.note = format!("minimum over {} decision regions", 1usize << k);
    }
    Ok(result)
}

fn enumerate_regions<T: Real>(prob: &ProblemInstance<T>, bounds: Bounds<T>) -> Best<T> {
    let alphabet = prob.restore_alphabet();
    let mut candidates: Vec<(T, u64, Vec<Vec<T>>)> = (0..1u64 << alphabet.size())
        .map(|mask| {
            let cost = prob.error_cost(&DecisionRegion::from_mask(alphabet, mask));
            (unconstrained_bound(&cost), mask, cost)
        })
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut best = Best::new();
    for (bound, _, cost) in candidates {
        if bound >= best.upper {
            // every remaining region is at least as bad
            best.lower = T::min_of(best.lower, bound);
            break;
        }
        best.absorb(minimize_linear(prob, &cost, bounds));
        if best.infeasible.is_some() && best.sub.is_none() {
            // feasibility does not depend on the region
            break;
        }
    }
    best
}

fn descend_regions<T: Real>(prob: &ProblemInstance<T>, bounds: Bounds<T>) -> Best<T> {
    let alphabet = prob.restore_alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(SCDP_SEED);
    let mut starts = vec![prob.classifier().clone()];
    while starts.len() < DESCENT_STARTS {
        let members = alphabet.symbols().map(|_| rng.gen::<bool>()).collect();
        starts.push(DecisionRegion::from_indicator(members).expect("nonempty alphabet"));
    }
    let mut best = Best::new();
    for start in starts {
        let mut region = start;
        for _ in 0..DESCENT_ROUNDS {
            let sub = minimize_linear(prob, &prob.error_cost(&region), bounds);
            let next = match &sub {
                Subproblem::Solved { kernel, .. } => super::kernel_channel(kernel, alphabet.size())
                    .ok()
                    .and_then(|ch| prob.restored(&ch).ok())
                    .map(|restored| bayes_region(&restored)),
                _ => None,
            };
            best.absorb(sub);
            match next {
                Some(r) if r != region => region = r,
                _ => break,
            }
        }
        if best.sub.is_none() && best.infeasible.is_some() {
            break;
        }
    }
    best
}
