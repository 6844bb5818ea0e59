//! Smooth-divergence path: a Lagrangian search over the perception
//! multiplier whose inner problems are solved by away-step Frank-Wolfe.
//!
//! The inner feasible set is the kernel polytope intersected with the
//! distortion half-space. Its linear minimization oracle is the LP relaxation
//! of a multiple-choice knapsack, solved exactly by walking the lower convex
//! hull of each row in order of increasing cost per unit of distortion saved.
//! At most one row of the result is fractional.
//!
//! For a multiplier `beta >= 0` the inner objective is
//! `f(K) = <c, K> + beta * d(p_X, q(K))` and
//! `f(K_t) - gap_t - beta * P` is a certified lower bound on `C(D, P)`.

use std::cmp::Ordering;

use num_traits::Float;

use super::{Bounds, InfeasibleReason, Method, ProblemInstance, Subproblem, FW_MAX_ITERATIONS, SMOOTH_GAP_TOL};
use crate::metrics::{divergence_gradient, divergence_unchecked, DivergenceKind};
use crate::scalar::Real;

const LINE_SEARCH_STEPS: usize = 60;
const MAX_MULTIPLIER_DOUBLINGS: usize = 60;
const MAX_BISECTIONS: usize = 120;

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub(crate) struct Polytope<T> {
    m: usize,
    k: usize,
    /// Row-major distortion weights.
    weights: Vec<T>,
    budget: Option<T>,
}

impl<T: Real> Polytope<T> {
    pub(crate) fn new(weights: &[Vec<T>], budget: Option<T>) -> Self {
        Polytope {
            m: weights.len(),
            k: weights[0].len(),
            weights: weights.iter().flatten().copied().collect(),
            budget,
        }
    }

    fn w(&self, y: usize, j: usize) -> T {
        self.weights[y * self.k + j]
    }

    /// Minimizes `<g, S>` over row-stochastic `S` with `<w, S> <= budget`.
    pub(crate) fn lmo(&self, g: &[T]) -> Option<Vec<T>> {
        let (m, k) = (self.m, self.k);
        let mut choice = Vec::with_capacity(m);
        let mut used = T::zero();
        for y in 0..m {
            let j0 = (0..k)
                .min_by(|&a, &b| {
                    g[y * k + a]
                        .partial_cmp(&g[y * k + b])
                        .unwrap_or(Ordering::Equal)
                        .then(self.w(y, a).partial_cmp(&self.w(y, b)).unwrap_or(Ordering::Equal))
                })
                .expect("nonempty row");
            used = used + self.w(y, j0);
            choice.push(j0);
        }
        let mut out = vec![T::zero(); m * k];
        let mut fractional: Option<(usize, usize, usize, T)> = None;
        if let Some(budget) = self.budget {
            let mut excess = used - budget;
            if excess > T::zero() {
                // (slope, row, position in chain, from, to, distortion saved)
                let mut segments: Vec<(T, usize, usize, usize, usize, T)> = Vec::new();
                for (y, &start) in choice.iter().enumerate() {
                    let mut cur = start;
                    let mut seq = 0;
                    loop {
                        let mut next: Option<(usize, T)> = None;
                        for j in 0..k {
                            let dw = self.w(y, cur) - self.w(y, j);
                            if dw <= T::zero() {
                                continue;
                            }
                            let slope = (g[y * k + j] - g[y * k + cur]) / dw;
                            next = match next {
                                None => Some((j, slope)),
                                Some((b, s)) => {
                                    if slope < s || (slope == s && self.w(y, j) < self.w(y, b)) {
                                        Some((j, slope))
                                    } else {
                                        Some((b, s))
                                    }
                                }
                            };
                        }
                        let Some((j, slope)) = next else { break };
                        segments.push((slope, y, seq, cur, j, self.w(y, cur) - self.w(y, j)));
                        cur = j;
                        seq += 1;
                    }
                }
                segments.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .unwrap_or(Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                        .then(a.2.cmp(&b.2))
                });
                for (_, y, _, from, to, dw) in segments {
                    if excess <= T::zero() {
                        break;
                    }
                    if dw <= excess {
                        choice[y] = to;
                        excess = excess - dw;
                    } else {
                        fractional = Some((y, from, to, excess / dw));
                        excess = T::zero();
                    }
                }
                let slack = T::lit(1e-12) * T::max_of(T::one(), budget);
                if excess > slack {
                    return None;
                }
            }
        }
        for (y, &j) in choice.iter().enumerate() {
            out[y * k + j] = T::one();
        }
        if let Some((y, from, to, theta)) = fractional {
            out[y * k + from] = T::one() - theta;
            out[y * k + to] = theta;
        }
        Some(out)
    }
}

/// Exact solution when only the distortion bound is present.
pub(crate) fn knapsack_only<T: Real>(prob: &ProblemInstance<T>, cost: &[Vec<T>], bounds: Bounds<T>) -> Subproblem<T> {
    let poly = Polytope::new(prob.distortion_weights(), bounds.distortion);
    let flat: Vec<T> = cost.iter().flatten().copied().collect();
    match poly.lmo(&flat) {
        Some(kernel) => {
            let v = dot(&flat, &kernel);
            Subproblem::Solved {
                kernel,
                upper: v,
                lower: v,
                optimal: true,
                iterations: 0,
                method: Method::Greedy,
            }
        }
        None => Subproblem::Infeasible {
            reason: InfeasibleReason::Distortion,
            iterations: 0,
            method: Method::Greedy,
        },
    }
}

struct FwRun<T> {
    kernel: Vec<T>,
    objective: T,
    gap: T,
    iterations: usize,
}

struct Smooth<'a, T> {
    poly: Polytope<T>,
    cost: Vec<T>,
    py: &'a [T],
    px: &'a [T],
    kind: DivergenceKind,
    floor: T,
}

impl<T: Real> Smooth<'_, T> {
    fn q(&self, kern: &[T]) -> Vec<T> {
        let k = self.poly.k;
        let mut q = vec![T::zero(); k];
        for (y, &py) in self.py.iter().enumerate() {
            for (qj, &v) in q.iter_mut().zip(&kern[y * k..(y + 1) * k]) {
                *qj = *qj + py * v;
            }
        }
        q
    }

    fn div(&self, kern: &[T]) -> T {
        divergence_unchecked(self.kind, self.px, &self.q(kern))
    }

    fn objective(&self, lin: T, beta: T, kern: &[T]) -> T {
        let l = if lin == T::zero() { T::zero() } else { lin * dot(&self.cost, kern) };
        l + beta * self.div(kern)
    }

    fn gradient(&self, lin: T, beta: T, kern: &[T]) -> Vec<T> {
        let k = self.poly.k;
        let gq = divergence_gradient(self.kind, self.px, &self.q(kern), self.floor);
        (0..kern.len())
            .map(|i| lin * self.cost[i] + beta * self.py[i / k] * gq[i % k])
            .collect()
    }

    /// Exact line search on `[0, gmax]` by bisection on the directional slope.
    fn line_search(&self, lin: T, beta: T, kern: &[T], dir: &[T], gmax: T) -> T {
        let q = self.q(kern);
        let dq = self.q(dir);
        let lin_dir = lin * dot(&self.cost, dir);
        let slope = |gamma: T| {
            let qg: Vec<T> = q.iter().zip(&dq).map(|(&a, &b)| a + gamma * b).collect();
            let g = divergence_gradient(self.kind, self.px, &qg, self.floor);
            lin_dir + beta * dot(&g, &dq)
        };
        if slope(T::zero()) >= T::zero() {
            return T::zero();
        }
        if slope(gmax) <= T::zero() {
            return gmax;
        }
        let (mut lo, mut hi) = (T::zero(), gmax);
        for _ in 0..LINE_SEARCH_STEPS {
            let mid = (lo + hi) * T::lit(0.5);
            if slope(mid) <= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Away-step Frank-Wolfe on `lin * <c, K> + beta * d(p_X, q(K))`.
    fn frank_wolfe(&self, lin: T, beta: T, start: Vec<T>, tol: T) -> FwRun<T> {
        let mut atoms: Vec<(Vec<T>, T)> = vec![(start.clone(), T::one())];
        let mut x = start;
        let mut iterations = 0;
        let mut gap;
        loop {
            let grad = self.gradient(lin, beta, &x);
            let s = self.poly.lmo(&grad).expect("polytope is nonempty");
            let gx = dot(&grad, &x);
            gap = gx - dot(&grad, &s);
            if gap <= tol || iterations >= FW_MAX_ITERATIONS {
                break;
            }
            let (away, away_val) = atoms
                .iter()
                .enumerate()
                .map(|(i, (a, _))| (i, dot(&grad, a)))
                .fold((0, T::neg_infinity()), |b, c| if c.1 > b.1 { c } else { b });
            let away_gap = away_val - gx;
            let alpha_away = atoms[away].1;
            if gap >= away_gap || atoms.len() == 1 || alpha_away >= T::one() {
                let dir: Vec<T> = s.iter().zip(&x).map(|(&a, &b)| a - b).collect();
                let gamma = self.line_search(lin, beta, &x, &dir, T::one());
                if gamma == T::zero() {
                    break;
                }
                for (xi, di) in x.iter_mut().zip(&dir) {
                    *xi = *xi + gamma * *di;
                }
                if gamma >= T::one() {
                    atoms = vec![(s, T::one())];
                } else {
                    for a in atoms.iter_mut() {
                        a.1 = a.1 * (T::one() - gamma);
                    }
                    match atoms.iter_mut().find(|a| a.0 == s) {
                        Some(a) => a.1 = a.1 + gamma,
                        None => atoms.push((s, gamma)),
                    }
                }
            } else {
                let dir: Vec<T> = x.iter().zip(&atoms[away].0).map(|(&a, &b)| a - b).collect();
                let gmax = alpha_away / (T::one() - alpha_away);
                let gamma = self.line_search(lin, beta, &x, &dir, gmax);
                if gamma == T::zero() {
                    break;
                }
                for (xi, di) in x.iter_mut().zip(&dir) {
                    *xi = *xi + gamma * *di;
                }
                for a in atoms.iter_mut() {
                    a.1 = a.1 * (T::one() + gamma);
                }
                atoms[away].1 = atoms[away].1 - gamma;
                if gamma >= gmax {
                    atoms.remove(away);
                }
            }
            atoms.retain(|a| a.1 > T::zero());
            iterations += 1;
        }
        FwRun {
            objective: self.objective(lin, beta, &x),
            kernel: x,
            gap: T::max_of(gap, T::zero()),
            iterations,
        }
    }

    /// A kernel inside the distortion budget whose output marginal is as
    /// close to `p_X` as the budget allows along a straight segment.
    fn interior_start(&self) -> Vec<T> {
        let (m, k) = (self.poly.m, self.poly.k);
        let mut face = vec![T::zero(); m * k];
        let mut face_distortion = T::zero();
        for y in 0..m {
            let row = &self.poly.weights[y * k..(y + 1) * k];
            let min = row.iter().copied().fold(T::infinity(), T::min);
            let slack = T::lit(1e-14) * T::max_of(T::one(), Float::abs(min));
            let ties: Vec<usize> = (0..k).filter(|&j| row[j] <= min + slack).collect();
            let share = T::one() / T::from_count(ties.len());
            for j in ties {
                face[y * k + j] = share;
                face_distortion = face_distortion + share * row[j];
            }
        }
        let constant: Vec<T> = (0..m).flat_map(|_| self.px.iter().copied()).collect();
        let theta = match self.poly.budget {
            None => T::one(),
            Some(budget) => {
                let dc = dot(&self.poly.weights, &constant);
                if dc <= budget {
                    T::one()
                } else if dc <= face_distortion {
                    T::zero()
                } else {
                    T::min_of(T::one(), T::max_of(T::zero(), (budget - face_distortion) / (dc - face_distortion)))
                }
            }
        };
        face.iter()
            .zip(&constant)
            .map(|(&f, &c)| theta * c + (T::one() - theta) * f)
            .collect()
    }

    /// Largest `theta` with `d(theta * a + (1 - theta) * b) <= p`, given
    /// `d(b) <= p < d(a)`.
    fn blend_to_boundary(&self, a: &[T], b: &[T], p: T) -> Vec<T> {
        let mix = |t: T| -> Vec<T> { a.iter().zip(b).map(|(&u, &v)| t * u + (T::one() - t) * v).collect() };
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..LINE_SEARCH_STEPS {
            let mid = (lo + hi) * T::lit(0.5);
            if self.div(&mix(mid)) <= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mix(lo)
    }
}

pub(crate) fn smooth<T: Real>(prob: &ProblemInstance<T>, cost: &[Vec<T>], bounds: Bounds<T>) -> Subproblem<T> {
    let p = bounds.perception.expect("perception bound present");
    let sm = Smooth {
        poly: Polytope::new(prob.distortion_weights(), bounds.distortion),
        cost: cost.iter().flatten().copied().collect(),
        py: prob.degraded_marginal().mass(),
        px: prob.source_marginal().mass(),
        kind: prob.divergence(),
        floor: T::epsilon().powi(4),
    };
    let tol = T::lit(SMOOTH_GAP_TOL);
    let inner_tol = tol * T::lit(0.1);
    let method = Method::FrankWolfe;

    let Some(linear) = sm.poly.lmo(&sm.cost) else {
        return Subproblem::Infeasible {
            reason: InfeasibleReason::Distortion,
            iterations: 0,
            method,
        };
    };
    let linear_value = dot(&sm.cost, &linear);
    if sm.div(&linear) <= p {
        return Subproblem::Solved {
            kernel: linear,
            upper: linear_value,
            lower: linear_value,
            optimal: true,
            iterations: 0,
            method,
        };
    }

    let start = sm.interior_start();
    if !sm.div(&start).is_finite() {
        return Subproblem::Infeasible {
            reason: InfeasibleReason::Support,
            iterations: 0,
            method,
        };
    }
    let mut iterations = 0;
    let first = if sm.div(&start) <= p {
        start.clone()
    } else {
        let run = sm.frank_wolfe(T::zero(), T::one(), start.clone(), inner_tol * T::lit(0.01));
        iterations += run.iterations;
        if run.objective <= p {
            run.kernel
        } else if run.objective - run.gap > p {
            let reason = if bounds.distortion.is_some() {
                InfeasibleReason::Joint
            } else {
                InfeasibleReason::Perception
            };
            return Subproblem::Infeasible {
                reason,
                iterations,
                method,
            };
        } else {
            return Subproblem::Failed { iterations, method };
        }
    };
    let mut upper = dot(&sm.cost, &first);
    let mut best_kernel = first;
    let mut lower = linear_value;

    // multiplier search: d(K_beta) is nonincreasing in beta
    let mut lo_beta = T::zero();
    let mut lo_kernel = linear;
    let mut hi: Option<(T, Vec<T>)> = None;
    let mut warm = start;
    let probe = |beta: T, warm: &mut Vec<T>, iterations: &mut usize, lower: &mut T| -> (Vec<T>, bool) {
        let run = sm.frank_wolfe(T::one(), beta, warm.clone(), inner_tol);
        *iterations += run.iterations;
        let bound = run.objective - run.gap - beta * p;
        if bound > *lower {
            *lower = bound;
        }
        *warm = run.kernel.clone();
        let feasible = sm.div(&run.kernel) <= p;
        (run.kernel, feasible)
    };
    let consider = |kernel: &[T], best_kernel: &mut Vec<T>, upper: &mut T| {
        let v = dot(&sm.cost, kernel);
        if v < *upper {
            *upper = v;
            *best_kernel = kernel.to_vec();
        }
    };

    let mut beta = T::one();
    for _ in 0..MAX_MULTIPLIER_DOUBLINGS {
        let (kern, feasible) = probe(beta, &mut warm, &mut iterations, &mut lower);
        if feasible {
            consider(&kern, &mut best_kernel, &mut upper);
            hi = Some((beta, kern));
            break;
        }
        lo_beta = beta;
        lo_kernel = kern;
        beta = beta * T::lit(4.0);
    }
    if let Some((mut hi_beta, mut hi_kernel)) = hi {
        for _ in 0..MAX_BISECTIONS {
            let blended = sm.blend_to_boundary(&lo_kernel, &hi_kernel, p);
            consider(&blended, &mut best_kernel, &mut upper);
            if upper - lower <= tol || hi_beta - lo_beta <= T::epsilon() * hi_beta {
                break;
            }
            let mid = if lo_beta == T::zero() {
                hi_beta * T::lit(0.25)
            } else {
                (lo_beta * hi_beta).sqrt()
            };
            let (kern, feasible) = probe(mid, &mut warm, &mut iterations, &mut lower);
            if feasible {
                consider(&kern, &mut best_kernel, &mut upper);
                hi_beta = mid;
                hi_kernel = kern;
            } else {
                lo_beta = mid;
                lo_kernel = kern;
            }
        }
    }
    Subproblem::Solved {
        kernel: best_kernel,
        upper,
        lower: T::min_of(lower, upper),
        optimal: upper - lower <= tol,
        iterations,
        method,
    }
}
