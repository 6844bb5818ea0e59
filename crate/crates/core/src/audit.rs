//! Randomized property suites for the structural results on error rates,
//! Bayes errors and the tradeoff functions.
//!
//! Every suite is driven by its own ChaCha8 stream derived from the caller's
//! seed, so a report depends only on `(instance, trials, seed)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{bayes_error, bayes_error_abs_form, dpi_equality_holds, error_rate, region_partition, DecisionRegion};
use crate::error::Result;
use crate::prob::{mix_mixtures, push_forward, Alphabet, Channel, MixtureSource, ProbVector};
use crate::solver::{min_distortion, solve_cdp, solve_scdp, ProblemInstance, TradeoffResult};

/// Cap on trials for suites that call the solver.
pub const SOLVER_TRIAL_CAP: usize = 100;
/// Smallest alphabet drawn by the random generators.
pub const MIN_RANDOM_ALPHABET: usize = 2;
/// Largest alphabet drawn by the random generators.
pub const MAX_RANDOM_ALPHABET: usize = 6;

/// One property checked over random trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub theorem: &'static str,
    pub name: &'static str,
    pub trials: usize,
    /// Largest observed value of the violation measure.
    pub max_violation: f64,
    pub tolerance: f64,
    /// Whether the bound is strict (`max_violation < tolerance`).
    pub strict: bool,
    pub pass: bool,
}

impl AuditCheck {
    fn new(theorem: &'static str, name: &'static str, trials: usize, max_violation: f64, tolerance: f64, strict: bool) -> Self {
        let pass = if strict {
            max_violation < tolerance
        } else {
            max_violation <= tolerance
        };
        AuditCheck {
            theorem,
            name,
            trials,
            max_violation,
            tolerance,
            strict,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Theorem labels in report order, without repeats.
    pub fn theorems(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for c in &self.checks {
            if !out.contains(&c.theorem) {
                out.push(c.theorem);
            }
        }
        out
    }
}

fn stream(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

/// Random alphabet size in `[MIN_RANDOM_ALPHABET, MAX_RANDOM_ALPHABET]`.
pub fn random_size<R: Rng>(rng: &mut R) -> usize {
    rng.gen_range(MIN_RANDOM_ALPHABET..=MAX_RANDOM_ALPHABET)
}

/// Flat-Dirichlet mass vector; each symbol is zeroed with probability
/// `sparsity` (at least one symbol keeps mass).
pub fn random_prob<R: Rng>(rng: &mut R, n: usize, sparsity: f64) -> ProbVector<f64> {
    let keep = rng.gen_range(0..n);
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            if i != keep && rng.gen_bool(sparsity) {
                0.0
            } else {
                -(1.0 - rng.gen::<f64>()).ln()
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    ProbVector::new(raw.into_iter().map(|v| v / total).collect()).expect("normalized draw")
}

pub fn random_source<R: Rng>(rng: &mut R, n: usize) -> MixtureSource<f64> {
    let prior = rng.gen_range(0.05..0.95);
    MixtureSource::with_prior1(prior, random_prob(rng, n, 0.15), random_prob(rng, n, 0.15)).expect("valid mixture")
}

pub fn random_channel<R: Rng>(rng: &mut R, input: usize, output: usize) -> Channel<f64> {
    Channel::from_prob_rows((0..input).map(|_| random_prob(rng, output, 0.3)).collect()).expect("valid channel")
}

pub fn random_region<R: Rng>(rng: &mut R, n: usize) -> DecisionRegion {
    DecisionRegion::from_indicator((0..n).map(|_| rng.gen_bool(0.5)).collect()).expect("nonempty alphabet")
}

/// Error rate of a per-class blend equals the blend of error rates.
pub fn linearity_suite(trials: usize, seed: u64) -> AuditCheck {
    let mut rng = stream(seed, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = random_size(&mut rng);
        let u = random_source(&mut rng, n);
        let v = MixtureSource::new(*u.prior1(), *u.prior2(), random_prob(&mut rng, n, 0.15), random_prob(&mut rng, n, 0.15))
            .expect("valid mixture");
        let region = random_region(&mut rng, n);
        let lambda: f64 = rng.gen();
        let w = mix_mixtures(&u, &v, &lambda).expect("shared priors");
        let lhs = error_rate(&w, &region).expect("matching alphabet");
        let rhs = lambda * error_rate(&u, &region).expect("matching alphabet")
            + (1.0 - lambda) * error_rate(&v, &region).expect("matching alphabet");
        worst = worst.max((lhs - rhs).abs());
    }
    AuditCheck::new("theorem3", "error rate is linear in the mixture", trials, worst, 1e-12, false)
}

/// Bayes error of a per-class blend dominates the blend of Bayes errors.
pub fn concavity_suite(trials: usize, seed: u64) -> AuditCheck {
    let mut rng = stream(seed, 4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = random_size(&mut rng);
        let u = random_source(&mut rng, n);
        let v = MixtureSource::new(*u.prior1(), *u.prior2(), random_prob(&mut rng, n, 0.15), random_prob(&mut rng, n, 0.15))
            .expect("valid mixture");
        let lambda: f64 = rng.gen();
        let w = mix_mixtures(&u, &v, &lambda).expect("shared priors");
        let blend = lambda * bayes_error(&u) + (1.0 - lambda) * bayes_error(&v);
        worst = worst.max(blend - bayes_error(&w));
    }
    AuditCheck::new("theorem4", "Bayes error is concave in the mixture", trials, worst.max(0.0), 1e-12, false)
}

/// Both closed forms of the Bayes error agree.
pub fn bayes_forms_suite(trials: usize, seed: u64) -> AuditCheck {
    let mut rng = stream(seed, 6);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = random_size(&mut rng);
        let src = random_source(&mut rng, n);
        worst = worst.max((bayes_error(&src) - bayes_error_abs_form(&src)).abs());
    }
    AuditCheck::new("bayes_error_forms", "min form equals absolute-difference form", trials, worst, 1e-12, false)
}

/// Bayes error never drops through a random channel.
pub fn data_processing_suite(trials: usize, seed: u64) -> AuditCheck {
    let mut rng = stream(seed, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = random_size(&mut rng);
        let m = random_size(&mut rng);
        let src = random_source(&mut rng, n);
        let ch = random_channel(&mut rng, n, m);
        let after = bayes_error(&push_forward(&src, &ch).expect("matching alphabet"));
        worst = worst.max(bayes_error(&src) - after);
    }
    AuditCheck::new("theorem5", "Bayes error does not decrease through a channel", trials, worst, 1e-12, false)
}

/// Channel meeting the equality condition: a random permutation on even
/// trials, otherwise a channel whose outputs are split between the strict
/// class-1 and strict class-2 inputs (tied inputs may go anywhere).
pub fn equality_channel<R: Rng>(rng: &mut R, src: &MixtureSource<f64>, permutation: bool) -> Channel<f64> {
    let n = src.alphabet().size();
    if permutation {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        return Channel::deterministic(&map, src.alphabet()).expect("valid map");
    }
    let m = rng.gen_range(2..=MAX_RANDOM_ALPHABET);
    let split = rng.gen_range(1..m);
    let part = region_partition(src);
    let rows = (0..n)
        .map(|x| {
            let range = if part.plus.contains(x) {
                0..split
            } else if part.minus.contains(x) {
                split..m
            } else {
                0..m
            };
            let sub = random_prob(rng, range.len(), 0.3);
            let mut row = vec![0.0; m];
            for (j, y) in range.enumerate() {
                row[y] = *sub.get(j);
            }
            ProbVector::new(row).expect("normalized row")
        })
        .collect();
    Channel::from_prob_rows(rows).expect("valid channel")
}

/// Equality channels preserve the Bayes error.
pub fn equality_suite(trials: usize, seed: u64) -> AuditCheck {
    let mut rng = stream(seed, 7);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = random_size(&mut rng);
        let src = random_source(&mut rng, n);
        let ch = equality_channel(&mut rng, &src, t % 2 == 0);
        let holds = dpi_equality_holds(&src, &ch).expect("matching alphabet");
        let after = bayes_error(&push_forward(&src, &ch).expect("matching alphabet"));
        let diff = (after - bayes_error(&src)).abs();
        // a constructed channel that fails the structural test counts as a violation
        worst = worst.max(if holds { diff } else { f64::INFINITY });
    }
    AuditCheck::new("theorem5", "equality-condition channels keep the Bayes error", trials, worst, 1e-12, false)
}

/// Source with one strict class-1 and one strict class-2 symbol, each of
/// weighted margin at least `margin`, plus a channel routing a fraction
/// `t >= 0.2` of the class-2 symbol onto the class-1 symbol's output.
///
/// The Bayes error then grows by `min(a1 - b1, t (b2 - a2)) >= 0.2 margin`.
pub fn bridging_pair<R: Rng>(rng: &mut R, margin: f64) -> (MixtureSource<f64>, Channel<f64>) {
    loop {
        let n = random_size(rng);
        let src = random_source(rng, n);
        let diff: Vec<f64> = (0..n).map(|x| src.weighted1(x) - src.weighted2(x)).collect();
        let (x1, &d1) = diff.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        let (x2, &d2) = diff.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        if d1 < margin || -d2 < margin {
            continue;
        }
        let t: f64 = rng.gen_range(0.2..=1.0);
        let rows = (0..n)
            .map(|x| {
                let mut row = vec![0.0; n];
                if x == x2 {
                    row[x1] = t;
                    row[x2] = 1.0 - t;
                } else {
                    row[x] = 1.0;
                }
                ProbVector::new(row).expect("normalized row")
            })
            .collect();
        return (src, Channel::from_prob_rows(rows).expect("valid channel"));
    }
}

/// Bridging channels strictly raise the Bayes error. The violation measure
/// is `ε_X - ε_Y`, which must stay below `-1e-9`.
pub fn bridging_suite(trials: usize, seed: u64) -> AuditCheck {
    let mut rng = stream(seed, 8);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let (src, ch) = bridging_pair(&mut rng, 0.05);
        let after = bayes_error(&push_forward(&src, &ch).expect("matching alphabet"));
        let flagged = !dpi_equality_holds(&src, &ch).expect("matching alphabet");
        let measure = bayes_error(&src) - after;
        worst = worst.max(if flagged { measure } else { f64::INFINITY });
    }
    AuditCheck::new("theorem5", "bridging channels raise the Bayes error", trials, worst, -1e-9, true)
}

fn optimal_value(r: &TradeoffResult<f64>) -> Option<(f64, f64)> {
    if r.status.is_optimal() {
        r.value.map(|v| (v, r.certificate.gap))
    } else {
        None
    }
}

/// Random constraint levels for `prob`: `D` in `[D_min, D_max]`, `P` in
/// `[0, 1]`, each replaced by infinity with probability 0.1.
fn random_levels<R: Rng>(rng: &mut R, prob: &ProblemInstance<f64>) -> (f64, f64) {
    let dmin = min_distortion(prob);
    let dmax = prob
        .distortion_weights()
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        .max(dmin);
    let d = if rng.gen_bool(0.1) {
        f64::INFINITY
    } else {
        rng.gen_range(dmin..=dmax)
    };
    let p = if !prob.perception_defined() || rng.gen_bool(0.1) {
        f64::INFINITY
    } else {
        rng.gen_range(0.0..=1.0)
    };
    (d, p)
}

fn solve(prob: &ProblemInstance<f64>, strong: bool, d: f64, p: f64) -> Result<TradeoffResult<f64>> {
    if strong {
        solve_scdp(prob, d, p)
    } else {
        solve_cdp(prob, d, p)
    }
}

/// Enlarging either bound never raises the optimum.
pub fn monotonicity_suite(prob: &ProblemInstance<f64>, strong: bool, trials: usize, seed: u64) -> Result<AuditCheck> {
    let mut rng = stream(seed, if strong { 2 } else { 1 });
    let trials = trials.min(SOLVER_TRIAL_CAP);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (d1, p1) = random_levels(&mut rng, prob);
        let (d2, p2) = random_levels(&mut rng, prob);
        let (lo, hi) = ((d1.min(d2), p1.min(p2)), (d1.max(d2), p1.max(p2)));
        let a = solve(prob, strong, lo.0, lo.1)?;
        let b = solve(prob, strong, hi.0, hi.1)?;
        if let (Some((va, ga)), Some((vb, gb))) = (optimal_value(&a), optimal_value(&b)) {
            worst = worst.max(vb - va - ga - gb);
        }
    }
    let (theorem, name) = if strong {
        ("theorem2", "strong tradeoff is non-increasing in D and P")
    } else {
        ("theorem1", "tradeoff is non-increasing in D and P")
    };
    Ok(AuditCheck::new(theorem, name, trials, worst, 1e-6, false))
}

/// Midpoint convexity of `C(D, P)`, net of the certified solver gaps.
pub fn convexity_suite(prob: &ProblemInstance<f64>, trials: usize, seed: u64) -> Result<AuditCheck> {
    let mut rng = stream(seed, 9);
    let trials = trials.min(SOLVER_TRIAL_CAP);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let (d1, p1) = random_levels(&mut rng, prob);
        let (d2, p2) = random_levels(&mut rng, prob);
        let (dm, pm) = ((d1 + d2) / 2.0, (p1 + p2) / 2.0);
        let cells = [solve_cdp(prob, d1, p1)?, solve_cdp(prob, d2, p2)?, solve_cdp(prob, dm, pm)?];
        if let [Some((v1, g1)), Some((v2, g2)), Some((vm, gm))] = cells.each_ref().map(optimal_value) {
            worst = worst.max(vm - 0.5 * (v1 + v2) - gm - 0.5 * (g1 + g2));
        }
    }
    Ok(AuditCheck::new(
        "theorem1",
        "tradeoff is convex in (D, P)",
        trials,
        worst.max(0.0),
        1e-6,
        false,
    ))
}

/// Runs every suite. Solver-backed suites use `prob` and at most
/// [`SOLVER_TRIAL_CAP`] trials; the rest draw random sources.
pub fn run_audit(prob: &ProblemInstance<f64>, trials: usize, seed: u64) -> Result<AuditReport> {
    let checks = vec![
        monotonicity_suite(prob, false, trials, seed)?,
        convexity_suite(prob, trials, seed)?,
        monotonicity_suite(prob, true, trials, seed)?,
        linearity_suite(trials, seed),
        concavity_suite(trials, seed),
        data_processing_suite(trials, seed),
        equality_suite(trials, seed),
        bridging_suite(trials, seed),
        bayes_forms_suite(trials, seed),
    ];
    Ok(AuditReport { seed, trials, checks })
}

/// Alphabet helper for callers building random instances.
pub fn alphabet(n: usize) -> Alphabet {
    Alphabet::new(n).expect("positive size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{DistortionMatrix, DivergenceKind};

    fn canonical() -> ProblemInstance<f64> {
        let pv = |m: &[f64]| ProbVector::new(m.to_vec()).unwrap();
        let src = MixtureSource::new(0.5, 0.5, pv(&[0.8, 0.2]), pv(&[0.2, 0.8])).unwrap();
        ProblemInstance::new(
            src,
            Channel::binary_symmetric(0.1).unwrap(),
            DistortionMatrix::hamming(alphabet(2)),
            DivergenceKind::TotalVariation,
            DecisionRegion::from_symbols(alphabet(2), &[0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn every_suite_passes_on_the_canonical_instance() {
        let report = run_audit(&canonical(), 200, 7).unwrap();
        for c in &report.checks {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(report.theorems(), vec!["theorem1", "theorem2", "theorem3", "theorem4", "theorem5", "bayes_error_forms"]);
    }

    #[test]
    fn single_trial_still_lists_every_theorem() {
        let report = run_audit(&canonical(), 1, 0).unwrap();
        assert_eq!(report.theorems().len(), 6);
        assert!(report.checks.iter().all(|c| c.trials == 1));
    }

    #[test]
    fn reports_are_reproducible() {
        assert_eq!(run_audit(&canonical(), 20, 42).unwrap(), run_audit(&canonical(), 20, 42).unwrap());
    }

    #[test]
    fn bridging_pairs_have_the_promised_increase() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (src, ch) = bridging_pair(&mut rng, 0.05);
            let gain = bayes_error(&push_forward(&src, &ch).unwrap()) - bayes_error(&src);
            assert!(gain >= 0.2 * 0.05 - 1e-12, "{gain}");
        }
    }

    #[test]
    fn random_generators_respect_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = random_size(&mut rng);
            assert!((2..=6).contains(&n));
            let ch = random_channel(&mut rng, n, 3);
            assert_eq!((ch.input().size(), ch.output().size()), (n, 3));
        }
    }
}
