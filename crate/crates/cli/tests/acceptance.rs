//! Acceptance gate: one line per criterion, nonzero exit if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cdp_core::audit::{
    bayes_forms_suite, bridging_suite, concavity_suite, data_processing_suite, equality_suite, linearity_suite,
};
use cdp_core::*;

const SEED: u64 = 42;
const INF: f64 = f64::INFINITY;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    run_after(id, title, limit, Duration::ZERO, f)
}

/// `spent` is setup time already charged to this criterion.
fn run_after(id: u32, title: &str, limit: Option<Duration>, spent: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = spent + start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = o.pass && in_time;
    let limit_text = limit.map_or("no limit".to_string(), |l| format!("limit {:.0?}", l));
    println!(
        "criterion {id:>2} [{}] {title}: {} ({:.1?}, {limit_text})",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed
    );
    pass
}

fn grid_5() -> (Vec<f64>, Vec<f64>) {
    let d = (0..6).map(|i| 0.1 + 0.05 * i as f64).collect();
    let p = (0..6).map(|i| 0.1 * i as f64).collect();
    (d, p)
}

fn canonical_surfaces() -> (SurfaceTableF64, SurfaceTableF64) {
    let prob = common::canonical();
    let (d, p) = grid_5();
    (
        sweep_surface(&prob, &d, &p, Tradeoff::Cdp).unwrap(),
        sweep_surface(&prob, &d, &p, Tradeoff::Scdp).unwrap(),
    )
}

fn criterion_3() -> Outcome {
    let random = data_processing_suite(1000, SEED);
    let equal = equality_suite(50, SEED);
    let bridge = bridging_suite(50, SEED);
    outcome(
        random.pass && equal.pass && bridge.pass,
        format!(
            "{} random drops <= {:.1e} (tol 1e-12), {} equality channels |diff| <= {:.1e} (tol 1e-12), {} bridging channels min increase {:.3e} (> 1e-9)",
            random.trials, random.max_violation, equal.trials, equal.max_violation, bridge.trials, -bridge.max_violation
        ),
    )
}

fn criterion_5(c: &SurfaceTableF64, s: &SurfaceTableF64) -> Outcome {
    let (vc, vs) = (c.monotonicity_violation(), s.monotonicity_violation());
    let optimal = c.cells().iter().chain(s.cells()).filter(|r| r.status.is_optimal()).count();
    outcome(
        vc <= 1e-6 && vs <= 1e-6,
        format!("6x6 grid, {optimal}/72 Optimal cells, max increase C {vc:.2e}, C_S {vs:.2e} (tol 1e-6)"),
    )
}

fn criterion_6(c: &SurfaceTableF64) -> Outcome {
    let tol = 1e-6 + c.max_solver_gap();
    let violations = c.convexity_violations(tol);
    let gap = c.max_convexity_gap().unwrap_or(f64::NEG_INFINITY);
    outcome(
        violations.is_empty(),
        format!("{} violations, largest midpoint gap {gap:.2e} (tol {tol:.1e})", violations.len()),
    )
}

fn criterion_7() -> Outcome {
    let mut worst_cdp: f64 = 0.0;
    let mut worst_slack_ratio: f64 = 0.0;
    let mut worst_scdp_above = f64::NEG_INFINITY;
    let mut worst_scdp_below: f64 = 0.0;
    let mut compared = 0;
    let mut no_lattice_point = 0;
    let mut failures = Vec::new();
    for name in common::ORACLE_FIXTURES {
        let fx = common::load(name);
        let grid = KernelGrid::new(fx.prob.observed_alphabet(), fx.prob.restore_alphabet(), 0.05).unwrap();
        for &d in &fx.d_grid {
            for &p in &fx.p_grid {
                let c = solve_cdp(&fx.prob, d, p).unwrap();
                let s = solve_scdp(&fx.prob, d, p).unwrap();
                let oc = grid_search_cdp(&fx.prob, d, p, &grid).unwrap();
                let os = grid_search_scdp(&fx.prob, d, p, &grid).unwrap();
                match (c.value, oc.value) {
                    (Some(v), Some(o)) => {
                        compared += 1;
                        let diff = (v - o).abs();
                        worst_cdp = worst_cdp.max(diff);
                        worst_slack_ratio = worst_slack_ratio.max(diff / oc.slack);
                        if diff > oc.slack {
                            failures.push(format!("{name} C({d},{p}): |{v} - {o}| > {}", oc.slack));
                        }
                    }
                    (Some(v), None) => {
                        // no lattice kernel meets the bounds; the loosened
                        // lattice still has to bound the solver from below
                        no_lattice_point += 1;
                        if oc.lower_bound.is_none_or(|lb| v < lb - 1e-12) {
                            failures.push(format!("{name} C({d},{p}): {v} below lattice lower bound {:?}", oc.lower_bound));
                        }
                    }
                    (None, Some(o)) => failures.push(format!("{name} C({d},{p}): solver infeasible, lattice {o}")),
                    (None, None) => {}
                }
                match (s.value, os.value) {
                    (Some(v), Some(o)) => {
                        worst_scdp_above = worst_scdp_above.max(v - o);
                        worst_scdp_below = worst_scdp_below.max(o - v);
                        if v > o + 1e-9 || v < o - os.slack {
                            failures.push(format!("{name} C_S({d},{p}): {v} outside [{} , {}]", o - os.slack, o + 1e-9));
                        }
                    }
                    (Some(v), None) => {
                        if os.lower_bound.is_none_or(|lb| v < lb - 1e-12) {
                            failures.push(format!("{name} C_S({d},{p}): {v} below lattice lower bound {:?}", os.lower_bound));
                        }
                    }
                    (None, Some(o)) => failures.push(format!("{name} C_S({d},{p}): solver infeasible, lattice {o}")),
                    (None, None) => {}
                }
            }
        }
    }
    for f in &failures {
        println!("    {f}");
    }
    outcome(
        failures.is_empty(),
        format!(
            "{compared} cells compared, max |C - oracle| {worst_cdp:.2e} ({:.0}% of slack), C_S - oracle in [{:.2e}, {worst_scdp_above:.2e}], {no_lattice_point} cells with no feasible lattice kernel checked against the loosened bound",
            100.0 * worst_slack_ratio,
            -worst_scdp_below
        ),
    )
}

fn criterion_8() -> Outcome {
    let canonical = common::canonical();
    let noiseless = common::noiseless();
    let values = [
        solve_cdp(&canonical, INF, INF).unwrap().value.unwrap(),
        bayes_error(canonical.degraded()),
        solve_scdp(&canonical, INF, INF).unwrap().value.unwrap(),
    ];
    let clean = [
        solve_cdp(&noiseless, INF, INF).unwrap().value.unwrap(),
        solve_scdp(&noiseless, INF, INF).unwrap().value.unwrap(),
        bayes_error(noiseless.source()),
    ];
    let err = values
        .iter()
        .map(|v| (v - 0.26).abs())
        .chain(clean.iter().map(|v| (v - 0.2).abs()))
        .fold(0.0, f64::max);
    outcome(
        err <= 1e-9,
        format!(
            "C = {:.12}, eps(Y) = {:.12}, C_S = {:.12}; noiseless C = {:.12}, C_S = {:.12}; max error {err:.1e} (tol 1e-9)",
            values[0], values[1], values[2], clean[0], clean[1]
        ),
    )
}

fn criterion_9(c: &SurfaceTableF64, s: &SurfaceTableF64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut cells = 0;
    for (a, b) in c.cells().iter().zip(s.cells()) {
        if a.status.is_optimal() && b.status.is_optimal() {
            cells += 1;
            worst = worst.max(b.value.unwrap() - a.value.unwrap());
        }
    }
    outcome(worst <= 1e-8, format!("{cells} jointly Optimal cells, max C_S - C {worst:.2e} (tol 1e-8)"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = common::fixture("canonical.json");
    let bin = env!("CARGO_BIN_EXE_cdp");
    let run = |sub: &str, out: &str, extra: &[&str]| -> (bool, Vec<u8>) {
        let path = dir.path().join(out);
        let status = Command::new(bin)
            .arg(sub)
            .arg("--config")
            .arg(&config)
            .arg("--seed")
            .arg(SEED.to_string())
            .arg("--out")
            .arg(&path)
            .args(extra)
            .status()
            .unwrap();
        (status.success(), std::fs::read(&path).unwrap_or_default())
    };
    let sweep = [run("sweep", "sweep1.csv", &[]), run("sweep", "sweep2.csv", &[])];
    let audit = [
        run("audit", "audit1.json", &["--trials", "1000"]),
        run("audit", "audit2.json", &["--trials", "1000"]),
    ];
    let ok = sweep.iter().chain(&audit).all(|(s, b)| *s && !b.is_empty());
    let same = sweep[0].1 == sweep[1].1 && audit[0].1 == audit[1].1;
    outcome(
        ok && same,
        format!(
            "sweep {} bytes, audit {} bytes, exit codes ok: {ok}, byte-identical: {same}",
            sweep[0].1.len(),
            audit[0].1.len()
        ),
    )
}

fn main() -> ExitCode {
    let second = Duration::from_secs(1);
    let mut all = true;
    all &= run(1, "error-rate linearity", Some(second), || {
        let c = linearity_suite(1000, SEED);
        outcome(c.pass, format!("{} trials, max |violation| {:.2e} (tol 1e-12)", c.trials, c.max_violation))
    });
    all &= run(2, "Bayes-error concavity", Some(second), || {
        let c = concavity_suite(1000, SEED);
        outcome(c.pass, format!("{} trials, max shortfall {:.2e} (tol 1e-12)", c.trials, c.max_violation))
    });
    all &= run(3, "Bayes error non-decreasing through channels", Some(2 * second), criterion_3);
    all &= run(4, "Bayes-error closed forms agree", None, || {
        let c = bayes_forms_suite(1000, SEED);
        outcome(c.pass, format!("{} sources, max |difference| {:.2e} (tol 1e-12)", c.trials, c.max_violation))
    });
    let start = Instant::now();
    let (c, s) = canonical_surfaces();
    let sweep_time = start.elapsed();
    all &= run_after(5, "monotone in D and P", Some(Duration::from_secs(30)), sweep_time, || criterion_5(&c, &s));
    // shares the sweep of criterion 5
    all &= run(6, "C convex in (D, P)", None, || criterion_6(&c));
    all &= run(7, "solver vs lattice oracle", Some(Duration::from_secs(60)), criterion_7);
    all &= run(8, "unconstrained identities", None, criterion_8);
    all &= run(9, "C_S <= C", None, || criterion_9(&c, &s));
    all &= run(10, "CLI determinism", None, criterion_10);
    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
