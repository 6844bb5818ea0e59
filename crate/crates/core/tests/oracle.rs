use cdp_core::*;

const INF: f64 = f64::INFINITY;

fn two() -> Alphabet {
    Alphabet::new(2).unwrap()
}

fn pv(m: &[f64]) -> ProbVector<f64> {
    ProbVector::new(m.to_vec()).unwrap()
}

fn problem(src: MixtureSourceF64, degrade: ChannelF64) -> ProblemInstanceF64 {
    ProblemInstance::new(
        src,
        degrade,
        DistortionMatrix::hamming(two()),
        DivergenceKind::TotalVariation,
        DecisionRegion::from_symbols(two(), &[0]).unwrap(),
    )
    .unwrap()
}

fn canonical() -> ProblemInstanceF64 {
    problem(
        MixtureSource::new(0.5, 0.5, pv(&[0.8, 0.2]), pv(&[0.2, 0.8])).unwrap(),
        Channel::binary_symmetric(0.1).unwrap(),
    )
}

fn skewed() -> ProblemInstanceF64 {
    problem(
        MixtureSource::new(0.35, 0.65, pv(&[0.85, 0.15]), pv(&[0.3, 0.7])).unwrap(),
        Channel::from_rows(vec![vec![0.7, 0.3], vec![0.25, 0.75]]).unwrap(),
    )
}

#[test]
fn deterministic_lattice_matches_unconstrained_optima() {
    let grid = KernelGrid::new(two(), two(), 1.0).unwrap();
    for prob in [canonical(), skewed()] {
        let by_ch = bayes_error(prob.degraded());
        let c = grid_search_cdp(&prob, INF, INF, &grid).unwrap();
        assert!((c.value.unwrap() - solve_cdp(&prob, INF, INF).unwrap().value.unwrap()).abs() <= 1e-9);
        let s = grid_search_scdp(&prob, INF, INF, &grid).unwrap();
        assert!((s.value.unwrap() - by_ch).abs() <= 1e-9);
        assert_eq!(c.evaluated, 4);
    }
    let c = grid_search_cdp(&canonical(), INF, INF, &grid).unwrap();
    assert!((c.value.unwrap() - 0.26).abs() <= 1e-12);
}

#[test]
fn distortion_below_minimum_has_no_lattice_point() {
    let grid = KernelGrid::new(two(), two(), 0.05).unwrap();
    let r = grid_search_cdp(&canonical(), 0.05, INF, &grid).unwrap();
    assert_eq!(r.value, None);
    assert_eq!(r.feasible, 0);
}

#[test]
fn halving_the_step_never_raises_the_minimum() {
    let coarse = KernelGrid::new(two(), two(), 0.1).unwrap();
    let fine = KernelGrid::new(two(), two(), 0.05).unwrap();
    for prob in [canonical(), skewed()] {
        for &d in &[0.15, 0.25, 0.35, INF] {
            for &p in &[0.0, 0.05, 0.2, INF] {
                let a = grid_search_scdp(&prob, d, p, &coarse).unwrap().value;
                let b = grid_search_scdp(&prob, d, p, &fine).unwrap().value;
                if let Some(a) = a {
                    assert!(b.unwrap() <= a + 1e-12, "{d} {p}");
                }
                let a = grid_search_cdp(&prob, d, p, &coarse).unwrap().value;
                let b = grid_search_cdp(&prob, d, p, &fine).unwrap().value;
                if let Some(a) = a {
                    assert!(b.unwrap() <= a + 1e-12, "{d} {p}");
                }
            }
        }
    }
}

#[test]
fn oracle_scdp_is_monotone_on_a_grid() {
    let grid = KernelGrid::new(two(), two(), 0.05).unwrap();
    let prob = skewed();
    let ds = [0.2, 0.25, 0.3, 0.35, 0.4];
    let ps = [0.0, 0.05, 0.1, 0.15, 0.2];
    let vals: Vec<Vec<Option<f64>>> = ds
        .iter()
        .map(|&d| ps.iter().map(|&p| grid_search_scdp(&prob, d, p, &grid).unwrap().value).collect())
        .collect();
    for i in 0..5 {
        for j in 0..5 {
            for i2 in 0..=i {
                for j2 in 0..=j {
                    if let (Some(hi), Some(lo)) = (vals[i][j], vals[i2][j2]) {
                        assert!(hi <= lo + 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn solver_sits_inside_the_oracle_sandwich() {
    let grid = KernelGrid::new(two(), two(), 0.05).unwrap();
    let prob = skewed();
    for &(d, p) in &[(0.3, 0.1), (0.3, 0.2), (0.28, 0.05), (0.4, 0.0)] {
        let c = solve_cdp(&prob, d, p).unwrap();
        let o = grid_search_cdp(&prob, d, p, &grid).unwrap();
        let v = c.value.unwrap();
        // an exact marginal match can miss every lattice point
        if let Some(ov) = o.value {
            assert!(v <= ov + 1e-9);
            assert!(ov - v <= o.slack);
        }
        assert!(v >= o.lower_bound.unwrap() - 1e-12);
        let s = solve_scdp(&prob, d, p).unwrap().value.unwrap();
        let os = grid_search_scdp(&prob, d, p, &grid).unwrap();
        if let Some(ov) = os.value {
            assert!(s <= ov + 1e-9);
            assert!(s >= ov - os.slack);
        }
        assert!(s >= os.lower_bound.unwrap() - 1e-12);
    }
}

#[test]
fn lattice_kernels_are_exactly_stochastic() {
    let grid = KernelGrid::new(two(), Alphabet::new(3).unwrap(), 0.1).unwrap();
    for row in grid.row_points() {
        let lk = LatticeKernel {
            counts: vec![row.clone(), row],
            denominator: grid.divisions(),
        };
        let ch: ExactChannel = lk.to_channel().unwrap();
        for r in ch.rows() {
            assert_eq!(r.mass().iter().cloned().sum::<num_rational::BigRational>(), exact(1, 1));
        }
    }
}

#[test]
fn oracle_size_guard() {
    let five = Alphabet::new(5).unwrap();
    let grid = KernelGrid::new(five, five, 0.05).unwrap();
    let src = MixtureSource::new(0.5, 0.5, ProbVector::uniform(five), ProbVector::point_mass(five, 0).unwrap()).unwrap();
    let prob = ProblemInstance::new(
        src,
        Channel::identity(five),
        DistortionMatrix::hamming(five),
        DivergenceKind::TotalVariation,
        DecisionRegion::from_symbols(five, &[0]).unwrap(),
    )
    .unwrap();
    assert!(matches!(grid_search_cdp(&prob, INF, INF, &grid), Err(CdpError::Size(_))));
}

#[test]
fn probe_reports_only_violations_beyond_slack() {
    let grid = KernelGrid::new(two(), two(), 0.05).unwrap();
    let single = probe_scdp_convexity(&skewed(), &[0.3], &[0.1], &grid).unwrap();
    assert!(single.violations.is_empty());
    assert_eq!(single.max_violation, None);
    let probe = probe_scdp_convexity(&skewed(), &[0.2, 0.25, 0.3, 0.35, 0.4], &[0.0, 0.05, 0.1, 0.15, 0.2], &grid).unwrap();
    assert!(probe.lipschitz_slack > 0.0);
    for v in &probe.violations {
        assert!(v.gap > probe.lipschitz_slack);
    }
}
