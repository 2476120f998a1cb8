use vigpm::experiments::{
    affine_box_problems, fit_rate, max_rate_ratio, oracle_solve_grid, rate_benchmark,
    rate_benchmark_start, rate_study, reproduce_example_41, reproduce_example_42, tail, RateLaw,
};
use vigpm::{SolveReport, Termination};

fn errors(report: &SolveReport) -> Vec<(usize, f64)> {
    report
        .iterates
        .iter()
        .map(|r| (r.k, r.dist_ref.unwrap()))
        .collect()
}

#[test]
fn enumeration_and_grid_oracles_agree() {
    for entry in affine_box_problems().unwrap() {
        let grid = oracle_solve_grid(&entry.problem, 1_000).unwrap();
        let gap = grid.distance(entry.reference());
        assert!(gap <= 1e-6, "{}: {gap:e}", entry.name);
    }
}

#[test]
fn synthetic_power_law_fit() {
    let samples: Vec<(usize, f64)> = (1..=100_000).map(|k| (k, (k as f64).powf(-0.4))).collect();
    for p in [0.25, 0.5, 0.75, 1.0] {
        let fit = fit_rate(&samples, p, 0.5).unwrap();
        assert!((fit.fitted_slope + 0.4).abs() <= 1e-6, "{fit:?}");
    }
}

#[test]
fn p_three_quarters_bound_constant_does_not_grow() {
    let (res, report) = rate_study(
        &rate_benchmark(),
        &rate_benchmark_start(),
        0.75,
        100_000,
        0.5,
    )
    .unwrap();
    assert!(res.fit.bound_constant.is_finite());
    let e = errors(&report);
    let constants: Vec<f64> = [0.5, 0.4, 0.3, 0.2, 0.1]
        .iter()
        .map(|f| max_rate_ratio(tail(&e, *f), 0.75).unwrap())
        .collect();
    for w in constants.windows(2) {
        assert!(w[1] <= w[0], "{constants:?}");
    }
}

#[test]
fn harmonic_rate_on_benchmark() {
    let (res, report) = rate_study(
        &rate_benchmark(),
        &rate_benchmark_start(),
        1.0,
        100_000,
        0.5,
    )
    .unwrap();
    assert_eq!(res.termination, Termination::MaxIters);
    let last = report.last();
    assert_eq!(last.k, 100_000);
    let bound = res.fit.bound_constant * RateLaw::SqrtLogOverK.eval(1.0, last.k);
    assert!(last.dist_ref.unwrap() <= bound);
    assert!(res.fit.fitted_slope <= -0.35, "{:?}", res.fit);
}

#[test]
fn tail_ratio_is_dominated_and_does_not_blow_up() {
    for p in [0.25, 0.5, 0.75, 1.0] {
        let (res, report) =
            rate_study(&rate_benchmark(), &rate_benchmark_start(), p, 100_000, 0.5).unwrap();
        let e = errors(&report);
        let law = res.fit.law;
        for &(k, err) in tail(&e, 0.5) {
            assert!(
                err <= res.fit.bound_constant * law.eval(p, k) * (1.0 + 1e-12),
                "p={p} k={k}"
            );
        }
        let late = max_rate_ratio(tail(&e, 0.1), p).unwrap();
        let wide = max_rate_ratio(tail(&e, 0.5), p).unwrap();
        assert!(late <= wide + 1e-9, "p={p}: {late} > {wide}");
    }
}

#[test]
fn all_exponents_converge_on_benchmark() {
    for p in [0.25, 0.5, 0.75, 1.0] {
        let (res, _) =
            rate_study(&rate_benchmark(), &rate_benchmark_start(), p, 100_000, 0.5).unwrap();
        assert!(res.final_error < 1e-2, "p={p}: {res:?}");
    }
}

// Stated expectation: larger p decays faster on the benchmark. On this linear
// problem the error behaves like exp(−c k^{1−p}), so smaller p is faster and
// this check fails.
#[test]
fn larger_exponent_gives_steeper_slope() {
    let slope = |p| {
        rate_study(&rate_benchmark(), &rate_benchmark_start(), p, 100_000, 0.5)
            .unwrap()
            .0
            .fit
            .fitted_slope
    };
    let (s75, s25) = (slope(0.75), slope(0.25));
    assert!(s75 < s25, "slope at p=0.75 is {s75}, at p=0.25 is {s25}");
}

#[test]
fn counter_examples() {
    let v = reproduce_example_41(0.5, 0.2, 10_000).unwrap();
    assert!(v.avoids_solution && v.final_odd > 0.24 && v.final_distance > 0.24);
    let v = reproduce_example_42(10).unwrap();
    assert!(v.pass && v.growth_bound_holds);
}
