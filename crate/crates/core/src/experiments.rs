//! Reference-solution oracles, counter-example reproductions, error-bound
//! sweeps and convergence-rate studies.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{affine_modulus, spectral_norm, DeclaredConstants, OperatorSpec, Scaling};
use crate::point::Point;
use crate::sets::ConvexSet;
use crate::solvers::{
    gpm_constant, gpm_unbounded, gpm_variable, DivergenceCause, StepsizeSchedule, StopCriteria,
    Termination,
};
use crate::vi::ViProblem;

/// Natural-map residual an enumerated active-set candidate must meet.
pub const ORACLE_TOL: f64 = 1e-10;
/// Number of 10× zoom rounds after the base grid scan.
pub const GRID_REFINE_ROUNDS: usize = 3;
/// Largest dimension accepted by the active-set enumeration oracle.
pub const ENUMERATION_MAX_DIM: usize = 8;

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Exact solution of the affine VI `F(x) = A x + b` on a finite box.
///
/// Enumerates all `3^n` active-set patterns (each coordinate at its lower
/// bound, at its upper bound, or free), solves the reduced linear system for
/// the free coordinates and accepts the first candidate whose natural-map
/// residual is at most [`ORACLE_TOL`].
pub fn oracle_solve_affine_box(a: &[Vec<f64>], b: &[f64], set: &ConvexSet) -> Result<Point> {
    let ConvexSet::Box { lower, upper } = set else {
        return Err(Error::Precondition("enumeration oracle needs a box".into()));
    };
    let n = b.len();
    if n > ENUMERATION_MAX_DIM {
        return Err(Error::Precondition(format!(
            "enumeration oracle supports n <= {ENUMERATION_MAX_DIM}, got {n}"
        )));
    }
    if !set.is_bounded() {
        return Err(Error::UnboundedRegion);
    }
    let problem = ViProblem::new(set.clone(), OperatorSpec::affine(a.to_vec(), b.to_vec())?)?;

    let mut pattern = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for slot in pattern.iter_mut() {
            *slot = (c % 3) as u8;
            c /= 3;
        }
        let mut x = vec![0.0; n];
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 2).collect();
        for i in 0..n {
            match pattern[i] {
                0 => x[i] = lower[i],
                1 => x[i] = upper[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            let m = free.len();
            let reduced = DMatrix::from_fn(m, m, |r, s| a[free[r]][free[s]]);
            let rhs = DVector::from_fn(m, |r, _| {
                let i = free[r];
                -b[i]
                    - (0..n)
                        .filter(|j| pattern[*j] != 2)
                        .map(|j| a[i][j] * x[j])
                        .sum::<f64>()
            });
            let Some(sol) = reduced.lu().solve(&rhs) else {
                continue;
            };
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        let Ok(candidate) = Point::new(x) else {
            continue;
        };
        if set.violation(&candidate)? > crate::MEMBERSHIP_TOL {
            continue;
        }
        let candidate = set.project(&candidate)?;
        if problem.natural_map(&candidate)?.norm() <= ORACLE_TOL {
            return Ok(candidate);
        }
    }
    Err(Error::OracleFailed(
        "no active-set pattern satisfies the VI; is A strongly monotone?".into(),
    ))
}

/// Grid-search solution for bounded problems of dimension 1 or 2.
///
/// Scans `resolution + 1` points per axis of the bounding box of `K`,
/// keeps the feasible point with the smallest `‖F_K^nat(x)‖`, then zooms in
/// [`GRID_REFINE_ROUNDS`] times, each round on a grid ten times finer that
/// spans one previous spacing on either side of the incumbent.
pub fn oracle_solve_grid(problem: &ViProblem, resolution: usize) -> Result<Point> {
    let n = problem.dim();
    if n > 2 {
        return Err(Error::Precondition(format!(
            "grid oracle supports n <= 2, got {n}"
        )));
    }
    if !problem.set.is_bounded() {
        return Err(Error::UnboundedRegion);
    }
    if resolution < 1 {
        return Err(Error::Precondition("resolution must be at least 1".into()));
    }
    let (lo, hi) = problem.set.bounding_box();
    let mut best = scan(problem, &lo, &hi, resolution, None)?
        .ok_or_else(|| Error::OracleFailed("no feasible grid point".into()))?;
    let mut spacing: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) / resolution as f64)
        .collect();
    for _ in 0..GRID_REFINE_ROUNDS {
        let wlo: Vec<f64> = (0..n)
            .map(|i| (best.0[i] - spacing[i]).max(lo[i]))
            .collect();
        let whi: Vec<f64> = (0..n)
            .map(|i| (best.0[i] + spacing[i]).min(hi[i]))
            .collect();
        if let Some(found) = scan(problem, &wlo, &whi, 20, Some(best.clone()))? {
            best = found;
        }
        for s in &mut spacing {
            *s /= 10.0;
        }
    }
    Point::new(best.0)
}

type Incumbent = (Vec<f64>, f64);

fn scan(
    problem: &ViProblem,
    lo: &[f64],
    hi: &[f64],
    res: usize,
    mut best: Option<Incumbent>,
) -> Result<Option<Incumbent>> {
    let n = lo.len();
    let coord = |i: usize, j: usize| {
        if j == res {
            hi[i]
        } else {
            lo[i] + (hi[i] - lo[i]) * j as f64 / res as f64
        }
    };
    let count = if n == 1 {
        res + 1
    } else {
        (res + 1) * (res + 1)
    };
    for idx in 0..count {
        let x: Vec<f64> = if n == 1 {
            vec![coord(0, idx)]
        } else {
            vec![coord(0, idx / (res + 1)), coord(1, idx % (res + 1))]
        };
        let p = Point::from_vec_unchecked(x);
        if !problem.set.contains(&p, 0.0)? {
            continue;
        }
        let r = match problem.natural_map(&p) {
            Ok(v) => v.norm(),
            Err(Error::OperatorOverflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| r < b.1) {
            best = Some((p.into_vec(), r));
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Counter-examples
// ---------------------------------------------------------------------------

/// `F(x) = ±2√|x|` on `[−1, 1]`, solution `0`.
pub fn sqrt_sign_problem() -> ViProblem {
    let op = OperatorSpec::sqrt_sign()
        .with_constants(DeclaredConstants {
            gamma: 1.0,
            lipschitz: None,
            value_bound: Some(2.0),
        })
        .expect("valid constants");
    ViProblem::new(ConvexSet::interval(-1.0, 1.0).expect("valid box"), op)
        .and_then(|p| p.with_reference(Point::zeros(1)))
        .expect("0 solves the problem")
}

/// `F(x) = 2^{|x|} x` on `R`, solution `0`.
pub fn exp_growth_problem() -> ViProblem {
    let op = OperatorSpec::exp_growth()
        .with_constants(DeclaredConstants::gamma(1.0))
        .expect("valid constants");
    ViProblem::new(ConvexSet::full_space(1).expect("valid set"), op)
        .and_then(|p| p.with_reference(Point::zeros(1)))
        .expect("0 solves the problem")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example41Verdict {
    pub lambda: f64,
    pub x1: f64,
    pub iterations: usize,
    /// `x_1 < x_3 < x_5 < …` with strict inequalities.
    pub odd_strictly_increasing: bool,
    /// Every odd iterate lies in `(0, λ²)`.
    pub odd_in_range: bool,
    /// Every even iterate lies in `(−λ², 0)`.
    pub even_in_range: bool,
    /// No iterate after the first enters `[−x_1/2, x_1/2]`.
    pub avoids_solution: bool,
    /// Smallest `k` at which any of the checks above fails.
    pub first_failure_k: Option<usize>,
    /// Smallest odd `k` with `x_k ≥ λ²` in floating point.
    pub saturated_at_k: Option<usize>,
    pub final_odd: f64,
    pub final_distance: f64,
    pub pass: bool,
    pub odd_iterates: Vec<f64>,
    pub even_iterates: Vec<f64>,
}

/// Runs the constant-stepsize method on [`sqrt_sign_problem`] from `x_1` with
/// `λ` and checks the oscillation pattern that keeps the iterates away from
/// the solution.
pub fn reproduce_example_41(lambda: f64, x1: f64, iters: usize) -> Result<Example41Verdict> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    let cap = lambda * lambda;
    if !(x1 > 0.0 && x1 < cap) {
        return Err(Error::Precondition(format!(
            "x1 must lie in (0, lambda^2) = (0, {cap}), got {x1}"
        )));
    }
    if iters < 1 {
        return Err(Error::Precondition("iters must be at least 1".into()));
    }
    let stop = StopCriteria::max_iters(iters)
        .with_step_tol(0.0)
        .with_trace_stride(1);
    let report = gpm_constant(&sqrt_sign_problem(), &Point::scalar(x1)?, lambda, &stop)?;
    let xs: Vec<(usize, f64)> = report.iterates.iter().map(|r| (r.k, r.x[0])).collect();

    let eps = x1 / 2.0;
    let mut odd_inc = true;
    let mut odd_range = true;
    let mut even_range = true;
    let mut avoids = true;
    let mut first_failure = None;
    let mut saturated = None;
    let mut prev_odd: Option<f64> = None;
    let mut odd = Vec::new();
    let mut even = Vec::new();
    for &(k, x) in &xs {
        let mut ok = true;
        if k % 2 == 1 {
            if prev_odd.is_some_and(|p| x <= p) {
                odd_inc = false;
                ok = false;
            }
            if !(x > 0.0 && x < cap) {
                odd_range = false;
                ok = false;
            }
            if x >= cap && saturated.is_none() {
                saturated = Some(k);
            }
            prev_odd = Some(x);
            odd.push(x);
        } else {
            if !(x > -cap && x < 0.0) {
                even_range = false;
                ok = false;
            }
            even.push(x);
        }
        if k > 1 && x.abs() <= eps {
            avoids = false;
            ok = false;
        }
        if !ok && first_failure.is_none() {
            first_failure = Some(k);
        }
    }
    Ok(Example41Verdict {
        lambda,
        x1,
        iterations: report.iterations,
        odd_strictly_increasing: odd_inc,
        odd_in_range: odd_range,
        even_in_range: even_range,
        avoids_solution: avoids,
        first_failure_k: first_failure,
        saturated_at_k: saturated,
        final_odd: *odd.last().expect("x_1 is odd"),
        final_distance: report.last().dist_ref.expect("reference is set"),
        pass: first_failure.is_none(),
        odd_iterates: odd,
        even_iterates: even,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example42Verdict {
    pub iterations: usize,
    pub iterates: Vec<f64>,
    /// `|x_k| ≥ 2k` on every recorded iterate.
    pub growth_bound_holds: bool,
    pub termination: Termination,
    /// `k` at which evaluating `F(x_k)` overflowed.
    pub sentinel_k: Option<usize>,
    pub pass: bool,
}

/// Runs the diminishing-stepsize method `λ_k = 1/k` on [`exp_growth_problem`]
/// from `x_1 = 2` and checks the `|x_k| ≥ 2k` growth up to divergence.
pub fn reproduce_example_42(iters: usize) -> Result<Example42Verdict> {
    if iters < 3 {
        return Err(Error::Precondition(format!(
            "iters must be at least 3, got {iters}"
        )));
    }
    let stop = StopCriteria::max_iters(iters).with_trace_stride(1);
    let report = gpm_variable(
        &exp_growth_problem(),
        &Point::scalar(2.0)?,
        &StepsizeSchedule::Harmonic,
        &stop,
    )?;
    let iterates: Vec<f64> = report.iterates.iter().map(|r| r.x[0]).collect();
    let growth = report
        .iterates
        .iter()
        .all(|r| r.x[0].abs() >= 2.0 * r.k as f64);
    let sentinel_k = match report.termination {
        Termination::Diverged {
            cause: DivergenceCause::OperatorOverflow,
        } => Some(report.iterations),
        _ => None,
    };
    Ok(Example42Verdict {
        iterations: report.iterations,
        iterates,
        growth_bound_holds: growth,
        termination: report.termination,
        sentinel_k,
        pass: growth && report.termination.is_diverged(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionVerdict {
    pub iterations: usize,
    pub restriction_radius: f64,
    /// The restricted interval `[x_1 − r, x_1 + r]`.
    pub restricted_set: (f64, f64),
    pub termination: Termination,
    pub final_error: f64,
    pub pass: bool,
}

/// The growth example again, but solved on `R ∩ B(2, ‖F(2)‖)`.
/// Passes when the final distance to `0` is below `1e-2`.
pub fn reproduce_example_42_restricted(iters: usize) -> Result<RestrictionVerdict> {
    let stop = StopCriteria::max_iters(iters).with_step_tol(0.0);
    let x1 = Point::scalar(2.0)?;
    let report = gpm_unbounded(
        &exp_growth_problem(),
        &x1,
        1.0,
        &StepsizeSchedule::Harmonic,
        &stop,
    )?;
    let radius = report.restriction_radius.unwrap_or(0.0);
    let final_error = report.final_point.norm();
    Ok(RestrictionVerdict {
        iterations: report.iterations,
        restriction_radius: radius,
        restricted_set: (2.0 - radius, 2.0 + radius),
        termination: report.termination,
        final_error,
        pass: final_error < 1e-2,
    })
}

// ---------------------------------------------------------------------------
// Problem catalog and error-bound sweeps
// ---------------------------------------------------------------------------

/// A problem with a trusted solution and trusted constants.
#[derive(Debug, Clone)]
pub struct CatalogProblem {
    pub name: &'static str,
    pub problem: ViProblem,
    /// Strong pseudomonotonicity modulus (a strong monotonicity modulus when
    /// `strongly_monotone` is set).
    pub gamma: f64,
    pub lipschitz: Option<f64>,
    pub strongly_monotone: bool,
}

impl CatalogProblem {
    pub fn reference(&self) -> &Point {
        self.problem
            .reference_solution
            .as_ref()
            .expect("catalog problems carry a reference")
    }
}

fn affine_entry(
    name: &'static str,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    set: ConvexSet,
) -> Result<CatalogProblem> {
    let gamma = affine_modulus(&a);
    let lipschitz = spectral_norm(&a);
    let x_star = oracle_solve_affine_box(&a, &b, &set)?;
    let op = OperatorSpec::affine(a, b)?.with_constants(DeclaredConstants {
        gamma,
        lipschitz: Some(lipschitz),
        value_bound: None,
    })?;
    Ok(CatalogProblem {
        name,
        problem: ViProblem::new(set, op)?.with_reference(x_star)?,
        gamma,
        lipschitz: Some(lipschitz),
        strongly_monotone: true,
    })
}

fn scaled_entry(
    name: &'static str,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    scaling: Scaling,
    set: ConvexSet,
) -> Result<CatalogProblem> {
    // c(x) > 0 leaves the solution set unchanged.
    let x_star = oracle_solve_affine_box(&a, &b, &set)?;
    let gamma = scaling.lower_bound() * affine_modulus(&a);
    let op = OperatorSpec::scaled_affine(a, b, scaling)?
        .with_constants(DeclaredConstants::gamma(gamma))?;
    Ok(CatalogProblem {
        name,
        problem: ViProblem::new(set, op)?.with_reference(x_star)?,
        gamma,
        lipschitz: None,
        strongly_monotone: false,
    })
}

/// The affine box problems used to cross-check the two oracles.
pub fn affine_box_problems() -> Result<Vec<CatalogProblem>> {
    Ok(vec![
        affine_entry(
            "affine_1d_upper",
            vec![vec![1.0]],
            vec![-3.0],
            ConvexSet::interval(-1.0, 1.0)?,
        )?,
        affine_entry(
            "affine_1d_interior",
            vec![vec![2.5]],
            vec![0.7],
            ConvexSet::interval(-1.0, 1.0)?,
        )?,
        affine_entry(
            "affine_1d_lower",
            vec![vec![0.5]],
            vec![4.0],
            ConvexSet::interval(-2.0, 3.0)?,
        )?,
        affine_entry(
            "affine_2d_origin",
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            ConvexSet::cube(2, -1.0, 1.0)?,
        )?,
        affine_entry(
            "affine_2d_interior",
            vec![vec![2.0, 0.0], vec![0.0, 2.0]],
            vec![-1.0, -1.0],
            ConvexSet::cube(2, 0.0, 10.0)?,
        )?,
        affine_entry(
            "affine_2d_skew_edge",
            vec![vec![2.0, 1.0], vec![-1.0, 2.0]],
            vec![-3.0, 1.0],
            ConvexSet::cube(2, -1.0, 1.0)?,
        )?,
        affine_entry(
            "affine_2d_corner",
            vec![vec![3.0, 1.0], vec![1.0, 2.0]],
            vec![4.0, -5.0],
            ConvexSet::boxed(vec![0.0, -1.0], vec![1.0, 2.0])?,
        )?,
        affine_entry(
            "affine_2d_coupled",
            vec![vec![1.5, 0.5], vec![0.5, 1.0]],
            vec![-0.25, 0.5],
            ConvexSet::cube(2, -1.0, 1.0)?,
        )?,
    ])
}

/// Every problem with an oracle-certified solution and known constants.
pub fn catalog() -> Result<Vec<CatalogProblem>> {
    let mut out = Vec::new();

    let sqrt = sqrt_sign_problem();
    let x_star = oracle_solve_grid(&sqrt, 10_000)?;
    out.push(CatalogProblem {
        name: "sqrt_sign_box",
        problem: ViProblem::new(sqrt.set, sqrt.operator)?.with_reference(x_star)?,
        gamma: 1.0,
        lipschitz: None,
        strongly_monotone: true,
    });

    // The growth operator on the ball restriction [-6, 10]: 2^|x| (1 + |x| ln 2)
    // bounds F' there, and is largest at x = 10.
    let exp_set = ConvexSet::interval(-6.0, 10.0)?;
    let exp_l = 2f64.powi(10) * (1.0 + 10.0 * std::f64::consts::LN_2);
    let exp_op = OperatorSpec::exp_growth().with_constants(DeclaredConstants {
        gamma: 1.0,
        lipschitz: Some(exp_l),
        value_bound: None,
    })?;
    let exp_problem = ViProblem::new(exp_set, exp_op)?;
    let x_star = oracle_solve_grid(&exp_problem, 16_000)?;
    out.push(CatalogProblem {
        name: "exp_growth_restricted",
        problem: exp_problem.with_reference(x_star)?,
        gamma: 1.0,
        lipschitz: Some(exp_l),
        strongly_monotone: true,
    });

    out.extend(affine_box_problems()?);

    out.push(scaled_entry(
        "scaled_affine_1d_sin",
        vec![vec![1.0]],
        vec![0.5],
        Scaling::TwoPlusSinFirst,
        ConvexSet::interval(-1.0, 1.0)?,
    )?);
    out.push(scaled_entry(
        "scaled_affine_2d_norm",
        vec![vec![2.0, 0.5], vec![0.5, 1.0]],
        vec![-1.0, 2.0],
        Scaling::OnePlusNormSq,
        ConvexSet::cube(2, -1.0, 1.0)?,
    )?);
    out.push(scaled_entry(
        "scaled_affine_2d_const",
        vec![vec![1.0, -0.5], vec![0.5, 1.0]],
        vec![0.3, -0.2],
        Scaling::Constant { c: 3.0 },
        ConvexSet::cube(2, -1.0, 1.0)?,
    )?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub name: String,
    pub points: usize,
    /// Largest `distance − radius` seen; non-positive means every bound held.
    pub max_violation_normal: f64,
    pub max_violation_interior: f64,
    pub max_violation_natural: Option<f64>,
    /// Evaluations with `distance > radius + 1e-9`.
    pub violations: usize,
}

/// Slack allowed between the certified radius and the true distance.
pub const BOUND_SLACK: f64 = 1e-9;

/// Evaluates the three error bounds at `points` random points per problem.
///
/// Normal-map points are drawn from the bounding box of `K` enlarged by its
/// own width on every side; natural-map and interior points are their
/// projections onto `K`.
pub fn verify_bounds(
    problems: &[CatalogProblem],
    points: usize,
    seed: u64,
) -> Result<Vec<BoundSweep>> {
    let mut out = Vec::with_capacity(problems.len());
    for (idx, entry) in problems.iter().enumerate() {
        let prob = &entry.problem;
        let x_star = entry.reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let (lo, hi) = prob.set.bounding_box();
        let mut sweep = BoundSweep {
            name: entry.name.to_string(),
            points,
            max_violation_normal: f64::NEG_INFINITY,
            max_violation_interior: f64::NEG_INFINITY,
            max_violation_natural: None,
            violations: 0,
        };
        for _ in 0..points {
            let x = Point::new(
                lo.iter()
                    .zip(&hi)
                    .map(|(l, h)| {
                        let w = h - l;
                        l - w + 3.0 * w * rng.random::<f64>()
                    })
                    .collect(),
            )?;
            let normal = prob.error_bound_normal(&x, Some(entry.gamma))?;
            let v = normal.anchor.distance(x_star) - normal.radius;
            sweep.max_violation_normal = sweep.max_violation_normal.max(v);
            sweep.violations += usize::from(v > BOUND_SLACK);

            let inside = prob.set.project(&x)?;
            let interior = prob.error_bound_interior(&inside, Some(entry.gamma))?;
            let v = inside.distance(x_star) - interior.radius;
            sweep.max_violation_interior = sweep.max_violation_interior.max(v);
            sweep.violations += usize::from(v > BOUND_SLACK);

            if let (true, Some(l)) = (entry.strongly_monotone, entry.lipschitz) {
                let natural = prob.error_bound_natural(&inside, Some(entry.gamma), Some(l))?;
                let v = inside.distance(x_star) - natural.radius;
                sweep.max_violation_natural =
                    Some(sweep.max_violation_natural.map_or(v, |m: f64| m.max(v)));
                sweep.violations += usize::from(v > BOUND_SLACK);
            }
        }
        out.push(sweep);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Convergence rates
// ---------------------------------------------------------------------------

/// Proven decay of `‖x_k − x*‖` under `λ_k = 1/k^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateLaw {
    /// `√(ln k / k)`, for `p = 1`.
    SqrtLogOverK,
    /// `k^{1/2 − p}`, for `1/2 < p < 1`.
    PowerHalfMinusP,
    /// `k^{−p/2}`, for `0 < p ≤ 1/2`.
    PowerMinusHalfP,
}

impl RateLaw {
    pub fn for_exponent(p: f64) -> Result<RateLaw> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Precondition(format!(
                "p must lie in (0, 1], got {p}"
            )));
        }
        Ok(if p == 1.0 {
            RateLaw::SqrtLogOverK
        } else if p > 0.5 {
            RateLaw::PowerHalfMinusP
        } else {
            RateLaw::PowerMinusHalfP
        })
    }

    /// The bound expression, without constants.
    pub fn eval(self, p: f64, k: usize) -> f64 {
        let k = k as f64;
        match self {
            RateLaw::SqrtLogOverK => (k.ln() / k).sqrt(),
            RateLaw::PowerHalfMinusP => k.powf(0.5 - p),
            RateLaw::PowerMinusHalfP => k.powf(-p / 2.0),
        }
    }
}

/// Minimum number of tail samples for a fit.
pub const MIN_TAIL_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub p: f64,
    pub law: RateLaw,
    /// Least-squares slope of `ln error` against `ln k` over the tail.
    pub fitted_slope: f64,
    /// `max error_k / rate(k)` over the tail.
    pub bound_constant: f64,
    pub tail_start_k: usize,
    pub tail_end_k: usize,
    pub tail_samples: usize,
}

/// Samples from the last `fraction` of the run by iteration index, i.e. those
/// with `k ≥ (1 − fraction) · k_last`. Windows are defined on `k` rather than
/// on the record count so thinned traces give the same window.
pub fn tail(samples: &[(usize, f64)], fraction: f64) -> &[(usize, f64)] {
    let Some(&(k_last, _)) = samples.last() else {
        return samples;
    };
    let start = ((1.0 - fraction) * k_last as f64).ceil() as usize;
    let first = samples.partition_point(|&(k, _)| k < start);
    &samples[first.min(samples.len() - 1)..]
}

/// `max error_k / rate(k)` over `samples`, skipping indices where the rate
/// expression vanishes (`k = 1` for `p = 1`).
pub fn max_rate_ratio(samples: &[(usize, f64)], p: f64) -> Result<f64> {
    let law = RateLaw::for_exponent(p)?;
    Ok(samples
        .iter()
        .filter_map(|&(k, e)| {
            let r = law.eval(p, k);
            (r > 0.0).then(|| e / r)
        })
        .fold(0.0, f64::max))
}

/// Fits the tail of an `(k, error)` trace.
pub fn fit_rate(samples: &[(usize, f64)], p: f64, tail_fraction: f64) -> Result<RateFit> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::Precondition(format!(
            "tail_fraction must lie in (0, 1), got {tail_fraction}"
        )));
    }
    let law = RateLaw::for_exponent(p)?;
    let window = tail(samples, tail_fraction);
    if window.len() < MIN_TAIL_SAMPLES {
        return Err(Error::Precondition(format!(
            "tail holds {} samples, need at least {MIN_TAIL_SAMPLES}",
            window.len()
        )));
    }
    if let Some(&(k, _)) = window.iter().find(|(_, e)| *e == 0.0) {
        return Err(Error::ConvergedExactly { k });
    }
    let pts: Vec<(f64, f64)> = window
        .iter()
        .map(|&(k, e)| ((k as f64).ln(), e.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition(
            "tail spans a single iteration index".into(),
        ));
    }
    Ok(RateFit {
        p,
        law,
        fitted_slope: sxy / sxx,
        bound_constant: max_rate_ratio(window, p)?,
        tail_start_k: window[0].0,
        tail_end_k: window[window.len() - 1].0,
        tail_samples: window.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyResult {
    #[serde(flatten)]
    pub fit: RateFit,
    pub iterations: usize,
    pub termination: Termination,
    pub final_error: f64,
}

/// `F(x) = x` on `[−1, 1]²`, solution `0`, with `γ = L = 1` and `M = √2`,
/// already rescaled to modulus `1/2`.
pub fn rate_benchmark() -> ViProblem {
    let op = OperatorSpec::scaled_identity(1.0, vec![0.0, 0.0])
        .and_then(|op| {
            op.with_constants(DeclaredConstants {
                gamma: 1.0,
                lipschitz: Some(1.0),
                value_bound: Some(2f64.sqrt()),
            })
        })
        .and_then(|op| op.rescale_to_half_modulus(1.0))
        .expect("valid benchmark operator");
    ViProblem::new(ConvexSet::cube(2, -1.0, 1.0).expect("valid box"), op)
        .and_then(|p| p.with_reference(Point::zeros(2)))
        .expect("0 solves the benchmark")
}

/// Start point of the rate benchmark.
pub fn rate_benchmark_start() -> Point {
    Point::from_vec_unchecked(vec![1.0, 1.0])
}

/// Runs the diminishing-stepsize method with `λ_k = 1/k^p` and fits the error
/// trace. The problem must carry a reference solution, have bounded `K` and
/// an operator already rescaled to declared modulus `1/2`.
pub fn rate_study(
    problem: &ViProblem,
    x1: &Point,
    p: f64,
    iters: usize,
    tail_fraction: f64,
) -> Result<(RateStudyResult, crate::solvers::SolveReport)> {
    if problem.reference_solution.is_none() {
        return Err(Error::Precondition(
            "rate study needs a reference solution".into(),
        ));
    }
    if !problem.set.is_bounded() {
        return Err(Error::UnboundedRegion);
    }
    if problem.operator.declared_gamma() != Some(0.5) {
        return Err(Error::Precondition(
            "operator must be rescaled to modulus 1/2".into(),
        ));
    }
    let stop = StopCriteria::max_iters(iters).with_step_tol(0.0);
    let report = gpm_variable(problem, x1, &StepsizeSchedule::p_series(p)?, &stop)?;
    let samples: Vec<(usize, f64)> = report
        .iterates
        .iter()
        .map(|r| (r.k, r.dist_ref.expect("reference is set")))
        .collect();
    let fit = fit_rate(&samples, p, tail_fraction)?;
    let result = RateStudyResult {
        fit,
        iterations: report.iterations,
        termination: report.termination,
        final_error: report.last().dist_ref.expect("reference is set"),
    };
    Ok((result, report))
}

/// Stepwise check of `a_{k+1} ≤ (1 − λ_k) a_k + M² λ_k²` with
/// `a_k = ‖x_k − x*‖²`, on consecutive trace records only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `a_{k+1} − ((1 − λ_k) a_k + M² λ_k²)`.
    pub max_excess: f64,
}

pub const DESCENT_SLACK: f64 = 1e-9;

pub fn check_descent_inequality(
    report: &crate::solvers::SolveReport,
    value_bound: f64,
) -> Result<DescentCheck> {
    let mut out = DescentCheck {
        checked: 0,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
    };
    for pair in report.iterates.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        if next.k != cur.k + 1 {
            continue;
        }
        let (Some(d), Some(d_next)) = (cur.dist_ref, next.dist_ref) else {
            return Err(Error::Precondition(
                "descent check needs a reference solution".into(),
            ));
        };
        let bound =
            (1.0 - cur.lambda) * d * d + value_bound * value_bound * cur.lambda * cur.lambda;
        let excess = d_next * d_next - bound;
        out.checked += 1;
        out.max_excess = out.max_excess.max(excess);
        out.violations += usize::from(excess > DESCENT_SLACK);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Projection property suite
// ---------------------------------------------------------------------------

/// Exact projection onto `Box ∩ Ball` in one or two dimensions.
///
/// The minimizer is either the box projection, the ball projection, or lies
/// on a box face; on a face the problem reduces to clamping one coordinate to
/// the intersection of the face edge with the ball chord. The closest
/// feasible candidate wins.
pub fn box_ball_projection_oracle(
    lower: &[f64],
    upper: &[f64],
    center: &Point,
    radius: f64,
    x: &Point,
) -> Result<Point> {
    let n = x.dim();
    if n > 2 || lower.len() != n || upper.len() != n || center.dim() != n {
        return Err(Error::Precondition(
            "box-ball oracle supports matching dimensions up to 2".into(),
        ));
    }
    let set = ConvexSet::intersection(vec![
        ConvexSet::boxed(lower.to_vec(), upper.to_vec())?,
        ConvexSet::ball(center.clone(), radius)?,
    ])?;
    let boxed = ConvexSet::boxed(lower.to_vec(), upper.to_vec())?;
    let ball = ConvexSet::ball(center.clone(), radius)?;
    let mut candidates = vec![boxed.project(x)?, ball.project(x)?];
    if n == 1 {
        let lo = lower[0].max(center[0] - radius);
        let hi = upper[0].min(center[0] + radius);
        candidates.push(Point::scalar(x[0].clamp(lo, hi.max(lo)))?);
    } else {
        for fixed in 0..2 {
            let free = 1 - fixed;
            for bound in [lower[fixed], upper[fixed]] {
                let off = bound - center[fixed];
                let h2 = radius * radius - off * off;
                if h2 < 0.0 {
                    continue;
                }
                let h = h2.sqrt();
                let lo = lower[free].max(center[free] - h);
                let hi = upper[free].min(center[free] + h);
                if lo > hi {
                    continue;
                }
                let mut c = [0.0; 2];
                c[fixed] = bound;
                c[free] = x[free].clamp(lo, hi);
                candidates.push(Point::new(c.to_vec())?);
            }
        }
    }
    candidates
        .into_iter()
        .filter(|c| set.contains(c, 1e-12).unwrap_or(false))
        .min_by(|a, b| a.distance(x).total_cmp(&b.distance(x)))
        .ok_or_else(|| {
            Error::OracleFailed("no feasible candidate; is the intersection empty?".into())
        })
}

/// Outcome of the randomized projection checks for one set variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSuiteResult {
    pub variant: String,
    pub instances: usize,
    /// `max ‖P(P(x)) − P(x)‖`.
    pub idempotence: f64,
    /// `max (‖P(x) − P(y)‖ − ‖x − y‖)`.
    pub expansion: f64,
    /// `max ⟨x − P(x), y − P(x)⟩` over feasible `y`.
    pub variational: f64,
    /// `max violation(P(x))`.
    pub membership: f64,
    /// `max ‖P(x) − oracle(x)‖`, intersections only.
    pub oracle_gap: Option<f64>,
    pub pass: bool,
}

pub const IDEMPOTENCE_TOL: f64 = 1e-12;
pub const EXPANSION_TOL: f64 = 1e-10;
pub const VARIATIONAL_TOL: f64 = 1e-10;
/// Variational and idempotence slack for Dykstra projections (`10 τ_dyk`).
pub const DYKSTRA_CHECK_TOL: f64 = 10.0 * crate::sets::DYKSTRA_TOL;
pub const PROJECTION_MEMBERSHIP_TOL: f64 = 1e-8;
pub const PROJECTION_ORACLE_TOL: f64 = 1e-4;

/// Set variants exercised by [`projection_suite`].
pub const PROJECTION_VARIANTS: [&str; 6] = [
    "box",
    "ball",
    "halfspace",
    "simplex",
    "full_space",
    "box_ball",
];

fn random_set(variant: &str, rng: &mut ChaCha8Rng) -> Result<ConvexSet> {
    let n = if variant == "box_ball" {
        rng.random_range(1..=2)
    } else {
        rng.random_range(1..=4)
    };
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    match variant {
        "box" => {
            let mut lower = Vec::with_capacity(n);
            let mut upper = Vec::with_capacity(n);
            for _ in 0..n {
                let a = uniform(-3.0, 3.0);
                let w = uniform(0.0, 3.0);
                lower.push(a);
                upper.push(a + w);
            }
            ConvexSet::boxed(lower, upper)
        }
        "ball" => {
            let c = (0..n).map(|_| uniform(-2.0, 2.0)).collect();
            ConvexSet::ball(Point::new(c)?, uniform(0.1, 3.0))
        }
        "halfspace" => {
            let mut a: Vec<f64> = (0..n).map(|_| uniform(-1.0, 1.0)).collect();
            if a.iter().all(|v| v.abs() < 1e-3) {
                a[0] = 1.0;
            }
            ConvexSet::halfspace(Point::new(a)?, uniform(-2.0, 2.0))
        }
        "simplex" => ConvexSet::simplex(n),
        "full_space" => ConvexSet::full_space(n),
        "box_ball" => {
            let mut lower = Vec::with_capacity(n);
            let mut upper = Vec::with_capacity(n);
            let mut center = Vec::with_capacity(n);
            for _ in 0..n {
                let a = uniform(-3.0, 3.0);
                let w = uniform(0.2, 3.0);
                lower.push(a);
                upper.push(a + w);
                center.push(uniform(a, a + w));
            }
            ConvexSet::intersection(vec![
                ConvexSet::boxed(lower, upper)?,
                ConvexSet::ball(Point::new(center)?, uniform(0.1, 3.0))?,
            ])
        }
        other => Err(Error::Precondition(format!(
            "unknown set variant {other:?}"
        ))),
    }
}

/// Checks idempotence, non-expansiveness, the variational inequality
/// `⟨x − P(x), y − P(x)⟩ ≤ 0` and membership of `P(x)` on `instances`
/// random sets and points of one variant. Intersections are additionally
/// compared with [`box_ball_projection_oracle`].
pub fn projection_suite(
    variant: &str,
    instances: usize,
    seed: u64,
) -> Result<ProjectionSuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intersection = variant == "box_ball";
    let mut r = ProjectionSuiteResult {
        variant: variant.to_string(),
        instances,
        idempotence: 0.0,
        expansion: f64::NEG_INFINITY,
        variational: f64::NEG_INFINITY,
        membership: 0.0,
        oracle_gap: intersection.then_some(0.0),
        pass: false,
    };
    for _ in 0..instances {
        let set = random_set(variant, &mut rng)?;
        let n = set.dim();
        let mut draw = || {
            Point::from_vec_unchecked((0..n).map(|_| -6.0 + 12.0 * rng.random::<f64>()).collect())
        };
        let (x, y, z) = (draw(), draw(), draw());
        let px = set.project(&x)?;
        let py = set.project(&y)?;
        let feasible = set.project(&z)?;

        r.idempotence = r.idempotence.max(set.project(&px)?.distance(&px));
        r.expansion = r.expansion.max(px.distance(&py) - x.distance(&y));
        r.variational = r.variational.max(x.sub(&px).dot(&feasible.sub(&px)));
        r.membership = r.membership.max(set.violation(&px)?);
        if let ConvexSet::Intersection { members } = &set {
            let (ConvexSet::Box { lower, upper }, ConvexSet::Ball { center, radius }) =
                (&members[0], &members[1])
            else {
                unreachable!("box_ball variant builds a box and a ball")
            };
            let exact = box_ball_projection_oracle(lower, upper, center, *radius, &x)?;
            r.oracle_gap = r.oracle_gap.map(|g| g.max(exact.distance(&px)));
        }
    }
    let (idem_tol, var_tol) = if intersection {
        (DYKSTRA_CHECK_TOL, DYKSTRA_CHECK_TOL)
    } else {
        (IDEMPOTENCE_TOL, VARIATIONAL_TOL)
    };
    r.pass = r.idempotence <= idem_tol
        && r.expansion <= EXPANSION_TOL
        && r.variational <= var_tol
        && r.membership <= PROJECTION_MEMBERSHIP_TOL
        && r.oracle_gap.is_none_or(|g| g <= PROJECTION_ORACLE_TOL);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let x = oracle_solve_affine_box(
            &[vec![1.0]],
            &[-3.0],
            &ConvexSet::interval(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(x, p(&[1.0]));
        let x = oracle_solve_affine_box(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[0.0, 0.0],
            &ConvexSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(x, p(&[0.0, 0.0]));
        let x = oracle_solve_affine_box(
            &[vec![2.0, 0.0], vec![0.0, 2.0]],
            &[-1.0, -1.0],
            &ConvexSet::cube(2, 0.0, 10.0).unwrap(),
        )
        .unwrap();
        assert_eq!(x, p(&[0.5, 0.5]));
    }

    #[test]
    fn enumeration_rejects_bad_input() {
        // F(x) = -x on [-1, 1] has solutions at both ends and at 0, so the
        // oracle still finds one; a non-box set is refused outright.
        assert!(
            oracle_solve_affine_box(&[vec![1.0]], &[0.0], &ConvexSet::full_space(1).unwrap())
                .is_err()
        );
        let big = ConvexSet::cube(9, -1.0, 1.0).unwrap();
        let a = vec![vec![0.0; 9]; 9];
        assert!(oracle_solve_affine_box(&a, &[0.0; 9], &big).is_err());
    }

    #[test]
    fn grid_examples() {
        let x = oracle_solve_grid(&sqrt_sign_problem(), 10_000).unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-8);

        let exp = ViProblem::new(
            ConvexSet::interval(-6.0, 10.0).unwrap(),
            OperatorSpec::exp_growth(),
        )
        .unwrap();
        let x = oracle_solve_grid(&exp, 16_000).unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-8);

        let shifted = ViProblem::new(
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            OperatorSpec::scaled_identity(1.0, vec![-3.0]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            oracle_solve_grid(&shifted, 10_000).unwrap()[0],
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn grid_rejects_unbounded_or_high_dimension() {
        assert_eq!(
            oracle_solve_grid(&exp_growth_problem(), 10),
            Err(Error::UnboundedRegion)
        );
        let p3 = ViProblem::new(
            ConvexSet::cube(3, -1.0, 1.0).unwrap(),
            OperatorSpec::scaled_identity(1.0, vec![0.0; 3]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            oracle_solve_grid(&p3, 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn example_41_structure_holds_over_first_iterations() {
        let v = reproduce_example_41(0.5, 0.2, 4).unwrap();
        assert!(v.pass, "{v:?}");
        let x2 = 0.2 - 0.2f64.sqrt();
        assert_eq!(v.even_iterates[0], x2);
        assert_eq!(v.odd_iterates[1], x2 + (-x2).sqrt());
        assert_abs_diff_eq!(v.odd_iterates[1], 0.249992, epsilon = 1e-6);
        assert!(v.odd_iterates[1] > 0.2);
    }

    #[test]
    fn example_41_long_run_stays_away_from_solution() {
        for (lambda, x1) in [(0.5, 0.2), (0.9, 0.5)] {
            let v = reproduce_example_41(lambda, x1, 10_000).unwrap();
            assert!(v.avoids_solution);
            assert!(v.final_distance > 0.9 * lambda * lambda);
            assert!(v.odd_iterates.iter().all(|x| *x > 0.0));
            assert!(v.even_iterates.iter().all(|x| *x < 0.0));
            // Floating point reaches the 2-cycle ±λ² within a handful of steps.
            assert!(
                v.saturated_at_k.is_some_and(|k| k < 20),
                "{:?}",
                v.saturated_at_k
            );
        }
    }

    #[test]
    fn example_41_preconditions() {
        assert!(matches!(
            reproduce_example_41(0.5, 0.3, 10),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            reproduce_example_41(1.2, 0.3, 10),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            reproduce_example_41(0.5, 0.0, 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn example_42_divergence() {
        let v = reproduce_example_42(10).unwrap();
        assert_eq!(&v.iterates[..3], &[2.0, -6.0, 186.0]);
        assert_eq!(v.sentinel_k, Some(4));
        assert!(v.pass);

        let v = reproduce_example_42(3).unwrap();
        assert_eq!(v.iterates, vec![2.0, -6.0, 186.0]);
        assert!(v.termination.is_diverged());
        assert!(v.pass);

        assert!(reproduce_example_42(2).is_err());
    }

    #[test]
    fn example_42_restricted_converges() {
        let v = reproduce_example_42_restricted(100_000).unwrap();
        assert_eq!(v.restricted_set, (-6.0, 10.0));
        assert!(v.final_error < 1e-2);
        assert!(v.pass);
    }

    #[test]
    fn fitting_a_known_power_law() {
        let samples: Vec<(usize, f64)> = (1..=1000).map(|k| (k, (k as f64).powf(-0.4))).collect();
        for p in [0.25, 0.75, 1.0] {
            let fit = fit_rate(&samples, p, 0.5).unwrap();
            assert_abs_diff_eq!(fit.fitted_slope, -0.4, epsilon = 1e-6);
        }
    }

    #[test]
    fn fitting_rejects_degenerate_tails() {
        let short: Vec<(usize, f64)> = (1..=10).map(|k| (k, 1.0 / k as f64)).collect();
        assert!(matches!(
            fit_rate(&short, 1.0, 0.5),
            Err(Error::Precondition(_))
        ));
        let zeros: Vec<(usize, f64)> = (1..=100)
            .map(|k| (k, if k > 60 { 0.0 } else { 1.0 }))
            .collect();
        assert_eq!(
            fit_rate(&zeros, 1.0, 0.5),
            Err(Error::ConvergedExactly { k: 61 })
        );
    }

    #[test]
    fn box_ball_oracle_matches_grid_example() {
        let x = box_ball_projection_oracle(
            &[0.0, 0.0],
            &[2.0, 2.0],
            &p(&[2.0, 0.0]),
            1.0,
            &p(&[0.0, 0.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-12);
        // Corner of the box inside the ball.
        let x = box_ball_projection_oracle(
            &[0.0, 0.0],
            &[1.0, 1.0],
            &p(&[0.5, 0.5]),
            2.0,
            &p(&[3.0, 3.0]),
        )
        .unwrap();
        assert_eq!(x, p(&[1.0, 1.0]));
        // Circle crossing a face.
        let x = box_ball_projection_oracle(
            &[-5.0, 0.0],
            &[5.0, 5.0],
            &p(&[0.0, 0.0]),
            1.0,
            &p(&[0.0, -3.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(x.norm(), 0.0, epsilon = 1e-12);
        let x = box_ball_projection_oracle(
            &[-5.0, 0.5],
            &[5.0, 5.0],
            &p(&[0.0, 0.0]),
            1.0,
            &p(&[3.0, -3.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(x[0], 0.75f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn projection_suite_small_runs_pass() {
        for (i, variant) in PROJECTION_VARIANTS.iter().enumerate() {
            let r = projection_suite(variant, 300, i as u64).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(projection_suite("torus", 1, 0).is_err());
    }

    #[test]
    fn rate_laws() {
        assert_eq!(RateLaw::for_exponent(1.0).unwrap(), RateLaw::SqrtLogOverK);
        assert_eq!(
            RateLaw::for_exponent(0.75).unwrap(),
            RateLaw::PowerHalfMinusP
        );
        assert_eq!(
            RateLaw::for_exponent(0.5).unwrap(),
            RateLaw::PowerMinusHalfP
        );
        assert_eq!(
            RateLaw::for_exponent(0.25).unwrap(),
            RateLaw::PowerMinusHalfP
        );
        assert!(RateLaw::for_exponent(0.0).is_err());
        assert_eq!(RateLaw::PowerMinusHalfP.eval(0.5, 16), 0.5);
        assert_eq!(RateLaw::PowerHalfMinusP.eval(0.75, 16), 0.5);
    }

    #[test]
    fn rate_study_requires_rescaled_operator() {
        let mut prob = rate_benchmark();
        prob.operator.constants = Some(DeclaredConstants::gamma(1.0));
        assert!(matches!(
            rate_study(&prob, &rate_benchmark_start(), 1.0, 100, 0.5),
            Err(Error::Precondition(_))
        ));
    }
}
