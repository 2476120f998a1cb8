//! Gradient projection methods `x_{k+1} = pr_K(x_k − λ_k F(x_k))`.
//!
//! Three entry points share one iteration loop:
//!
//! - [`gpm_constant`] uses a fixed stepsize `λ`. It is only guaranteed to
//!   converge for strongly monotone Lipschitz operators with `λ < 2γ/L²`;
//!   outside that window it still runs and records a warning.
//! - [`gpm_variable`] uses a non-summable diminishing schedule and converges
//!   for continuous strongly pseudomonotone operators on bounded `K`.
//! - [`gpm_unbounded`] first intersects `K` with the ball `B(x_1, ‖F(x_1)‖/γ)`,
//!   which contains the solution, and then runs [`gpm_variable`] there.
//!
//! Iteration indices start at `k = 1`. The exact fixed-point test of the
//! textbook method is replaced by `‖x_{k+1} − x_k‖ ≤ step_tol`, an optional
//! residual test `‖F(x_k)‖/γ ≤ residual_tol`, and an iteration cap.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::vi::ViProblem;

/// Number of leading iterations that are always kept in the trace.
pub const FULL_TRACE_LEN: usize = 10_000;

/// A user-supplied stepsize rule with self-declared properties.
#[derive(Clone)]
pub struct CustomSchedule {
    pub label: String,
    pub summable: bool,
    pub diminishing: bool,
    generator: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl CustomSchedule {
    pub fn new(
        label: impl Into<String>,
        summable: bool,
        diminishing: bool,
        generator: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomSchedule {
            label: label.into(),
            summable,
            diminishing,
            generator: Arc::new(generator),
        }
    }
}

impl fmt::Debug for CustomSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSchedule")
            .field("label", &self.label)
            .field("summable", &self.summable)
            .field("diminishing", &self.diminishing)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum StepsizeSchedule {
    Constant {
        lambda: f64,
    },
    /// `λ_k = 1 / k^p` with `0 < p ≤ 1`.
    PSeries {
        p: f64,
    },
    /// `λ_k = 1 / k`.
    Harmonic,
    Custom(CustomSchedule),
}

impl StepsizeSchedule {
    pub fn constant(lambda: f64) -> Result<Self> {
        let s = StepsizeSchedule::Constant { lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn p_series(p: f64) -> Result<Self> {
        let s = StepsizeSchedule::PSeries { p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepsizeSchedule::Constant { lambda } if !(lambda.is_finite() && *lambda > 0.0) => Err(
                Error::InvalidSchedule(format!("constant stepsize must be positive, got {lambda}")),
            ),
            StepsizeSchedule::PSeries { p } if !(*p > 0.0 && *p <= 1.0) => Err(
                Error::InvalidSchedule(format!("p-series exponent must lie in (0, 1], got {p}")),
            ),
            _ => Ok(()),
        }
    }

    /// Rejects schedules that are not declared non-summable and diminishing.
    pub fn check_non_summable_diminishing(&self) -> Result<()> {
        self.validate()?;
        match self {
            StepsizeSchedule::Constant { .. } => Err(Error::ScheduleRejected("diminishing")),
            StepsizeSchedule::Custom(c) if c.summable => {
                Err(Error::ScheduleRejected("non-summable"))
            }
            StepsizeSchedule::Custom(c) if !c.diminishing => {
                Err(Error::ScheduleRejected("diminishing"))
            }
            _ => Ok(()),
        }
    }

    /// `λ_k` for `k ≥ 1`.
    pub fn stepsize(&self, k: usize) -> f64 {
        assert!(k >= 1, "stepsizes are indexed from k = 1");
        match self {
            StepsizeSchedule::Constant { lambda } => *lambda,
            StepsizeSchedule::PSeries { p } if *p == 1.0 => 1.0 / k as f64,
            StepsizeSchedule::PSeries { p } => 1.0 / (k as f64).powf(*p),
            StepsizeSchedule::Harmonic => 1.0 / k as f64,
            StepsizeSchedule::Custom(c) => (c.generator)(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopCriteria {
    /// Stop when `‖x_{k+1} − x_k‖ ≤ step_tol`.
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    /// Stop when `‖F(x_k)‖/γ ≤ residual_tol`; needs a modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Declare divergence once `‖x_k‖` exceeds this.
    #[serde(default = "default_divergence_radius")]
    pub divergence_radius: f64,
    /// Keep every `trace_stride`-th record after the first 10⁴; defaults to
    /// `⌈max_iters / 10⁴⌉`. The final record is always kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
}

fn default_step_tol() -> f64 {
    1e-12
}

fn default_max_iters() -> usize {
    10_000
}

fn default_divergence_radius() -> f64 {
    1e12
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            step_tol: default_step_tol(),
            residual_tol: None,
            max_iters: default_max_iters(),
            divergence_radius: default_divergence_radius(),
            trace_stride: None,
        }
    }
}

impl StopCriteria {
    pub fn max_iters(max_iters: usize) -> Self {
        StopCriteria {
            max_iters,
            ..Default::default()
        }
    }

    pub fn with_step_tol(mut self, step_tol: f64) -> Self {
        self.step_tol = step_tol;
        self
    }

    pub fn with_residual_tol(mut self, residual_tol: f64) -> Self {
        self.residual_tol = Some(residual_tol);
        self
    }

    pub fn with_trace_stride(mut self, stride: usize) -> Self {
        self.trace_stride = Some(stride);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Precondition("max_iters must be at least 1".into()));
        }
        if !(self.divergence_radius > 0.0) {
            return Err(Error::Precondition(
                "divergence_radius must be positive".into(),
            ));
        }
        if !(self.step_tol >= 0.0) {
            return Err(Error::Precondition("step_tol must be non-negative".into()));
        }
        if let Some(r) = self.residual_tol {
            if !(r >= 0.0) {
                return Err(Error::Precondition(
                    "residual_tol must be non-negative".into(),
                ));
            }
        }
        if self.trace_stride == Some(0) {
            return Err(Error::Precondition(
                "trace_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_stride(&self) -> usize {
        self.trace_stride
            .unwrap_or_else(|| self.max_iters.div_ceil(FULL_TRACE_LEN).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GpmConstant,
    GpmVariable,
    GpmUnbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergedBy {
    Step,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceCause {
    /// `F(x_k)` is not representable.
    OperatorOverflow,
    /// `‖x_k‖` exceeded the divergence radius.
    RadiusExceeded,
    /// `x_k − λ_k F(x_k)` is not finite.
    NonFiniteIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Converged { by: ConvergedBy },
    MaxIters,
    Diverged { cause: DivergenceCause },
}

impl Termination {
    pub fn is_converged(&self) -> bool {
        matches!(self, Termination::Converged { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Termination::Diverged { .. })
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged { .. } => "Converged",
            Termination::MaxIters => "MaxIters",
            Termination::Diverged { .. } => "Diverged",
        })
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub lambda: f64,
    pub x: Point,
    /// `‖x_{k+1} − x_k‖`; absent when the iteration stopped at `x_k` by divergence.
    pub step_norm: Option<f64>,
    /// `‖x_k − x*‖` when a reference solution is known.
    pub dist_ref: Option<f64>,
    /// `‖F(x_k)‖ / γ` when a modulus is known.
    pub interior_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterates: Vec<TraceRecord>,
    pub termination: Termination,
    /// Index of the last iteration performed.
    pub iterations: usize,
    pub final_point: Point,
    /// Radius of the ball used by [`gpm_unbounded`].
    pub restriction_radius: Option<f64>,
    pub warnings: Vec<String>,
    pub wall_time: f64,
}

impl SolveReport {
    pub fn last(&self) -> &TraceRecord {
        self.iterates
            .last()
            .expect("reports always hold at least one record")
    }
}

/// Algorithm with a constant stepsize `λ`.
pub fn gpm_constant(
    problem: &ViProblem,
    x1: &Point,
    lambda: f64,
    stop: &StopCriteria,
) -> Result<SolveReport> {
    let schedule = StepsizeSchedule::constant(lambda)?;
    let mut warnings = Vec::new();
    if let (Some(g), Some(l)) = (
        problem.operator.declared_gamma(),
        problem.operator.declared_lipschitz(),
    ) {
        let limit = 2.0 * g / (l * l);
        if lambda >= limit {
            let msg = format!("stepsize {lambda} lies outside the convergent window (0, {limit})");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let mut report = iterate(
        problem,
        x1,
        &schedule,
        stop,
        problem.operator.declared_gamma(),
        Method::GpmConstant,
    )?;
    report.warnings.splice(0..0, warnings);
    Ok(report)
}

/// Algorithm with a non-summable diminishing schedule.
pub fn gpm_variable(
    problem: &ViProblem,
    x1: &Point,
    schedule: &StepsizeSchedule,
    stop: &StopCriteria,
) -> Result<SolveReport> {
    schedule.check_non_summable_diminishing()?;
    iterate(
        problem,
        x1,
        schedule,
        stop,
        problem.operator.declared_gamma(),
        Method::GpmVariable,
    )
}

/// Diminishing-stepsize method on `K ∩ B(x_1, ‖F(x_1)‖/γ)`. With `γ` a true
/// strong pseudomonotonicity modulus the ball contains the solution, so the
/// restricted problem is bounded and has the same solution.
pub fn gpm_unbounded(
    problem: &ViProblem,
    x1: &Point,
    gamma: f64,
    schedule: &StepsizeSchedule,
    stop: &StopCriteria,
) -> Result<SolveReport> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Precondition(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    schedule.check_non_summable_diminishing()?;
    stop.validate()?;
    problem.require_member(x1)?;
    let start = Instant::now();
    let fx = problem.operator.evaluate(x1)?;
    let radius = fx.norm() / gamma;
    if radius == 0.0 {
        // F(x_1) = 0: the first step is the identity.
        let record = TraceRecord {
            k: 1,
            lambda: schedule.stepsize(1),
            x: x1.clone(),
            step_norm: Some(0.0),
            dist_ref: problem.reference_solution.as_ref().map(|r| x1.distance(r)),
            interior_radius: Some(0.0),
        };
        return Ok(SolveReport {
            method: Method::GpmUnbounded,
            iterates: vec![record],
            termination: Termination::Converged {
                by: ConvergedBy::Step,
            },
            iterations: 1,
            final_point: x1.clone(),
            restriction_radius: None,
            warnings: Vec::new(),
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    let restricted = ViProblem {
        set: problem.set.intersect_with_ball(x1, radius)?,
        operator: problem.operator.clone(),
        reference_solution: problem.reference_solution.clone(),
    };
    let mut report = iterate(
        &restricted,
        x1,
        schedule,
        stop,
        Some(gamma),
        Method::GpmUnbounded,
    )?;
    report.restriction_radius = Some(radius);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

fn iterate(
    problem: &ViProblem,
    x1: &Point,
    schedule: &StepsizeSchedule,
    stop: &StopCriteria,
    gamma: Option<f64>,
    method: Method,
) -> Result<SolveReport> {
    let start = Instant::now();
    schedule.validate()?;
    stop.validate()?;
    problem.require_member(x1)?;
    if stop.residual_tol.is_some() && gamma.is_none() {
        return Err(Error::MissingConstant("gamma (required by residual_tol)"));
    }
    let stride = stop.effective_stride();
    let keep = |k: usize| k <= FULL_TRACE_LEN || k.is_multiple_of(stride);
    let reference = problem.reference_solution.as_ref();

    let mut iterates = Vec::new();
    let mut x = x1.clone();
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    for k in 1..=stop.max_iters {
        iterations = k;
        let lambda = schedule.stepsize(k);
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "stepsize at k = {k} is {lambda}"
            )));
        }
        let mut record = TraceRecord {
            k,
            lambda,
            x: x.clone(),
            step_norm: None,
            dist_ref: reference.map(|r| x.distance(r)),
            interior_radius: None,
        };
        let fx = match problem.operator.evaluate(&x) {
            Ok(fx) => fx,
            Err(Error::OperatorOverflow { .. }) => {
                termination = Termination::Diverged {
                    cause: DivergenceCause::OperatorOverflow,
                };
                iterates.push(record);
                break;
            }
            Err(e) => return Err(e),
        };
        if x.norm() > stop.divergence_radius {
            termination = Termination::Diverged {
                cause: DivergenceCause::RadiusExceeded,
            };
            iterates.push(record);
            break;
        }
        let radius = gamma.map(|g| fx.norm() / g);
        record.interior_radius = radius;

        let trial = x.axpy(-lambda, &fx);
        if !trial.is_finite() {
            termination = Termination::Diverged {
                cause: DivergenceCause::NonFiniteIterate,
            };
            iterates.push(record);
            break;
        }
        let next = problem.set.project(&trial)?;
        let step = next.distance(&x);
        record.step_norm = Some(step);

        if let (Some(tol), Some(r)) = (stop.residual_tol, radius) {
            if r <= tol {
                termination = Termination::Converged {
                    by: ConvergedBy::Residual,
                };
                iterates.push(record);
                break;
            }
        }
        if step <= stop.step_tol {
            termination = Termination::Converged {
                by: ConvergedBy::Step,
            };
            iterates.push(record);
            x = next;
            break;
        }
        if keep(k) || k == stop.max_iters {
            iterates.push(record);
        }
        x = next;
    }
    if termination == Termination::MaxIters && x.norm() > stop.divergence_radius {
        termination = Termination::Diverged {
            cause: DivergenceCause::RadiusExceeded,
        };
    }

    Ok(SolveReport {
        method,
        iterates,
        termination,
        iterations,
        final_point: x,
        restriction_radius: None,
        warnings: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}
