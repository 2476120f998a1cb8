//! Subcommand implementations. Each returns a JSON summary and an exit
//! status; artifacts are written below the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use vigpm::experiments::{
    self, catalog, rate_benchmark, rate_benchmark_start, rate_study, reproduce_example_41,
    reproduce_example_42, reproduce_example_42_restricted, verify_bounds,
};
use vigpm::report::write_trace_csv;
use vigpm::{
    gpm_constant, gpm_unbounded, gpm_variable, ConvexSet, Error, OperatorSpec, Point, SolveReport,
    Termination, ViProblem,
};

use crate::config::{MethodKind, RunConfig, ScheduleConfig};
use crate::{CliError, ExitStatus};

pub const DEFAULT_RATE_EXPONENTS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Solve,
    ReproEx41,
    ReproEx42,
    VerifyBounds,
    /// Exponents given on the command line override the config.
    RateStudy {
        p: Option<Vec<f64>>,
    },
    EstimateConstants,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Value,
    pub status: ExitStatus,
}

impl Outcome {
    /// The summary as one line of JSON.
    pub fn line(&self) -> String {
        self.summary.to_string()
    }
}

/// Runs `command` and writes its artifacts (always `summary.json`, or the
/// configured name) into `output_dir`.
pub fn run(command: &Command, config: &RunConfig, output_dir: &Path) -> Result<Outcome, CliError> {
    fs::create_dir_all(output_dir).map_err(|e| io_error(output_dir, e))?;
    let start = Instant::now();
    let (mut summary, status) = match command {
        Command::Solve => solve(config, output_dir)?,
        Command::ReproEx41 => repro_ex41(config)?,
        Command::ReproEx42 => repro_ex42(config)?,
        Command::VerifyBounds => verify(config)?,
        Command::RateStudy { p } => rate(config, p.as_deref(), output_dir)?,
        Command::EstimateConstants => estimate(config)?,
    };
    let map = summary.as_object_mut().expect("summaries are JSON objects");
    map.insert("config".into(), serde_json::to_value(config)?);
    map.insert("wall_time".into(), json!(start.elapsed().as_secs_f64()));
    let path = output_dir.join(&config.output.summary);
    fs::write(&path, format!("{summary}\n")).map_err(|e| io_error(&path, e))?;
    Ok(Outcome { summary, status })
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn verdict(pass: bool) -> ExitStatus {
    if pass {
        ExitStatus::Success
    } else {
        ExitStatus::VerdictFailed
    }
}

fn status_of(termination: &Termination) -> ExitStatus {
    match termination {
        Termination::Converged { .. } => ExitStatus::Success,
        Termination::MaxIters => ExitStatus::MaxIters,
        Termination::Diverged { .. } => ExitStatus::Diverged,
    }
}

fn write_trace(report: &SolveReport, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    write_trace_csv(report, std::io::BufWriter::new(file)).map_err(|e| io_error(path, e))
}

fn missing(table: &str) -> CliError {
    CliError::Config(format!("this subcommand needs a [{table}] table"))
}

fn solve(config: &RunConfig, output_dir: &Path) -> Result<(Value, ExitStatus), CliError> {
    let problem = config
        .problem
        .as_ref()
        .ok_or_else(|| missing("problem"))?
        .build()?;
    let method = config.method.as_ref().ok_or_else(|| missing("method"))?;
    let schedule_config = config.schedule.ok_or_else(|| missing("schedule"))?;
    let x1 = Point::new(method.x1.clone())?;
    let stop = config.stop_criteria();
    let report = match (method.kind, schedule_config) {
        (MethodKind::GpmConstant, ScheduleConfig::Constant { lambda }) => {
            gpm_constant(&problem, &x1, lambda, &stop)?
        }
        (MethodKind::GpmConstant, _) => {
            return Err(CliError::Config(
                "gpm_constant needs a constant schedule".into(),
            ))
        }
        (MethodKind::GpmVariable, s) => gpm_variable(&problem, &x1, &s.build()?, &stop)?,
        (MethodKind::GpmUnbounded, s) => {
            let gamma = method
                .gamma
                .or(problem.operator.declared_gamma())
                .ok_or(Error::MissingConstant("gamma"))?;
            gpm_unbounded(&problem, &x1, gamma, &s.build()?, &stop)?
        }
    };
    write_trace(&report, &output_dir.join(&config.output.trace))?;

    let x = &report.final_point;
    let norm = |r: vigpm::Result<Point>| r.ok().map(|v| v.norm());
    let residuals = json!({
        "natural_map": norm(problem.natural_map(x)),
        "normal_map": norm(problem.normal_map(x)),
        "operator": norm(problem.operator.evaluate(x)),
    });
    let certificates: Vec<Value> = [
        problem.error_bound_natural(x, method.gamma, None),
        problem.error_bound_normal(x, method.gamma),
        problem.error_bound_interior(x, method.gamma),
    ]
    .into_iter()
    .filter_map(|c| c.ok())
    .map(serde_json::to_value)
    .collect::<Result<_, _>>()?;
    let summary = json!({
        "command": "solve",
        "method": report.method,
        "termination": report.termination.to_string(),
        "termination_detail": report.termination,
        "iterations": report.iterations,
        "final_point": report.final_point,
        "final_residuals": residuals,
        "certificates": certificates,
        "restriction_radius": report.restriction_radius,
        "warnings": report.warnings,
    });
    Ok((summary, status_of(&report.termination)))
}

fn repro_ex41(config: &RunConfig) -> Result<(Value, ExitStatus), CliError> {
    let e = &config.experiment;
    let lambda = e.lambda.unwrap_or(0.5);
    let x1 = match &e.x1 {
        Some(v) if v.len() == 1 => v[0],
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: v.len(),
            }
            .into())
        }
        None => 0.2,
    };
    let v = reproduce_example_41(lambda, x1, e.iters.unwrap_or(10_000))?;
    let status = verdict(v.pass);
    Ok((
        json!({ "command": "repro-ex41", "pass": v.pass, "verdict": v }),
        status,
    ))
}

fn repro_ex42(config: &RunConfig) -> Result<(Value, ExitStatus), CliError> {
    let e = &config.experiment;
    let v = reproduce_example_42(e.iters.unwrap_or(10))?;
    let r = reproduce_example_42_restricted(e.restricted_iters.unwrap_or(100_000))?;
    let pass = v.pass && r.pass;
    Ok((
        json!({ "command": "repro-ex42", "pass": pass, "verdict": v, "restricted": r }),
        verdict(pass),
    ))
}

fn verify(config: &RunConfig) -> Result<(Value, ExitStatus), CliError> {
    let sweeps = verify_bounds(
        &catalog()?,
        config.experiment.points.unwrap_or(1_000),
        config.seed,
    )?;
    let violations: usize = sweeps.iter().map(|s| s.violations).sum();
    let worst = sweeps
        .iter()
        .flat_map(|s| {
            [
                Some(s.max_violation_normal),
                Some(s.max_violation_interior),
                s.max_violation_natural,
            ]
        })
        .flatten()
        .fold(f64::NEG_INFINITY, f64::max);
    let summary = json!({
        "command": "verify-bounds",
        "pass": violations == 0,
        "violations": violations,
        "max_violation": worst,
        "problems": sweeps,
    });
    Ok((summary, verdict(violations == 0)))
}

/// The configured problem rescaled to modulus 1/2, or the built-in benchmark.
fn rate_problem(config: &RunConfig) -> Result<(ViProblem, Point), CliError> {
    let Some(pc) = &config.problem else {
        let x1 = match &config.experiment.x1 {
            Some(v) => Point::new(v.clone())?,
            None => rate_benchmark_start(),
        };
        return Ok((rate_benchmark(), x1));
    };
    let problem = pc.build()?;
    let gamma = problem
        .operator
        .declared_gamma()
        .ok_or(Error::MissingConstant("gamma"))?;
    let op = problem.operator.rescale_to_half_modulus(gamma)?;
    let mut rescaled = ViProblem::new(problem.set.clone(), op)?;
    rescaled.reference_solution = problem.reference_solution.clone();
    let x1 = config
        .experiment
        .x1
        .clone()
        .or_else(|| config.method.as_ref().map(|m| m.x1.clone()))
        .ok_or_else(|| CliError::Config("rate study needs experiment.x1 or method.x1".into()))?;
    Ok((rescaled, Point::new(x1)?))
}

fn rate(
    config: &RunConfig,
    cli_p: Option<&[f64]>,
    output_dir: &Path,
) -> Result<(Value, ExitStatus), CliError> {
    let (problem, x1) = rate_problem(config)?;
    let exponents: Vec<f64> = cli_p
        .map(<[f64]>::to_vec)
        .or_else(|| config.experiment.p.clone())
        .unwrap_or(DEFAULT_RATE_EXPONENTS.to_vec());
    for p in &exponents {
        experiments::RateLaw::for_exponent(*p)?;
    }
    let iters = config.experiment.iters.unwrap_or(100_000);
    let tail = config.experiment.tail_fraction.unwrap_or(0.5);

    // One worker per exponent; each owns its run and its trace file.
    let results: Vec<Result<Value, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = exponents
            .iter()
            .map(|&p| {
                let (problem, x1) = (&problem, &x1);
                scope.spawn(move || -> Result<Value, CliError> {
                    let trace = output_dir.join(format!("trace_p{p}.csv"));
                    match rate_study(problem, x1, p, iters, tail) {
                        Ok((result, report)) => {
                            write_trace(&report, &trace)?;
                            let mut v = serde_json::to_value(&result)?;
                            v["trace"] = json!(file_name(&trace));
                            Ok(v)
                        }
                        Err(Error::ConvergedExactly { k }) => {
                            Ok(json!({ "p": p, "converged_exactly_at": k }))
                        }
                        Err(e) => Err(e.into()),
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("rate-study worker panicked"))
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok((
        json!({ "command": "rate-study", "rate_result": results }),
        ExitStatus::Success,
    ))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn estimate(config: &RunConfig) -> Result<(Value, ExitStatus), CliError> {
    let (op, region): (OperatorSpec, ConvexSet) = match &config.problem {
        Some(pc) => {
            let p = pc.build()?;
            (p.operator, p.set)
        }
        None => (OperatorSpec::sqrt_sign(), ConvexSet::interval(-1.0, 1.0)?),
    };
    let samples = config.experiment.samples.unwrap_or(10_000);
    let seed = config.seed;
    let lipschitz = op.estimate_lipschitz(&region, samples, seed)?;
    let summary = json!({
        "command": "estimate-constants",
        "samples": samples,
        "gamma_est": op.estimate_strong_pseudomonotonicity(&region, samples, seed)?,
        "monotonicity_est": op.estimate_strong_monotonicity(&region, samples, seed)?,
        "lipschitz_est": lipschitz.value,
        "lipschitz_growing": lipschitz.unbounded_suspected,
        "value_bound_est": op.value_bound(&region, samples, seed)?,
    });
    Ok((summary, ExitStatus::Success))
}

/// Default output directory when none is given.
pub fn default_output_dir() -> PathBuf {
    PathBuf::from("vigpm-out")
}
