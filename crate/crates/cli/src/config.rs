//! Run configuration files (TOML).

use serde::{Deserialize, Serialize};
use vigpm::{
    ConvexSet, DeclaredConstants, OperatorFamily, OperatorSpec, Point, StepsizeSchedule,
    StopCriteria, ViProblem,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    /// Seed for the randomized subcommands.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub stop: StopCriteria,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub set: ConvexSet,
    pub operator: OperatorFamily,
    /// Multiplies `F`.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<DeclaredConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solution: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    GpmConstant,
    GpmVariable,
    GpmUnbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    pub x1: Vec<f64>,
    /// Modulus for the ball restriction of `gpm_unbounded`; defaults to the
    /// declared one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { lambda: f64 },
    PSeries { p: f64 },
    Harmonic,
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<StepsizeSchedule, CliError> {
        Ok(match *self {
            ScheduleConfig::Constant { lambda } => StepsizeSchedule::constant(lambda)?,
            ScheduleConfig::PSeries { p } => StepsizeSchedule::p_series(p)?,
            ScheduleConfig::Harmonic => StepsizeSchedule::Harmonic,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Trace file, relative to the output directory.
    #[serde(default = "default_trace")]
    pub trace: String,
    /// Summary file, relative to the output directory.
    #[serde(default = "default_summary")]
    pub summary: String,
    /// Overrides `stop.trace_stride`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            trace: default_trace(),
            summary: default_summary(),
            trace_stride: None,
        }
    }
}

/// Parameters of the experiment subcommands; each falls back to the
/// subcommand's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restricted_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}


impl ProblemConfig {
    pub fn build(&self) -> Result<ViProblem, CliError> {
        let mut op = OperatorSpec::new(self.operator.clone())?;
        op.scale = self.scale;
        if let Some(c) = self.constants {
            op = op.with_constants(c)?;
        }
        op.validate()?;
        let mut problem = ViProblem::new(self.set.clone(), op)?;
        if let Some(x) = &self.reference_solution {
            problem = problem.with_reference(Point::new(x.clone())?)?;
        }
        Ok(problem)
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks everything that can be checked without running: the problem
    /// builds, the start point has the right dimension, and the method and
    /// schedule are compatible.
    pub fn validate(&self) -> Result<(), CliError> {
        self.stop.validate()?;
        let problem = self
            .problem
            .as_ref()
            .map(ProblemConfig::build)
            .transpose()?;
        if let Some(schedule) = &self.schedule {
            schedule.build()?;
        }
        if let Some(method) = &self.method {
            let schedule = self
                .schedule
                .ok_or_else(|| CliError::Config("[method] needs a [schedule] table".into()))?;
            match (method.kind, schedule) {
                (MethodKind::GpmConstant, ScheduleConfig::Constant { .. }) => {}
                (MethodKind::GpmConstant, _) => {
                    return Err(CliError::Config(
                        "gpm_constant needs a constant schedule".into(),
                    ));
                }
                (_, s) => s.build()?.check_non_summable_diminishing()?,
            }
            if let Some(g) = method.gamma {
                if !(g.is_finite() && g > 0.0) {
                    return Err(CliError::Config(format!(
                        "method.gamma must be positive, got {g}"
                    )));
                }
            }
            if let Some(problem) = &problem {
                let x1 = Point::new(method.x1.clone())?;
                if x1.dim() != problem.dim() {
                    return Err(vigpm::Error::DimensionMismatch {
                        expected: problem.dim(),
                        found: x1.dim(),
                    }
                    .into());
                }
            }
        }
        if let Some(p) = &self.experiment.p {
            for v in p {
                vigpm::experiments::RateLaw::for_exponent(*v)?;
            }
        }
        Ok(())
    }

    /// Stop criteria with the output stride override applied.
    pub fn stop_criteria(&self) -> StopCriteria {
        let mut stop = self.stop;
        if let Some(s) = self.output.trace_stride {
            stop.trace_stride = Some(s);
        }
        stop
    }
}
