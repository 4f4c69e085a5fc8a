use std::path::{Path, PathBuf};

use levelchain::analytics::ReportOptions;
use levelchain::problem_file::{Literal, ProblemSpec};
use levelchain::simulate::{SimulationSettings, DEFAULT_Z_THRESHOLD};
use levelchain::triangular::DEFAULT_DIAGONAL_TOLERANCE;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_HORIZON: u64 = 35;
pub const DEFAULT_RUNS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;

pub const DEFAULTS_TOML: &str = r#"# levelchain run configuration with every default spelled out.
label = "onemax-n4"
horizon = 35

[problem]
# Either a bitstring family ...
family = "onemax"        # onemax | square | log | custom
n = 4
mutation = "onebit"      # onebit | bitwise (p_mut defaults to 1/n)
initial = "worst"        # worst | uniform | [q_1, ..., q_n]
# ... or an explicit chain:
# matrix = [["3/4", "1/2", 0, 0], [0, 0.5, 0.75, 0], [0, 0, 0.25, 1], [0, 0, 0, 0]]
# errors = [1, 2, 3, 4]
# f_opt = 4
# q0 = [0, 0, 0, 1]

[analysis]
coefficient_offset = 0   # added to every c_k; nonzero only for control runs

[simulation]
runs = 100000
seed = 42
# horizon = 35           # defaults to the top-level horizon
# workers = 4            # defaults to all cores; results do not depend on it
# mode = "bitstring"     # bitstring (family problems only) | chain

[output]
# path = "trajectory.csv"  # defaults to standard output
format = "csv"

[tolerances]
diagonal = 1e-9
z_threshold = 4

[report]
digits = 3
cutoff = 0.0005
"#;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub label: Option<String>,
    pub horizon: Option<u64>,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub tolerances: ToleranceBlock,
    #[serde(default)]
    pub report: ReportBlock,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    pub coefficient_offset: Option<Literal>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    pub diagonal: Option<f64>,
    pub z_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBlock {
    pub digits: Option<usize>,
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMode {
    Bitstring,
    Chain,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub horizon: Option<u64>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(f) = self.output.format.as_deref() {
            if f != "csv" {
                return Err(CliError::Config(format!("unsupported output format `{f}`")));
            }
        }
        if self.horizon == Some(0) || self.simulation.horizon == Some(0) {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        if self.simulation.runs == Some(0) {
            return Err(CliError::Config("simulation.runs must be at least 1".into()));
        }
        if self.simulation.workers == Some(0) {
            return Err(CliError::Config("simulation.workers must be at least 1".into()));
        }
        if let Some(d) = self.tolerances.diagonal {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CliError::Config("tolerances.diagonal must be a nonnegative number".into()));
            }
        }
        if let Some(z) = self.tolerances.z_threshold {
            if !(z > 0.0 && z.is_finite()) {
                return Err(CliError::Config("tolerances.z_threshold must be positive".into()));
            }
        }
        if let Some(c) = self.report.cutoff {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(CliError::Config("report.cutoff must be a nonnegative number".into()));
            }
        }
        self.simulation_mode()?;
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.out.is_some() {
            self.output.path = o.out.clone();
        }
        if o.seed.is_some() {
            self.simulation.seed = o.seed;
        }
        if o.runs.is_some() {
            self.simulation.runs = o.runs;
        }
        if let Some(h) = o.horizon {
            self.horizon = Some(h);
            self.simulation.horizon = Some(h);
        }
        if o.workers.is_some() {
            self.simulation.workers = o.workers;
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .or_else(|| self.problem.label.clone())
            .unwrap_or_else(|| "problem".into())
    }

    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    pub fn simulation_horizon(&self) -> u64 {
        self.simulation.horizon.unwrap_or_else(|| self.horizon())
    }

    /// Horizon shared by the analytic and simulated blocks.
    pub fn common_horizon(&self) -> Result<u64, CliError> {
        match (self.horizon, self.simulation.horizon) {
            (Some(a), Some(s)) if a != s => Err(CliError::Config(format!(
                "horizon mismatch: analysis uses {a}, simulation uses {s}"
            ))),
            _ => Ok(self.simulation_horizon()),
        }
    }

    pub fn diagonal_tolerance(&self) -> f64 {
        self.tolerances.diagonal.unwrap_or(DEFAULT_DIAGONAL_TOLERANCE)
    }

    pub fn z_threshold(&self) -> f64 {
        self.tolerances.z_threshold.unwrap_or(DEFAULT_Z_THRESHOLD)
    }

    pub fn report_options(&self) -> ReportOptions {
        let d = ReportOptions::default();
        ReportOptions {
            digits: self.report.digits.unwrap_or(d.digits),
            cutoff: self.report.cutoff.unwrap_or(d.cutoff),
        }
    }

    pub fn settings(&self) -> SimulationSettings {
        SimulationSettings {
            horizon: self.simulation_horizon(),
            runs: self.simulation.runs.unwrap_or(DEFAULT_RUNS),
            seed: self.simulation.seed.unwrap_or(DEFAULT_SEED),
            workers: self.simulation.workers,
        }
    }

    pub fn simulation_mode(&self) -> Result<SimulationMode, CliError> {
        match self.simulation.mode.as_deref() {
            None if self.problem.is_family() => Ok(SimulationMode::Bitstring),
            None | Some("chain") => Ok(SimulationMode::Chain),
            Some("bitstring") if self.problem.is_family() => Ok(SimulationMode::Bitstring),
            Some("bitstring") => Err(CliError::Config(
                "bitstring simulation needs a family problem".into(),
            )),
            Some(other) => Err(CliError::Config(format!("unknown simulation mode `{other}`"))),
        }
    }
}
