//! Experiment configuration, read from TOML.
//!
//! Every section rejects unknown keys so that typos surface as errors naming
//! the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use saddle_core::algorithms::{AlgoConfig, Scheme};
use saddle_core::diagnostics::ClassifyOptions;
use saddle_core::{
    make_figure1_problem, BoxDomain, CoupledSeparable, DMatrix, MinimaxProblem, Polynomial, RotationalQuadratic,
};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
    pub problem: ProblemSection,
    pub algorithm: AlgorithmSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSection {
    /// Quartic wells `t⁴ − 10t² + 9` in both blocks, coupled by `a·xy`.
    Figure1 { a: f64 },
    RotationalQuadratic {
        rho: f64,
        a: f64,
        #[serde(default = "one_usize")]
        n: usize,
    },
    Bilinear { a: f64 },
    /// `Σf(xᵢ) + xᵀAy − Σg(yⱼ)` with ascending polynomial coefficients.
    Separable {
        f: Vec<f64>,
        g: Vec<f64>,
        /// Rows of the `n × m` interaction matrix.
        interaction: Vec<Vec<f64>>,
        #[serde(default)]
        box_lo: Option<Vec<f64>>,
        #[serde(default)]
        box_hi: Option<Vec<f64>>,
    },
}

fn one_usize() -> usize {
    1
}

impl ProblemSection {
    pub fn build(&self) -> CliResult<Box<dyn MinimaxProblem>> {
        Ok(match self {
            ProblemSection::Figure1 { a } => Box::new(make_figure1_problem(*a)?),
            ProblemSection::RotationalQuadratic { rho, a, n } => Box::new(RotationalQuadratic::new(*rho, *a, *n)?),
            ProblemSection::Bilinear { a } => Box::new(CoupledSeparable::bilinear(*a)?),
            ProblemSection::Separable { f, g, interaction, box_lo, box_hi } => {
                let rows = interaction.len();
                let cols = interaction.first().map_or(0, Vec::len);
                if rows == 0 || cols == 0 || interaction.iter().any(|r| r.len() != cols) {
                    return Err(CliError::Config("problem.interaction must be a non-empty rectangular matrix".into()));
                }
                let a = DMatrix::from_fn(rows, cols, |i, j| interaction[i][j]);
                let domain = match (box_lo, box_hi) {
                    (Some(lo), Some(hi)) => Some(BoxDomain::new(lo.clone(), hi.clone())?),
                    (None, None) => None,
                    _ => return Err(CliError::Config("problem.box_lo and problem.box_hi must be given together".into())),
                };
                Box::new(CoupledSeparable::new(Polynomial::new(f.clone()), Polynomial::new(g.clone()), a, domain)?)
            }
        })
    }

    fn set_interaction(&mut self, value: f64) -> CliResult<()> {
        match self {
            ProblemSection::Figure1 { a } | ProblemSection::RotationalQuadratic { a, .. } | ProblemSection::Bilinear { a } => {
                *a = value;
                Ok(())
            }
            ProblemSection::Separable { .. } => {
                Err(CliError::Config("sweep.parameter = \"a\" needs a problem with a scalar interaction".into()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSize {
    Fixed(f64),
    Rule(StepRule),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `s = 1/(2β)` with the problem's certified `β`.
    HalfInverseBeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub scheme: Scheme,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "one_f64")]
    pub lambda: f64,
    #[serde(default = "one_f64")]
    pub gamma: f64,
    #[serde(default)]
    pub s: Option<StepSize>,
    #[serde(default)]
    pub eta_x: Option<f64>,
    #[serde(default)]
    pub eta_y: Option<f64>,
    #[serde(default)]
    pub y_box_lo: Option<Vec<f64>>,
    #[serde(default)]
    pub y_box_hi: Option<Vec<f64>>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub diverge_radius: Option<f64>,
    #[serde(default)]
    pub inner_tol: Option<f64>,
}

fn one_f64() -> f64 {
    1.0
}

fn default_max_iter() -> usize {
    1000
}

impl AlgorithmSection {
    pub fn resolve(&self, problem: &dyn MinimaxProblem, lyapunov: bool) -> CliResult<AlgoConfig> {
        let s = match self.s {
            Some(StepSize::Fixed(v)) => Some(v),
            Some(StepSize::Rule(StepRule::HalfInverseBeta)) => Some(0.5 / problem.beta()),
            None => None,
        };
        let y_box = match (&self.y_box_lo, &self.y_box_hi) {
            (Some(lo), Some(hi)) => Some(BoxDomain::new(lo.clone(), hi.clone())?),
            (None, None) => None,
            _ => return Err(CliError::Config("algorithm.y_box_lo and algorithm.y_box_hi must be given together".into())),
        };
        let cfg = AlgoConfig {
            scheme: self.scheme,
            eta: self.eta,
            lambda: self.lambda,
            gamma: self.gamma,
            s,
            eta_x: self.eta_x,
            eta_y: self.eta_y,
            y_box,
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            diverge_radius: self.diverge_radius,
            inner_tol: self.inner_tol,
            record_lyapunov: lyapunov,
        };
        cfg.validate(problem).map_err(|e| CliError::Config(format!("[algorithm] {e}")))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSection {
    /// Explicit stacked points `[x..., y...]`.
    Points { points: Vec<Vec<f64>> },
    /// Uniform tensor grid, last coordinate varying fastest.
    Grid { lo: Vec<f64>, hi: Vec<f64>, resolution: usize },
    /// Uniform samples in a box, drawn from the experiment seed.
    Random { lo: Vec<f64>, hi: Vec<f64>, count: usize },
    /// Blockwise local optimization from `z_prime`.
    Weak {
        z_prime: Vec<f64>,
        #[serde(default = "default_weak_tol")]
        tol: f64,
    },
}

fn default_weak_tol() -> f64 {
    1e-10
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection::Grid { lo: vec![-3.5, -3.5], hi: vec![3.5, 3.5], resolution: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// The problem's interaction strength.
    A,
    Lambda,
    Eta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Add the Lyapunov column (two extra inner solves per step).
    #[serde(default)]
    pub lyapunov: bool,
    /// Write one file per trajectory in addition to the summary.
    #[serde(default = "yes")]
    pub trajectories: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), format: Format::Csv, lyapunov: false, trajectories: true }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> CliResult<()> {
        if let Some(0) = self.workers {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if let InitSection::Grid { resolution: 0, .. } = self.init {
            return Err(CliError::Config("init.resolution must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::Config("sweep.values must not be empty".into()));
            }
        }
        Ok(())
    }

    /// The configuration with the swept parameter set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> CliResult<Self> {
        let mut cfg = self.clone();
        match parameter {
            SweepParameter::A => cfg.problem.set_interaction(value)?,
            SweepParameter::Lambda => cfg.algorithm.lambda = value,
            SweepParameter::Eta => cfg.algorithm.eta = Some(value),
        }
        Ok(cfg)
    }
}
