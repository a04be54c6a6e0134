use std::path::{Path, PathBuf};

use saddle_core::suites::{run_suite, CheckOutcome, SUITES};

use crate::config::{ExperimentConfig, Format};
use crate::error::{CliError, CliResult};
use crate::experiment::{execute_sweep, RunSummary};
use crate::output::{ensure_dir, write_outputs};

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub lyapunov: bool,
    pub format: Option<Format>,
}

#[derive(Debug)]
pub struct RunReport {
    pub summaries: Vec<RunSummary>,
    pub summary_path: PathBuf,
    /// Runs that ended on a numerical failure.
    pub failures: usize,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            2
        } else {
            0
        }
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("workers: {e}")))?;
    Ok(pool.install(f))
}

fn execute_and_write(cfg: &ExperimentConfig, ov: &Overrides, grouped: bool) -> CliResult<RunReport> {
    let seed = ov.seed.unwrap_or(cfg.seed);
    let lyapunov = ov.lyapunov || cfg.output.lyapunov;
    let format = ov.format.unwrap_or(cfg.output.format);
    let dir = ov.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    ensure_dir(&dir)?;
    let groups = with_pool(ov.workers.or(cfg.workers), || execute_sweep(cfg, seed, lyapunov))??;
    let summary_path = write_outputs(&dir, &groups, grouped, format, cfg.output.trajectories, lyapunov)?;
    let failures = groups.iter().flatten().filter(|o| o.failed()).count();
    let summaries = groups.into_iter().flatten().map(|o| o.summary).collect();
    Ok(RunReport { summaries, summary_path, failures })
}

/// Runs the configuration once, ignoring any `[sweep]` section.
pub fn cmd_run(cfg: &ExperimentConfig, ov: &Overrides) -> CliResult<RunReport> {
    let mut cfg = cfg.clone();
    cfg.sweep = None;
    execute_and_write(&cfg, ov, false)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, ov: &Overrides) -> CliResult<RunReport> {
    if cfg.sweep.is_none() {
        return Err(CliError::Config("missing [sweep] section".into()));
    }
    execute_and_write(cfg, ov, true)
}

#[derive(Debug)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
    pub report_path: PathBuf,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            3
        }
    }
}

/// Runs one named suite, or every suite for `"all"`, and writes
/// `check_<suite>.json` into `out`.
pub fn cmd_check(suite: &str, out: &Path, seed: u64) -> CliResult<CheckReport> {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut outcomes = Vec::new();
    for name in names {
        outcomes.extend(run_suite(name, seed).map_err(|e| match e {
            saddle_core::Error::Parameter(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        })?);
    }
    ensure_dir(out)?;
    let report_path = out.join(format!("check_{suite}.json"));
    let body = serde_json::to_string_pretty(&outcomes).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    std::fs::write(&report_path, body).map_err(|e| CliError::Io(format!("{}: {e}", report_path.display())))?;
    Ok(CheckReport { outcomes, report_path })
}

pub fn render_check(report: &CheckReport) -> String {
    let mut s = String::new();
    for o in &report.outcomes {
        s.push_str(&format!(
            "{:<5} {:<18} {:<44} measured={:<12.6e} threshold={:<12.6e} slack={:.3e}\n",
            if o.passed { "PASS" } else { "FAIL" },
            o.suite,
            o.name,
            o.measured,
            o.threshold,
            o.slack
        ));
    }
    s
}

pub fn render_run(report: &RunReport) -> String {
    let mut s = String::new();
    for r in &report.summaries {
        let param = r.parameter.as_ref().map(|p| format!("{:?}={} ", p.name, p.value)).unwrap_or_default();
        s.push_str(&format!(
            "{param}init={:<4} {:<12} iters={:<6} |grad|={:.3e}\n",
            r.init_index, r.label, r.iterations, r.final_grad_norm
        ));
    }
    s.push_str(&format!("summary: {}\n", report.summary_path.display()));
    s
}
