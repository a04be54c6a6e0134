//! File writers. All output goes through the calling thread so that files
//! are byte-identical across worker counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use saddle_core::Trajectory;

use crate::config::Format;
use crate::error::{CliError, CliResult};
use crate::experiment::{RunOutput, RunSummary};

pub const SUMMARY_FILE: &str = "summary.json";

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("output.dir {}: {e}", dir.display())))
}

/// `iter,x_0..,y_0..,grad_norm,step_norm[,lyapunov]`.
pub fn trajectory_csv(traj: &Trajectory, lyapunov: bool) -> String {
    let (n, m) = traj.iterates[0].dims();
    let mut out = String::from("iter");
    for i in 0..n {
        let _ = write!(out, ",x_{i}");
    }
    for j in 0..m {
        let _ = write!(out, ",y_{j}");
    }
    out.push_str(",grad_norm,step_norm");
    if lyapunov {
        out.push_str(",lyapunov");
    }
    out.push('\n');
    for (k, (z, d)) in traj.iterates.iter().zip(&traj.diagnostics).enumerate() {
        let _ = write!(out, "{k}");
        for v in z.x.iter().chain(z.y.iter()) {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{},{}", d.grad_norm, d.step_norm);
        if lyapunov {
            match d.lyapunov {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_file_name(group: Option<usize>, index: usize, format: Format) -> String {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match group {
        Some(g) => format!("traj_{g:03}_{index:04}.{ext}"),
        None => format!("traj_{index:04}.{ext}"),
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, format: Format, lyapunov: bool) -> CliResult<()> {
    let body = match format {
        Format::Csv => trajectory_csv(traj, lyapunov),
        Format::Json => serde_json::to_string(traj).map_err(|e| CliError::Io(e.to_string()))? + "\n",
    };
    fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn summary_json(summaries: &[RunSummary]) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(summaries).map_err(|e| CliError::Io(e.to_string()))? + "\n")
}

/// Writes the trajectories of every group and the combined summary.
/// Returns the summary path.
pub fn write_outputs(
    dir: &Path,
    groups: &[Vec<RunOutput>],
    grouped_names: bool,
    format: Format,
    trajectories: bool,
    lyapunov: bool,
) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    if trajectories {
        for (g, group) in groups.iter().enumerate() {
            for o in group {
                let name = trajectory_file_name(grouped_names.then_some(g), o.summary.init_index, format);
                write_trajectory(&dir.join(name), &o.trajectory, format, lyapunov)?;
            }
        }
    }
    let summaries: Vec<RunSummary> = groups.iter().flatten().map(|o| o.summary.clone()).collect();
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, summary_json(&summaries)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
