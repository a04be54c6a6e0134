use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use saddle_cli::commands::{render_check, render_run};
use saddle_cli::{cmd_check, cmd_run, cmd_sweep, CliError, ExperimentConfig, Format, Overrides};

#[derive(Parser)]
#[command(name = "saddle", version, about = "Run and classify minimax solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme from every initialization.
    Run(RunArgs),
    /// Repeat the run for each value in the [sweep] section.
    Sweep(RunArgs),
    /// Run a built-in verification suite ("all" runs every suite).
    Check {
        suite: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record the Lyapunov function along each trajectory.
    #[arg(long)]
    lyapunov: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            workers: self.workers,
            seed: self.seed,
            lyapunov: self.lyapunov,
            format: self.format,
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("saddle: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) | Command::Sweep(args) => {
            let sweep = matches!(cli.command, Command::Sweep(_));
            ExperimentConfig::load(&args.config).and_then(|cfg| {
                let ov = args.overrides();
                if sweep {
                    cmd_sweep(&cfg, &ov)
                } else {
                    cmd_run(&cfg, &ov)
                }
            })
            .map(|r| {
                print!("{}", render_run(&r));
                if r.failures > 0 {
                    eprintln!("saddle: {} run(s) ended on a numerical failure", r.failures);
                }
                r.exit_code()
            })
        }
        Command::Check { suite, out, seed } => cmd_check(suite, out, *seed).map(|r| {
            print!("{}", render_check(&r));
            println!("report: {}", r.report_path.display());
            r.exit_code()
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(e),
    }
}
