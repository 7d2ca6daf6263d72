use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddp_bench::{
    emit, read_json, resolve_task, run_experiment, summarize, BenchError, OutputFormat, Overrides,
    SolverId, BUILTIN_TASKS,
};

#[derive(Parser)]
#[command(
    name = "ddp-bench",
    version,
    about = "Benchmark harness for DDP, maximum-entropy DDP and multimodal maximum-entropy DDP"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver over one task for a batch of seeds.
    Run {
        /// Builtin task id (see list-tasks) or path to a TOML config.
        #[arg(long)]
        task: String,
        /// Solver: vanilla, me or mme.
        #[arg(long)]
        solver: SolverIdArg,
        /// Number of seeds; seeds 0..N-1 are used.
        #[arg(long, default_value_t = 16)]
        seeds: u64,
        /// Override the config's inverse temperature.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the config's mixture component count.
        #[arg(long)]
        modes: Option<usize>,
        /// Override the config's resample period.
        #[arg(long)]
        resample_every: Option<usize>,
        /// Override the config's iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Output format: csv or json.
        #[arg(long, default_value = "json")]
        format: FormatArg,
    },
    /// Recompute summary statistics from a results.json file.
    Summarize {
        /// Path to a results.json produced by `run`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Output format: csv or json.
        #[arg(long, default_value = "json")]
        format: FormatArg,
    },
    /// Print the builtin task ids.
    ListTasks,
}

#[derive(Clone)]
struct SolverIdArg(SolverId);

impl std::str::FromStr for SolverIdArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(SolverIdArg)
    }
}

#[derive(Clone)]
struct FormatArg(OutputFormat);

impl std::str::FromStr for FormatArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(FormatArg)
    }
}

fn main() -> ExitCode {
    ExitCode::from(cli_main(std::env::args()))
}

/// Parses and executes the CLI. Exit codes: 0 success, 1 runtime failure,
/// 2 usage errors (including unknown tasks).
pub fn cli_main<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };

    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e @ BenchError::UnknownTask(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run_command(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run {
            task,
            solver,
            seeds,
            alpha,
            modes,
            resample_every,
            iters,
            out,
            format,
        } => {
            // Resolve first so unknown tasks fail before any solve.
            resolve_task(&task)?;
            let overrides = Overrides {
                alpha,
                modes,
                resample_every,
                iterations: iters,
            };
            let seed_list: Vec<u64> = (0..seeds).collect();
            let records = run_experiment(&task, solver.0, &seed_list, &overrides)?;
            for rec in &records {
                match (&rec.error, rec.final_cost) {
                    (Some(err), _) => eprintln!(
                        "{} {} seed {}: FAILED: {err}",
                        rec.task, rec.solver, rec.seed
                    ),
                    (None, Some(j)) => println!(
                        "{} {} seed {}: final cost {j:.6} ({} iterations, {:.2}s)",
                        rec.task,
                        rec.solver,
                        rec.seed,
                        rec.trace.len().saturating_sub(1),
                        rec.wall_time_s
                    ),
                    (None, None) => {}
                }
            }
            let stats = summarize(&records)?;
            for s in &stats {
                println!(
                    "{} {}: mean {:.6} std {:.6} min {:.6} max {:.6}",
                    s.task, s.solver, s.mean, s.std, s.min, s.max
                );
            }
            let paths = emit(&records, &stats, format.0, &out)?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Summarize { input, out, format } => {
            let doc = read_json(&input)?;
            let stats = summarize(&doc.records)?;
            for s in &stats {
                let vs_vanilla = s
                    .reduction_vs_vanilla_pct
                    .map(|r| format!(" vs-vanilla {r:+.2}%"))
                    .unwrap_or_default();
                println!(
                    "{} {}: mean {:.6} std {:.6}{vs_vanilla}",
                    s.task, s.solver, s.mean, s.std
                );
            }
            let paths = emit(&doc.records, &stats, format.0, &out)?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::ListTasks => {
            for (id, _) in BUILTIN_TASKS {
                println!("{id}");
            }
            Ok(())
        }
    }
}
