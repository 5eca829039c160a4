use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use subdiv::bench::{run_sweep, write_sweep_csv, RunRecord, SweepSpec};
use subdiv::bnb::{SolverConfig, Status};
use subdiv::bounder::{Bounder, PartitionStrategy, Schedule};
use subdiv::builtins::{builtin_catalog, builtin_problem, bundled_weights, is_builtin, needs_weights};
use subdiv::dag::parse_problem_in;
use subdiv::Problem;

#[derive(Parser)]
#[command(name = "subdiv", version, about = "Global optimization by branch and bound with subdomain interval bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file or builtin to global optimality.
    Solve {
        /// Problem file, or the name of a builtin problem.
        problem: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Subdomains per node.
        #[arg(long, default_value_t = 1024)]
        subdomains: usize,
        /// Write the per-iteration history as CSV.
        #[arg(long, value_name = "FILE")]
        log: Option<PathBuf>,
    },
    /// Sweep subdomain counts and bounders, printing a CSV table.
    Bench {
        /// Problem file, or the name of a builtin problem.
        problem: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated subdomain counts.
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,64,256,1024")]
        subdomains: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "nie,mvf")]
        bounders: Vec<Bounder>,
        #[arg(long, value_delimiter = ',', default_value = "adaptive")]
        partitions: Vec<PartitionStrategy>,
        /// Runs per configuration; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        /// Write the table here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// List builtin problems.
    List,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "mvf")]
    bounder: Bounder,
    #[arg(long, default_value = "adaptive")]
    partition: PartitionStrategy,
    #[arg(long, default_value = "staged")]
    schedule: Schedule,
    /// Bounding worker threads; 0 uses every core.
    #[arg(long, env = "SUBDIV_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 1e-4)]
    eps_abs: f64,
    #[arg(long, default_value_t = 1e-4)]
    eps_rel: f64,
    #[arg(long, default_value_t = 1e-6)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Weights file for network builtins; defaults to the bundled stand-ins.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self, subdomains: usize) -> Result<SolverConfig> {
        let time_limit = match self.time_limit {
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => bail!("--time-limit must be a positive number of seconds, got {s}"),
            None => None,
        };
        let config = SolverConfig {
            bounder: self.bounder,
            partition: self.partition,
            target_subdomains: subdomains,
            schedule: self.schedule,
            workers: self.threads,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            time_limit,
            feas_tol: self.feas_tol,
            polish: true,
        };
        config.validate()?;
        Ok(config)
    }
}

/// A problem file when the path exists, otherwise a builtin name.
fn load_problem(spec: &str, weights: Option<&Path>) -> Result<(String, Problem)> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let problem = parse_problem_in(&text, base).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((name, problem));
    }
    if !is_builtin(spec) {
        bail!("no such file or builtin problem: {spec}");
    }
    let default = if needs_weights(spec) { bundled_weights(spec) } else { None };
    let weights = weights.map(Path::to_path_buf).or(default);
    Ok((spec.to_string(), builtin_problem(spec, weights.as_deref())?))
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Optimal => 0,
        Status::MaxIter | Status::TimeLimit => 2,
        Status::Infeasible => 3,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::List => {
            let mut out = io::stdout().lock();
            for (name, about) in builtin_catalog() {
                writeln!(out, "{name:<20} {about}")?;
            }
            Ok(0)
        }
        Command::Solve { problem, solver, subdomains, log } => {
            let config = solver.config(subdomains)?;
            let (name, problem) = load_problem(&problem, solver.weights.as_deref())?;
            let record = RunRecord::run(&name, &problem, &config)?;
            print!("{}", record.summary());
            if let Some(path) = log {
                let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                record.write_history_csv(BufWriter::new(file))?;
            }
            Ok(exit_code(record.result.status))
        }
        Command::Bench { problem, solver, subdomains, bounders, partitions, repetitions, out } => {
            let config = solver.config(1)?;
            let spec = SweepSpec { counts: subdomains, bounders, partitions, repetitions };
            spec.validate().map_err(anyhow::Error::msg)?;
            let (name, problem) = load_problem(&problem, solver.weights.as_deref())?;
            let rows = run_sweep(&name, &problem, &config, &spec)?;
            match out {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                    write_sweep_csv(&rows, BufWriter::new(file))?;
                }
                None => write_sweep_csv(&rows, io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
