//! `mdfrac`: run models, verification suites and convergence studies from
//! TOML configs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 meshing or geometry
//! error, 3 solver failure, 4 failed verification checks, 5 any other
//! error.

mod config;
mod output;
mod run;

use clap::{Parser, Subcommand};
use config::{Overrides, RunConfig};
use mdfrac_core::verify::{run_suite, Suite};
use mdfrac_core::{Error, ErrorKind, Result};
use output::{write_summary, Outcome, Outputs};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mdfrac", version, about = "Mixed-dimensional fracture flow and mechanics simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides `paths.output`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for mesh realizations and randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flux discretization, tpfa or mpfa; overrides `flow.scheme`.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Worker threads for independent study runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model described by a config file.
    Run { config: PathBuf },
    /// Run a property suite, or `all`.
    Verify { suite: String },
    /// Run the convergence study described by a config file.
    Converge { config: PathBuf },
}

const EXIT_VERIFY_FAILED: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 1,
        ErrorKind::Meshing => 2,
        ErrorKind::Solver => 3,
        ErrorKind::Other => 5,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    let ov = Overrides { output: cli.output.clone(), seed: cli.seed, scheme: cli.scheme.clone() };
    match &cli.command {
        Command::Run { config } => model_command("run", config, &ov, run::run),
        Command::Converge { config } => model_command("converge", config, &ov, run::converge),
        Command::Verify { suite } => verify(suite, cli),
    }
}

fn model_command(name: &str, path: &std::path::Path, ov: &Overrides, f: fn(&RunConfig, &mut Outputs) -> Result<Outcome>) -> Result<u8> {
    let cfg = RunConfig::load(path, ov)?;
    let mut out = Outputs::create(&cfg.output)?;
    let start = Instant::now();
    let result = f(&cfg, &mut out);
    let elapsed = start.elapsed().as_secs_f64();
    let model = cfg.model.name();
    match result {
        Ok(outcome) => {
            write_summary(&mut out, name, model, &outcome, None, elapsed)?;
            println!("{model}: {name} finished in {elapsed:.2} s");
            for (k, v) in &outcome.metrics {
                println!("  {k} = {v}");
            }
            println!("outputs in {}", out.dir().display());
            Ok(0)
        }
        Err(e) => {
            // Record the failure next to whatever was written before it.
            let _ = write_summary(&mut out, name, model, &Outcome::default(), Some(&e), elapsed);
            Err(e)
        }
    }
}

fn verify(name: &str, cli: &Cli) -> Result<u8> {
    let suites: Vec<Suite> = if name == "all" { Suite::all().to_vec() } else { vec![name.parse()?] };
    let seed = cli.seed.unwrap_or(0);
    let mut out = cli.output.as_deref().map(Outputs::create).transpose()?;
    let start = Instant::now();
    let mut failed = 0;
    let mut csv = String::from("suite,check,samples,measured,tolerance,passed\n");
    let mut outcome = Outcome::default();
    for s in suites {
        let t = Instant::now();
        let report = run_suite(s, seed)?;
        println!("suite {} ({:.2} s)", s.name(), t.elapsed().as_secs_f64());
        println!("{}", report.table());
        for c in &report.checks {
            csv += &format!("{},{},{},{:.6e},{:.6e},{}\n", s.name(), c.name, c.samples, c.measured, c.tolerance, c.passed());
        }
        let n = report.checks.iter().filter(|c| !c.passed()).count();
        outcome.metric(s.name(), if n == 0 { "pass" } else { "fail" });
        failed += n;
    }
    outcome.steps = csv.lines().count() - 1;
    if let Some(out) = out.as_mut() {
        out.text("verify.csv", &csv)?;
        write_summary(out, "verify", name, &outcome, None, start.elapsed().as_secs_f64())?;
    }
    if failed > 0 {
        eprintln!("{failed} check(s) failed");
        return Ok(EXIT_VERIFY_FAILED);
    }
    Ok(0)
}
