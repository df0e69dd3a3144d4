use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nullrig::catalog::{self, Scenario};
use nullrig::checks::{self, RunConfig, Suite};
use nullrig::exec::Execution;
use nullrig::geodesics::{hunt, HuntTable};

/// Exit status for failed checks.
const FAILED: u8 = 1;
/// Exit status for unusable input (bad scenario, bad flags, I/O).
const INVALID: u8 = 2;

#[derive(Parser)]
#[command(
    name = "nullrig",
    version,
    about = "Check suites for rigged null hypersurfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run check suites on a scenario and report residuals.
    Run(RunArgs),
    /// Search a periodic spacetime for closed geodesics over a velocity grid.
    Hunt(HuntArgs),
    /// List the built-in scenarios.
    List,
    /// Parse and validate a scenario without running checks.
    Validate {
        /// Built-in scenario name or path to a scenario file.
        scenario: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(clap::Args)]
struct Output {
    /// Format written to stdout.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Also write the JSON report to this file.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Evaluate samples on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Built-in scenario name or path to a scenario file.
    scenario: String,
    /// Number of sample points (default: the scenario's).
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling seed (default: the scenario's).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated suites to run (default: all).
    #[arg(long, value_delimiter = ',')]
    suites: Vec<String>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "CHECK=VALUE", value_parser = parse_tolerance)]
    tolerances: Vec<(String, f64)>,
    /// Record wall time in the report (makes it run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(clap::Args)]
struct HuntArgs {
    /// Built-in scenario name or path to a scenario file.
    scenario: String,
    /// Grid points per velocity axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Period scale of the initial guesses.
    #[arg(long)]
    period: Option<f64>,
    /// Simplex evaluation budget per cell.
    #[arg(long)]
    budget: Option<usize>,
    #[command(flatten)]
    output: Output,
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (id, value) = s.split_once('=').ok_or("expected CHECK=VALUE")?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("bad tolerance `{value}`: {e}"))?;
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    if !(value >= 0.0) {
        return Err(format!("tolerance must be non-negative, got {value}"));
    }
    Ok((id.trim().to_string(), value))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(INVALID)
        }
    }
}

fn load(name: &str) -> Result<Scenario, String> {
    catalog::resolve(name).map_err(|e| e.to_string())
}

fn execution(output: &Output) -> Execution {
    if output.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn emit(output: &Output, json: &str, text: &str) -> Result<(), String> {
    if let Some(path) = &output.report {
        std::fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    match output.format {
        Format::Json => print!("{json}"),
        Format::Text => print!("{text}"),
    }
    Ok(())
}

fn execute(command: Command) -> Result<u8, String> {
    match command {
        Command::List => {
            for name in catalog::list_scenarios() {
                let s = load(name)?;
                println!("{name:30} {}", s.description);
            }
            Ok(0)
        }
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            let kind = if s.hypersurface.is_some() {
                "hypersurface"
            } else {
                "spacetime only"
            };
            println!("ok: {} ({}-dimensional, {kind})", s.name, s.spacetime.dim());
            Ok(0)
        }
        Command::Run(args) => run(args),
        Command::Hunt(args) => run_hunt(args),
    }
}

fn run(args: RunArgs) -> Result<u8, String> {
    let scenario = load(&args.scenario)?;
    let mut config = RunConfig::for_scenario(&scenario);
    if let Some(n) = args.samples {
        config.samples = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if !args.suites.is_empty() {
        config.suites = args
            .suites
            .iter()
            .map(|s| s.trim().parse::<Suite>())
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
    }
    config.tolerances = args.tolerances.into_iter().collect::<BTreeMap<_, _>>();
    config.timing = args.timing;
    config.execution = execution(&args.output);
    let report = checks::run(&scenario, &config).map_err(|e| e.to_string())?;
    emit(&args.output, &report.to_json(), &report.to_text())?;
    Ok(if report.passed() { 0 } else { FAILED })
}

fn hunt_text(name: &str, table: &HuntTable) -> String {
    let mut out = format!(
        "scenario {name}: {} periodic geodesics\n",
        table.orbits.len()
    );
    for o in &table.orbits {
        out.push_str(&format!(
            "{:9}  T = {:.9}  closure {:.3e}  v = {:?}\n",
            o.causal_character.to_string(),
            o.period,
            o.closure_error,
            o.velocity
        ));
    }
    if !table.failed.is_empty() {
        out.push_str(&format!("{} cells failed\n", table.failed.len()));
        for f in &table.failed {
            out.push_str(&format!(
                "  cell {:?}: {} (closure {:.3e})\n",
                f.cell, f.reason, f.closure_error
            ));
        }
    }
    out
}

fn run_hunt(args: HuntArgs) -> Result<u8, String> {
    let scenario = load(&args.scenario)?;
    if !scenario.spacetime.has_periodic() {
        return Err(format!(
            "scenario `{}` has no periodic coordinates",
            scenario.name
        ));
    }
    let mut options = checks::hunt_options(&scenario, &RunConfig::for_scenario(&scenario));
    if let Some(g) = args.grid {
        options.grid = g;
    }
    if let Some(p) = args.period {
        options.period = p;
    }
    if let Some(b) = args.budget {
        options.search.budget = b;
    }
    let origin = scenario.hunt.as_ref().map_or_else(
        || {
            scenario
                .spacetime
                .bounds()
                .iter()
                .map(|[a, b]| 0.5 * (a + b))
                .collect()
        },
        |h| h.origin.clone(),
    );
    let table = hunt(
        &scenario.spacetime,
        &origin,
        options,
        execution(&args.output),
    );
    let mut json = serde_json::to_string_pretty(&serde_json::json!({
        "scenario": scenario.name,
        "grid": options.grid,
        "period": options.period,
        "budget": options.search.budget,
        "orbits": table.orbits,
        "failed": table.failed,
    }))
    .map_err(|e| e.to_string())?;
    json.push('\n');
    emit(&args.output, &json, &hunt_text(&scenario.name, &table))?;
    Ok(0)
}
