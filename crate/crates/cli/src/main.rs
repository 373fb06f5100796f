mod output;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::Table;

#[derive(Parser)]
#[command(name = "qgmt", version, about = "Batch checks for Q-valued functions, chains and multisections")]
struct Cli {
    /// Worker threads for the parallel parts of a run.
    #[arg(long, global = true, env = "QGMT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its JSON report and CSV table.
    Run {
        file: PathBuf,
        /// Output directory; defaults to the scenario's "output" field, then ".".
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded randomized property suite.
    Suite {
        /// metric-axioms, boundary-commutation, multisection-equivalence or reparam-estimates.
        name: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Why a command stopped early.
enum Failure {
    /// Malformed or inconsistent input: exit 2.
    Input(String),
    /// Could not write outputs: exit 2 as well, nothing useful was produced.
    Io(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run { file, out } => run(&file, out),
        Command::Suite { name, seed, cases, out } => suite(&name, seed, cases, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg) | Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(file: &Path, out: Option<PathBuf>) -> Result<bool, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let scenario = scenario::Scenario::parse(&text).map_err(Failure::Input)?;
    let dir = out.or_else(|| scenario.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string();
    let outcome = scenario.execute().map_err(Failure::Input)?;
    output::write(&dir, &stem, &outcome.report, &outcome.table).map_err(Failure::Io)?;
    println!("{} {}: {}", scenario.kind, if outcome.passed { "passed" } else { "FAILED" }, outcome.summary);
    Ok(outcome.passed)
}

fn suite(name: &str, seed: u64, cases: Option<usize>, out: &Path) -> Result<bool, Failure> {
    let report = match qgmt::suites::run_suite(name, seed, cases) {
        Ok(r) => r,
        Err(e) if e.is_input() => return Err(Failure::Input(e.to_string())),
        Err(e) => {
            let json = serde_json::json!({ "suite": name, "seed": seed, "error": e.to_string(), "passed": false });
            let table = Table::new(&["index", "label", "value", "passed", "detail"]);
            output::write(out, &format!("{name}-{seed}"), &json, &table).map_err(Failure::Io)?;
            println!("{name} seed {seed}: aborted: {e}");
            return Ok(false);
        }
    };
    let mut table = Table::new(&["index", "label", "value", "passed", "detail"]);
    for c in &report.cases {
        table.row(vec![c.index.to_string(), c.label.clone(), output::number(c.value), c.passed.to_string(), c.detail.clone()]);
    }
    let json = serde_json::to_value(&report).expect("reports serialize");
    output::write(out, &format!("{name}-{seed}"), &json, &table).map_err(Failure::Io)?;
    println!(
        "{name} seed {seed}: {}/{} cases passed",
        report.cases.len() - report.failures,
        report.cases.len()
    );
    Ok(report.passed)
}
