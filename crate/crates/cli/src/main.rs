use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causal_cohort::cohort::save_csv;
use causal_cohort::graph::{to_dot, Cpdag, GraphJson, NodeRoles};
use causal_cohort::pipeline::{run, ReportBundle, RunOptions, StudyConfig};
use causal_cohort::scm::{sample, Scm};
use causal_cohort::Error;
use clap::{Parser, Subcommand};

/// Causal discovery and effect estimation for observational cohorts.
///
/// Log verbosity follows RUST_LOG (e.g. RUST_LOG=info).
#[derive(Parser)]
#[command(name = "causal-cohort", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages of a study config and write the report directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave timestamps out of report.json so reruns are byte-identical.
        #[arg(long)]
        canonical: bool,
    },
    /// Sample a structural causal model to CSV.
    Simulate {
        #[arg(long)]
        scm: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the variable schema (for a study config) as JSON.
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// Render a graph JSON file as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Node to fill blue.
        #[arg(long)]
        treatment: Option<String>,
        /// Node to fill red; repeatable.
        #[arg(long = "outcome")]
        outcomes: Vec<String>,
    },
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn print_report(bundle: &ReportBundle) {
    if let Some(ident) = &bundle.identification {
        for f in &ident.formulas {
            println!("{}", f.formula);
        }
    }
    if let Some(est) = &bundle.estimation {
        for cell in &est.ate.cells {
            println!("ATE {} / {}: {:.4}", cell.contrast, cell.outcome, cell.estimate.value);
        }
    }
    for entry in bundle.refutations.iter().flatten() {
        println!("refutation {} / {}", entry.report.contrast, entry.report.outcome);
        for line in &entry.lines {
            println!("  {line}");
        }
    }
    if let Some(lr) = bundle.analytics.as_ref().and_then(|a| a.logreg.as_ref()) {
        println!("{}", lr.line);
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, canonical } => {
            let config = StudyConfig::load(&config)?;
            let bundle = run(&config, &out, RunOptions { canonical })?;
            print_report(&bundle);
            log::info!("wrote {} files to {}", bundle.files.len(), out.display());
        }
        Command::Simulate { scm, n, seed, out, schema_out } => {
            let scm = Scm::load(&scm)?;
            save_csv(&sample(&scm, n, seed), &out)?;
            if let Some(path) = schema_out {
                let mut json = serde_json::to_vec_pretty(scm.variables())?;
                json.push(b'\n');
                write_file(&path, &json)?;
            }
        }
        Command::ExportDot { graph, out, treatment, outcomes } => {
            let json: GraphJson = serde_json::from_str(&read_file(&graph)?)?;
            let g = Cpdag::from_json(&json)?;
            for name in treatment.iter().chain(&outcomes) {
                g.index(name)?;
            }
            let roles = NodeRoles { treatment, outcomes: outcomes.into_iter().collect::<BTreeSet<_>>() };
            write_file(&out, to_dot(&g, &roles).as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
