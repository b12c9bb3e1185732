//! Command-line front end. Exit codes: 0 on success, 2 when every result row
//! is infeasible, 1 on any error.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use onebit_isac::optim::{parse_ilp, solve_bnb, BnbStatus, DEFAULT_NODE_LIMIT};
use serde_json::json;

use crate::config::load_config;
use crate::experiments::run_experiment;
use crate::output::{emit_results, preflight};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "onebit-isac", version, about = "1-bit DAC/ADC ISAC transceiver design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment in a spec file and write CSV and JSON results.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use N_T = N_R = 128 and 1e6 Monte Carlo trials.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Check a spec file against the schema without running it.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Solve a dumped ILP instance and print the result as JSON.
    SolveIlp {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        node_limit: usize,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            e.print().ok();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run {
            spec,
            seed,
            out,
            paper_scale,
        } => {
            let mut s = load_config(&spec)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if paper_scale {
                s = s.paper_scale();
            }
            if let Some(out) = out {
                s.output_path = out.to_string_lossy().into_owned();
            }
            let s = s.resolve()?;
            let dir = PathBuf::from(&s.output_path);
            preflight(&dir)?;
            let table = run_experiment(&s)?;
            let (csv, json) = emit_results(&table, &s, &dir)?;
            println!("{}\n{}", csv.display(), json.display());
            Ok(if table.all_infeasible() { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Validate { spec } => {
            let s = load_config(&spec)?;
            println!("ok: {} ({} grid points)", s.experiment.name(), s.grid().len());
            Ok(EXIT_OK)
        }
        Command::SolveIlp { path, node_limit } => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let inst = parse_ilp(&text).with_context(|| format!("in {}", path.display()))?;
            let res = solve_bnb(&inst, node_limit)?;
            let out = json!({
                "status": res.status,
                "objective_value": res.objective_value,
                "continuous_value": res.continuous_value,
                "solution": res.solution,
                "nodes_explored": res.nodes_explored,
                "gap": res.gap,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(if res.status == BnbStatus::Infeasible { EXIT_INFEASIBLE } else { EXIT_OK })
        }
    }
}
