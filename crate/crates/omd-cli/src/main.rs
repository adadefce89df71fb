//! Command line front end: single-instance solvers, Monte-Carlo scenarios,
//! and the built-in invariant suite.

use std::fs;
use std::io::Read as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use omd::io::{DecodableSetReport, KUserInstance, KUserReport, TwoUserInstance, TwoUserReport};
use omd::sim::{preset_config, run_simulation, CsvFlavor, ScenarioConfig, SimOptions};
use omd::{multi_user, selftest, two_user, Error};

#[derive(Parser)]
#[command(
    name = "omd",
    version,
    about = "Transmit-covariance optimization with opportunistic interference decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one two-user instance and print the regime, rate, and covariance.
    SolveTwoUser {
        /// Path to a JSON instance file, or `-` for stdin.
        instance: String,
    },
    /// Print the optimal decodable interferer set with its certificates.
    DecodableSet {
        /// Path to a JSON instance file, or `-` for stdin.
        instance: String,
    },
    /// Solve one general instance and print the full report.
    SolveKUser {
        /// Path to a JSON instance file, or `-` for stdin.
        instance: String,
    },
    /// Run a Monte-Carlo scenario and emit CSV.
    Simulate {
        /// Built-in preset (`fig2`, `fig3-case1`, `fig3-case2`) or a path to
        /// a JSON scenario config.
        #[arg(long)]
        scenario: String,
        /// Override the number of channel realizations per sweep point.
        #[arg(long)]
        realizations: Option<usize>,
        /// Override the base random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count; the output is identical for any value.
        #[arg(long)]
        workers: Option<usize>,
        /// Report rates in bits instead of nats.
        #[arg(long)]
        bits: bool,
    },
    /// Run the built-in invariant checks.
    SelfTest,
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl std::fmt::Display) -> Self {
        CliError {
            message: message.to_string(),
            code: 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_input_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::input(format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::input(format!("reading {path}: {e}")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SolveTwoUser { instance } => {
            let inst: TwoUserInstance = serde_json::from_str(&read_input(&instance)?)
                .map_err(|e| CliError::input(format!("parsing instance: {e}")))?;
            let sol = two_user::solve(&inst.context()?)?;
            let report = TwoUserReport::from(&sol);
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            Ok(())
        }
        Command::DecodableSet { instance } => {
            let inst: KUserInstance = serde_json::from_str(&read_input(&instance)?)
                .map_err(|e| CliError::input(format!("parsing instance: {e}")))?;
            let dset = multi_user::find_optimal_decodable_set(&inst.context()?);
            let report = DecodableSetReport::from(&dset);
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            Ok(())
        }
        Command::SolveKUser { instance } => {
            let inst: KUserInstance = serde_json::from_str(&read_input(&instance)?)
                .map_err(|e| CliError::input(format!("parsing instance: {e}")))?;
            let ctx = inst.context()?;
            let mut sol = multi_user::solve(&ctx)?;
            sol.decode_order = multi_user::find_decode_order(&ctx, &sol).ok();
            let report = KUserReport::from(&sol);
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            Ok(())
        }
        Command::Simulate {
            scenario,
            realizations,
            seed,
            out,
            workers,
            bits,
        } => {
            let (mut cfg, flavor) = match preset_config(&scenario) {
                Some(preset) => preset,
                None => {
                    let cfg: ScenarioConfig = serde_json::from_str(&read_input(&scenario)?)
                        .map_err(|e| {
                            CliError::input(format!("parsing scenario {scenario}: {e}"))
                        })?;
                    (cfg, CsvFlavor::Generic)
                }
            };
            if let Some(n) = realizations {
                cfg.realizations = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let csv = run_simulation(&cfg, &flavor, &SimOptions { workers, bits })?;
            match out {
                Some(path) => fs::write(&path, csv)
                    .map_err(|e| CliError::input(format!("writing {}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::SelfTest => {
            let results = selftest::run_all();
            let mut all_passed = true;
            for r in &results {
                if r.passed {
                    println!("{}: PASS", r.name);
                } else {
                    all_passed = false;
                    println!("{}: FAIL ({})", r.name, r.detail);
                }
            }
            if all_passed {
                Ok(())
            } else {
                Err(CliError {
                    message: "one or more self-test checks failed".into(),
                    code: 2,
                })
            }
        }
    }
}
