use std::path::PathBuf;
use std::process::ExitCode;

use bianchi_cli::expected::ExpectedTable;
use bianchi_cli::report::{cache_dir, canonical_json, compute};
use bianchi_cli::verify::{adhoc_suite, exit_code, render, run_suite};
use bianchi_core::specseq::DEFAULT_QMAX;
use bianchi_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bianchi", version, about = "Equivariant homology of Bianchi groups")]
struct Cli {
    /// Run a named suite of the bundled expected table (shorthand for `verify <suite>`).
    #[arg(long, value_name = "SUITE")]
    verify: Option<String>,
    /// Directory for cached cell complexes; defaults to $BIANCHI_CACHE.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the report for one field and print it as JSON.
    Compute {
        #[arg(short, long, allow_negative_numbers = true)]
        m: i64,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        ell: Vec<u64>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_QMAX)]
        qmax: usize,
        /// Omit timings, so that repeated runs give identical output.
        #[arg(long)]
        canonical: bool,
    },
    /// Compare computed values with the bundled expected table.
    Verify {
        /// fast, slow, paper-pid or all.
        suite: Option<String>,
        /// Check these fields instead of a suite.
        #[arg(short, long, allow_negative_numbers = true)]
        m: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        ell: Vec<u64>,
        #[arg(long, default_value_t = DEFAULT_QMAX)]
        qmax: usize,
        /// Print the checks as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn input_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn status(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if matches!(e, Error::Input(_)) { 2 } else { 3 })
}

fn verify(suite: Option<String>, ms: Vec<i64>, ells: Vec<u64>, cache: Option<PathBuf>, qmax: usize, json: bool) -> ExitCode {
    let table = match ExpectedTable::bundled() {
        Ok(t) => t,
        Err(e) => return status(&e),
    };
    let suite = match (suite, ms.is_empty()) {
        (Some(_), false) => return input_error("give either a suite or fields, not both"),
        (Some(name), true) => table.suite(&name),
        (None, false) => adhoc_suite(&ms, &ells, &table),
        (None, true) => table.suite("fast"),
    };
    let suite = match suite {
        Ok(s) => s,
        Err(e) => return status(&e),
    };
    let outcomes = run_suite(&suite, &table, cache.as_deref(), qmax);
    if json {
        println!("{}", serde_json::to_string_pretty(&outcomes).expect("outcomes serialise"));
    } else {
        print!("{}", render(&outcomes));
        let checks: Vec<_> = outcomes.iter().flat_map(|o| &o.checks).collect();
        let failed = checks.iter().filter(|c| !c.pass).count() + outcomes.iter().filter(|o| o.error.is_some()).count();
        println!("{} checks, {} failed", checks.len(), failed);
    }
    ExitCode::from(exit_code(&outcomes) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache = cache_dir(cli.cache.as_deref());
    match (cli.verify, cli.command) {
        (Some(_), Some(_)) => input_error("--verify cannot be combined with a subcommand"),
        (Some(suite), None) => verify(Some(suite), Vec::new(), vec![2, 3], cache, DEFAULT_QMAX, false),
        (None, Some(Command::Verify { suite, m, ell, qmax, json })) => verify(suite, m, ell, cache, qmax, json),
        (None, Some(Command::Compute { m, ell, out, qmax, canonical })) => {
            let report = match compute(m, &ell, cache.as_deref(), qmax) {
                Ok(r) => r,
                Err(e) => return status(&e),
            };
            let text = if canonical { canonical_json(&report) } else { serde_json::to_string_pretty(&report).expect("report serialises") };
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text + "\n") {
                        return input_error(format!("cannot write {}: {e}", path.display()));
                    }
                }
                None => println!("{text}"),
            }
            ExitCode::SUCCESS
        }
        (None, None) => input_error("nothing to do; try `bianchi compute -m 2` or `bianchi verify fast`"),
    }
}
