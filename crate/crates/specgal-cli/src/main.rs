//! Batch driver for spectral Galerkin experiments.
//!
//! ```text
//! specgal solve <config.ini>        run one experiment
//! specgal benchmark <config.ini>    run all preconditioner kinds, tabulate
//! specgal verify <config.ini>       oracle suite on a shrunken instance
//! specgal kl-spectrum <config.ini>  export the KL spectrum as CSV
//!
//! flags: --threads N   cap worker threads (default: hardware parallelism)
//!        --output DIR  override [output] dir
//!        --seed K      override [problem] seed
//! ```

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

struct Cli {
    command: String,
    config_path: PathBuf,
    threads: Option<usize>,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

const USAGE: &str = "\
usage: specgal <solve|benchmark|verify|kl-spectrum> <config.ini>
               [--threads N] [--output DIR] [--seed K]";

fn parse_args(mut args: Vec<String>) -> Result<Cli, String> {
    let mut positional = Vec::new();
    let mut threads = None;
    let mut output = None;
    let mut seed = None;
    args.reverse();
    while let Some(arg) = args.pop() {
        let (flag, inline_value) = match arg.split_once('=') {
            Some((f, v)) if f.starts_with("--") => (f.to_string(), Some(v.to_string())),
            _ => (arg.clone(), None),
        };
        let mut take_value = |name: &str| -> Result<String, String> {
            if let Some(v) = inline_value.clone() {
                return Ok(v);
            }
            args.pop().ok_or(format!("{name} expects a value"))
        };
        match flag.as_str() {
            "--threads" => {
                threads = Some(
                    take_value("--threads")?
                        .parse()
                        .map_err(|e| format!("--threads: {e}"))?,
                )
            }
            "--output" => output = Some(PathBuf::from(take_value("--output")?)),
            "--seed" => {
                seed = Some(
                    take_value("--seed")?
                        .parse()
                        .map_err(|e| format!("--seed: {e}"))?,
                )
            }
            "--help" | "-h" => return Err(USAGE.to_string()),
            _ if flag.starts_with("--") => return Err(format!("unknown flag {flag}\n{USAGE}")),
            _ => positional.push(arg),
        }
    }
    if positional.len() != 2 {
        return Err(USAGE.to_string());
    }
    let command = positional[0].clone();
    Ok(Cli {
        command,
        config_path: PathBuf::from(&positional[1]),
        threads,
        output,
        seed,
    })
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };

    if !matches!(
        cli.command.as_str(),
        "solve" | "benchmark" | "verify" | "kl-spectrum"
    ) {
        eprintln!("unknown command `{}`\n{USAGE}", cli.command);
        return ExitCode::from(1);
    }

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("--threads: {e}");
            return ExitCode::from(1);
        }
    }

    let mut config = match run::load_config(&cli.config_path) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = cli.output {
        config.output.dir = dir;
    }
    if let Some(seed) = cli.seed {
        config.problem.seed = seed;
    }

    let outcome = match cli.command.as_str() {
        "solve" => run::run_solve(&config),
        "benchmark" => run::run_benchmark(&config),
        "verify" => run::run_verify(&config),
        "kl-spectrum" => run::run_kl_spectrum(&config),
        _ => unreachable!("command validated above"),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
