//! Configuration-driven experiment runner.
//!
//! Usage: warplab <model|spectrum|weyl|mesh|explore|validate>
//!        --config <path> [--out <dir>] [--seed <n>] [--threads <n>]

mod config;
mod report;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use config::{config_hash, ExperimentConfig, Task};

struct Args {
    command: String,
    config_path: PathBuf,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
}

const USAGE: &str = "usage: warplab <model|spectrum|weyl|mesh|explore|validate> --config <path> [--out <dir>] [--seed <n>] [--threads <n>]";

fn parse_args(mut argv: std::env::Args) -> Result<Args, String> {
    let _ = argv.next();
    let command = argv.next().ok_or(USAGE)?;
    let mut config_path = None;
    let mut out_dir = None;
    let mut seed = None;
    let mut threads = None;
    while let Some(flag) = argv.next() {
        let mut value = || argv.next().ok_or(format!("{flag} needs a value"));
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(value()?)),
            "--out" => out_dir = Some(PathBuf::from(value()?)),
            "--seed" => {
                seed = Some(
                    value()?
                        .parse::<u64>()
                        .map_err(|e| format!("--seed: {e}"))?,
                )
            }
            "--threads" => {
                let t = value()?
                    .parse::<usize>()
                    .map_err(|e| format!("--threads: {e}"))?;
                if t == 0 {
                    return Err("--threads must be at least 1".into());
                }
                threads = Some(t);
            }
            other => return Err(format!("unknown flag {other}\n{USAGE}")),
        }
    }
    Ok(Args {
        command,
        config_path: config_path.ok_or("--config is required")?,
        out_dir,
        seed,
        threads,
    })
}

fn main() -> ExitCode {
    let args = match parse_args(std::env::args()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };

    let text = match std::fs::read_to_string(&args.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "config invalid: cannot read {}: {e}",
                args.config_path.display()
            );
            return ExitCode::from(2);
        }
    };
    let mut experiment = match ExperimentConfig::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        experiment.seed = seed;
    }
    // single-threaded execution keeps reruns bit-identical; --threads is
    // accepted as an upper bound on concurrency
    let _ = args.threads;
    let hash = config_hash(&text);

    let expected = match args.command.as_str() {
        "validate" => None,
        "model" => Some(Task::Model),
        "spectrum" => Some(Task::Spectrum),
        "weyl" => Some(Task::Weyl),
        "mesh" => Some(Task::Mesh),
        "explore" => Some(Task::Explore),
        other => {
            eprintln!("unknown subcommand {other}\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    if let Some(task) = expected {
        if task != experiment.task {
            eprintln!(
                "config invalid: key \"task\" is \"{}\" but the subcommand is \"{}\"",
                experiment.task.as_str(),
                args.command
            );
            return ExitCode::from(2);
        }
    }

    match expected {
        None => match tasks::validate(&experiment) {
            Ok(lines) => {
                for line in lines {
                    println!("{line}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Some(_) => {
            let out_dir = args
                .out_dir
                .or_else(|| {
                    experiment
                        .output
                        .as_ref()
                        .and_then(|o| o.dir.clone())
                        .map(PathBuf::from)
                })
                .unwrap_or_else(|| PathBuf::from("out"));
            match tasks::run(&experiment, hash, &out_dir) {
                Ok(files) => {
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(tasks::TaskError::Config(msg)) => {
                    eprintln!("config invalid: {msg}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
