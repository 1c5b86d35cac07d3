//! Command-line front end.
//!
//! Usage: `liouville-lab <command> --config <file.json> [--out-dir <dir>]
//! [--seed <n>] [--threads <k>]`
//!
//! One JSON config per invocation; outputs are CSV/JSON files under the
//! output directory and byte-reproducible for a given config. Exit codes:
//! 0 success, 2 usage/config error, 3 numerical failure. Errors go to
//! stderr as one machine-readable JSON object.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// Bad usage or config: exit 2.
    Config(String),
    /// The computation itself failed: exit 3.
    Runtime(String),
}

const USAGE: &str = "usage: liouville-lab <pdf|mc|fp|moments|fhhs|fit> --config <file.json> \
[--out-dir <dir>] [--seed <n>] [--threads <k>]

Thread count defaults to the LIOUVILLE_LAB_THREADS environment variable,
then to one worker per core.";

struct Args {
    command: String,
    config: PathBuf,
    out_dir: PathBuf,
    seed: Option<u64>,
    threads: Option<usize>,
}

fn parse_args(argv: &[String]) -> CliResult<Args> {
    if argv.is_empty() || argv[0] == "--help" || argv[0] == "-h" {
        return Err(CliError::Config(USAGE.into()));
    }
    let command = argv[0].clone();
    let mut config = None;
    let mut out_dir = PathBuf::from(".");
    let mut seed = None;
    let mut threads = None;
    let mut it = argv[1..].iter();
    while let Some(flag) = it.next() {
        let mut value = |name: &str| {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Config(format!("flag {name} needs a value")))
        };
        match flag.as_str() {
            "--config" => config = Some(PathBuf::from(value("--config")?)),
            "--out-dir" => out_dir = PathBuf::from(value("--out-dir")?),
            "--seed" => {
                seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|e| CliError::Config(format!("bad --seed: {e}")))?,
                )
            }
            "--threads" => {
                threads = Some(
                    value("--threads")?
                        .parse()
                        .map_err(|e| CliError::Config(format!("bad --threads: {e}")))?,
                )
            }
            other => return Err(CliError::Config(format!("unknown flag '{other}'\n{USAGE}"))),
        }
    }
    let config =
        config.ok_or_else(|| CliError::Config(format!("--config is required\n{USAGE}")))?;
    Ok(Args {
        command,
        config,
        out_dir,
        seed,
        threads,
    })
}

fn init_thread_pool(requested: Option<usize>) -> CliResult<()> {
    let threads = match requested {
        Some(k) => Some(k),
        None => match std::env::var("LIOUVILLE_LAB_THREADS") {
            Ok(v) => Some(
                v.parse()
                    .map_err(|e| CliError::Config(format!("bad LIOUVILLE_LAB_THREADS: {e}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(k) = threads {
        if k == 0 {
            return Err(CliError::Config("thread count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run() -> CliResult<()> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = parse_args(&argv)?;
    init_thread_pool(args.threads)?;
    let config_text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config_dir = args
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let written = match args.command.as_str() {
        "pdf" => commands::cmd_pdf(&config_text, &args.out_dir)?,
        "mc" => commands::cmd_mc(&config_text, &args.out_dir, args.seed)?,
        "fp" => commands::cmd_fp(&config_text, &args.out_dir)?,
        "moments" => commands::cmd_moments(&config_text, &args.out_dir)?,
        "fhhs" => commands::cmd_fhhs(&config_text, &args.out_dir)?,
        "fit" => commands::cmd_fit(&config_text, &args.out_dir, &config_dir)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown command '{other}'\n{USAGE}"
            )))
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, message, code) = match &e {
                CliError::Config(m) => ("config", m, 2),
                CliError::Runtime(m) => ("runtime", m, 3),
            };
            let payload = serde_json::json!({"error": {"kind": kind, "message": message}});
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}
