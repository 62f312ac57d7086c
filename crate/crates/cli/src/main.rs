//! regime-vol-lab: volatility-modeling workbench around switching
//! smooth-transition long-memory models.

use std::path::PathBuf;
use std::process::ExitCode;

use regime_vol_cli::commands;
use regime_vol_cli::config::RunConfig;
use regime_vol_cli::error::{CliError, EXIT_UNSTABLE};

const USAGE: &str = "\
regime-vol-lab <simulate|stability|fit|forecast|backtest> --config <path> \
[--seed N] [--out DIR] [key=value ...]

Subcommands
  simulate   draw a return path with latent states; writes returns.csv,
             states.csv, simulate_summary.txt
  stability  second-moment stability analysis; writes stability_report.txt;
             exit 0 when stable, 10 when unstable
  fit        Gibbs estimation on the in-sample segment; writes draws.csv,
             fit_summary.txt, hist_<param>.csv, fitted_params.conf
  forecast   regime filter and one-step-ahead variance forecasts; writes
             forecast.csv, forecast_metrics.txt
  backtest   VaR coverage tests on the out-of-sample segment; writes
             backtest_report.txt, exceptions_<rho>.csv

Flags
  --config <path>   flat key-value run configuration (required)
  --seed N          override the `seed` key
  --out DIR         output directory (default: $REGIME_VOL_LAB_OUT or .)
  key=value         override any config key

Exit codes
  0 success (stability: model stable)   2 usage/validation error
  3 computation error                   4 I/O error
  10 model unstable (stability only)
";

struct Args {
    subcommand: String,
    config_path: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: Vec<String>,
}

enum Parsed {
    Run(Args),
    Help,
    Version,
}

fn parse_args(argv: &[String]) -> Result<Parsed, CliError> {
    if argv.iter().any(|a| a == "--help" || a == "-h") {
        return Ok(Parsed::Help);
    }
    if argv.iter().any(|a| a == "--version" || a == "-V") {
        return Ok(Parsed::Version);
    }
    if argv.is_empty() {
        return Err(CliError::usage(USAGE));
    }
    let subcommand = argv[0].clone();
    let mut config_path = None;
    let mut seed = None;
    let mut out = None;
    let mut overrides = Vec::new();
    let mut i = 1;
    while i < argv.len() {
        match argv[i].as_str() {
            "--config" => {
                i += 1;
                config_path =
                    Some(PathBuf::from(argv.get(i).ok_or_else(|| {
                        CliError::usage("--config requires a path argument")
                    })?));
            }
            "--seed" => {
                i += 1;
                let raw = argv
                    .get(i)
                    .ok_or_else(|| CliError::usage("--seed requires a value"))?;
                seed = Some(raw.parse::<u64>().map_err(|_| {
                    CliError::usage(format!("--seed: `{raw}` is not a non-negative integer"))
                })?);
            }
            "--out" => {
                i += 1;
                out = Some(PathBuf::from(argv.get(i).ok_or_else(|| {
                    CliError::usage("--out requires a directory argument")
                })?));
            }
            other if other.contains('=') && !other.starts_with("--") => {
                overrides.push(other.to_string());
            }
            other => {
                return Err(CliError::usage(format!(
                    "unrecognized argument `{other}`\n\n{USAGE}"
                )))
            }
        }
        i += 1;
    }
    Ok(Parsed::Run(Args {
        subcommand,
        config_path: config_path
            .ok_or_else(|| CliError::usage(format!("--config is required\n\n{USAGE}")))?,
        seed,
        out,
        overrides,
    }))
}

fn run() -> Result<ExitCode, CliError> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv)? {
        Parsed::Help => {
            println!("{USAGE}");
            return Ok(ExitCode::SUCCESS);
        }
        Parsed::Version => {
            println!("regime-vol-lab {}", env!("CARGO_PKG_VERSION"));
            return Ok(ExitCode::SUCCESS);
        }
        Parsed::Run(args) => args,
    };

    let mut cfg = RunConfig::from_file(&args.config_path)?;
    for assignment in &args.overrides {
        cfg.apply_override(assignment)?;
    }
    if let Some(seed) = args.seed {
        cfg.apply_override(&format!("seed={seed}"))?;
    }
    cfg.out_dir = args
        .out
        .or_else(|| std::env::var_os("REGIME_VOL_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match args.subcommand.as_str() {
        "simulate" => commands::cmd_simulate(&cfg).map(|()| ExitCode::SUCCESS),
        "stability" => commands::cmd_stability(&cfg).map(|stable| {
            if stable {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_UNSTABLE)
            }
        }),
        "fit" => commands::cmd_fit(&cfg).map(|()| ExitCode::SUCCESS),
        "forecast" => commands::cmd_forecast(&cfg).map(|()| ExitCode::SUCCESS),
        "backtest" => commands::cmd_backtest(&cfg).map(|()| ExitCode::SUCCESS),
        other => Err(CliError::usage(format!(
            "unknown subcommand `{other}`\n\n{USAGE}"
        ))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
