//! Command-line front end: seeded experiments comparing scheduling schemes
//! across precoder architectures, lambda sweeps, and single-window or
//! schedule dumps.

use hydrawave::config::{parse_config, Scheme, SimConfig};
use hydrawave::sim;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
hydrawave <subcommand> [options]

Subcommands:
  simulate       run all configured schemes over the realization grid
  sweep-lambda   evaluate the exact scheduler across IGC ceilings
  design         design one scheduling window and dump the precoders
  schedule       dump the schedule one scheme produces on one realization

Options:
  --config <path>    flat key=value config file (defaults apply when absent)
  --seed <n>         override the config seed
  --out <path>       write output here instead of stdout
  --scheme <name>    restrict to one scheme (simulate, schedule)
  --mode <name>      override the precoder mode: digital | hybrid | analog
  --lambdas <list>   comma-separated lambda values (sweep-lambda)
  --groups <list>    comma-separated group indices (design)
  --realization <n>  realization index (schedule; default 0)
";

struct Cli {
    command: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    scheme: Option<Scheme>,
    mode: Option<String>,
    lambdas: Vec<f64>,
    groups: Vec<usize>,
    realization: usize,
}

fn parse_args(mut args: std::env::Args) -> Result<Cli, String> {
    let _ = args.next();
    let command = args.next().ok_or_else(|| USAGE.to_string())?;
    let mut cli = Cli {
        command,
        config: None,
        seed: None,
        out: None,
        scheme: None,
        mode: None,
        lambdas: vec![0.0, 0.05, 0.1, 0.2, 0.5, 1.0],
        groups: Vec::new(),
        realization: 0,
    };
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or(format!("flag {flag} needs a value"));
        match flag.as_str() {
            "--config" => cli.config = Some(PathBuf::from(value()?)),
            "--seed" => cli.seed = Some(value()?.parse().map_err(|_| "seed must be an integer")?),
            "--out" => cli.out = Some(PathBuf::from(value()?)),
            "--scheme" => cli.scheme = Some(value()?.parse()?),
            "--mode" => cli.mode = Some(value()?),
            "--lambdas" => {
                cli.lambdas = value()?
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| format!("bad lambda '{s}'"))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "--groups" => {
                cli.groups = value()?
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| format!("bad group '{s}'"))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "--realization" => {
                cli.realization = value()?
                    .parse()
                    .map_err(|_| "realization must be an integer")?
            }
            "--help" | "-h" => return Err(USAGE.to_string()),
            other => return Err(format!("unknown flag '{other}'\n\n{USAGE}")),
        }
    }
    Ok(cli)
}

fn load_config(cli: &Cli) -> Result<SimConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path).map_err(|e| e.to_string())?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = &cli.mode {
        cfg.precoder_mode = mode.parse()?;
    }
    if let Some(scheme) = cli.scheme {
        cfg.schemes = vec![scheme];
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let cfg = load_config(&cli)?;
    let text = match cli.command.as_str() {
        "simulate" => sim::run_experiment(&cfg).map_err(|e| e.to_string())?,
        "sweep-lambda" => sim::sweep_lambda(&cfg, &cli.lambdas).map_err(|e| e.to_string())?,
        "design" => {
            let groups = if cli.groups.is_empty() {
                (0..cfg.g_total.min(cfg.effective_n_rf())).collect()
            } else {
                cli.groups.clone()
            };
            sim::design_dump(&cfg, &groups).map_err(|e| e.to_string())?
        }
        "schedule" => {
            let scheme = cli.scheme.unwrap_or(Scheme::Hydrawave);
            sim::schedule_dump(&cfg, scheme, cli.realization).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown subcommand '{other}'\n\n{USAGE}")),
    };
    emit(&cli, &text)
}

fn main() -> ExitCode {
    match parse_args(std::env::args()) {
        Ok(cli) => match run(cli) {
            Ok(()) => ExitCode::SUCCESS,
            Err(msg) => {
                eprintln!("{msg}");
                ExitCode::FAILURE
            }
        },
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
