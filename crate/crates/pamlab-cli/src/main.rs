use clap::Parser;
use pamlab_cli::{run, write_report, CliError, ExperimentConfig, Format};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs one pamlab experiment and writes a JSON report plus CSV curves.
#[derive(Parser, Debug)]
#[command(name = "pamlab", version, after_help = "Any config key can be overridden with `--key value` (e.g. `--seed 3 --t 5,10`).")]
struct Cli {
    /// constants, verify-h, verify-j, campbell, tilt-clt, local-limit, ids, laplace-identity, annealed,
    /// quenched, pocket or pocket-prob
    experiment: String,

    /// flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,

    /// `--key value` overrides applied after the config file
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

fn overrides(cfg: &mut ExperimentConfig, args: &[String]) -> Result<(), CliError> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| CliError::Config(format!("expected `--key value`, got `{a}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            cfg.set(k, v)?;
        } else {
            let v = it.next().ok_or_else(|| CliError::Config(format!("--{key} needs a value")))?;
            cfg.set(key, v)?;
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = cli.experiment.clone();
    overrides(&mut cfg, &cli.overrides)?;
    let report = run(&cfg)?;
    let mut paths = write_report(&report, Format::Json, &cfg.output)?;
    paths.extend(write_report(&report, Format::Csv, &cfg.output)?);
    for a in &report.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    for p in &paths {
        println!("wrote {}", p.display());
    }
    println!("config hash {} ({:.2} s)", report.config_hash, report.wall_time_s);
    Ok(report.passed())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
