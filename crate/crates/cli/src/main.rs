use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use asc_cli::config::parse_config;
use asc_cli::report::{report_json, to_csv, to_json_string, PointReport};
use asc_cli::tasks::{run, status_of, RunOptions};
use asc_cli::verify::{catalog_listing, verify};
use asc_cli::{CliError, ExitStatus};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "asc", version, about = "Conformal hypersurface invariants and the singular Yamabe obstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Problem description (JSON); `-` reads standard input.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the config's jet order.
    #[arg(long, global = true)]
    jet_order: Option<usize>,
    /// Multiplies every residual tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Seed for randomized identity-suite fields.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress the summary on standard error.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the tasks of a config file.
    Run,
    /// Run the built-in geometry and surface battery.
    Verify,
    /// List surface and metric presets.
    Catalog,
}

fn read_config(path: &PathBuf) -> Result<String, CliError> {
    let io_err = |source| CliError::Io { path: path.display().to_string(), source };
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).map_err(io_err)?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(io_err)
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string())),
    }
}

fn render(cli: &Cli, meta: Value, points: &[PointReport]) -> Result<String, CliError> {
    match cli.format {
        Format::Json => Ok(to_json_string(&report_json(meta, points))),
        Format::Csv => to_csv(points),
    }
}

fn summarize(cli: &Cli, points: &[PointReport], status: ExitStatus) {
    if cli.quiet {
        return;
    }
    let checks: usize = points.iter().map(|p| p.residuals.len()).sum();
    let failed: usize = points.iter().map(|p| p.residuals.values().filter(|r| !r.passes()).count()).sum();
    let errors: usize = points.iter().map(|p| p.errors.len()).sum();
    eprintln!(
        "asc: {} points, {checks} residual checks, {failed} failed, {errors} task errors: {}",
        points.len(),
        match status {
            ExitStatus::Pass => "pass",
            ExitStatus::ResidualFailure => "residual failure",
            ExitStatus::InputError => "input error",
            ExitStatus::NumericError => "numeric error",
        }
    );
}

fn execute(cli: &Cli) -> Result<ExitStatus, CliError> {
    if !(cli.tolerance_scale > 0.0 && cli.tolerance_scale.is_finite()) {
        return Err(CliError::schema("--tolerance-scale", "must be a positive number"));
    }
    let opts = RunOptions { jet_order: cli.jet_order, tolerance_scale: cli.tolerance_scale, seed: cli.seed };
    match cli.command {
        Command::Run => {
            let path = cli.config.as_ref().ok_or_else(|| CliError::schema("--config", "run needs a config file"))?;
            let cfg = parse_config(&read_config(path)?)?;
            let out = run(&cfg, &opts)?;
            let status = out.status();
            emit(cli, &render(cli, out.meta, &out.points)?)?;
            summarize(cli, &out.points, status);
            Ok(status)
        }
        Command::Verify => {
            let out = verify(&opts)?;
            let status = status_of(&out.points);
            emit(cli, &render(cli, out.meta, &out.points)?)?;
            summarize(cli, &out.points, status);
            Ok(status)
        }
        Command::Catalog => {
            let listing = catalog_listing();
            let text = match cli.format {
                Format::Json => to_json_string(&listing),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let err = |e: csv::Error| CliError::Output(e.to_string());
                    w.write_record(["name", "dimension", "defining_function", "known_obstruction"]).map_err(err)?;
                    for s in listing["surfaces"].as_array().into_iter().flatten() {
                        let known = s["known_obstruction"].as_f64().map(asc_cli::report::format_f64).unwrap_or_default();
                        let field = |k: &str| s[k].as_str().map(str::to_string).unwrap_or_else(|| s[k].to_string());
                        w.write_record([field("name"), field("dimension"), field("defining_function"), known]).map_err(err)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| CliError::Output(e.to_string()))?)
                        .map_err(|e| CliError::Output(e.to_string()))?
                }
            };
            emit(cli, &text)?;
            Ok(ExitStatus::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("asc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
