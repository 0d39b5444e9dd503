use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use toric_extremal::cli::{run, Command, Outcome};
use toric_extremal::config::RunConfig;
use toric_extremal::Result;

#[derive(Parser)]
#[command(name = "toric-extremal", version, about = "Weighted K-stability and extremal metrics on toric fibrations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write plot data as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that the normals at every vertex form a lattice basis.
    CheckDelzant(Common),
    /// Solve for the extremal affine function and print the weights.
    Extremal(Common),
    /// Futaki invariant of the configured test function.
    Futaki(Common),
    /// Search crease functions for a destabilizer.
    StabilityScan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        offsets: Option<usize>,
        /// Golden-section refinement of the best offsets.
        #[arg(long)]
        refine: Option<bool>,
    },
    /// Exact profile on an interval.
    #[command(name = "solve-1d")]
    Solve1d(Common),
    /// Polynomial almost-Kähler certificate on a polygon.
    SolveAk {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        degree: Option<u32>,
    },
    /// Solver plus crease scan, with a combined verdict.
    Certify(Common),
    /// Mabuchi energy of the configured potential.
    Mabuchi(Common),
    /// Certify every class in the configured sweep.
    Scenario(Common),
}

fn prepare(cmd: &Cmd) -> Result<(Command, RunConfig)> {
    let (command, common) = match cmd {
        Cmd::CheckDelzant(c) => (Command::CheckDelzant, c),
        Cmd::Extremal(c) => (Command::Extremal, c),
        Cmd::Futaki(c) => (Command::Futaki, c),
        Cmd::StabilityScan { common, .. } => (Command::StabilityScan, common),
        Cmd::Solve1d(c) => (Command::Solve1D, c),
        Cmd::SolveAk { common, .. } => (Command::SolveAk, common),
        Cmd::Certify(c) => (Command::Certify, c),
        Cmd::Mabuchi(c) => (Command::Mabuchi, c),
        Cmd::Scenario(c) => (Command::Scenario, c),
    };
    let mut cfg = RunConfig::load(&common.config)?;
    match cmd {
        Cmd::StabilityScan {
            directions,
            offsets,
            refine,
            ..
        } => {
            cfg.scan.directions = directions.unwrap_or(cfg.scan.directions);
            cfg.scan.offsets = offsets.unwrap_or(cfg.scan.offsets);
            cfg.scan.refine = refine.unwrap_or(cfg.scan.refine);
        }
        Cmd::SolveAk { degree: Some(d), .. } => cfg.solver.degree = Some(*d),
        _ => {}
    }
    if common.report.is_some() {
        cfg.output.report = common.report.clone();
    }
    if common.csv.is_some() {
        cfg.output.csv = common.csv.clone();
    }
    cfg.validate()?;
    Ok((command, cfg))
}

fn emit(out: &Outcome, cfg: &RunConfig) -> Result<()> {
    let json = serde_json::to_string_pretty(&out.report)?;
    match &cfg.output.report {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    if out.wants_csv(cfg) {
        let csv = out.table.as_ref().map(|t| t.to_csv()).unwrap_or_default();
        let path = cfg
            .output
            .csv
            .clone()
            .or_else(|| cfg.output.report.as_deref().map(|p| Path::new(p).with_extension("csv")));
        match path {
            Some(p) => std::fs::write(p, csv)?,
            None => eprintln!("csv output requested without a path; pass --csv or --report"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = prepare(&cli.command).and_then(|(cmd, cfg)| {
        let out = run(cmd, &cfg)?;
        emit(&out, &cfg)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            if let Some(d) = &out.diagnostic {
                eprintln!("{d}");
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
