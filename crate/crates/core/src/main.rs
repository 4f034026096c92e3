use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use feec_swe::driver::{check_conservation, check_mimetic, convergence, run, CheckReport, RunConfig};
use feec_swe::femspaces::{build_space_complex, Family};
use feec_swe::mesh::{build_dual_mesh, build_periodic_mesh, io::write_mesh, CellKind};
use feec_swe::{Error, Result};

#[derive(Parser)]
#[command(name = "feec-swe", version, about = "Mimetic finite element rotating shallow-water solver on periodic planar meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; writes diagnostics.csv, snapshots and summary.json.
    Run { config: PathBuf },
    /// d² = 0, Betti numbers, (δʰ)² = 0, harmonic forms, commuting diagram.
    CheckMimetic {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        fields: usize,
    },
    /// Energy, enstrophy, constant-PV and flux-recovery checks on random states.
    CheckConservation {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        states: usize,
    },
    /// Gravity-wave refinement sweep; prints and writes the slope table.
    Convergence { config: PathBuf },
    /// Write a periodic mesh (and optionally its matrices) as text.
    ExportMesh {
        #[arg(long, default_value = "quad")]
        kind: String,
        #[arg(long, default_value_t = 8)]
        nx: usize,
        #[arg(long, default_value_t = 8)]
        ny: usize,
        #[arg(long, default_value_t = 1.0)]
        lx: f64,
        #[arg(long, default_value_t = 1.0)]
        ly: f64,
        /// Export the dual mesh instead.
        #[arg(long)]
        dual: bool,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for `row col value` dumps of M0, M1, M2, D01, D12.
        #[arg(long)]
        matrices: Option<PathBuf>,
        #[arg(long, default_value = "P1/RT0/P0")]
        family: String,
    },
}

fn print_report(r: &CheckReport) -> ExitCode {
    for l in &r.lines {
        println!("{l}");
    }
    if r.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn export_mesh(kind: &str, nx: usize, ny: usize, lx: f64, ly: f64, dual: bool, out: Option<&Path>, matrices: Option<&Path>, family: &str) -> Result<()> {
    let kind = CellKind::from_name(kind).ok_or_else(|| Error::Config(format!("unknown mesh kind '{kind}'")))?;
    let mut mesh = build_periodic_mesh(kind, nx, ny, lx, ly)?;
    if dual {
        mesh = build_dual_mesh(&mesh)?;
    }
    match out {
        Some(p) => write_mesh(&mesh, fs::File::create(p)?)?,
        None => write_mesh(&mesh, std::io::stdout().lock())?,
    }
    if let Some(dir) = matrices {
        let fam = Family::from_name(family).ok_or_else(|| Error::Config(format!("unknown family '{family}'")))?;
        let sp = build_space_complex(&mesh, fam)?;
        fs::create_dir_all(dir)?;
        for (name, m) in [("M0", &sp.m0), ("M1", &sp.m1), ("M2", &sp.m2), ("D01", &sp.d01), ("D12", &sp.d12)] {
            fs::write(dir.join(format!("{name}.txt")), m.to_coordinate_text())?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_file(&config)?;
            let s = run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&s).map_err(|e| Error::Config(e.to_string()))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckMimetic { config, fields } => Ok(print_report(&check_mimetic(&RunConfig::from_file(&config)?, fields)?)),
        Command::CheckConservation { config, states } => Ok(print_report(&check_conservation(&RunConfig::from_file(&config)?, states)?)),
        Command::Convergence { config } => {
            let cfg = RunConfig::from_file(&config)?;
            let rep = convergence(&cfg)?;
            println!("{:>6} {:>14} {:>14} {:>8}", "n", "h", "error", "slope");
            for (i, r) in rep.rows.iter().enumerate() {
                let slope = if i == 0 { String::from("-") } else { format!("{:.3}", rep.slopes[i - 1]) };
                println!("{:>6} {:>14.6e} {:>14.6e} {:>8}", r.n, r.h, r.error, slope);
            }
            println!("fitted slope {:.3}", rep.fitted_slope());
            fs::create_dir_all(&cfg.output_dir)?;
            fs::write(cfg.output_dir.join("convergence.csv"), rep.to_table())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportMesh { kind, nx, ny, lx, ly, dual, out, matrices, family } => {
            export_mesh(&kind, nx, ny, lx, ly, dual, out.as_deref(), matrices.as_deref(), &family)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
