use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biot_precond::analysis::{estimate_infsup, spectrum_bounds, InfSupPair};
use biot_precond::assembly::{Formulation, MaterialParams, ReferenceSystem};
use biot_precond::linalg::{minres, EigMode, DEFAULT_MAXITER, DEFAULT_RTOL};
use biot_precond::mesh::build_structured_mesh;
use biot_precond::sweep::{emit_table, run_sweep, SweepConfig, SweepResult, TableFormat};
use biot_precond::{BiotError, PrecKind, PreconditionerSpec};
use clap::{Args, Parser, Subcommand};

/// Fluid-mobility value assumed for condition-number comparisons when none is given.
const DEFAULT_COND_KAPPA: f64 = 1e7;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Biot(#[from] BiotError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_or_print(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "biot-prec", version, about = "Block-preconditioner benchmarks for the Biot footing problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a parameter sweep and emit its table.
    Sweep {
        /// JSON file with SweepConfig fields; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add the 128×128 mesh to the mesh list.
        #[arg(long)]
        with_128: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-render a CSV or JSON sweep result.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete inf-sup constants on meshes 2, 4, …, nmax.
    Infsup {
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[command(flatten)]
        material: Material,
    },
    /// Condition number of one preconditioned footing system.
    Cond {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value = "p1")]
        prec: String,
        #[command(flatten)]
        material: Material,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value = "lanczos")]
        mode: String,
    },
    /// Solve one footing system and report the MINRES history.
    Solve {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value = "p1")]
        prec: String,
        #[command(flatten)]
        material: Material,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RTOL)]
        rtol: f64,
        #[arg(long, default_value_t = DEFAULT_MAXITER)]
        maxiter: usize,
    },
    /// Write the monolithic matrix in Matrix Market format.
    Export {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value = "three-field")]
        formulation: String,
        #[command(flatten)]
        material: Material,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Material {
    #[arg(long = "E", default_value_t = 3e4)]
    young: f64,
    #[arg(long, default_value_t = 0.2)]
    nu: f64,
    /// Defaults to 1e7, an assumed value for the condition-number comparison.
    #[arg(long)]
    kappa: Option<f64>,
}

impl Material {
    fn params(&self) -> CliResult<MaterialParams> {
        Ok(MaterialParams::footing(self.young, self.nu, self.kappa.unwrap_or(DEFAULT_COND_KAPPA))?)
    }
}

fn formulation_of(kind: PrecKind) -> Formulation {
    kind.formulation().unwrap_or(Formulation::ThreeField)
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Sweep { config, format, out, with_128, workers } => {
            let format: TableFormat = format.parse()?;
            let mut cfg = match config {
                Some(p) => SweepConfig::from_json(&read(&p)?)?,
                None => SweepConfig::default(),
            };
            if with_128 && !cfg.mesh_list.contains(&128) {
                cfg.mesh_list.push(128);
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            cfg.validate()?;
            eprintln!("running {} sweep points", cfg.num_points());
            let result = run_sweep(&cfg)?;
            for r in result.rows.iter().filter(|r| !r.notes.is_empty()) {
                eprintln!(
                    "note [{} E={} nu={} kappa={} n={}]: {}",
                    r.prec,
                    r.e,
                    r.nu,
                    r.kappa,
                    r.n,
                    r.notes.join("; ")
                );
            }
            write_or_print(out.as_deref(), &emit_table(&result, format)?)?;
            let failed = result.rows.iter().filter(|r| !r.converged).count();
            if failed > 0 {
                eprintln!("{failed} of {} points did not converge", result.rows.len());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { input, format, out } => {
            let format: TableFormat = format.parse()?;
            let text = read(&input)?;
            let result = if text.trim_start().starts_with('{') {
                SweepResult::from_json(&text)?
            } else {
                SweepResult::from_csv(&text)?
            };
            write_or_print(out.as_deref(), &emit_table(&result, format)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Infsup { nmax, material } => {
            let params = material.params()?;
            println!("| pair | n | h | gamma_h |");
            println!("|---|---:|---:|---:|");
            for pair in InfSupPair::ALL {
                for n in (2..=nmax).step_by(2) {
                    let mesh = build_structured_mesh(n)?;
                    let est = estimate_infsup(pair, &mesh, &params)?;
                    println!("| {} | {} | {} | {:.6} |", pair, n, est.h, est.gamma);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Cond { n, prec, material, beta, mode } => {
            let kind: PrecKind = prec.parse()?;
            let mode: EigMode = mode.parse()?;
            let params = material.params()?;
            let mesh = build_structured_mesh(n)?;
            let (op, _) = ReferenceSystem::new(&mesh, formulation_of(kind))?.instantiate(&params)?;
            let p = PreconditionerSpec::with_beta(kind, beta)?.build(&op)?;
            let b = spectrum_bounds(&op, &p, mode)?;
            if material.kappa.is_none() {
                eprintln!("note: kappa = {DEFAULT_COND_KAPPA:e} assumed");
            }
            for note in p.notes() {
                eprintln!("note: {note}");
            }
            println!(
                "prec={} n={} E={} nu={} kappa={} min|lambda|={:.6e} max|lambda|={:.6e} cond={:.6}",
                kind,
                n,
                params.young(),
                params.poisson(),
                params.kappa(),
                b.min_abs,
                b.max_abs,
                b.condition_number()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { n, prec, material, beta, rtol, maxiter } => {
            let kind: PrecKind = prec.parse()?;
            let params = material.params()?;
            let mesh = build_structured_mesh(n)?;
            let (op, rhs) = ReferenceSystem::new(&mesh, formulation_of(kind))?.instantiate(&params)?;
            let p = PreconditionerSpec::with_beta(kind, beta)?.build(&op)?;
            let (_, report) = minres(&op.monolithic(), &p, &rhs, rtol, maxiter)?;
            for (k, r) in report.history.iter().enumerate() {
                println!("{k} {r:.6e}");
            }
            eprintln!(
                "iterations={} converged={} time={:.3}s",
                report.iterations, report.converged, report.wall_time_s
            );
            Ok(if report.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Export { n, formulation, material, out } => {
            let formulation: Formulation = formulation.parse()?;
            let mesh = build_structured_mesh(n)?;
            let (op, _) = ReferenceSystem::new(&mesh, formulation)?.instantiate(&material.params()?)?;
            write_or_print(out.as_deref(), &op.to_matrix_market())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
