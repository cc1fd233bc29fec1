use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ncstokes_core::assembly::{QuadratureOrders, DEFAULT_TOLERANCE};
use ncstokes_core::cases::{BiharmonicCase, StokesCase};
use ncstokes_core::convergence::{
    complex_to_csv, complex_to_table, run_biharmonic, run_complex_check, run_stokes, to_csv, to_table, SweepConfig,
};
use ncstokes_core::elements::ElementFamily;
use ncstokes_core::mesh::Domain;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

/// Convergence studies for the nonconforming plate / Stokes elements.
#[derive(Debug, Parser)]
#[command(name = "ncstokes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clamped plate problem with the manufactured polynomial solution.
    Biharmonic {
        #[arg(long, value_enum, default_value_t = Element::Plate12)]
        element: Element,
        #[command(flatten)]
        common: Common,
    },
    /// Stokes problem with the manufactured exp/sin solution.
    Stokes {
        #[command(flatten)]
        common: Common,
    },
    /// Dimension, rank and commutativity checks of the discrete complex.
    ComplexCheck {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Element {
    Plate12,
    Adini,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Mesh levels n (n x n cells), strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    levels: Vec<usize>,
    /// Rectangle as x_min,x_max,y_min,y_max.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "0,2,0,1")]
    domain: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Required relative residual of the linear solves.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    /// Gauss points per direction for stiffness matrices.
    #[arg(long, default_value_t = 5)]
    quad_assembly: usize,
    /// Gauss points per direction for load vectors.
    #[arg(long, default_value_t = 10)]
    quad_load: usize,
    /// Gauss points per direction for error norms.
    #[arg(long, default_value_t = 10)]
    quad_error: usize,
}

impl Common {
    fn config(&self) -> anyhow::Result<SweepConfig> {
        let [x0, x1, y0, y1] = self.domain[..] else {
            bail!("--domain expects four numbers, got {}", self.domain.len());
        };
        let config = SweepConfig {
            domain: Domain::new(x0, x1, y0, y1)?,
            levels: self.levels.clone(),
            quadrature: QuadratureOrders {
                assembly: self.quad_assembly,
                load: self.quad_load,
                error: self.quad_error,
            },
            tolerance: self.tol,
        };
        config.validate()?;
        for q in [self.quad_assembly, self.quad_load, self.quad_error] {
            ncstokes_core::quadrature::gauss_1d(q)?;
        }
        Ok(config)
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(stdout.flush()?)
            }
        }
    }
}

enum Failure {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
    Verification(String),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, output, verified) = match &cli.command {
        Command::Biharmonic { element, common } => {
            let config = common.config().map_err(Failure::Usage)?;
            let family = match element {
                Element::Plate12 => ElementFamily::Plate12,
                Element::Adini => ElementFamily::Adini,
            };
            let report = run_biharmonic(&config, family, &BiharmonicCase::standard())
                .map_err(|e| Failure::Solver(e.into()))?;
            let text = match common.format {
                Format::Csv => to_csv(&report),
                Format::Table => to_table(&report),
            };
            (common, text, true)
        }
        Command::Stokes { common } => {
            let config = common.config().map_err(Failure::Usage)?;
            let report = run_stokes(&config, &StokesCase::standard()).map_err(|e| Failure::Solver(e.into()))?;
            let text = match common.format {
                Format::Csv => to_csv(&report),
                Format::Table => to_table(&report),
            };
            (common, text, true)
        }
        Command::ComplexCheck { common } => {
            let config = common.config().map_err(Failure::Usage)?;
            let reports = run_complex_check(&config).map_err(|e| Failure::Solver(e.into()))?;
            let tol = config.tolerance;
            let text = match common.format {
                Format::Csv => complex_to_csv(&reports, tol),
                Format::Table => complex_to_table(&reports, tol),
            };
            (common, text, reports.iter().all(|r| r.exact(tol)))
        }
    };
    common.emit(&output).map_err(Failure::Usage)?;
    if !verified {
        return Err(Failure::Verification("the discrete complex failed at least one check".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failure: {msg}");
            ExitCode::from(EXIT_VERIFICATION)
        }
    }
}
