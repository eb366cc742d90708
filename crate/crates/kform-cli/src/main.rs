use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod body;
mod commands;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input files; exit code 2.
    Usage(String),
    /// Singular systems, failed checks and other numeric outcomes; exit code 1.
    Numeric(String),
}

impl From<kform::Error> for CliError {
    fn from(e: kform::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "kform", version, about = "Admissible integral meshes, Fekete/Leja currents and projectors for polynomial differential forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Markov-type mesh on a convex body
    Markov,
    /// All k-faces of a uniform grid on [0,1]^n
    Faces,
    /// All k-faces of the Chebyshev-Lobatto grid on [-1,1]^n
    Baran,
    /// Layered construction on the standard simplex (n = 2, 3)
    Alg1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Markovsquare,
    Comparecard,
    Cardsimplex,
}

/// Flags shared by all commands. Unused ones are ignored.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Ambient dimension
    #[arg(long)]
    pub n: Option<usize>,
    /// Form order
    #[arg(long)]
    pub k: Option<usize>,
    /// Polynomial degree
    #[arg(long)]
    pub r: Option<u32>,
    /// cube, simplex, ball or a JSON body file
    #[arg(long)]
    pub body: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Markov mesh parameter in (0,1)
    #[arg(long, default_value_t = 0.5)]
    pub c1: f64,
    /// Simplex mesh parameter in (0,1)
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub theta: f64,
    /// Chebyshev grid size, must exceed r (default ceil(3r/2))
    #[arg(long)]
    pub m: Option<usize>,
    /// Grid spacing for probes and verification grids
    #[arg(long = "probe-res", default_value_t = 0.05)]
    pub probe_res: f64,
    /// Probe sizes as fractions of the body diameter
    #[arg(long = "probe-scales", value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
    pub probe_scales: Vec<f64>,
    /// Random probe frames per point, added to the coordinate frames
    #[arg(long = "probe-orient", default_value_t = 8)]
    pub probe_orient: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// equal, or a file of positive numbers (JSON array or whitespace separated)
    #[arg(long, default_value = "equal")]
    pub weights: String,
    /// Input mesh or currents JSON
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh and write it as JSON
    Mesh {
        #[command(flatten)]
        common: Common,
        /// Append an r,cardinality,constant,tag row to this CSV file
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Extract approximate Fekete currents from a mesh
    Fekete {
        #[command(flatten)]
        common: Common,
        /// Skip the exchange refinement after the greedy selection
        #[arg(long)]
        greedy: bool,
    },
    /// Extract discrete Leja currents from a mesh
    Leja {
        #[command(flatten)]
        common: Common,
    },
    /// Interpolate a form from its averages over a unisolvent set of currents
    Interp {
        #[command(flatten)]
        common: Common,
        /// Form JSON to sample
        #[arg(long)]
        form: PathBuf,
    },
    /// Weighted least squares fit of a form from its averages over a mesh
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        form: PathBuf,
    },
    /// Probe estimate of the Lebesgue constant (or least squares constants)
    Lebesgue {
        #[command(flatten)]
        common: Common,
    },
    /// Check the sampling inequality of a mesh on random forms
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Cardinality tables as CSV
    Tables {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        fig: Figure,
        #[arg(long)]
        rmax: Option<u32>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("KFORM_THREADS") {
        let threads: usize = v.parse().map_err(|_| CliError::Usage(format!("KFORM_THREADS must be a positive integer, got {v:?}")))?;
        if threads == 0 {
            return Err(CliError::Usage("KFORM_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Mesh { common, table } => commands::mesh(&common, table.as_deref()),
        Command::Fekete { common, greedy } => commands::select(&common, commands::Selector::Fekete { greedy }),
        Command::Leja { common } => commands::select(&common, commands::Selector::Leja),
        Command::Interp { common, form } => commands::interp(&common, &form),
        Command::Fit { common, form } => commands::fit(&common, &form),
        Command::Lebesgue { common } => commands::lebesgue(&common),
        Command::Verify { common, trials } => commands::verify(&common, trials),
        Command::Tables { common, fig, rmax } => commands::tables(&common, fig, rmax),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("kform: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("kform: {msg}");
            ExitCode::from(1)
        }
    }
}
