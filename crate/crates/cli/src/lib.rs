//! Command-line front end for `fock-core`: symbol expressions, a catalog of named
//! symbols, subcommand dispatch and deterministic JSON/CSV output.

pub mod catalog;
pub mod commands;
pub mod expr;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fock_core::quadrature::{DEFAULT_ANGULAR_ORDER, DEFAULT_RADIAL_ORDER};
use fock_core::{FockError, C64};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fock", version, about = "Operator calculus on Fock spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Fock parameter t > 0.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Complex dimension.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Truncation degree [default: 30 for n = 1, 12 otherwise].
    #[arg(long)]
    pub degree: Option<usize>,
    /// Radial Gauss order per coordinate [default: 40, raised to degree + 1].
    #[arg(long)]
    pub radial_order: Option<usize>,
    /// Angular trapezoid order per coordinate [default: 81, raised to 2 degree + 1].
    #[arg(long)]
    pub angular_order: Option<usize>,
    /// Output file (JSON); curves also get a `.csv` mirror. Stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Singular-value threshold for rank counting.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

impl Common {
    pub fn degree(&self) -> usize {
        self.degree.unwrap_or(if self.n == 1 { 30 } else { 12 })
    }

    /// Quadrature orders for matrices up to `degree`: explicit flags win, defaults are
    /// raised until the rule is exact to `2 degree`.
    pub fn orders(&self, degree: usize) -> (usize, usize) {
        (
            self.radial_order
                .unwrap_or(DEFAULT_RADIAL_ORDER.max(degree + 1)),
            self.angular_order
                .unwrap_or(DEFAULT_ANGULAR_ORDER.max(2 * degree + 1)),
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct SymbolArgs {
    /// Catalog name or expression in z (n = 1) or z1..zn.
    #[arg(long)]
    pub symbol: String,
    /// Expression in the unit direction x (written z) giving the limit of the symbol
    /// along x; overrides automatic derivation.
    #[arg(long)]
    pub limit_symbol: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite section of a Toeplitz operator.
    Toeplitz {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
    },
    /// Berezin transform of a Toeplitz operator on rays.
    Berezin {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
    },
    /// Eigenvalues of nested finite sections.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
        /// Comma-separated section degrees [default: degree - 10, degree - 5, degree].
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<usize>>,
        /// Probe point for the smallest singular value of A_D - lambda.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
    },
    /// Essential-spectrum estimate from directional limit operators.
    EssSpectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
        /// Number of sampled directions.
        #[arg(long, default_value_t = 64)]
        directions: usize,
    },
    /// Wiener-profile, Schur and truncation norm bounds.
    NormBounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
    },
    /// Convolution bound for a product of two Toeplitz operators.
    Compose {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
        /// Second factor (catalog name or expression).
        #[arg(long)]
        symbol2: String,
    },
    /// Berezin-diagonal compactness test.
    Compactness {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
        /// Decay threshold for the last radius.
        #[arg(long, default_value_t = fock_core::spectral::COMPACTNESS_THRESHOLD)]
        threshold: f64,
    },
    /// Fredholm index of T_f - lambda by rectangular singular-value counting.
    Index {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        symbol: SymbolArgs,
        /// Spectral parameter (real or complex expression such as `1 + 0.5*i`).
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        lambda: String,
        /// Comma-separated counting degrees.
        #[arg(long, value_delimiter = ',', default_value = "30,35,40")]
        degrees: Vec<usize>,
    },
    /// Runs the invariant suite; exits with 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(FockError),
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::InvalidParameter(msg) => CliError::Usage(msg),
            FockError::MissingLimits => CliError::Usage(
                "symbol has no derivable directional limits; pass --limit-symbol".into(),
            ),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("cannot write output: {e}"))
    }
}

/// Parses a constant complex expression such as `2`, `-1.5` or `0.3 - 0.4*i`.
pub fn parse_complex(text: &str) -> Result<C64, CliError> {
    let e = expr::parse(text, 0).map_err(|e| CliError::Usage(format!("lambda: {e}")))?;
    Ok(e.eval(&[]))
}

fn error_json(e: &FockError) -> Value {
    let kind = match e {
        FockError::NonFinite { .. } => "non-finite",
        FockError::Eigensolver(_) => "eigensolver",
        FockError::GridMismatch(_) => "grid-mismatch",
        FockError::NotFredholm { .. } => "not-fredholm",
        FockError::Inconclusive { .. } => "inconclusive",
        FockError::InvalidParameter(_) => "invalid-parameter",
        FockError::MissingLimits => "missing-limits",
    };
    let mut v = json!({ "kind": kind, "message": e.to_string() });
    match e {
        FockError::NotFredholm { lambda, distance } => {
            v["lambda"] = output::complex(*lambda);
            v["distance"] = output::real(*distance);
        }
        FockError::Inconclusive { counts } => {
            v["counts"] = counts
                .iter()
                .map(|(d, k, c)| json!({ "degree": d, "kernel": k, "cokernel": c }))
                .collect();
        }
        _ => {}
    }
    v
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let common = commands::common(&cli.command).clone();
    match commands::execute(&cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            let meta = output::Meta {
                t: common.t,
                n: common.n,
                degree: common.degree(),
                command: commands::name(&cli.command),
            };
            let doc = output::document(&meta, json!({ "error": error_json(&e) }));
            let _ = output::emit(&doc, common.out.as_deref());
            EXIT_NUMERIC
        }
    }
}
