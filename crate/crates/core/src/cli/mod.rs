//! Command-line front end. [`run`] is the whole program minus process exit,
//! so it can be driven from tests.

mod commands;
pub mod input;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{EXIT_DISAGREEMENT, EXIT_INDETERMINATE, EXIT_INPUT, EXIT_NON_MEMBER, EXIT_OK};

pub const SCHEMA: &str = "1";
pub const SEED_ENV: &str = "MC_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

/// Settings shared by every command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: f64,
    pub threads: usize,
    pub output: OutputFormat,
}

#[derive(Debug, Parser)]
#[command(name = "symcone", version, about = "Membership certificates for symmetric quadratic moment cones")]
struct Cli {
    /// RNG seed; the MC_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide membership of moment vectors in the moment cone.
    CheckMoments(BatchArgs),
    /// Decide nonnegativity of symmetric quadratics by one or all routes.
    CheckPoly(PolyArgs),
    /// Entanglement witness for a symmetric spin state.
    Spin(SpinArgs),
    /// Membership over a two-dimensional affine slice, as CSV.
    Slice(SliceArgs),
    /// Randomized property suite.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// CSV (header n,d,…) or JSON input.
    #[arg(long, conflicts_with_all = ["n", "d", "values"])]
    file: Option<PathBuf>,
    #[arg(long, requires = "d")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    d: Option<usize>,
    /// Inline coefficient tuples `c0,c1..cd,c11..cdd`, one per instance;
    /// put them after `--` when one starts with a minus sign.
    #[arg(requires = "n")]
    values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Lmi,
    Ellipsoid,
    #[value(name = "exact-d1")]
    ExactD1,
    Halfdeg,
    All,
}

#[derive(Debug, Args)]
struct PolyArgs {
    #[command(flatten)]
    batch: BatchArgs,
    #[arg(long, value_enum, default_value_t = Route::All)]
    route: Route,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Coherent,
    Dicke,
    Ghz,
    Mixed,
}

#[derive(Debug, Args)]
struct SpinArgs {
    /// JSON state {"n","re","im"}.
    #[arg(long, conflicts_with = "preset")]
    state: Option<PathBuf>,
    #[arg(long, value_enum, requires = "n")]
    preset: Option<Preset>,
    #[arg(long)]
    n: Option<usize>,
    /// Magnetic quantum number of the Dicke preset.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
}

#[derive(Debug, Args)]
struct SliceArgs {
    #[arg(long)]
    cone: String,
    /// e.g. `a0=1,x=a1:-2:2,y=aa1:-1:1`; unpinned coordinates are zero.
    #[arg(long, allow_hyphen_values = true)]
    plane: String,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
}

#[derive(Debug, Args)]
struct FuzzArgs {
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 1000)]
    iters: u64,
}

/// Runs the program on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let seed = match env_seed {
        Some(s) => match s.trim().parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                let _ = writeln!(err, "error: {SEED_ENV}=`{s}` is not a 64-bit unsigned integer");
                return EXIT_INPUT;
            }
        },
        None => cli.seed,
    };
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        let _ = writeln!(err, "error: --tol must be positive");
        return EXIT_INPUT;
    }
    let cfg = RunConfig {
        seed,
        tol: cli.tol,
        threads: cli.threads,
        output: cli.output,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let (code, stdout, stderr) = pool.install(|| {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = commands::dispatch(cli.command, &cfg, &mut o, &mut e);
        (code, o, e)
    });
    let _ = out.write_all(&stdout);
    let _ = err.write_all(&stderr);
    code
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let env_seed = std::env::var(SEED_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), env_seed.as_deref(), &mut stdout.lock(), &mut stderr.lock())
}
