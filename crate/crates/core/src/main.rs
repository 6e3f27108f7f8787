use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use singcert::certify::DVariant;
use singcert::commands::{self, render_text, Report, RunConfig};

#[derive(Parser)]
#[command(version, about = "Analyze and certify simple multiple roots of square polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Breadth, depth, multiplicity, simplicity verdict and deflation summary
    Analyze(Target),
    /// Local dual space dimensions
    Dual(Target),
    /// One deflation step and the B/Dg rank comparison
    Deflate(Target),
    /// Separation bound around an exact simple multiple root
    Separation(Target),
    /// Certify a cluster of zeros around an approximate root
    Certify(Target),
    /// Run `analyze` and `certify` over every case directory
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(Args)]
struct Target {
    /// System file (`vars x,y; …`)
    system: PathBuf,
    /// Point file: JSON array of `[re, im]` pairs
    point: PathBuf,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args)]
struct Options {
    /// Relative tolerance for numerical rank decisions
    #[arg(long, default_value_t = 1e-8)]
    rank_tol: f64,
    /// Residual above which a point is not treated as a root
    #[arg(long, default_value_t = 1e-6)]
    res_tol: f64,
    /// Seed for random frames and vectors
    #[arg(long, env = "SINGCERT_SEED", default_value_t = 0)]
    seed: u64,
    /// Highest Macaulay order to try
    #[arg(long, default_value_t = 12)]
    kmax: usize,
    /// Defining equation of the universal constant: `paper` or `kappa2`
    #[arg(long, default_value = "paper")]
    d_variant: DVariant,
    /// Use this γ instead of the internal upper bound
    #[arg(long)]
    gamma_override: Option<f64>,
    /// Emit a JSON report instead of text
    #[arg(long)]
    json: bool,
}

impl Options {
    fn config(&self) -> RunConfig {
        RunConfig {
            rank_tol: self.rank_tol,
            res_tol: self.res_tol,
            seed: self.seed,
            kmax: self.kmax,
            d_variant: self.d_variant,
            gamma_override: self.gamma_override,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (result, json) = match &cli.command {
        Command::Analyze(t) => (commands::cmd_analyze(&t.system, &t.point, &t.opts.config()), t.opts.json),
        Command::Dual(t) => (commands::cmd_dual(&t.system, &t.point, &t.opts.config()), t.opts.json),
        Command::Deflate(t) => (commands::cmd_deflate(&t.system, &t.point, &t.opts.config()), t.opts.json),
        Command::Separation(t) => (commands::cmd_separation(&t.system, &t.point, &t.opts.config()), t.opts.json),
        Command::Certify(t) => (commands::cmd_certify(&t.system, &t.point, &t.opts.config()), t.opts.json),
        Command::Corpus { dir, opts } => (commands::cmd_corpus(dir, &opts.config()), opts.json),
    };
    match result {
        Ok(report) => emit(&report, json),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(report: &Report, json: bool) -> ExitCode {
    let text = if json { format!("{}\n", report.to_json()) } else { render_text(report) };
    // a closed downstream pipe is not an error of ours
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    ExitCode::from(report.exit_code() as u8)
}
