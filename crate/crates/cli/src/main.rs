//! Command-line front end for log-concavity checks of matrix-valued metrics.

mod commands;
mod parse;
mod report;
mod source;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Report;

#[derive(Parser)]
#[command(name = "mlconcave", version, about = "Log-concavity verdicts, marginal integration and transform checks for matrix-valued metrics")]
struct Cli {
    /// Emit a JSON report on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature verdicts of a metric on a grid of points.
    Check(CheckArgs),
    /// Integrate leading variables out and test the marginal for Nakano concavity.
    Prekopa(PrekopaArgs),
    /// Compare both sides of the weighted Paley–Wiener isometry.
    Pw(PwArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeSel {
    Nakano,
    Griffiths,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WantSel {
    Concave,
    Convex,
    Both,
}

#[derive(Args)]
pub struct CheckArgs {
    /// Spec TOML file or gallery entry name.
    pub source: String,
    /// Points as `var=lo:hi:count,...`; unlisted variables are 0.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeSel,
    #[arg(long, value_enum, default_value = "concave")]
    pub want: WantSel,
    /// Finite-difference step at the origin (scaled by 1 + |x_i|).
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    /// Relative eigenvalue tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for the Griffiths multistart search.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Args)]
pub struct PrekopaArgs {
    /// Spec TOML file or gallery entry name.
    pub source: String,
    /// Leading variables to integrate out, e.g. `y1,y2`.
    #[arg(long)]
    pub integrate: Option<String>,
    /// Truncation box: `lo:hi` for every integrated variable or `y1=lo:hi,...`.
    #[arg(long)]
    pub domain: Option<String>,
    /// Convex region to integrate over: `box:lo:hi[:lo:hi...]`, `ball:r[:c1,c2,...]` or `half:a1,...:b[;...]`.
    #[arg(long)]
    pub region: Option<String>,
    /// `gauss-legendre:k`, `trapezoid:k` or `gauss-hermite:k`.
    #[arg(long)]
    pub quad: Option<String>,
    /// Base points as `t1=lo:hi:count,...`.
    #[arg(long)]
    pub tgrid: Option<String>,
}

#[derive(Args)]
pub struct PwArgs {
    /// Spec TOML file, gallery entry or `builtin:gauss-scalar` / `builtin:gauss-r2`.
    pub source: String,
    /// Frequencies at which to tabulate the transformed metric, `xi1=lo:hi:count,...`.
    #[arg(long)]
    pub xi_grid: Option<String>,
    /// `gauss` or `hermite:k`; builtins default to their own test function.
    #[arg(long)]
    pub test_f: Option<String>,
    /// Number of refinement steps (each adds 4 to every quadrature order).
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// Starting quadrature order (80 for one variable, 72 for two).
    #[arg(long)]
    pub order: Option<usize>,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot set up {k} threads: {e}");
            std::process::exit(1);
        }
    }
    let (name, result) = match &cli.command {
        Command::Check(a) => ("check", commands::check(a)),
        Command::Prekopa(a) => ("prekopa", commands::prekopa(a)),
        Command::Pw(a) => ("pw", commands::pw(a)),
    };
    let report = result.unwrap_or_else(|e| Report::failed(name, format!("{e:#}")));
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else if report.source.is_none() {
        eprintln!("error: {}", report.error.as_deref().unwrap_or("unknown failure"));
    } else {
        print!("{}", report.to_text());
    }
    std::process::exit(report.exit_code);
}
