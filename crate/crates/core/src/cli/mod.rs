//! The `ap3` command line: every subcommand produces a [`RunReport`].

mod commands;
mod suites;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::report::RunReport;

pub use suites::Suite;

#[derive(Debug, Parser)]
#[command(name = "ap3", version, about = "Three-term progression workbench on Z/pZ")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StepArg {
    Line,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize Lambda at density theta and analyse the result.
    Minimize {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 200_000)]
        max_iters: usize,
        #[arg(long, value_enum, default_value_t = StepArg::Line)]
        step: StepArg,
        /// Fuzzy-region radii for the minimality audit.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
        eps: Vec<f64>,
        /// Draws allowed to the improver when the audit finds a violation.
        #[arg(long, default_value_t = 2000)]
        max_tries: usize,
        /// Write the final function as CSV.
        #[arg(long)]
        fn_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run property suites; exits nonzero if any verdict fails.
    Verify {
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Draws for sampled moment checks (used above the exhaustive cutoff).
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Moments of the surgery, exhaustive or sampled; exits nonzero on failure.
    VerifyLevelprop {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Sampled draws; all p^2 pairs are enumerated when omitted.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 5)]
        instances: usize,
        /// Multiplier on the O(p) error terms.
        #[arg(long, default_value_t = 5.0)]
        slack: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact r3([N]) with a witness, stored in the certificate file.
    R3 {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = crate::r3::DEFAULT_BUDGET)]
        budget: u64,
        /// Certificate CSV, created if missing.
        #[arg(long, default_value = "r3_certificates.csv")]
        certs: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Digit construction of a progression-free subset of [N].
    Behrend {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// One round of random dilate-translate surgery on the fuzzy region.
    Improve {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Defaults to the smallest certified value.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        max_tries: usize,
        /// Start from this function (CSV) instead of a random density.
        #[arg(long)]
        fn_in: Option<PathBuf>,
        #[arg(long)]
        fn_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectrum, Bohr set and smoothing of a minimizer (or a given function).
    Bohr {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        eps1: Option<f64>,
        #[arg(long)]
        fn_in: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Merge existing reports into one summary.
    Report {
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// A finished report and the exit status it implies.
pub struct Outcome {
    pub report: RunReport,
    pub exit_code: i32,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let (mut report, strict, out) = match cli.command {
        Command::Minimize { p, theta, restarts, max_iters, step, eps, max_tries, fn_out, common } => {
            let params = commands::MinimizeParams { p, theta, restarts, max_iters, step, eps, max_tries, fn_out };
            (commands::minimize(&params, common.seed)?, false, common.out)
        }
        Command::Verify { p, suite, samples, common } => (suites::verify(p, suite, samples, common.seed)?, true, common.out),
        Command::VerifyLevelprop { p, eps, samples, instances, slack, common } => {
            (suites::verify_levelprop(p, eps, samples, instances, slack, common.seed)?, true, common.out)
        }
        Command::R3 { n, budget, certs, common } => (commands::r3(n, budget, &certs, common.seed)?, true, common.out),
        Command::Behrend { n, common } => (commands::behrend(n, common.seed)?, false, common.out),
        Command::Improve { p, theta, eps, beta, max_tries, fn_in, fn_out, common } => {
            let params = commands::ImproveParams { p, theta, eps, beta, max_tries, fn_in, fn_out };
            (commands::improve(&params, common.seed)?, false, common.out)
        }
        Command::Bohr { p, theta, eps0, eps1, fn_in, common } => {
            (commands::bohr(p, theta, eps0, eps1, fn_in.as_deref(), common.seed)?, false, common.out)
        }
        Command::Report { files, common } => (commands::aggregate(&files, common.seed)?, false, common.out),
    };
    report.finish();
    match out {
        Some(path) => report.save(&path)?,
        None => println!("{}", report.to_json()),
    }
    let exit_code = if strict && !report.all_pass() { 1 } else { 0 };
    Ok(Outcome { report, exit_code })
}

/// Parse the process arguments, run, and return the exit status.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for v in outcome.report.failed() {
                eprintln!("FAILED {}: {}", v.name, v.detail);
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
