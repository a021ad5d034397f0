//! `pythag`: fit translated-Weibull run distributions to game logs,
//! check the fits, and project won-loss records.
//!
//! Every subcommand is deterministic given its inputs, flags, and
//! seed — including archive files, which are stamped from the data
//! rather than the wall clock unless `SOURCE_DATE_EPOCH` is set.

mod run;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pythag_core::{FitMethod, GofDofMode, IndependenceVariant};

#[derive(Parser)]
#[command(
    name = "pythag",
    version,
    about = "Weibull run-distribution fits, model tests, and won-loss projections"
)]
pub(crate) struct Cli {
    #[command(subcommand)]
    pub(crate) command: Command,
    #[command(flatten)]
    pub(crate) shared: Shared,
}

#[derive(Args)]
pub(crate) struct Shared {
    /// Game log CSV: date,team,opponent,runs_scored,runs_allowed.
    #[arg(long, global = true, value_name = "PATH")]
    pub(crate) input: Option<PathBuf>,

    /// Estimation method.
    #[arg(long, global = true, value_enum, default_value_t = Method::Mle)]
    pub(crate) method: Method,

    /// Fixed translation point of every fitted distribution.
    #[arg(
        long,
        global = true,
        default_value_t = -0.5,
        allow_negative_numbers = true,
        value_name = "R"
    )]
    pub(crate) beta: f64,

    /// Directory for archives and delimited tables.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub(crate) out: PathBuf,

    /// Random seed for simulation; the fixed default keeps repeated
    /// runs byte-identical.
    #[arg(long, global = true, default_value_t = 2004, value_name = "N")]
    pub(crate) seed: u64,

    /// Bin count for the independence cross-tabulation.
    #[arg(
        long = "independence-bins",
        global = true,
        value_enum,
        default_value_t = Bins::Twelve
    )]
    pub(crate) independence_bins: Bins,

    /// Degrees of freedom for the goodness-of-fit reference: computed
    /// from the bin count, or the conventional fixed 20.
    #[arg(long = "gof-dof", global = true, value_enum, default_value_t = GofDof::Literal)]
    pub(crate) gof_dof: GofDof,

    /// Skip tied game-log lines (with a warning) instead of failing.
    #[arg(long = "drop-ties", global = true)]
    pub(crate) drop_ties: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Method {
    Ls,
    Mle,
}

impl From<Method> for FitMethod {
    fn from(m: Method) -> FitMethod {
        match m {
            Method::Ls => FitMethod::LeastSquares,
            Method::Mle => FitMethod::MaxLikelihood,
        }
    }
}

impl Method {
    pub(crate) fn slug(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Mle => "mle",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Bins {
    #[value(name = "12")]
    Twelve,
    #[value(name = "13")]
    Thirteen,
}

impl From<Bins> for IndependenceVariant {
    fn from(b: Bins) -> IndependenceVariant {
        match b {
            Bins::Twelve => IndependenceVariant::Twelve,
            Bins::Thirteen => IndependenceVariant::Thirteen,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum GofDof {
    Literal,
    /// The fixed-20 convention used in published tables of this test.
    Paper,
}

impl From<GofDof> for GofDofMode {
    fn from(g: GofDof) -> GofDofMode {
        match g {
            GofDof::Literal => GofDofMode::Literal,
            GofDof::Paper => GofDofMode::Fixed20,
        }
    }
}

#[derive(Subcommand)]
pub(crate) enum Command {
    /// Fit every team in the log; print a parameter table and summary
    /// statistics and write a result archive.
    Fit,
    /// Run the model checks per team: goodness of fit, independence of
    /// runs scored and allowed, and z tests on the means.
    Test,
    /// Project a won-loss record from average runs scored and allowed.
    Predict(PredictArgs),
    /// Write per-team data files of observed vs fitted bin counts.
    PlotData,
    /// Draw whole seasons from known parameters and compare the
    /// empirical win rate against the closed form.
    Simulate(SimulateArgs),
}

#[derive(Args)]
pub(crate) struct PredictArgs {
    /// Average runs scored per game.
    #[arg(long = "rs-mean", allow_negative_numbers = true)]
    pub(crate) rs_mean: f64,

    /// Average runs allowed per game.
    #[arg(long = "ra-mean", allow_negative_numbers = true)]
    pub(crate) ra_mean: f64,

    /// Exponent of the prediction formula.
    #[arg(long, allow_negative_numbers = true)]
    pub(crate) gamma: f64,

    /// Season length to project over.
    #[arg(long, default_value_t = 162)]
    pub(crate) games: u64,
}

#[derive(Args)]
pub(crate) struct SimulateArgs {
    /// Scale of the runs-scored distribution.
    #[arg(long = "alpha-rs", allow_negative_numbers = true)]
    pub(crate) alpha_rs: f64,

    /// Scale of the runs-allowed distribution.
    #[arg(long = "alpha-ra", allow_negative_numbers = true)]
    pub(crate) alpha_ra: f64,

    /// Shared shape of both distributions.
    #[arg(long, allow_negative_numbers = true)]
    pub(crate) gamma: f64,

    /// Number of games to draw.
    #[arg(long, default_value_t = 100_000)]
    pub(crate) games: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
