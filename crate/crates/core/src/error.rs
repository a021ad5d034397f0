use std::fmt;

/// Everything that can go wrong in this crate.
///
/// Numeric evaluators (pdf, cdf, test statistics on already-validated
/// inputs) return plain `f64` and enforce their domains with assertions;
/// `Error` is reserved for fallible construction, parsing, fitting and
/// I/O, where the caller can reasonably react.
#[derive(Debug)]
pub enum Error {
    /// A parameter failed its domain check (e.g. `gamma <= 0`).
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// Two distributions that must share `beta` and `gamma` do not.
    MismatchedPair { field: &'static str, left: f64, right: f64 },
    /// Bin edges are not strictly increasing / too few.
    InvalidBinEdges { reason: &'static str },
    /// A bin index outside `0..num_bins`.
    BinIndexOutOfRange { index: usize, num_bins: usize },
    /// A score fell below the first bin edge and cannot be placed.
    ScoreBelowRange { score: f64, first_edge: f64 },
    /// Histograms that must share a scheme (and usually a total) do not.
    HistogramMismatch { reason: &'static str },
    /// Count vector length does not match the bin scheme.
    CountLengthMismatch { expected: usize, found: usize },
    /// An observed score was a tie, which the model cannot represent.
    TiedGame {
        team: String,
        opponent: String,
        runs: u32,
    },
    /// Records for more than one team where a single team was expected.
    MixedTeams { expected: String, found: String },
    /// A malformed line in a game-log file. `line` is 1-based.
    Parse { line: usize, message: String },
    /// The empty input where at least one game/team/bin was required.
    EmptyInput { what: &'static str },
    /// A fit whose optimizer did not converge, used where a converged
    /// fit is a precondition.
    UnconvergedFit,
    /// A model bin carries zero probability mass where observations exist,
    /// so a chi-square contribution would divide by zero.
    ZeroExpectedCount { description: String },
    /// Iterative proportional fitting ran out of iterations.
    IpfDidNotConverge { iterations: usize, residual: f64 },
    /// A contingency-table margin is all zeros; quasi-independence
    /// estimates are not identifiable.
    EmptyMargin { axis: &'static str, index: usize },
    /// A game landed on a structurally-masked (diagonal) cell.
    MaskedCell { row: usize, col: usize, runs_scored: u32, runs_allowed: u32 },
    /// Malformed contingency-table construction input.
    InvalidTable { reason: &'static str },
    /// Too few observations for a large-sample test.
    SampleTooSmall { n: usize, required: usize },
    /// All observations identical: the z statistic has no scale.
    ZeroSampleVariance,
    /// Archive on disk declares a format we do not speak.
    ArchiveVersion { found: u64, expected: u64 },
    /// Archive file exists but cannot be decoded.
    ArchiveCorrupt { reason: String },
    /// Two archive entries share (team, season, method).
    DuplicateArchiveEntry { key: String },
    /// Underlying filesystem failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value, reason } => {
                write!(f, "invalid parameter {name} = {value}: {reason}")
            }
            Error::MismatchedPair { field, left, right } => {
                write!(f, "matched pair disagrees on {field}: {left} vs {right}")
            }
            Error::InvalidBinEdges { reason } => write!(f, "invalid bin edges: {reason}"),
            Error::BinIndexOutOfRange { index, num_bins } => {
                write!(f, "bin index {index} out of range for {num_bins} bins")
            }
            Error::ScoreBelowRange { score, first_edge } => {
                write!(f, "score {score} lies below the first bin edge {first_edge}")
            }
            Error::HistogramMismatch { reason } => write!(f, "histogram mismatch: {reason}"),
            Error::CountLengthMismatch { expected, found } => {
                write!(f, "expected {expected} bin counts, found {found}")
            }
            Error::TiedGame { team, opponent, runs } => {
                write!(f, "tied game {team} vs {opponent} ({runs}-{runs}) cannot be modelled")
            }
            Error::MixedTeams { expected, found } => {
                write!(f, "expected records for {expected}, found {found}")
            }
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::EmptyInput { what } => write!(f, "empty input: {what}"),
            Error::UnconvergedFit => write!(f, "fit did not converge"),
            Error::ZeroExpectedCount { description } => {
                write!(f, "zero expected count: {description}")
            }
            Error::IpfDidNotConverge { iterations, residual } => {
                write!(
                    f,
                    "proportional fitting stopped after {iterations} iterations \
                     (residual {residual:e})"
                )
            }
            Error::EmptyMargin { axis, index } => {
                write!(f, "{axis} {index} of the contingency table has no observations")
            }
            Error::MaskedCell { row, col, runs_scored, runs_allowed } => {
                write!(
                    f,
                    "game with runs {runs_scored}-{runs_allowed} lands on masked cell \
                     ({row}, {col})"
                )
            }
            Error::InvalidTable { reason } => write!(f, "invalid contingency table: {reason}"),
            Error::SampleTooSmall { n, required } => {
                write!(f, "sample of {n} games is below the required {required}")
            }
            Error::ZeroSampleVariance => {
                write!(f, "sample variance is zero; z statistic undefined")
            }
            Error::ArchiveVersion { found, expected } => {
                write!(f, "archive format_version {found} unsupported (expected {expected})")
            }
            Error::ArchiveCorrupt { reason } => write!(f, "archive corrupt: {reason}"),
            Error::DuplicateArchiveEntry { key } => {
                write!(f, "duplicate archive entry for {key}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
