//! Per-game baseball scores modelled as independent three-parameter
//! Weibull random variables.
//!
//! The pipeline this crate implements:
//!
//! 1. ingest game logs ([`ingestion`]) into per-team seasons,
//! 2. bin runs scored / runs allowed ([`binning`]),
//! 3. fit Weibull parameters by least squares or maximum likelihood
//!    with a shared shape per team and a fixed translation
//!    ([`estimation`]),
//! 4. derive the closed-form won-loss prediction
//!    ([`weibull::won_loss_percentage`]),
//! 5. check the model with chi-square goodness of fit,
//!    quasi-independence of the scored/allowed pair, and z tests on
//!    the means, with Bonferroni-adjusted thresholds ([`inference`]).
//!
//! All randomness is injected by the caller (any [`rand::Rng`]), so
//! every function here is deterministic given its inputs.

pub mod binning;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod ingestion;
pub mod optimize;
pub mod special;
pub mod weibull;

pub use binning::{
    bin_probabilities, bin_probability, BinLabel, BinScheme, IndependenceVariant, ScoreHistogram,
};
pub use error::{Error, Result};
pub use estimation::{
    fit_division, fit_histograms, fit_team, ls_objective, ml_objective, predict_record,
    DivisionFit, DivisionTeamFit, FitConfig, FitMethod, FitParams, FitResult, TeamSeason,
};
pub use inference::{
    bonferroni_adjust, build_table, build_table_with_policy, cap_scores, chi_square_quantile,
    chi_square_sf, gof_statistic, independence_statistic, ipf_expected, mean_z_test,
    normal_quantile, normal_sf, trim_empty_margins, ContingencyTable, DiagonalPolicy, GofDofMode,
    MeanZTests, ReferenceDist, TableBuild, TestReport, ThresholdCheck, TrimmedTable,
};
pub use ingestion::{
    assemble_seasons, parse_game_log, read_archive, write_archive, ArchiveConfig, ArchiveEntry,
    AssembledSeasons, GameRecord, LabeledReport, ParsedLog, ResultArchive, TieHandling,
    ARCHIVE_FORMAT_VERSION,
};
pub use weibull::{alpha_from_mean, won_loss_percentage, MatchedPair, WeibullParams};
