//! Parameter estimation: least-squares and maximum-likelihood fits of
//! the matched Weibull pair to binned season data.
//!
//! Both methods share one skeleton. With bin masses
//! `A_k(alpha, gamma)` under the model and observed counts `O_k` out
//! of `N` games,
//!
//! ```text
//! least squares:  sum_k (O_k - N A_k)^2          (both sides added)
//! max likelihood: -sum_k O_k ln A_k              (both sides added)
//! ```
//!
//! The translation `beta` is held fixed (default -0.5) and the shape
//! `gamma` is shared between the scored and allowed sides — that
//! constraint is what the won-loss formula needs. A division-level
//! fit extends the same objective across teams: per-team scale pairs,
//! one shape for everyone, `2T + 1` free parameters.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_probabilities, BinScheme, ScoreHistogram};
use crate::error::{Error, Result};
use crate::ingestion::GameRecord;
use crate::optimize::{minimize, SimplexOptions, SimplexOutcome};
use crate::weibull::{alpha_from_mean, MatchedPair, WeibullParams};

/// Optimizer box constraints. The shape window is generous — every
/// baseball fit ever reported lands in [1.5, 2.1] — and the scale
/// window covers run averages from deadball to slow-pitch softball.
const GAMMA_MIN: f64 = 0.5;
const GAMMA_MAX: f64 = 5.0;
const ALPHA_MIN: f64 = 0.1;
const ALPHA_MAX: f64 = 100.0;

/// Where the search starts: the shape every fit of this model tends
/// to land near, plus moment-matched scales.
const INIT_GAMMA: f64 = 1.82;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "ls")]
    LeastSquares,
    #[serde(rename = "mle")]
    MaxLikelihood,
}

/// Everything a fit needs besides the data.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Fixed translation point of both Weibulls.
    pub beta: f64,
    pub method: FitMethod,
    /// Scheme used to bin scores (and expected of pre-binned input).
    pub scheme: BinScheme,
    /// Simplex convergence tolerance on both position and value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Extra jittered starts tried if an attempt fails to converge.
    pub restarts: usize,
}

impl FitConfig {
    pub fn with_method(method: FitMethod) -> Self {
        FitConfig {
            method,
            ..FitConfig::default()
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            beta: -0.5,
            method: FitMethod::MaxLikelihood,
            scheme: BinScheme::fit_bins(),
            tolerance: 1e-8,
            max_iterations: 20_000,
            restarts: 5,
        }
    }
}

/// A free-parameter triple as seen by the objectives: two scales and
/// the shared shape. (The translation rides along separately because
/// it is never free.)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub alpha_rs: f64,
    pub alpha_ra: f64,
    pub gamma: f64,
}

/// A fitted team-season and the prediction that falls out of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha_rs: f64,
    pub alpha_ra: f64,
    pub gamma: f64,
    pub objective_value: f64,
    pub converged: bool,
    /// Closed-form P(score > allow) under the fitted pair.
    pub predicted_wlp: f64,
    /// `predicted_wlp` scaled by the games actually played.
    pub predicted_wins: f64,
    pub observed_wins: u64,
    pub games_played: u64,
}

impl FitResult {
    /// The fitted distributions themselves.
    pub fn matched_pair(&self, beta: f64) -> Result<MatchedPair> {
        MatchedPair::from_alphas(self.alpha_rs, self.alpha_ra, beta, self.gamma)
    }
}

/// One team's tie-free, date-sorted games.
#[derive(Debug, Clone)]
pub struct TeamSeason {
    team: String,
    games: Vec<GameRecord>,
}

impl TeamSeason {
    /// All records must belong to one team and contain no ties (the
    /// latter re-checked here because capped records can smuggle ties
    /// past `GameRecord`'s constructor). Games are sorted by date.
    pub fn new(mut games: Vec<GameRecord>) -> Result<Self> {
        let Some(first) = games.first() else {
            return Err(Error::EmptyInput { what: "team season" });
        };
        let team = first.team().to_owned();
        for g in &games {
            if g.team() != team {
                return Err(Error::MixedTeams {
                    expected: team,
                    found: g.team().to_owned(),
                });
            }
            if g.runs_scored() == g.runs_allowed() {
                return Err(Error::TiedGame {
                    team: g.team().to_owned(),
                    opponent: g.opponent().to_owned(),
                    runs: g.runs_scored(),
                });
            }
        }
        games.sort_by_key(GameRecord::date);
        Ok(TeamSeason { team, games })
    }

    pub fn team(&self) -> &str {
        &self.team
    }

    pub fn games(&self) -> &[GameRecord] {
        &self.games
    }

    pub fn games_played(&self) -> u64 {
        self.games.len() as u64
    }

    pub fn observed_wins(&self) -> u64 {
        self.games.iter().filter(|g| g.won()).count() as u64
    }

    pub fn runs_scored(&self) -> Vec<u32> {
        self.games.iter().map(GameRecord::runs_scored).collect()
    }

    pub fn runs_allowed(&self) -> Vec<u32> {
        self.games.iter().map(GameRecord::runs_allowed).collect()
    }
}

/// Shared validation for an (observed scored, observed allowed) pair.
fn validate_pair(scored: &ScoreHistogram, allowed: &ScoreHistogram) -> Result<()> {
    if scored.scheme() != allowed.scheme() {
        return Err(Error::HistogramMismatch {
            reason: "scored and allowed histograms use different bin schemes",
        });
    }
    if scored.total() != allowed.total() {
        return Err(Error::HistogramMismatch {
            reason: "scored and allowed totals differ (games are paired)",
        });
    }
    if scored.total() == 0 {
        return Err(Error::EmptyInput { what: "histogram" });
    }
    Ok(())
}

fn one_side_ls(hist: &ScoreHistogram, params: &WeibullParams) -> f64 {
    let masses = bin_probabilities(params, hist.scheme());
    let n = hist.total() as f64;
    hist.counts()
        .iter()
        .zip(&masses)
        .map(|(&o, &a)| {
            let d = o as f64 - n * a;
            d * d
        })
        .sum()
}

/// Negative log-likelihood contribution of one side. A bin with
/// observations but zero model mass yields `+inf` — the likelihood of
/// the data under those parameters really is zero — which steers the
/// optimizer away rather than crashing it.
fn one_side_ml(hist: &ScoreHistogram, params: &WeibullParams) -> f64 {
    let masses = bin_probabilities(params, hist.scheme());
    let mut acc = 0.0;
    for (&o, &a) in hist.counts().iter().zip(&masses) {
        if o == 0 {
            continue;
        }
        if a <= 0.0 {
            return f64::INFINITY;
        }
        acc -= o as f64 * a.ln();
    }
    acc
}

/// Sum of squared count residuals, both sides. Histograms must share
/// a scheme and total.
pub fn ls_objective(
    params: &FitParams,
    scored: &ScoreHistogram,
    allowed: &ScoreHistogram,
    beta: f64,
) -> Result<f64> {
    validate_pair(scored, allowed)?;
    let pair = MatchedPair::from_alphas(params.alpha_rs, params.alpha_ra, beta, params.gamma)?;
    Ok(one_side_ls(scored, pair.scored()) + one_side_ls(allowed, pair.allowed()))
}

/// Negative log-likelihood of the binned data, both sides. Returns
/// `+inf` (not an error) when some observed bin has zero model mass.
pub fn ml_objective(
    params: &FitParams,
    scored: &ScoreHistogram,
    allowed: &ScoreHistogram,
    beta: f64,
) -> Result<f64> {
    validate_pair(scored, allowed)?;
    let pair = MatchedPair::from_alphas(params.alpha_rs, params.alpha_ra, beta, params.gamma)?;
    Ok(one_side_ml(scored, pair.scored()) + one_side_ml(allowed, pair.allowed()))
}

/// The joint (possibly multi-team) objective over the flat parameter
/// vector `[alpha_rs_0, alpha_ra_0, alpha_rs_1, ..., gamma]`.
struct JointObjective<'a> {
    pairs: &'a [(ScoreHistogram, ScoreHistogram)],
    beta: f64,
    method: FitMethod,
}

impl JointObjective<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        let t = self.pairs.len();
        let gamma = x[2 * t];
        if !(GAMMA_MIN..=GAMMA_MAX).contains(&gamma) {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for (i, (scored, allowed)) in self.pairs.iter().enumerate() {
            for (hist, alpha) in [(scored, x[2 * i]), (allowed, x[2 * i + 1])] {
                if !(ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
                    return f64::INFINITY;
                }
                let params =
                    WeibullParams::new(alpha, self.beta, gamma).expect("bounded parameters");
                total += match self.method {
                    FitMethod::LeastSquares => one_side_ls(hist, &params),
                    FitMethod::MaxLikelihood => one_side_ml(hist, &params),
                };
                if total.is_infinite() {
                    return f64::INFINITY;
                }
            }
        }
        total
    }
}

/// SplitMix64 step; the restart jitter needs a few reproducible bits
/// and nothing more, so the generator is pinned here rather than
/// borrowed from a crate whose stream might change.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn jitter_unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Initial point: moment-matched scales at the canonical shape.
fn initial_point(pairs: &[(ScoreHistogram, ScoreHistogram)], beta: f64) -> Vec<f64> {
    let mut x0 = Vec::with_capacity(2 * pairs.len() + 1);
    for (scored, allowed) in pairs {
        for hist in [scored, allowed] {
            let a = alpha_from_mean(hist.approximate_mean(), beta, INIT_GAMMA)
                .unwrap_or(1.0)
                .clamp(ALPHA_MIN * 1.5, ALPHA_MAX * 0.75);
            x0.push(a);
        }
    }
    x0.push(INIT_GAMMA);
    x0
}

fn simplex_steps(x0: &[f64]) -> Vec<f64> {
    let n = x0.len();
    x0.iter()
        .enumerate()
        .map(|(i, &v)| if i + 1 == n { 0.15 } else { (0.1 * v).max(0.05) })
        .collect()
}

/// Run the simplex from the moment-matched start; if that attempt
/// stalls, retry from deterministically jittered starts. Among
/// attempts the winner is: converged beats not, then lower objective,
/// then (on exact value ties) lower shape.
fn fit_joint(
    pairs: &[(ScoreHistogram, ScoreHistogram)],
    cfg: &FitConfig,
) -> Result<SimplexOutcome> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput { what: "team list" });
    }
    if !cfg.beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: cfg.beta,
            reason: "translation must be finite",
        });
    }
    for (scored, allowed) in pairs {
        validate_pair(scored, allowed)?;
        if scored.scheme() != &cfg.scheme {
            return Err(Error::HistogramMismatch {
                reason: "histogram scheme differs from the configured scheme",
            });
        }
    }

    let objective = JointObjective {
        pairs,
        beta: cfg.beta,
        method: cfg.method,
    };
    let opts = SimplexOptions {
        x_tolerance: cfg.tolerance,
        f_tolerance: cfg.tolerance,
        max_iterations: cfg.max_iterations,
    };
    let x0 = initial_point(pairs, cfg.beta);
    let steps = simplex_steps(&x0);
    let dim = x0.len();

    let mut best: Option<SimplexOutcome> = None;
    for attempt in 0..=cfg.restarts {
        let start = if attempt == 0 {
            x0.clone()
        } else {
            let mut state = 0x5DEE_CE66_D153_2C7Du64 ^ attempt as u64;
            x0.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let factor = 0.75 + 0.55 * jitter_unit(&mut state);
                    let lo = if i + 1 == dim { GAMMA_MIN } else { ALPHA_MIN };
                    let hi = if i + 1 == dim { GAMMA_MAX } else { ALPHA_MAX };
                    (v * factor).clamp(lo * 1.001, hi * 0.999)
                })
                .collect()
        };
        let outcome = minimize(|x| objective.eval(x), &start, &steps, &opts);
        let replace = match &best {
            None => true,
            Some(b) => {
                let gamma_new = outcome.x[dim - 1];
                let gamma_old = b.x[dim - 1];
                (outcome.converged, b.converged) == (true, false)
                    || (outcome.converged == b.converged
                        && (outcome.value < b.value
                            || (outcome.value == b.value && gamma_new < gamma_old)))
            }
        };
        if replace {
            best = Some(outcome);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    Ok(best.expect("at least one attempt runs"))
}

/// Fit one team's pre-binned histograms. `observed_wins` tags along
/// into the result for later comparison against the prediction.
pub fn fit_histograms(
    scored: &ScoreHistogram,
    allowed: &ScoreHistogram,
    observed_wins: u64,
    cfg: &FitConfig,
) -> Result<FitResult> {
    let pairs = [(scored.clone(), allowed.clone())];
    let outcome = fit_joint(&pairs, cfg)?;
    let (alpha_rs, alpha_ra, gamma) = (outcome.x[0], outcome.x[1], outcome.x[2]);
    let pair = MatchedPair::from_alphas(alpha_rs, alpha_ra, cfg.beta, gamma)?;
    let wlp = pair.prob_exceeds();
    let games = scored.total();
    Ok(FitResult {
        alpha_rs,
        alpha_ra,
        gamma,
        objective_value: outcome.value,
        converged: outcome.converged,
        predicted_wlp: wlp,
        predicted_wins: wlp * games as f64,
        observed_wins,
        games_played: games,
    })
}

/// Bin a season with the configured scheme and fit it.
pub fn fit_team(season: &TeamSeason, cfg: &FitConfig) -> Result<FitResult> {
    let scored = ScoreHistogram::from_scores(&season.runs_scored(), &cfg.scheme)?;
    let allowed = ScoreHistogram::from_scores(&season.runs_allowed(), &cfg.scheme)?;
    fit_histograms(&scored, &allowed, season.observed_wins(), cfg)
}

/// One team's slice of a division-level fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisionTeamFit {
    pub team: String,
    pub alpha_rs: f64,
    pub alpha_ra: f64,
    pub predicted_wlp: f64,
    pub predicted_wins: f64,
    pub observed_wins: u64,
    pub games_played: u64,
}

/// A pooled fit: every team keeps its own scales but all share one
/// shape, `2T + 1` parameters in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisionFit {
    pub gamma: f64,
    pub objective_value: f64,
    pub converged: bool,
    pub teams: Vec<DivisionTeamFit>,
}

/// Fit several seasons jointly under a shared shape. With a single
/// team this reduces to exactly `fit_team` — same start, same path,
/// same answer.
pub fn fit_division(seasons: &[TeamSeason], cfg: &FitConfig) -> Result<DivisionFit> {
    if seasons.is_empty() {
        return Err(Error::EmptyInput { what: "division" });
    }
    let mut pairs = Vec::with_capacity(seasons.len());
    for s in seasons {
        let scored = ScoreHistogram::from_scores(&s.runs_scored(), &cfg.scheme)?;
        let allowed = ScoreHistogram::from_scores(&s.runs_allowed(), &cfg.scheme)?;
        pairs.push((scored, allowed));
    }
    let outcome = fit_joint(&pairs, cfg)?;
    let gamma = outcome.x[2 * seasons.len()];
    let mut teams = Vec::with_capacity(seasons.len());
    for (i, s) in seasons.iter().enumerate() {
        let alpha_rs = outcome.x[2 * i];
        let alpha_ra = outcome.x[2 * i + 1];
        let pair = MatchedPair::from_alphas(alpha_rs, alpha_ra, cfg.beta, gamma)?;
        let wlp = pair.prob_exceeds();
        teams.push(DivisionTeamFit {
            team: s.team().to_owned(),
            alpha_rs,
            alpha_ra,
            predicted_wlp: wlp,
            predicted_wins: wlp * s.games_played() as f64,
            observed_wins: s.observed_wins(),
            games_played: s.games_played(),
        });
    }
    Ok(DivisionFit {
        gamma,
        objective_value: outcome.value,
        converged: outcome.converged,
        teams,
    })
}

/// Predicted (wins, losses) over `games` from a converged fit.
pub fn predict_record(fit: &FitResult, games: u64) -> Result<(f64, f64)> {
    if !fit.converged {
        return Err(Error::UnconvergedFit);
    }
    let wins = fit.predicted_wlp * games as f64;
    Ok((wins, games as f64 - wins))
}
