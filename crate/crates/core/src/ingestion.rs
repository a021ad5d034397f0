//! Game-log parsing, season assembly, and the on-disk result archive.
//!
//! Game logs are plain UTF-8 CSV with the exact header
//! `date,team,opponent,runs_scored,runs_allowed`, one game per line,
//! ISO-8601 dates, LF or CRLF endings. Ties are either a hard parse
//! error or dropped with a note, at the caller's choice — the model
//! has no way to represent them either way.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{FitMethod, FitResult, TeamSeason};
use crate::inference::TestReport;

/// Exact header line a game log must start with.
pub const GAME_LOG_HEADER: &str = "date,team,opponent,runs_scored,runs_allowed";

/// Hard sanity ceiling on a single-game run total. The record in a
/// major-league game is 36; anything past this is a corrupt row, not
/// an outlier.
pub const MAX_REASONABLE_RUNS: u32 = 50;

/// A regulation season; game counts that differ are accepted but noted.
const REGULATION_GAMES: usize = 162;

/// One game from one team's perspective.
///
/// Construction rejects ties and absurd run totals, so downstream code
/// can treat `runs_scored != runs_allowed` as given. The only way to
/// build a tied record is [`cap_scores`](crate::inference::cap_scores),
/// which documents the consequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameRecord {
    date: NaiveDate,
    team: String,
    opponent: String,
    runs_scored: u32,
    runs_allowed: u32,
}

impl GameRecord {
    pub fn new(
        date: NaiveDate,
        team: String,
        opponent: String,
        runs_scored: u32,
        runs_allowed: u32,
    ) -> Result<Self> {
        if team.trim().is_empty() {
            return Err(Error::EmptyInput { what: "team name" });
        }
        if opponent.trim().is_empty() {
            return Err(Error::EmptyInput { what: "opponent name" });
        }
        if runs_scored == runs_allowed {
            return Err(Error::TiedGame {
                team,
                opponent,
                runs: runs_scored,
            });
        }
        for (name, runs) in [("runs_scored", runs_scored), ("runs_allowed", runs_allowed)] {
            if runs > MAX_REASONABLE_RUNS {
                return Err(Error::InvalidParameter {
                    name,
                    value: f64::from(runs),
                    reason: "exceeds any plausible single-game run total",
                });
            }
        }
        Ok(GameRecord {
            date,
            team,
            opponent,
            runs_scored,
            runs_allowed,
        })
    }

    /// Bypass validation. Only for internal transforms (score capping)
    /// that can legitimately produce ties; never exposed.
    pub(crate) fn unchecked(
        date: NaiveDate,
        team: String,
        opponent: String,
        runs_scored: u32,
        runs_allowed: u32,
    ) -> Self {
        GameRecord {
            date,
            team,
            opponent,
            runs_scored,
            runs_allowed,
        }
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn team(&self) -> &str {
        &self.team
    }

    pub fn opponent(&self) -> &str {
        &self.opponent
    }

    pub fn runs_scored(&self) -> u32 {
        self.runs_scored
    }

    pub fn runs_allowed(&self) -> u32 {
        self.runs_allowed
    }

    /// Strictly more runs scored than allowed. (Capped records can tie;
    /// a tie counts as a loss here, which is why capped data is only
    /// ever used for contingency tables, not win counts.)
    pub fn won(&self) -> bool {
        self.runs_scored > self.runs_allowed
    }
}

/// What to do with a tied line in a game log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieHandling {
    /// Fail parsing, naming the offending line.
    #[default]
    Reject,
    /// Skip the line and record a note.
    Drop,
}

/// Output of [`parse_game_log`]: the games plus bookkeeping about what
/// was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub games: Vec<GameRecord>,
    pub dropped_ties: usize,
    pub notes: Vec<String>,
}

/// Parse a whole game-log file. Line numbers in errors are 1-based and
/// count physical lines, header included. Blank lines are ignored.
pub fn parse_game_log(text: &str, ties: TieHandling) -> Result<ParsedLog> {
    let mut games = Vec::new();
    let mut notes = Vec::new();
    let mut dropped_ties = 0usize;
    let mut header_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != GAME_LOG_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header `{GAME_LOG_HEADER}`, found `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }

        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let date = NaiveDate::parse_from_str(fields[0].trim(), "%Y-%m-%d").map_err(|e| {
            Error::Parse {
                line: line_no,
                message: format!("bad date `{}`: {e}", fields[0].trim()),
            }
        })?;
        let team = fields[1].trim().to_owned();
        let opponent = fields[2].trim().to_owned();
        let runs_scored = parse_runs(fields[3], "runs_scored", line_no)?;
        let runs_allowed = parse_runs(fields[4], "runs_allowed", line_no)?;

        match GameRecord::new(date, team, opponent, runs_scored, runs_allowed) {
            Ok(g) => games.push(g),
            Err(Error::TiedGame { team, opponent, runs }) => match ties {
                TieHandling::Reject => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("tied game {team} vs {opponent} ({runs}-{runs})"),
                    });
                }
                TieHandling::Drop => {
                    dropped_ties += 1;
                    notes.push(format!(
                        "line {line_no}: dropped tied game {team} vs {opponent} ({runs}-{runs})"
                    ));
                }
            },
            Err(e) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                });
            }
        }
    }

    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            message: format!("empty file: expected header `{GAME_LOG_HEADER}`"),
        });
    }

    Ok(ParsedLog {
        games,
        dropped_ties,
        notes,
    })
}

fn parse_runs(field: &str, name: &str, line_no: usize) -> Result<u32> {
    field.trim().parse::<u32>().map_err(|e| Error::Parse {
        line: line_no,
        message: format!("bad {name} `{}`: {e}", field.trim()),
    })
}

/// Seasons grouped out of a flat game list, in team-name order.
#[derive(Debug, Clone)]
pub struct AssembledSeasons {
    pub seasons: Vec<TeamSeason>,
    pub notes: Vec<String>,
}

/// Group records by team into date-sorted seasons. Team order is
/// lexicographic, so downstream output is deterministic regardless of
/// input order. Game counts other than a regulation 162 are accepted
/// with a note.
pub fn assemble_seasons(games: Vec<GameRecord>) -> Result<AssembledSeasons> {
    if games.is_empty() {
        return Err(Error::EmptyInput { what: "game list" });
    }
    let mut by_team: BTreeMap<String, Vec<GameRecord>> = BTreeMap::new();
    for g in games {
        by_team.entry(g.team.clone()).or_default().push(g);
    }
    let mut seasons = Vec::with_capacity(by_team.len());
    let mut notes = Vec::new();
    for (team, team_games) in by_team {
        let n = team_games.len();
        if n != REGULATION_GAMES {
            notes.push(format!("{team}: {n} games (not a regulation {REGULATION_GAMES})"));
        }
        seasons.push(TeamSeason::new(team_games)?);
    }
    Ok(AssembledSeasons { seasons, notes })
}

/// On-disk schema version this build writes and the only one it reads.
pub const ARCHIVE_FORMAT_VERSION: u64 = 1;

/// Run-level configuration recorded alongside the results so a reader
/// can tell how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveConfig {
    pub beta: f64,
    pub method: FitMethod,
    pub bin_scheme: String,
    pub notes: Vec<String>,
}

/// One team-season's fit plus whatever test reports were attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub team: String,
    pub season: String,
    pub method: FitMethod,
    pub fit: FitResult,
    pub reports: Vec<LabeledReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledReport {
    pub label: String,
    pub report: TestReport,
}

/// The archive file: a versioned, self-describing JSON document.
/// Entries are unique on (team, season, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultArchive {
    pub format_version: u64,
    pub created: String,
    pub config: ArchiveConfig,
    pub entries: Vec<ArchiveEntry>,
}

impl ResultArchive {
    /// Fresh archive stamped with the current UTC time — or, when the
    /// `SOURCE_DATE_EPOCH` environment variable is set (the usual
    /// reproducible-build convention), with that fixed instant, so two
    /// runs over the same inputs produce byte-identical files.
    pub fn new(config: ArchiveConfig) -> Self {
        ResultArchive::with_created(config, archive_timestamp())
    }

    /// As [`new`](ResultArchive::new) with the creation stamp supplied
    /// by the caller, for producers that need byte-identical output
    /// across runs without environment variables.
    pub fn with_created(config: ArchiveConfig, created: String) -> Self {
        ResultArchive {
            format_version: ARCHIVE_FORMAT_VERSION,
            created,
            config,
            entries: Vec::new(),
        }
    }

    /// Add an entry; (team, season, method) must be new, and the fit
    /// must be finite so the file can round-trip through JSON.
    pub fn insert(&mut self, entry: ArchiveEntry) -> Result<()> {
        if self
            .get(&entry.team, &entry.season, entry.method)
            .is_some()
        {
            return Err(Error::DuplicateArchiveEntry {
                key: format!("{}/{}/{}", entry.team, entry.season, entry.method),
            });
        }
        for (name, v) in [
            ("objective_value", entry.fit.objective_value),
            ("predicted_wlp", entry.fit.predicted_wlp),
            ("predicted_wins", entry.fit.predicted_wins),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "archives only store finite fit results",
                });
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, team: &str, season: &str, method: FitMethod) -> Option<&ArchiveEntry> {
        self.entries
            .iter()
            .find(|e| e.team == team && e.season == season && e.method == method)
    }
}

fn archive_timestamp() -> String {
    let when = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    when.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Serialize and atomically replace `path`: the document is written to
/// a sibling temp file first and renamed into place, so a crash
/// mid-write can never leave a half-written archive behind.
pub fn write_archive(archive: &ResultArchive, path: &Path) -> Result<()> {
    let mut body = serde_json::to_string_pretty(archive).map_err(|e| Error::ArchiveCorrupt {
        reason: format!("serialization failed: {e}"),
    })?;
    body.push('\n');
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, body.as_bytes())?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read and validate an archive. The version field is checked before
/// full decoding so an honest "format_version 2" file gets a version
/// error, not a generic parse failure.
pub fn read_archive(path: &Path) -> Result<ResultArchive> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::ArchiveCorrupt {
            reason: format!("not valid JSON: {e}"),
        })?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::ArchiveCorrupt {
            reason: "missing integer format_version".to_owned(),
        })?;
    if version != ARCHIVE_FORMAT_VERSION {
        return Err(Error::ArchiveVersion {
            found: version,
            expected: ARCHIVE_FORMAT_VERSION,
        });
    }
    let archive: ResultArchive =
        serde_json::from_value(value).map_err(|e| Error::ArchiveCorrupt {
            reason: e.to_string(),
        })?;
    let mut seen = std::collections::BTreeSet::new();
    for e in &archive.entries {
        let key = format!("{}/{}/{}", e.team, e.season, e.method);
        if !seen.insert(key.clone()) {
            return Err(Error::DuplicateArchiveEntry { key });
        }
    }
    Ok(archive)
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitMethod::LeastSquares => write!(f, "ls"),
            FitMethod::MaxLikelihood => write!(f, "mle"),
        }
    }
}
