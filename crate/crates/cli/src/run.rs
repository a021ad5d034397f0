//! Subcommand implementations. Everything here is deterministic:
//! teams are processed in name order, parallel fits are reassembled
//! in that order before any output, and archives are stamped from the
//! data (or `SOURCE_DATE_EPOCH`) rather than the wall clock.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pythag_core::{
    assemble_seasons, bin_probabilities, bonferroni_adjust, build_table_with_policy,
    gof_statistic, independence_statistic, ipf_expected, mean_z_test, parse_game_log,
    trim_empty_margins, won_loss_percentage, write_archive, ArchiveConfig, ArchiveEntry,
    BinScheme, DiagonalPolicy, FitConfig, FitResult, GofDofMode, LabeledReport, MatchedPair,
    MeanZTests, ReferenceDist, ResultArchive, ScoreHistogram, TeamSeason, TestReport, TieHandling,
};

use crate::table::Table;
use crate::{Cli, Command, PredictArgs, Shared, SimulateArgs};

const IPF_TOLERANCE: f64 = 1e-10;
const IPF_MAX_ITERATIONS: usize = 100_000;

pub(crate) fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit => cmd_fit(&cli.shared),
        Command::Test => cmd_test(&cli.shared),
        Command::Predict(ref args) => cmd_predict(&cli.shared, args),
        Command::PlotData => cmd_plot_data(&cli.shared),
        Command::Simulate(ref args) => cmd_simulate(&cli.shared, args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct LoadedInput {
    seasons: Vec<TeamSeason>,
    /// Archive stamp derived from the newest game in the log, so two
    /// runs over the same file write byte-identical archives.
    data_stamp: String,
}

fn load_input(shared: &Shared) -> Result<LoadedInput> {
    let path = shared
        .input
        .as_deref()
        .context("this subcommand needs --input <PATH>")?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let ties = if shared.drop_ties {
        TieHandling::Drop
    } else {
        TieHandling::Reject
    };
    let parsed = parse_game_log(&text, ties)
        .with_context(|| format!("parsing {}", path.display()))?;
    for note in &parsed.notes {
        eprintln!("warning: {note}");
    }
    let newest = parsed
        .games
        .iter()
        .map(|g| g.date())
        .max()
        .context("game log holds no games")?;
    let assembled = assemble_seasons(parsed.games)?;
    for note in &assembled.notes {
        eprintln!("note: {note}");
    }
    Ok(LoadedInput {
        seasons: assembled.seasons,
        data_stamp: format!("{newest}T00:00:00Z"),
    })
}

fn fit_config(shared: &Shared) -> FitConfig {
    FitConfig {
        beta: shared.beta,
        method: shared.method.into(),
        ..FitConfig::default()
    }
}

/// Fit every season in parallel, then reassemble in season order and
/// surface the first failure by team name.
fn fit_all(seasons: &[TeamSeason], cfg: &FitConfig) -> Result<Vec<FitResult>> {
    let outcomes: Vec<pythag_core::Result<FitResult>> = seasons
        .par_iter()
        .map(|s| pythag_core::fit_team(s, cfg))
        .collect();
    seasons
        .iter()
        .zip(outcomes)
        .map(|(s, r)| r.with_context(|| format!("fitting {}", s.team())))
        .collect()
}

fn new_archive(stamp: &str, cfg: &FitConfig) -> ResultArchive {
    let config = ArchiveConfig {
        beta: cfg.beta,
        method: cfg.method,
        bin_scheme: format!("{:?}", cfg.scheme.label()),
        notes: Vec::new(),
    };
    // SOURCE_DATE_EPOCH (the reproducible-build convention) wins when
    // set; otherwise stamp from the data so reruns stay byte-identical.
    if std::env::var_os("SOURCE_DATE_EPOCH").is_some() {
        ResultArchive::new(config)
    } else {
        ResultArchive::with_created(config, stamp.to_owned())
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))
}

/// Season label for archive entries: the year of the team's latest
/// game (dates print ISO, so the first four characters are the year).
fn season_label(season: &TeamSeason) -> String {
    let date = season
        .games()
        .last()
        .expect("seasons are never empty")
        .date()
        .to_string();
    date[..4].to_owned()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_owned()
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn cmd_fit(shared: &Shared) -> Result<()> {
    let input = load_input(shared)?;
    let cfg = fit_config(shared);
    let fits = fit_all(&input.seasons, &cfg)?;

    let mut table = Table::new(["team", "alpha_rs", "alpha_ra", "gamma", "pred_wins", "obs_wins", "diff"]);
    let mut gammas = Vec::with_capacity(fits.len());
    let mut diffs = Vec::with_capacity(fits.len());
    for (season, fit) in input.seasons.iter().zip(&fits) {
        let diff = fit.observed_wins as f64 - fit.predicted_wins;
        table.row([
            season.team().to_owned(),
            format!("{:.4}", fit.alpha_rs),
            format!("{:.4}", fit.alpha_ra),
            format!("{:.4}", fit.gamma),
            format!("{:.2}", fit.predicted_wins),
            fit.observed_wins.to_string(),
            format!("{diff:+.2}"),
        ]);
        gammas.push(fit.gamma);
        diffs.push(diff);
    }
    print!("{}", table.render());

    let abs_diffs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let mut summary = Table::new([
        &format!("summary over {} teams", fits.len()) as &str,
        "mean",
        "sd",
        "median",
    ]);
    summary.row([
        "gamma".to_owned(),
        format!("{:.4}", mean(&gammas)),
        format!("{:.4}", sample_sd(&gammas)),
        format!("{:.4}", median(&gammas)),
    ]);
    summary.row([
        "wins (obs - pred)".to_owned(),
        format!("{:+.2}", mean(&diffs)),
        format!("{:.2}", sample_sd(&diffs)),
        format!("{:+.2}", median(&diffs)),
    ]);
    summary.row([
        "|wins (obs - pred)|".to_owned(),
        format!("{:.2}", mean(&abs_diffs)),
        format!("{:.2}", sample_sd(&abs_diffs)),
        format!("{:.2}", median(&abs_diffs)),
    ]);
    println!();
    print!("{}", summary.render());

    ensure_out_dir(&shared.out)?;
    let tsv_path = shared.out.join("fit-table.tsv");
    table.write_tsv(&tsv_path)?;

    let mut archive = new_archive(&input.data_stamp, &cfg);
    for (season, fit) in input.seasons.iter().zip(&fits) {
        archive.insert(ArchiveEntry {
            team: season.team().to_owned(),
            season: season_label(season),
            method: cfg.method,
            fit: fit.clone(),
            reports: Vec::new(),
        })?;
    }
    let archive_path = shared.out.join(format!("fits-{}.json", shared.method.slug()));
    write_archive(&archive, &archive_path)?;
    eprintln!(
        "wrote {} and {}",
        tsv_path.display(),
        archive_path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

struct TeamChecks {
    gof: TestReport,
    independence: TestReport,
    dropped_diagonal: usize,
    /// Bin lines removed from the contingency table for having no
    /// observations (rows, then columns, by original index).
    trimmed_lines: (Vec<usize>, Vec<usize>),
    means: MeanZTests,
}

fn team_checks(
    season: &TeamSeason,
    fit: &FitResult,
    cfg: &FitConfig,
    scheme: &BinScheme,
    gof_dof: GofDofMode,
    comparisons: usize,
) -> pythag_core::Result<TeamChecks> {
    let scored = ScoreHistogram::from_scores(&season.runs_scored(), &cfg.scheme)?;
    let allowed = ScoreHistogram::from_scores(&season.runs_allowed(), &cfg.scheme)?;
    let gof = gof_statistic(&scored, &allowed, fit, cfg.beta, gof_dof, comparisons)?;

    let build = build_table_with_policy(season.games(), scheme, DiagonalPolicy::Drop)?;
    let trimmed = trim_empty_margins(&build.table)?;
    let expected = ipf_expected(&trimmed.table, IPF_TOLERANCE, IPF_MAX_ITERATIONS)?;
    let independence = independence_statistic(&trimmed.table, &expected, comparisons)?;

    let means = mean_z_test(season, fit, cfg.beta, comparisons)?;
    Ok(TeamChecks {
        gof,
        independence,
        dropped_diagonal: build.dropped_games,
        trimmed_lines: (trimmed.dropped_rows, trimmed.dropped_cols),
        means,
    })
}

fn flag(report: &TestReport, level: f64, comparisons: usize) -> String {
    let check = report
        .check(level, comparisons)
        .expect("threshold grid always carries the requested row");
    if check.rejected { "reject" } else { "-" }.to_owned()
}

fn threshold_legend(reference: ReferenceDist, teams: usize) -> String {
    let name = match reference {
        ReferenceDist::ChiSquare { dof } => format!("chi-square, {dof} dof"),
        ReferenceDist::StandardNormal => "standard normal, two-sided".to_owned(),
    };
    let at = |level: f64, m: usize| bonferroni_adjust(level, m, reference);
    format!(
        "thresholds ({name}): 95% {:.2}, 99% {:.2}; adjusted for {teams} teams: 95% {:.2}, 99% {:.2}",
        at(0.95, 1),
        at(0.99, 1),
        at(0.95, teams),
        at(0.99, teams),
    )
}

fn cmd_test(shared: &Shared) -> Result<()> {
    let input = load_input(shared)?;
    let cfg = fit_config(shared);
    let fits = fit_all(&input.seasons, &cfg)?;
    let teams = input.seasons.len();
    let scheme = BinScheme::independence_bins(shared.independence_bins.into());
    let gof_dof = shared.gof_dof.into();

    let outcomes: Vec<pythag_core::Result<TeamChecks>> = input
        .seasons
        .par_iter()
        .zip(&fits)
        .map(|(season, fit)| team_checks(season, fit, &cfg, &scheme, gof_dof, teams))
        .collect();
    let mut checks = Vec::with_capacity(teams);
    for (season, outcome) in input.seasons.iter().zip(outcomes) {
        checks.push(outcome.with_context(|| format!("testing {}", season.team()))?);
    }

    for (season, c) in input.seasons.iter().zip(&checks) {
        if c.dropped_diagonal > 0 {
            eprintln!(
                "note: {}: {} game(s) landed on the contingency diagonal and were dropped",
                season.team(),
                c.dropped_diagonal
            );
        }
        let (rows, cols) = &c.trimmed_lines;
        if !rows.is_empty() || !cols.is_empty() {
            eprintln!(
                "note: {}: empty bin lines trimmed from the contingency table \
                 (rows {rows:?}, columns {cols:?}); the statistic is judged on fewer dof",
                season.team()
            );
        }
    }

    let chi_headers = ["team", "statistic", "dof", "p-value", "95%", "95% adj", "99%", "99% adj"];
    let chi_row = |team: &str, r: &TestReport| -> [String; 8] {
        [
            team.to_owned(),
            format!("{:.2}", r.statistic),
            r.dof().expect("chi-square reports carry a dof").to_string(),
            format!("{:.4}", r.p_value),
            flag(r, 0.95, 1),
            flag(r, 0.95, teams),
            flag(r, 0.99, 1),
            flag(r, 0.99, teams),
        ]
    };

    println!("goodness of fit (both fitted marginals vs observed bins)");
    println!("{}", threshold_legend(checks[0].gof.reference, teams));
    let mut gof_table = Table::new(chi_headers);
    for (season, c) in input.seasons.iter().zip(&checks) {
        gof_table.row(chi_row(season.team(), &c.gof));
    }
    print!("{}", gof_table.render());

    let bins = scheme.num_bins();
    let full_dof = (bins - 1) * (bins - 1) - bins;
    println!();
    println!(
        "independence of runs scored and allowed (quasi-independence, {bins}x{bins} table, diagonal masked)"
    );
    println!(
        "{}",
        threshold_legend(ReferenceDist::ChiSquare { dof: full_dof }, teams)
    );
    let mut ind_table = Table::new(chi_headers);
    for (season, c) in input.seasons.iter().zip(&checks) {
        ind_table.row(chi_row(season.team(), &c.independence));
    }
    print!("{}", ind_table.render());

    println!();
    println!("model means vs observed averages (z tests)");
    println!("{}", threshold_legend(checks[0].means.scored.reference, teams));
    let mut z_table = Table::new(["team", "side", "z", "p-value", "95%", "95% adj", "99%", "99% adj"]);
    for (season, c) in input.seasons.iter().zip(&checks) {
        for (side, r) in [("scored", &c.means.scored), ("allowed", &c.means.allowed)] {
            z_table.row([
                season.team().to_owned(),
                side.to_owned(),
                format!("{:+.3}", r.statistic),
                format!("{:.4}", r.p_value),
                flag(r, 0.95, 1),
                flag(r, 0.95, teams),
                flag(r, 0.99, 1),
                flag(r, 0.99, teams),
            ]);
        }
    }
    print!("{}", z_table.render());

    let reject_count = |reports: Vec<&TestReport>| -> usize {
        reports
            .into_iter()
            .filter(|r| {
                r.check(0.95, teams)
                    .expect("threshold grid always carries the requested row")
                    .rejected
            })
            .count()
    };
    let gof_rejected = reject_count(checks.iter().map(|c| &c.gof).collect());
    let ind_rejected = reject_count(checks.iter().map(|c| &c.independence).collect());
    let z_rejected = reject_count(
        checks
            .iter()
            .flat_map(|c| [&c.means.scored, &c.means.allowed])
            .collect(),
    );
    println!();
    println!(
        "rejected at the adjusted 95% level: goodness of fit {gof_rejected}/{teams}, independence {ind_rejected}/{teams}, means {z_rejected}/{}",
        2 * teams
    );

    ensure_out_dir(&shared.out)?;
    let mut tsv = Table::new([
        "team", "test", "statistic", "dof", "p_value", "reject_95", "reject_95_adj", "reject_99",
        "reject_99_adj",
    ]);
    let yn = |r: &TestReport, level: f64, m: usize| -> String {
        if r.check(level, m)
            .expect("threshold grid always carries the requested row")
            .rejected
        {
            "yes".to_owned()
        } else {
            "no".to_owned()
        }
    };
    for (season, c) in input.seasons.iter().zip(&checks) {
        let rows: [(&str, &TestReport); 4] = [
            ("gof", &c.gof),
            ("independence", &c.independence),
            ("z_scored", &c.means.scored),
            ("z_allowed", &c.means.allowed),
        ];
        for (label, r) in rows {
            tsv.row([
                season.team().to_owned(),
                label.to_owned(),
                format!("{}", r.statistic),
                r.dof().map_or(String::new(), |d| d.to_string()),
                format!("{}", r.p_value),
                yn(r, 0.95, 1),
                yn(r, 0.95, teams),
                yn(r, 0.99, 1),
                yn(r, 0.99, teams),
            ]);
        }
    }
    let tsv_path = shared.out.join("test-reports.tsv");
    tsv.write_tsv(&tsv_path)?;

    let mut archive = new_archive(&input.data_stamp, &cfg);
    for ((season, fit), c) in input.seasons.iter().zip(&fits).zip(&checks) {
        let reports = [
            ("gof", &c.gof),
            ("independence", &c.independence),
            ("z_scored", &c.means.scored),
            ("z_allowed", &c.means.allowed),
        ]
        .into_iter()
        .map(|(label, report)| LabeledReport {
            label: label.to_owned(),
            report: report.clone(),
        })
        .collect();
        archive.insert(ArchiveEntry {
            team: season.team().to_owned(),
            season: season_label(season),
            method: cfg.method,
            fit: fit.clone(),
            reports,
        })?;
    }
    let archive_path = shared.out.join(format!("fits-{}.json", shared.method.slug()));
    write_archive(&archive, &archive_path)?;
    eprintln!("wrote {} and {}", tsv_path.display(), archive_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

fn cmd_predict(shared: &Shared, args: &PredictArgs) -> Result<()> {
    let p = won_loss_percentage(args.rs_mean, args.ra_mean, shared.beta, args.gamma)
        .context("computing the won-loss percentage")?;
    let wins = p * args.games as f64;
    println!("won_loss_percentage\t{p:.6}");
    println!("projected_wins\t{wins:.2}");
    println!("projected_losses\t{:.2}", args.games as f64 - wins);
    Ok(())
}

// ---------------------------------------------------------------------------
// plot-data
// ---------------------------------------------------------------------------

fn cmd_plot_data(shared: &Shared) -> Result<()> {
    let input = load_input(shared)?;
    let cfg = fit_config(shared);
    let fits = fit_all(&input.seasons, &cfg)?;
    ensure_out_dir(&shared.out)?;

    for (season, fit) in input.seasons.iter().zip(&fits) {
        let pair = fit.matched_pair(cfg.beta)?;
        for (side, scores, params) in [
            ("scored", season.runs_scored(), pair.scored()),
            ("allowed", season.runs_allowed(), pair.allowed()),
        ] {
            let hist = ScoreHistogram::from_scores(&scores, &cfg.scheme)?;
            let masses = bin_probabilities(params, &cfg.scheme);
            let n = hist.total() as f64;
            let mut table = Table::new(["bin_center", "observed", "expected"]);
            for (k, (&count, &mass)) in hist.counts().iter().zip(&masses).enumerate() {
                let (lo, hi) = hist.scheme().bin_bounds(k)?;
                let center = if hi.is_finite() { (lo + hi) / 2.0 } else { lo + 0.5 };
                table.row([
                    format!("{center:.1}"),
                    count.to_string(),
                    format!("{:.4}", n * mass),
                ]);
            }
            let path = shared
                .out
                .join(format!("plot-{}-{side}.tsv", slug(season.team())));
            table.write_tsv(&path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(shared: &Shared, args: &SimulateArgs) -> Result<()> {
    if args.games == 0 {
        bail!("--games must be at least 1");
    }
    let pair = MatchedPair::from_alphas(args.alpha_rs, args.alpha_ra, shared.beta, args.gamma)
        .context("building the matched distribution pair")?;
    let closed = pair.prob_exceeds();

    let mut rng = ChaCha8Rng::seed_from_u64(shared.seed);
    let mut wins = 0u64;
    for _ in 0..args.games {
        let (x, y) = pair.sample_game(&mut rng);
        if x > y {
            wins += 1;
        }
    }
    let n = args.games as f64;
    let empirical = wins as f64 / n;
    let se = (empirical * (1.0 - empirical) / n).sqrt();
    let (lo, hi) = (empirical - 1.96 * se, empirical + 1.96 * se);

    println!("games\t{}", args.games);
    println!("seed\t{}", shared.seed);
    println!("closed_form\t{closed:.6}");
    println!("empirical\t{empirical:.6}");
    println!("std_error\t{se:.6}");
    println!("ci95_low\t{lo:.6}");
    println!("ci95_high\t{hi:.6}");
    println!(
        "closed_form_within_ci95\t{}",
        if closed >= lo && closed <= hi { "yes" } else { "no" }
    );
    Ok(())
}
