//! Benchmarks over the paths a full-league run spends its time in:
//! log ingestion, per-team fits, and the test battery.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pythag_core::{
    assemble_seasons, build_table_with_policy, chi_square_sf, fit_team, gof_statistic,
    independence_statistic, ipf_expected, mean_z_test, parse_game_log, trim_empty_margins,
    won_loss_percentage, BinScheme, DiagonalPolicy, FitConfig, FitMethod, GofDofMode,
    IndependenceVariant, MatchedPair, ScoreHistogram, TeamSeason, TieHandling,
};

const BETA: f64 = -0.5;
const GAMMA: f64 = 1.8;

fn league_csv(teams: usize, games: usize, seed: u64) -> String {
    let mut csv = String::from("date,team,opponent,runs_scored,runs_allowed\n");
    for t in 0..teams {
        let pair =
            MatchedPair::from_alphas(5.4 + 0.2 * t as f64, 5.9 - 0.1 * t as f64, BETA, GAMMA)
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        for i in 0..games {
            let (rs, ra) = pair.sample_integer_game(&mut rng);
            let month = 4 + (i / 28) % 6;
            let day = 1 + i % 28;
            csv.push_str(&format!(
                "2004-{month:02}-{day:02},Team{t:02},Opponents,{rs},{ra}\n"
            ));
        }
    }
    csv
}

fn seasons() -> Vec<TeamSeason> {
    let csv = league_csv(4, 162, 0xBE7C);
    let parsed = parse_game_log(&csv, TieHandling::Reject).unwrap();
    assemble_seasons(parsed.games).unwrap().seasons
}

fn bench_ingestion(c: &mut Criterion) {
    let csv = league_csv(4, 162, 0xBE7C);
    c.bench_function("parse_game_log/4x162", |b| {
        b.iter(|| parse_game_log(black_box(&csv), TieHandling::Reject).unwrap())
    });
}

fn bench_fitting(c: &mut Criterion) {
    let season = seasons().into_iter().next().unwrap();
    for (name, method) in [
        ("fit_team/mle", FitMethod::MaxLikelihood),
        ("fit_team/ls", FitMethod::LeastSquares),
    ] {
        let cfg = FitConfig::with_method(method);
        c.bench_function(name, |b| {
            b.iter(|| fit_team(black_box(&season), &cfg).unwrap())
        });
    }
}

fn bench_battery(c: &mut Criterion) {
    let season = seasons().into_iter().next().unwrap();
    let cfg = FitConfig::default();
    let fit = fit_team(&season, &cfg).unwrap();
    let scored = ScoreHistogram::from_scores(&season.runs_scored(), &cfg.scheme).unwrap();
    let allowed = ScoreHistogram::from_scores(&season.runs_allowed(), &cfg.scheme).unwrap();
    let scheme = BinScheme::independence_bins(IndependenceVariant::Twelve);

    c.bench_function("battery/gof", |b| {
        b.iter(|| {
            gof_statistic(
                black_box(&scored),
                black_box(&allowed),
                &fit,
                BETA,
                GofDofMode::Literal,
                14,
            )
            .unwrap()
        })
    });
    c.bench_function("battery/independence", |b| {
        b.iter(|| {
            let build =
                build_table_with_policy(black_box(season.games()), &scheme, DiagonalPolicy::Drop)
                    .unwrap();
            let trimmed = trim_empty_margins(&build.table).unwrap();
            let expected = ipf_expected(&trimmed.table, 1e-10, 100_000).unwrap();
            independence_statistic(&trimmed.table, &expected, 14).unwrap()
        })
    });
    c.bench_function("battery/mean_z", |b| {
        b.iter(|| mean_z_test(black_box(&season), &fit, BETA, 14).unwrap())
    });
}

fn bench_primitives(c: &mut Criterion) {
    c.bench_function("chi_square_sf/dof109", |b| {
        b.iter(|| chi_square_sf(black_box(134.4), black_box(109)))
    });
    c.bench_function("won_loss_percentage", |b| {
        b.iter(|| won_loss_percentage(black_box(5.45), black_box(5.11), BETA, 1.82).unwrap())
    });
    let pair = MatchedPair::from_alphas(5.96, 5.62, BETA, GAMMA).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    c.bench_function("sample_integer_game", |b| {
        b.iter(|| black_box(pair.sample_integer_game(&mut rng)))
    });
}

criterion_group!(
    benches,
    bench_ingestion,
    bench_fitting,
    bench_battery,
    bench_primitives
);
criterion_main!(benches);
