//! Shared helpers for the integration and acceptance suites: a small
//! adaptive quadrature, test-local density formulas (deliberately
//! written out again here rather than calling the crate, so the crate
//! is checked against independent arithmetic), Monte Carlo utilities
//! and synthetic-season generators.

#![allow(dead_code)]

use pythag_core::{GameRecord, MatchedPair, TeamSeason};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn close_abs(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

pub fn close_rel(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * (1.0 + want.abs())
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature
// ---------------------------------------------------------------------------

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with Richardson correction; `tol` is an absolute
/// target for the whole interval.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    assert!(a < b, "degenerate interval [{a}, {b}]");
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    simpson_rec(&f, a, b, fa, fb, fm, whole, tol, 55)
}

// ---------------------------------------------------------------------------
// Test-local Weibull arithmetic (independent of the crate)
// ---------------------------------------------------------------------------

/// The density written straight from its formula, used as the
/// quadrature integrand.
pub fn ref_pdf(x: f64, alpha: f64, beta: f64, gamma: f64) -> f64 {
    if x < beta {
        return 0.0;
    }
    let z = (x - beta) / alpha;
    (gamma / alpha) * z.powf(gamma - 1.0) * (-z.powf(gamma)).exp()
}

/// Support point beyond which less than `eps` probability remains.
pub fn ref_cutoff(alpha: f64, beta: f64, gamma: f64, eps: f64) -> f64 {
    beta + alpha * (-eps.ln()).powf(1.0 / gamma)
}

/// Inverse-CDF draw, test-local.
pub fn ref_sample(u: f64, alpha: f64, beta: f64, gamma: f64) -> f64 {
    beta + alpha * (-(1.0 - u).ln()).powf(1.0 / gamma)
}

/// Mean and variance by numerical integration alone.
///
/// For shapes below 1 the density blows up at the translation point,
/// so the integral is evaluated in the substituted variable
/// `u = ((x - beta)/alpha)^gamma`, where
/// `E[g(X)] = ∫ g(beta + alpha u^(1/gamma)) e^(-u) du`
/// has a bounded, smooth integrand (1/gamma > 1). At or above shape 1
/// the density itself is bounded and plain x-space quadrature is used.
pub fn quad_mean_variance(alpha: f64, beta: f64, gamma: f64) -> (f64, f64) {
    let tol = 1e-11;
    let mean = if gamma >= 1.0 {
        let cut = ref_cutoff(alpha, beta, gamma, 1e-18);
        adaptive_simpson(|x| x * ref_pdf(x, alpha, beta, gamma), beta, cut, tol)
    } else {
        let u_max = -(1e-18f64).ln();
        adaptive_simpson(
            |u| (beta + alpha * u.powf(1.0 / gamma)) * (-u).exp(),
            0.0,
            u_max,
            tol,
        )
    };
    let var = if gamma >= 1.0 {
        let cut = ref_cutoff(alpha, beta, gamma, 1e-18);
        adaptive_simpson(
            |x| (x - mean) * (x - mean) * ref_pdf(x, alpha, beta, gamma),
            beta,
            cut,
            tol,
        )
    } else {
        let u_max = -(1e-18f64).ln();
        adaptive_simpson(
            |u| {
                let x = beta + alpha * u.powf(1.0 / gamma);
                (x - mean) * (x - mean) * (-u).exp()
            },
            0.0,
            u_max,
            tol,
        )
    };
    (mean, var)
}

/// P(X > Y) for independent Weibulls sharing (beta, gamma), by nested
/// quadrature with no reference to the closed form.
///
/// Shapes >= 1: straight x-space double integral
/// `∫ f_Y(y) [∫_y^∞ f_X(x) dx] dy`. Shapes < 1: both layers run in
/// their substituted variables (densities become `e^{-u}`), with the
/// inner limit mapped through the substitution.
pub fn double_quad_prob_exceeds(alpha_x: f64, alpha_y: f64, beta: f64, gamma: f64) -> f64 {
    if gamma >= 1.0 {
        let cut_x = ref_cutoff(alpha_x, beta, gamma, 1e-16);
        let cut_y = ref_cutoff(alpha_y, beta, gamma, 1e-16);
        adaptive_simpson(
            |y| {
                if y >= cut_x {
                    return 0.0;
                }
                let inner = adaptive_simpson(
                    |x| ref_pdf(x, alpha_x, beta, gamma),
                    y,
                    cut_x,
                    1e-11,
                );
                ref_pdf(y, alpha_y, beta, gamma) * inner
            },
            beta,
            cut_y,
            1e-9,
        )
    } else {
        // v is Y's substituted variable; X exceeds y = beta + a_y v^{1/g}
        // exactly when X's substituted variable exceeds (a_y/a_x)^g v.
        let ratio = (alpha_y / alpha_x).powf(gamma);
        let u_max = -(1e-16f64).ln();
        adaptive_simpson(
            |v| {
                let lo = ratio * v;
                if lo >= u_max {
                    return 0.0;
                }
                let inner = adaptive_simpson(|u| (-u).exp(), lo, u_max, 1e-11);
                (-v).exp() * inner
            },
            0.0,
            u_max,
            1e-9,
        )
    }
}

/// Monte Carlo estimate of P(X > Y) with a test-local sampler.
/// Returns (estimate, binomial standard error).
pub fn mc_prob_exceeds(
    alpha_x: f64,
    alpha_y: f64,
    beta: f64,
    gamma: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let mut hits = 0usize;
    for _ in 0..n {
        let x = ref_sample(rng.gen::<f64>(), alpha_x, beta, gamma);
        let y = ref_sample(rng.gen::<f64>(), alpha_y, beta, gamma);
        if x > y {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (p, se)
}

// ---------------------------------------------------------------------------
// Synthetic seasons
// ---------------------------------------------------------------------------

/// Integer (scored, allowed) pairs from a known matched pair.
pub fn synthetic_scores(
    alpha_rs: f64,
    alpha_ra: f64,
    gamma: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<u32>, Vec<u32>) {
    let pair = MatchedPair::from_alphas(alpha_rs, alpha_ra, -0.5, gamma).unwrap();
    let mut scored = Vec::with_capacity(n);
    let mut allowed = Vec::with_capacity(n);
    for _ in 0..n {
        let (rs, ra) = pair.sample_integer_game(rng);
        scored.push(rs);
        allowed.push(ra);
    }
    (scored, allowed)
}

/// Wrap score vectors into a `TeamSeason` with sequential dates.
pub fn season_from_scores(team: &str, scored: &[u32], allowed: &[u32]) -> TeamSeason {
    let base = chrono::NaiveDate::from_ymd_opt(2004, 4, 1).unwrap();
    let games: Vec<GameRecord> = scored
        .iter()
        .zip(allowed)
        .enumerate()
        .map(|(i, (&rs, &ra))| {
            GameRecord::new(
                base.checked_add_days(chrono::Days::new(i as u64)).unwrap(),
                team.to_owned(),
                "OPP".to_owned(),
                rs,
                ra,
            )
            .unwrap()
        })
        .collect();
    TeamSeason::new(games).unwrap()
}

/// A whole synthetic team season in one call.
pub fn synthetic_season(
    team: &str,
    alpha_rs: f64,
    alpha_ra: f64,
    gamma: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> TeamSeason {
    let (scored, allowed) = synthetic_scores(alpha_rs, alpha_ra, gamma, n, rng);
    season_from_scores(team, &scored, &allowed)
}
