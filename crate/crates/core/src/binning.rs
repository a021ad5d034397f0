//! Bin schemes for run totals and the histograms built on them.
//!
//! Two families matter here. The *fit* scheme puts integer scores at
//! bin centres by starting at -0.5 and pools high scores where data
//! thins out. The *independence* schemes are integer-aligned, used for
//! the scored-vs-allowed contingency table, in a 12-bin form and a
//! 13-bin form that splits the open tail once more.

use crate::error::{Error, Result};
use crate::weibull::WeibullParams;

/// Which standard scheme a `BinScheme` came from. Carried along so
/// downstream code (labels in reports, the goodness-of-fit dof rule)
/// can tell them apart without re-deriving it from the edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinLabel {
    Fit,
    Independence12,
    Independence13,
    Custom,
}

/// Tail-split variant for the contingency-table bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndependenceVariant {
    /// 12 bins: [0,1), [1,2), ..., [10,11), [11, inf).
    Twelve,
    /// 13 bins: as above but the tail splits into [11,12), [12, inf).
    Thirteen,
}

/// Strictly increasing edges; the last bin is always unbounded above.
///
/// A scheme with edges `e_0 < e_1 < ... < e_{B-1}` has `B` bins:
/// `[e_k, e_{k+1})` for `k < B-1` and `[e_{B-1}, inf)` for the last.
#[derive(Debug, Clone, PartialEq)]
pub struct BinScheme {
    edges: Vec<f64>,
    label: BinLabel,
}

impl BinScheme {
    /// The 12-bin fit scheme: scores 0 through 9 each get a unit bin
    /// centred on the integer, 10 and 11 pool, and 12+ pools.
    pub fn fit_bins() -> Self {
        let mut edges: Vec<f64> = (0..=10).map(|i| i as f64 - 0.5).collect();
        edges.push(11.5);
        BinScheme {
            edges,
            label: BinLabel::Fit,
        }
    }

    /// Integer-aligned bins for the quasi-independence table.
    pub fn independence_bins(variant: IndependenceVariant) -> Self {
        match variant {
            IndependenceVariant::Twelve => BinScheme {
                edges: (0..=11).map(f64::from).collect(),
                label: BinLabel::Independence12,
            },
            IndependenceVariant::Thirteen => BinScheme {
                edges: (0..=12).map(f64::from).collect(),
                label: BinLabel::Independence13,
            },
        }
    }

    /// Any strictly increasing edge list with at least two entries.
    pub fn custom(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidBinEdges {
                reason: "need at least two edges",
            });
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidBinEdges {
                reason: "edges must be finite",
            });
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBinEdges {
                reason: "edges must be strictly increasing",
            });
        }
        Ok(BinScheme {
            edges,
            label: BinLabel::Custom,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn label(&self) -> BinLabel {
        self.label
    }

    pub fn num_bins(&self) -> usize {
        self.edges.len()
    }

    /// Left/right bounds of bin `k`; the last right bound is infinite.
    pub fn bin_bounds(&self, k: usize) -> Result<(f64, f64)> {
        if k >= self.num_bins() {
            return Err(Error::BinIndexOutOfRange {
                index: k,
                num_bins: self.num_bins(),
            });
        }
        let right = self.edges.get(k + 1).copied().unwrap_or(f64::INFINITY);
        Ok((self.edges[k], right))
    }

    /// Index of the half-open bin containing `score`. Scores below the
    /// first edge have no home and error; everything at or above the
    /// last edge lands in the unbounded tail bin.
    pub fn bin_index(&self, score: f64) -> Result<usize> {
        if !score.is_finite() {
            return Err(Error::InvalidParameter {
                name: "score",
                value: score,
                reason: "must be finite",
            });
        }
        if score < self.edges[0] {
            return Err(Error::ScoreBelowRange {
                score,
                first_edge: self.edges[0],
            });
        }
        let upper = self.edges.partition_point(|e| *e <= score);
        Ok(upper - 1)
    }
}

/// Observed counts per bin for one side (scored or allowed) of a
/// team's season.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    scheme: BinScheme,
    counts: Vec<u64>,
    total: u64,
}

impl ScoreHistogram {
    /// Bin integer run totals. Fails only if a score falls below the
    /// scheme's first edge (impossible for the standard schemes, whose
    /// first edges are at or below zero).
    pub fn from_scores(scores: &[u32], scheme: &BinScheme) -> Result<Self> {
        let mut counts = vec![0u64; scheme.num_bins()];
        for &s in scores {
            let k = scheme.bin_index(f64::from(s))?;
            counts[k] += 1;
        }
        Ok(ScoreHistogram {
            scheme: scheme.clone(),
            counts,
            total: scores.len() as u64,
        })
    }

    /// Adopt pre-tabulated counts (mainly for tests and synthetic data).
    pub fn from_counts(scheme: &BinScheme, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != scheme.num_bins() {
            return Err(Error::CountLengthMismatch {
                expected: scheme.num_bins(),
                found: counts.len(),
            });
        }
        let total = counts.iter().sum();
        Ok(ScoreHistogram {
            scheme: scheme.clone(),
            counts,
            total,
        })
    }

    pub fn scheme(&self) -> &BinScheme {
        &self.scheme
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Crude histogram mean used only to seed the optimizer: each bin
    /// contributes its centre (left edge + 1/2 for the open tail).
    pub(crate) fn approximate_mean(&self) -> f64 {
        assert!(self.total > 0, "approximate_mean needs observations");
        let mut acc = 0.0;
        for (k, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let (lo, hi) = self.scheme.bin_bounds(k).expect("index in range");
            let centre = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 0.5 };
            acc += centre * c as f64;
        }
        acc / self.total as f64
    }
}

/// Model probability mass in bin `k`: `cdf(right) - cdf(left)`, with
/// the survival function taking over for the unbounded tail.
pub fn bin_probability(params: &WeibullParams, scheme: &BinScheme, k: usize) -> Result<f64> {
    let (lo, hi) = scheme.bin_bounds(k)?;
    if hi.is_finite() {
        Ok((params.cdf(hi) - params.cdf(lo)).max(0.0))
    } else {
        Ok(params.survival(lo))
    }
}

/// All bin masses at once, sharing CDF evaluations along the edges.
/// The masses sum to `survival(first_edge)`, which is exactly 1 when
/// the first edge sits at or below the translation point `beta`.
pub fn bin_probabilities(params: &WeibullParams, scheme: &BinScheme) -> Vec<f64> {
    let edges = scheme.edges();
    let cdfs: Vec<f64> = edges.iter().map(|&e| params.cdf(e)).collect();
    let mut masses = Vec::with_capacity(scheme.num_bins());
    for k in 0..scheme.num_bins() - 1 {
        masses.push((cdfs[k + 1] - cdfs[k]).max(0.0));
    }
    masses.push(params.survival(edges[edges.len() - 1]));
    masses
}
