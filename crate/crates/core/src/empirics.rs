//! Monte Carlo estimates of the quantities the bounds control.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::EnsembleResult;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;

/// Half-width of the 99% normal-approximation interval for a proportion.
pub fn binomial_half_width(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    Z99 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Log-spaced integer grid of at most `n` points in `[lo, hi]`.
pub fn anchor_grid(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if hi < lo || n == 0 {
        return Vec::new();
    }
    if n == 1 || hi == lo {
        return vec![lo];
    }
    let (a, b) = ((lo as f64 + 1.0).ln(), (hi as f64 + 1.0).ln());
    let mut g: Vec<usize> = (0..n)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (n - 1) as f64;
            ((x.exp() - 1.0).round() as usize).clamp(lo, hi)
        })
        .collect();
    g.dedup();
    g
}

/// One run's scalar series and the first slot (at or after `α`) with a
/// detection error.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSeries {
    pub values: Vec<f64>,
    pub first_error: Option<usize>,
}

impl RunSeries {
    /// Whether the run had no detection error in `[α, t]`.
    pub fn clean_through(&self, t: usize) -> bool {
        self.first_error.is_none_or(|e| e > t)
    }
}

/// TV distance between an empirical joint law of pairs and the product of
/// its empirical marginals, with a 99% half-width.
pub fn dependence_tv(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let mut joint: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut left: BTreeMap<u64, usize> = BTreeMap::new();
    let mut right: BTreeMap<u64, usize> = BTreeMap::new();
    for &(a, b) in pairs {
        let (ka, kb) = (key(a), key(b));
        *joint.entry((ka, kb)).or_default() += 1;
        *left.entry(ka).or_default() += 1;
        *right.entry(kb).or_default() += 1;
    }
    let mut tv = 0.0;
    for (ka, &ca) in &left {
        for (kb, &cb) in &right {
            let pj = joint.get(&(*ka, *kb)).copied().unwrap_or(0) as f64 / n;
            tv += (pj - (ca as f64 / n) * (cb as f64 / n)).abs();
        }
    }
    let sd = |c: usize| {
        let p = c as f64 / n;
        (p * (1.0 - p) / n).sqrt()
    };
    let spread: f64 = joint.values().map(|&c| sd(c)).sum::<f64>()
        + left.values().map(|&c| sd(c)).sum::<f64>()
        + right.values().map(|&c| sd(c)).sum::<f64>();
    (0.5 * tv, 0.5 * Z99 * spread)
}

fn key(x: f64) -> u64 {
    // −0.0 and 0.0 are the same outcome
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Beta1Options {
    pub alpha: usize,
    pub anchors: usize,
    pub min_runs: usize,
}

impl Default for Beta1Options {
    fn default() -> Self {
        Self {
            alpha: 0,
            anchors: 20,
            min_runs: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Beta1Estimate {
    pub s: usize,
    /// Max over usable anchors.
    pub value: f64,
    pub ci_half_width: f64,
    /// Anchor attaining the max.
    pub anchor: usize,
    pub anchors_used: Vec<usize>,
    pub anchors_skipped: Vec<usize>,
    /// Fewest surviving runs at a used anchor.
    pub min_survivors: usize,
}

/// `β̂₁` at lag `s`: max over anchors `t ≥ α` (log-spaced in `t − α`) of the TV
/// dependence between `X(t)` and `X(t+s)`, using only runs with no detection
/// error in `[α, t]`.
pub fn estimate_beta1(runs: &[RunSeries], s: usize, opts: &Beta1Options) -> Result<Beta1Estimate> {
    let horizon = runs.iter().map(|r| r.values.len()).min().unwrap_or(0);
    if horizon <= s || horizon - s <= opts.alpha {
        return Err(Error::Estimation(format!(
            "lag s = {s} leaves no anchors in [α = {}, T − s) with T = {horizon}",
            opts.alpha
        )));
    }
    let grid: Vec<usize> = anchor_grid(0, horizon - 1 - s - opts.alpha, opts.anchors)
        .into_iter()
        .map(|o| o + opts.alpha)
        .collect();
    let mut best: Option<(f64, f64, usize)> = None;
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    let mut min_survivors = usize::MAX;
    let mut pairs = Vec::with_capacity(runs.len());
    for &t in &grid {
        pairs.clear();
        pairs.extend(
            runs.iter()
                .filter(|r| r.clean_through(t))
                .map(|r| (r.values[t], r.values[t + s])),
        );
        if pairs.len() < opts.min_runs {
            skipped.push(t);
            continue;
        }
        used.push(t);
        min_survivors = min_survivors.min(pairs.len());
        let (tv, hw) = dependence_tv(&pairs);
        if best.is_none_or(|(b, _, _)| tv > b) {
            best = Some((tv, hw, t));
        }
    }
    let Some((value, ci, anchor)) = best else {
        return Err(Error::Estimation(format!(
            "no anchor had {} surviving error-free runs",
            opts.min_runs
        )));
    };
    Ok(Beta1Estimate {
        s,
        value,
        ci_half_width: ci,
        anchor,
        anchors_used: used,
        anchors_skipped: skipped,
        min_survivors,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaEstimate {
    /// `None` when fewer than two strategies have a usable cell.
    pub value: Option<f64>,
    pub strategies: usize,
    pub cells_used: usize,
    pub cells_excluded: usize,
    pub observations: usize,
}

/// `κ̂ = max_{x,m,m'} ln(P̂(x|m) / P̂(x|m'))` over `(m, x)` cells holding at
/// least `cell_floor` observations. Observations are pooled over slots.
pub fn estimate_kappa<K: Ord + Clone>(obs: &[(u32, K)], cell_floor: usize) -> KappaEstimate {
    let mut per_m: BTreeMap<u32, usize> = BTreeMap::new();
    let mut cells: BTreeMap<(K, u32), usize> = BTreeMap::new();
    for (m, x) in obs {
        *per_m.entry(*m).or_default() += 1;
        *cells.entry((x.clone(), *m)).or_default() += 1;
    }
    let mut by_x: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    let mut used = 0;
    let mut excluded = 0;
    let mut strategies = std::collections::BTreeSet::new();
    for ((x, m), c) in cells {
        if c < cell_floor {
            excluded += 1;
            continue;
        }
        used += 1;
        strategies.insert(m);
        by_x.entry(x).or_default().push(c as f64 / per_m[&m] as f64);
    }
    let value = if strategies.len() < 2 {
        None
    } else {
        let mut k: Option<f64> = None;
        for probs in by_x.values() {
            if probs.len() < 2 {
                continue;
            }
            let hi = probs.iter().copied().fold(0.0, f64::max);
            let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
            let r = (hi / lo).ln();
            k = Some(k.map_or(r, |v: f64| v.max(r)));
        }
        k
    };
    KappaEstimate {
        value,
        strategies: strategies.len(),
        cells_used: used,
        cells_excluded: excluded,
        observations: obs.len(),
    }
}

/// Per-slot fraction of runs whose detection was wrong.
pub fn error_rate(error_slots: &[Vec<u32>], horizon: usize) -> Vec<f64> {
    let mut counts = vec![0usize; horizon];
    for slots in error_slots {
        for &t in slots {
            if (t as usize) < horizon {
                counts[t as usize] += 1;
            }
        }
    }
    let n = error_slots.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Fraction of runs with at least one error in `[from, to]`.
pub fn interval_error_rate(error_slots: &[Vec<u32>], from: usize, to: usize) -> f64 {
    let hit = error_slots
        .iter()
        .filter(|s| s.iter().any(|&t| (from..=to).contains(&(t as usize))))
        .count();
    hit as f64 / error_slots.len().max(1) as f64
}

/// First error slot at or after `alpha`.
pub fn first_error_from(slots: &[u32], alpha: usize) -> Option<usize> {
    slots.iter().map(|&t| t as usize).find(|&t| t >= alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            half_width: Z99 * (var / n).sqrt(),
        }
    }
}

/// Time-average cost gap and constraint excess of an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub lp_value: f64,
    /// Per-run `(1/T) Σ p_0` across runs.
    pub avg_cost: MeanCi,
    /// `avg_cost − lp_value`.
    pub cost_gap: f64,
    /// Mean of the per-slot ensemble mean of `p_0` over the tail window.
    pub tail_cost: f64,
    pub tail_from: usize,
    /// `avg p_k` per penalty with interval.
    pub avg_penalty: Vec<MeanCi>,
    /// `max(0, avg p_k − c_k)`.
    pub excess: Vec<f64>,
    pub tail_penalty: Vec<f64>,
    pub tail_excess: Vec<f64>,
}

pub fn gap_report(ens: &EnsembleResult, lp_value: f64, c: &[f64], tail: usize) -> Result<GapReport> {
    if c.len() != ens.penalties() {
        return Err(Error::Dimension {
            what: "constraint levels",
            expected: ens.penalties(),
            got: c.len(),
        });
    }
    let tail_from = ens.horizon().saturating_sub(tail.max(1));
    let col = |k: usize| ens.runs.iter().map(|r| r.final_avg[k]).collect::<Vec<_>>();
    let avg_cost = MeanCi::of(&col(0));
    let avg_penalty: Vec<MeanCi> = (1..=c.len()).map(|k| MeanCi::of(&col(k))).collect();
    let tail_penalty: Vec<f64> = (1..=c.len()).map(|k| ens.tail_mean(k, tail_from)).collect();
    Ok(GapReport {
        lp_value,
        cost_gap: avg_cost.mean - lp_value,
        avg_cost,
        tail_cost: ens.tail_mean(0, tail_from),
        tail_from,
        excess: avg_penalty
            .iter()
            .zip(c)
            .map(|(a, ck)| (a.mean - ck).max(0.0))
            .collect(),
        tail_excess: tail_penalty.iter().zip(c).map(|(a, ck)| (a - ck).max(0.0)).collect(),
        avg_penalty,
        tail_penalty,
    })
}
