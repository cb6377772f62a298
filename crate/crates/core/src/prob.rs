//! Finite probability spaces.
//!
//! Everything the controller knows about the world is a probability vector
//! over an enumerated, finite outcome space. Joint outcomes of a product
//! space are encoded mixed-radix with the first component most significant,
//! so `(ω_1, …, ω_N)` maps to a single id in `0..|Ω|`.
//!
//! All logarithms are natural.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `Σ p = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over outcomes `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::validate(&probs, None)?;
        Ok(Self { probs })
    }

    /// Like [`FiniteDistribution::new`] but the error names the distribution.
    pub fn named(name: &str, probs: Vec<f64>) -> Result<Self> {
        Self::validate(&probs, Some(name))?;
        Ok(Self { probs })
    }

    fn validate(probs: &[f64], name: Option<&str>) -> Result<()> {
        let fail = |reason: String| Error::InvalidDistribution {
            name: name.map(str::to_owned),
            reason,
        };
        if probs.is_empty() {
            return Err(fail("empty probability vector".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(fail(format!("entry {i} is {p}, must be finite and >= 0")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(fail(format!("entries sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if at >= len {
            return Err(Error::OutOfRange { index: at, limit: len });
        }
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidDistribution {
                name: None,
                reason: "uniform over zero outcomes".into(),
            });
        }
        Self::new(vec![1.0 / len as f64; len])
    }

    /// Independent product of per-component marginals, in the canonical
    /// mixed-radix order (first marginal most significant).
    pub fn product(marginals: &[FiniteDistribution]) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Config("product of zero marginals".into()));
        }
        let mut probs = vec![1.0];
        for m in marginals {
            let mut next = Vec::with_capacity(probs.len() * m.len());
            for &p in &probs {
                for &q in &m.probs {
                    next.push(p * q);
                }
            }
            probs = next;
        }
        // Products of exact marginals can drift by a few ulps; renormalizing
        // keeps the invariant without changing the measure meaningfully.
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Self::new(probs)
    }

    /// `(1 - weight) * self + weight * other`.
    pub fn mix(&self, other: &FiniteDistribution, weight: f64) -> Result<Self> {
        check_len("mixture operand", self.len(), other.len())?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::Domain(format!("mixture weight {weight} outside [0, 1]")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (1.0 - weight) * p + weight * q)
            .collect();
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// Smallest strictly positive entry.
    pub fn min_positive(&self) -> f64 {
        self.probs
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for FiniteDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FiniteDistribution> for Vec<f64> {
    fn from(d: FiniteDistribution) -> Self {
        d.probs
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { what, expected, got });
    }
    Ok(())
}

/// `Σ |p_i − q_i|`, in `[0, 2]`.
pub fn l1_distance(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    check_len("distribution length", p.len(), q.len())?;
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// Total variation distance, half the L1 distance.
pub fn tv_distance(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    Ok(l1_distance(p, q)? / 2.0)
}

/// Draw one outcome by inverse CDF over the stored outcome order.
pub fn sample<R: Rng + ?Sized>(dist: &FiniteDistribution, rng: &mut R) -> usize {
    inverse_cdf(dist.probs.iter().copied(), rng.random::<f64>())
}

/// First outcome whose cumulative mass exceeds `u`. Rounding can leave the
/// total a hair below `u`; the last outcome with positive mass absorbs that.
fn inverse_cdf(probs: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// The per-run random stream.
///
/// Run `r` of an experiment with master seed `s` uses ChaCha8 seeded from
/// `s` with stream id `r`. Streams are independent and the mapping does not
/// depend on how runs are scheduled across workers.
pub fn run_rng(master_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}

/// Average log-likelihood of `window` under `member`.
///
/// Returns `-inf` when the member assigns zero mass to an observed outcome.
pub fn window_loglik(member: &FiniteDistribution, window: &[usize]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::Domain("empty likelihood window".into()));
    }
    let mut total = 0.0;
    for &w in window {
        if w >= member.len() {
            return Err(Error::OutOfRange {
                index: w,
                limit: member.len(),
            });
        }
        let p = member.get(w);
        if p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
    }
    Ok(total / window.len() as f64)
}

/// `E_{π_τ}[ log(P_j(ω) / P_{i*}(ω)) ]`, the per-slot expected log-likelihood
/// ratio of member `j` against the reference member.
pub fn divergence(pi_tau: &FiniteDistribution, p_j: &FiniteDistribution, p_ref: &FiniteDistribution) -> Result<f64> {
    check_len("divergence operand", pi_tau.len(), p_j.len())?;
    check_len("divergence operand", pi_tau.len(), p_ref.len())?;
    let mut total = 0.0;
    for (w, &pw) in pi_tau.probs.iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        let (a, b) = (p_j.get(w), p_ref.get(w));
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::Domain(format!(
                "outcome {w} has zero mass in a covering member but positive mass under π_τ"
            )));
        }
        total += pw * (a / b).ln();
    }
    Ok(total)
}

/// `Ω = Ω_1 × … × Ω_N` with the canonical mixed-radix encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductStateSpace {
    cards: Vec<usize>,
    // place value of component i in the joint id
    places: Vec<usize>,
    total: usize,
}

impl ProductStateSpace {
    pub fn new(cards: Vec<usize>) -> Result<Self> {
        if cards.is_empty() || cards.contains(&0) {
            return Err(Error::Config(format!(
                "state space cardinalities must be positive and non-empty, got {cards:?}"
            )));
        }
        let mut places = vec![0; cards.len()];
        let mut total: usize = 1;
        for i in (0..cards.len()).rev() {
            places[i] = total;
            total = total
                .checked_mul(cards[i])
                .ok_or_else(|| Error::Config("state space too large".into()))?;
        }
        Ok(Self { cards, places, total })
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn users(&self) -> usize {
        self.cards.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn encode(&self, local: &[usize]) -> Result<usize> {
        check_len("state tuple", self.cards.len(), local.len())?;
        let mut id = 0;
        for (i, &w) in local.iter().enumerate() {
            if w >= self.cards[i] {
                return Err(Error::OutOfRange {
                    index: w,
                    limit: self.cards[i],
                });
            }
            id += w * self.places[i];
        }
        Ok(id)
    }

    pub fn decode(&self, id: usize) -> Result<Vec<usize>> {
        if id >= self.total {
            return Err(Error::OutOfRange {
                index: id,
                limit: self.total,
            });
        }
        Ok((0..self.cards.len()).map(|i| self.component(id, i)).collect())
    }

    /// Local state of user `user` in joint outcome `id` (no range check).
    #[inline]
    pub fn component(&self, id: usize, user: usize) -> usize {
        (id / self.places[user]) % self.cards[user]
    }
}

/// A finite δ-covering `{P_1, …, P_M}` together with the support bounds
/// `β_δ < P_j(ω) < α_δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringSet {
    members: Vec<FiniteDistribution>,
    delta: f64,
    alpha_delta: f64,
    beta_delta: f64,
}

impl CoveringSet {
    pub fn new(members: Vec<FiniteDistribution>, delta: f64, alpha_delta: f64, beta_delta: f64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("covering set has no members".into()));
        }
        let len = members[0].len();
        for m in &members {
            check_len("covering member length", len, m.len())?;
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!("covering radius δ = {delta} must be positive")));
        }
        if !(beta_delta > 0.0 && beta_delta < alpha_delta) {
            return Err(Error::Config(format!(
                "support bounds need 0 < β_δ < α_δ, got β_δ = {beta_delta}, α_δ = {alpha_delta}"
            )));
        }
        for (j, m) in members.iter().enumerate() {
            for (w, &p) in m.probs().iter().enumerate() {
                if p > 0.0 && !(beta_delta < p && p < alpha_delta) {
                    return Err(Error::Config(format!(
                        "member {j} outcome {w}: mass {p} outside ({beta_delta}, {alpha_delta})"
                    )));
                }
            }
        }
        Ok(Self {
            members,
            delta,
            alpha_delta,
            beta_delta,
        })
    }

    /// Builds a covering with the tightest strict support bounds around the
    /// members' positive masses.
    pub fn with_tight_support(members: Vec<FiniteDistribution>, delta: f64) -> Result<Self> {
        let (alpha, beta) = tight_support_bounds(&members);
        Self::new(members, delta, alpha, beta)
    }

    pub fn members(&self) -> &[FiniteDistribution] {
        &self.members
    }

    pub fn member(&self, j: usize) -> &FiniteDistribution {
        &self.members[j]
    }

    /// `M_δ`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn outcomes(&self) -> usize {
        self.members[0].len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha_delta(&self) -> f64 {
        self.alpha_delta
    }

    pub fn beta_delta(&self) -> f64 {
        self.beta_delta
    }

    /// `H(P, δ) = ln M_δ`.
    pub fn metric_entropy(&self) -> f64 {
        (self.members.len() as f64).ln()
    }

    /// `ζ_δ = [ln(α_δ / β_δ)]²`.
    pub fn zeta(&self) -> f64 {
        (self.alpha_delta / self.beta_delta).ln().powi(2)
    }

    /// Index of the member closest to `pi` in L1, lowest index on ties,
    /// and that distance.
    pub fn nearest_member(&self, pi: &FiniteDistribution) -> Result<(usize, f64)> {
        let mut best = (0, f64::INFINITY);
        for (j, m) in self.members.iter().enumerate() {
            let d = l1_distance(m, pi)?;
            if d < best.1 {
                best = (j, d);
            }
        }
        if best.1 >= self.delta {
            log::warn!(
                "nearest covering member {} is at L1 distance {} >= δ = {}; not a valid covering for this measure",
                best.0,
                best.1,
                self.delta
            );
        }
        Ok(best)
    }
}

/// Strict bounds `(α, β)` with `β < min positive mass` and `α > max mass`.
pub fn tight_support_bounds(members: &[FiniteDistribution]) -> (f64, f64) {
    let hi = members.iter().map(|m| m.max_prob()).fold(0.0, f64::max);
    let lo = members.iter().map(|m| m.min_positive()).fold(f64::INFINITY, f64::min);
    (hi * (1.0 + 1e-9), lo * (1.0 - 1e-9))
}

/// How the state distribution `π_t` evolves toward its limit `π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonstationarySchedule {
    /// `dists[i]` is active on `[switch_times[i-1], switch_times[i])`; the
    /// last entry is the limit and holds forever.
    Piecewise {
        dists: Vec<FiniteDistribution>,
        switch_times: Vec<usize>,
    },
    /// `π_t = (1 − ρ^t) π + ρ^t π_0`.
    Geometric {
        limit: FiniteDistribution,
        initial: FiniteDistribution,
        rho: f64,
    },
}

impl NonstationarySchedule {
    pub fn stationary(pi: FiniteDistribution) -> Self {
        NonstationarySchedule::Piecewise {
            dists: vec![pi],
            switch_times: vec![],
        }
    }

    pub fn piecewise(dists: Vec<FiniteDistribution>, switch_times: Vec<usize>) -> Result<Self> {
        let s = NonstationarySchedule::Piecewise { dists, switch_times };
        s.validate()?;
        Ok(s)
    }

    pub fn geometric(limit: FiniteDistribution, initial: FiniteDistribution, rho: f64) -> Result<Self> {
        let s = NonstationarySchedule::Geometric { limit, initial, rho };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NonstationarySchedule::Piecewise { dists, switch_times } => {
                if dists.is_empty() {
                    return Err(Error::Config("piecewise schedule has no distributions".into()));
                }
                if switch_times.len() + 1 != dists.len() {
                    return Err(Error::Config(format!(
                        "piecewise schedule needs {} switch times for {} distributions, got {}",
                        dists.len() - 1,
                        dists.len(),
                        switch_times.len()
                    )));
                }
                if switch_times.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config("switch times must be strictly increasing".into()));
                }
                for d in dists {
                    check_len("schedule distribution length", dists[0].len(), d.len())?;
                }
            }
            NonstationarySchedule::Geometric { limit, initial, rho } => {
                check_len("schedule distribution length", limit.len(), initial.len())?;
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::Config(format!("geometric rate ρ = {rho} must lie in (0, 1)")));
                }
            }
        }
        Ok(())
    }

    pub fn limit(&self) -> &FiniteDistribution {
        match self {
            NonstationarySchedule::Piecewise { dists, .. } => dists.last().expect("validated"),
            NonstationarySchedule::Geometric { limit, .. } => limit,
        }
    }

    pub fn outcomes(&self) -> usize {
        self.limit().len()
    }

    /// Slot after which `‖π_t − π‖₁` is non-increasing.
    pub fn settling_time(&self) -> usize {
        match self {
            NonstationarySchedule::Piecewise { switch_times, .. } => switch_times.last().copied().unwrap_or(0),
            NonstationarySchedule::Geometric { .. } => 0,
        }
    }

    /// `π_t` as a convex combination of stored distributions.
    pub fn components_at(&self, t: usize) -> Vec<(f64, &FiniteDistribution)> {
        match self {
            NonstationarySchedule::Piecewise { dists, switch_times } => {
                let idx = switch_times.partition_point(|&s| s <= t);
                vec![(1.0, &dists[idx])]
            }
            NonstationarySchedule::Geometric { limit, initial, rho } => {
                let a = rho.powf(t as f64);
                vec![(1.0 - a, limit), (a, initial)]
            }
        }
    }

    pub fn at(&self, t: usize) -> FiniteDistribution {
        let comps = self.components_at(t);
        if comps.len() == 1 {
            return comps[0].1.clone();
        }
        let mut probs = vec![0.0; self.outcomes()];
        for (wgt, d) in comps {
            for (p, q) in probs.iter_mut().zip(d.probs()) {
                *p += wgt * q;
            }
        }
        FiniteDistribution { probs }
    }

    /// Draw `ω(t) ~ π_t` by inverse CDF, without materializing `π_t`.
    pub fn sample_at<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> usize {
        let u = rng.random::<f64>();
        match self {
            NonstationarySchedule::Piecewise { .. } => {
                let comps = self.components_at(t);
                inverse_cdf(comps[0].1.probs().iter().copied(), u)
            }
            NonstationarySchedule::Geometric { limit, initial, rho } => {
                let a = rho.powf(t as f64);
                let mixed = limit
                    .probs()
                    .iter()
                    .zip(initial.probs())
                    .map(|(p, q)| (1.0 - a) * p + a * q);
                inverse_cdf(mixed, u)
            }
        }
    }

    /// `‖π_t − π‖₁`.
    pub fn distance_to_limit(&self, t: usize) -> f64 {
        l1_distance(&self.at(t), self.limit()).expect("schedule lengths validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn l1_and_tv_examples() {
        let p = d(&[0.5, 0.5]);
        let q = d(&[0.25, 0.75]);
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        assert!((l1_distance(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        assert!((tv_distance(&p, &q).unwrap() - 0.25).abs() < 1e-15);
        let a = FiniteDistribution::point_mass(2, 0).unwrap();
        let b = FiniteDistribution::point_mass(2, 1).unwrap();
        assert_eq!(l1_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let err = l1_distance(&d(&[1.0]), &d(&[0.5, 0.5])).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(FiniteDistribution::new(vec![0.5, 0.49]).is_err());
        assert!(FiniteDistribution::new(vec![1.5, -0.5]).is_err());
        let err = FiniteDistribution::named("pi0", vec![0.5, 0.49]).unwrap_err();
        assert!(err.to_string().contains("pi0"));
    }

    #[test]
    fn metric_entropy_examples() {
        let u = FiniteDistribution::uniform(2).unwrap();
        let one = CoveringSet::with_tight_support(vec![u.clone()], 0.1).unwrap();
        assert_eq!(one.metric_entropy(), 0.0);
        let three = CoveringSet::with_tight_support(vec![u.clone(); 3], 0.1).unwrap();
        assert!((three.metric_entropy() - 3f64.ln()).abs() < 1e-15);
        let eight = CoveringSet::with_tight_support(vec![u; 8], 0.1).unwrap();
        assert!((eight.metric_entropy() - 2.0794415416798357).abs() < 1e-12);
    }

    #[test]
    fn nearest_member_examples() {
        let members = vec![
            d(&[0.1, 0.2, 0.3, 0.4]),
            d(&[0.4, 0.3, 0.2, 0.1]),
            d(&[0.25, 0.25, 0.25, 0.25]),
            d(&[0.7, 0.1, 0.1, 0.1]),
            d(&[0.4, 0.3, 0.2, 0.1]),
        ];
        let c = CoveringSet::with_tight_support(members.clone(), 0.5).unwrap();
        assert_eq!(c.nearest_member(&members[3]).unwrap(), (3, 0.0));
        // duplicates at 1 and 4: lowest index
        assert_eq!(c.nearest_member(&members[4]).unwrap().0, 1);

        // {point mass 0, uniform(2)} vs {0.9, 0.1}: distances 0.2 and 0.8
        let cov = CoveringSet::new(vec![d(&[1.0, 0.0]), d(&[0.5, 0.5])], 0.3, 1.0 + 1e-9, 0.25).unwrap();
        let (i, dist) = cov.nearest_member(&d(&[0.9, 0.1])).unwrap();
        assert_eq!(i, 0);
        assert!((dist - 0.2).abs() < 1e-12);
    }

    #[test]
    fn covering_enforces_support_bounds() {
        let m = vec![d(&[0.2, 0.8])];
        assert!(CoveringSet::new(m.clone(), 0.1, 0.9, 0.1).is_ok());
        assert!(CoveringSet::new(m.clone(), 0.1, 0.8, 0.1).is_err());
        assert!(CoveringSet::new(m.clone(), 0.1, 0.1, 0.9).is_err());
        assert!(CoveringSet::new(vec![], 0.1, 0.9, 0.1).is_err());
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let pm = FiniteDistribution::point_mass(4, 2).unwrap();
        let mut rng = run_rng(9, 0);
        for _ in 0..1000 {
            assert_eq!(sample(&pm, &mut rng), 2);
        }
        let p = d(&[0.1, 0.7, 0.1, 0.1]);
        let first = sample(&p, &mut run_rng(42, 0));
        for _ in 0..10 {
            assert_eq!(sample(&p, &mut run_rng(42, 0)), first);
        }
        // frozen: ChaCha8 stream (seed 42, stream 0), first draw
        assert_eq!(first, FIRST_DRAW_SEED_42);
    }

    // Recorded from the first run of the determinism test; any change means
    // the RNG contract changed.
    const FIRST_DRAW_SEED_42: usize = 1;

    #[test]
    fn uniform_sampling_frequencies() {
        let u = FiniteDistribution::uniform(4).unwrap();
        let mut rng = run_rng(7, 3);
        let mut counts = [0usize; 4];
        let n = 1_000_000;
        for _ in 0..n {
            counts[sample(&u, &mut rng)] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.005, "frequency {f}");
        }
    }

    #[test]
    fn window_loglik_examples() {
        let half = d(&[0.5, 0.5]);
        assert!((window_loglik(&half, &[0, 0, 0, 0]).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let u5 = FiniteDistribution::uniform(5).unwrap();
        assert!((window_loglik(&u5, &[4, 0, 2]).unwrap() + 5f64.ln()).abs() < 1e-12);
        let p = d(&[0.1, 0.7, 0.1, 0.1]);
        let expect = (2.0 * 0.7f64.ln() + 0.1f64.ln()) / 3.0;
        assert!((window_loglik(&p, &[1, 1, 0]).unwrap() - expect).abs() < 1e-15);
        let zero = d(&[1.0, 0.0]);
        assert_eq!(window_loglik(&zero, &[1]).unwrap(), f64::NEG_INFINITY);
        assert!(window_loglik(&zero, &[]).is_err());
        assert!(window_loglik(&zero, &[2]).is_err());
    }

    #[test]
    fn divergence_examples() {
        let a = d(&[0.5, 0.5]);
        let b = d(&[0.25, 0.75]);
        assert_eq!(divergence(&a, &a, &a).unwrap(), 0.0);
        let v = divergence(&a, &b, &a).unwrap();
        let expect = 0.5 * 0.5f64.ln() + 0.5 * 1.5f64.ln();
        assert!((v - expect).abs() < 1e-15);
        assert!((v + 0.143841036225890).abs() < 1e-12);
        // swapped roles, evaluated by direct sum
        let w = divergence(&a, &a, &b).unwrap();
        let direct = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((w - direct).abs() < 1e-15);
        assert!(w > 0.0);
        assert!(divergence(&a, &d(&[1.0, 0.0]), &a).is_err());
    }

    #[test]
    fn product_space_round_trip() {
        let s = ProductStateSpace::new(vec![4, 4, 4]).unwrap();
        assert_eq!(s.total(), 64);
        assert_eq!(s.encode(&[3, 0, 3]).unwrap(), 3 * 16 + 3);
        for id in 0..64 {
            assert_eq!(s.encode(&s.decode(id).unwrap()).unwrap(), id);
        }
        assert!(s.decode(64).is_err());
        assert!(s.encode(&[4, 0, 0]).is_err());
    }

    #[test]
    fn geometric_schedule_converges() {
        let limit = d(&[0.1, 0.7, 0.1, 0.1]);
        let init = d(&[0.4, 0.1, 0.4, 0.1]);
        let s = NonstationarySchedule::geometric(limit, init, 0.99).unwrap();
        let ds: Vec<f64> = [10, 100, 1000, 10_000]
            .iter()
            .map(|&t| s.distance_to_limit(t))
            .collect();
        assert!(ds.windows(2).all(|w| w[1] <= w[0]));
        assert!(ds[3] < 1e-3);
    }

    #[test]
    fn piecewise_schedule_switches() {
        let a = d(&[1.0, 0.0]);
        let b = d(&[0.5, 0.5]);
        let c = d(&[0.0, 1.0]);
        let s = NonstationarySchedule::piecewise(vec![a.clone(), b.clone(), c.clone()], vec![5, 9]).unwrap();
        assert_eq!(s.at(0), a);
        assert_eq!(s.at(4), a);
        assert_eq!(s.at(5), b);
        assert_eq!(s.at(9), c);
        assert_eq!(s.limit(), &c);
        assert_eq!(s.settling_time(), 9);
        assert!(NonstationarySchedule::piecewise(vec![a.clone(), b.clone()], vec![]).is_err());
        let mut rng = run_rng(1, 1);
        assert_eq!(s.sample_at(2, &mut rng), 0);
        assert_eq!(s.sample_at(100, &mut rng), 1);
    }

    fn arb_dist(n: usize) -> impl Strategy<Value = FiniteDistribution> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("positive mass", |v| {
            let s: f64 = v.iter().sum();
            if s <= 1e-6 {
                return None;
            }
            let mut probs: Vec<f64> = v.iter().map(|x| x / s).collect();
            let rest: f64 = probs[1..].iter().sum();
            probs[0] = (1.0 - rest).max(0.0);
            FiniteDistribution::new(probs).ok()
        })
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(p in arb_dist(6), q in arb_dist(6), r in arb_dist(6)) {
            let pq = l1_distance(&p, &q).unwrap();
            let qp = l1_distance(&q, &p).unwrap();
            let pr = l1_distance(&p, &r).unwrap();
            let rq = l1_distance(&r, &q).unwrap();
            prop_assert!((0.0..=2.0 + 1e-12).contains(&pq));
            prop_assert_eq!(pq, qp);
            prop_assert!(pq <= pr + rq + 1e-12);
            prop_assert_eq!(tv_distance(&p, &q).unwrap(), pq / 2.0);
        }

        #[test]
        fn members_are_their_own_nearest(members in prop::collection::vec(arb_dist(4), 1..6)) {
            let mut ok = members.clone();
            for m in &mut ok {
                // keep strictly positive mass so the support bounds exist
                *m = m.mix(&FiniteDistribution::uniform(4).unwrap(), 0.01).unwrap();
            }
            let c = CoveringSet::with_tight_support(ok.clone(), 1.0).unwrap();
            for (i, m) in ok.iter().enumerate() {
                let (j, d) = c.nearest_member(m).unwrap();
                prop_assert_eq!(d, 0.0);
                prop_assert_eq!(&ok[j], m);
                prop_assert!(j <= i);
            }
        }

        #[test]
        fn sampling_is_reproducible(seed in any::<u64>(), run in 0u64..1000, p in arb_dist(5)) {
            let a: Vec<usize> = { let mut r = run_rng(seed, run); (0..20).map(|_| sample(&p, &mut r)).collect() };
            let b: Vec<usize> = { let mut r = run_rng(seed, run); (0..20).map(|_| sample(&p, &mut r)).collect() };
            prop_assert_eq!(a, b);
        }
    }
}
