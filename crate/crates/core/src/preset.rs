//! The three-sensor reporting benchmark.
//!
//! Sensor `i` sees `ω_i ∈ {0,1,2,3}` and decides whether to transmit
//! (`a_i ∈ {0,1}`, one watt when on). The central unit earns
//! `min(a_1 ω_1/3 + (a_2 ω_2 + a_3 ω_3)/6, 1)` and the engine minimizes its
//! negative under a per-sensor power budget of 1/3.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decision::{ActionModel, CostModel, DecisionModel};
use crate::error::Result;
use crate::prob::{l1_distance, CoveringSet, FiniteDistribution, NonstationarySchedule, ProductStateSpace};

pub const SENSORS: usize = 3;
pub const LEVELS: usize = 4;
pub const MARGINAL: [f64; LEVELS] = [0.1, 0.7, 0.1, 0.1];
pub const POWER_BUDGET: f64 = 1.0 / 3.0;
/// Reference optimum utility of the benchmark.
pub const OPT_UTILITY: f64 = 0.394;
pub const MEMBERS: usize = 8;
/// L1 distance of every transient member from the limit.
pub const MEMBER_RADIUS: f64 = 0.2;
pub const COVERING_SEED: u64 = 7;
pub const RHO: f64 = 0.99;

pub fn utility(actions: &[usize], states: &[usize]) -> f64 {
    let s = (actions[0] * states[0]) as f64 / 3.0 + (actions[1] * states[1] + actions[2] * states[2]) as f64 / 6.0;
    s.min(1.0)
}

pub fn model() -> Result<DecisionModel> {
    let states = ProductStateSpace::new(vec![LEVELS; SENSORS])?;
    let actions = ActionModel::new(vec![2; SENSORS])?;
    let (na, ns) = (actions.total(), states.total());
    let mut tables = vec![vec![0.0; na * ns]; SENSORS + 1];
    for a in 0..na {
        let act = actions.decode(a)?;
        for w in 0..ns {
            let st = states.decode(w)?;
            tables[0][a * ns + w] = -utility(&act, &st);
            for k in 0..SENSORS {
                tables[k + 1][a * ns + w] = act[k] as f64;
            }
        }
    }
    let cost = CostModel::new(na, ns, tables, vec![POWER_BUDGET; SENSORS])?;
    DecisionModel::new(actions, states, cost)
}

/// Joint limit distribution: i.i.d. sensors with [`MARGINAL`].
pub fn limit() -> Result<FiniteDistribution> {
    let m = FiniteDistribution::new(MARGINAL.to_vec())?;
    FiniteDistribution::product(&vec![m; SENSORS])
}

/// Mass left on a drained marginal level.
pub const DRAIN_FLOOR: f64 = 0.001;

/// The limit followed by seven transient members. Each one takes
/// [`MEMBER_RADIUS`]/2 of one sensor's marginal mass onto level 1: level
/// `a` is drained down to [`DRAIN_FLOOR`] and the remainder comes from the
/// next non-1 level. The seven (sensor, `a`) pairs are drawn without
/// replacement from the nine possible ones.
pub fn members() -> Result<Vec<FiniteDistribution>> {
    const OTHER: [usize; 3] = [0, 2, 3];
    let base = FiniteDistribution::new(MARGINAL.to_vec())?;
    let mut drains = Vec::new();
    for sensor in 0..SENSORS {
        for i in 0..OTHER.len() {
            drains.push((sensor, OTHER[i], OTHER[(i + 1) % OTHER.len()]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(COVERING_SEED);
    let picks = sample(&mut rng, drains.len(), MEMBERS - 1).into_vec();
    let mut out = vec![limit()?];
    for i in picks {
        let (sensor, a, b) = drains[i];
        let shift = MEMBER_RADIUS / 2.0;
        let from_a = MARGINAL[a] - DRAIN_FLOOR;
        let mut moved = MARGINAL;
        moved[a] = DRAIN_FLOOR;
        moved[b] -= shift - from_a;
        moved[1] += shift;
        let mut marginals = vec![base.clone(); SENSORS];
        marginals[sensor] = FiniteDistribution::new(moved.to_vec())?;
        out.push(FiniteDistribution::product(&marginals)?);
    }
    Ok(out)
}

/// Geometric drift from member 1 to the limit at rate [`RHO`].
pub fn schedule(members: &[FiniteDistribution]) -> Result<NonstationarySchedule> {
    NonstationarySchedule::geometric(members[0].clone(), members[1].clone(), RHO)
}

/// Covering radius: the largest nearest-member distance seen along the
/// schedule up to `horizon`, nudged up so every `π_t` is strictly inside.
pub fn covering_radius(
    members: &[FiniteDistribution],
    schedule: &NonstationarySchedule,
    horizon: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in 0..horizon.max(1) {
        let pt = schedule.at(t);
        let mut best = f64::INFINITY;
        for m in members {
            best = best.min(l1_distance(m, &pt)?);
        }
        worst = worst.max(best);
    }
    Ok(worst + 1e-9)
}

pub fn covering(schedule: &NonstationarySchedule, horizon: usize) -> Result<CoveringSet> {
    let m = members()?;
    let delta = covering_radius(&m, schedule, horizon)?;
    CoveringSet::with_tight_support(m, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_lp, LpInstance};

    #[test]
    fn strategy_count_and_utility() {
        let m = model().unwrap();
        assert_eq!(m.strategy_count(), 4096);
        assert_eq!(utility(&[1, 1, 1], &[3, 3, 3]), 1.0);
        assert_eq!(utility(&[0, 1, 1], &[3, 3, 3]), 1.0);
        assert!((utility(&[1, 0, 1], &[1, 3, 2]) - (1.0 / 3.0 + 2.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn all_transmit_r_vector() {
        let m = model().unwrap();
        let pi = limit().unwrap();
        let all_on = m.strategy_count() - 1;
        let r = m.r_vector(all_on, &pi).unwrap();
        assert!(r[1..].iter().all(|x| (x - 1.0).abs() < 1e-12));
        let mut want = 0.0;
        for (a, pa) in MARGINAL.iter().enumerate() {
            for (b, pb) in MARGINAL.iter().enumerate() {
                for (c, pc) in MARGINAL.iter().enumerate() {
                    let p = pa * pb * pc;
                    want -= p * ((a as f64) / 3.0 + (b + c) as f64 / 6.0).min(1.0);
                }
            }
        }
        assert!((r[0] - want).abs() < 1e-12);
    }

    #[test]
    fn members_sit_at_radius() {
        let ms = members().unwrap();
        assert_eq!(ms.len(), MEMBERS);
        assert_eq!(ms[0], limit().unwrap());
        for m in &ms[1..] {
            assert!((l1_distance(m, &ms[0]).unwrap() - MEMBER_RADIUS).abs() < 1e-12);
        }
        let s = schedule(&ms).unwrap();
        let cov = covering(&s, 5000).unwrap();
        assert_eq!(cov.nearest_member(s.limit()).unwrap(), (0, 0.0));
        assert!((cov.metric_entropy() - 8f64.ln()).abs() < 1e-15);
        assert!(cov.delta() > 0.09 && cov.delta() < 0.11);
    }

    #[test]
    fn lp_optimum_matches_reference() {
        let m = model().unwrap();
        let sol = solve_lp(&LpInstance::for_distribution(&m, &limit().unwrap()).unwrap()).unwrap();
        assert!(sol.is_optimal());
        assert!((-sol.value - OPT_UTILITY).abs() < 1e-3, "{}", sol.value);
        assert!(sol
            .slacks(&LpInstance::for_distribution(&m, &limit().unwrap()).unwrap())
            .iter()
            .all(|s| *s > -1e-9));
    }
}
