//! Pure strategies, cost/penalty tables and strategy averages.
//!
//! A pure strategy gives every user a table from its local state to a local
//! action. Strategies are enumerated mixed-radix over the digit sequence
//! `s_1(0), s_1(1), …, s_1(|Ω_1|−1), s_2(0), …, s_N(|Ω_N|−1)`, first digit
//! most significant, so index `0` is the all-zero strategy and `F − 1` the
//! all-max one. Strategies are decoded lazily; nothing of size `F × |Ω|` is
//! stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{FiniteDistribution, ProductStateSpace};

/// Largest strategy count the engine accepts.
pub const MAX_STRATEGIES: u64 = 1 << 32;

/// `A = A_1 × … × A_N`, joint actions encoded like joint states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionModel(ProductStateSpace);

impl ActionModel {
    pub fn new(per_user_action_counts: Vec<usize>) -> Result<Self> {
        ProductStateSpace::new(per_user_action_counts).map(ActionModel)
    }

    pub fn counts(&self) -> &[usize] {
        self.0.cardinalities()
    }

    pub fn users(&self) -> usize {
        self.0.users()
    }

    pub fn total(&self) -> usize {
        self.0.total()
    }

    pub fn encode(&self, local: &[usize]) -> Result<usize> {
        self.0.encode(local)
    }

    pub fn decode(&self, id: usize) -> Result<Vec<usize>> {
        self.0.decode(id)
    }
}

/// Per-user maps from local state to local action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureStrategy {
    pub tables: Vec<Vec<usize>>,
}

impl PureStrategy {
    /// Action of `user` in local state `local_state`.
    pub fn action(&self, user: usize, local_state: usize) -> usize {
        self.tables[user][local_state]
    }
}

/// `F = Π_i |A_i|^{|Ω_i|}` with the overflow guard.
pub fn strategy_count(actions: &ActionModel, states: &ProductStateSpace) -> Result<u64> {
    if actions.users() != states.users() {
        return Err(Error::Dimension {
            what: "users in action and state spaces",
            expected: states.users(),
            got: actions.users(),
        });
    }
    let mut f: u64 = 1;
    for (&a, &w) in actions.counts().iter().zip(states.cardinalities()) {
        for _ in 0..w {
            f = f.saturating_mul(a as u64);
            if f > MAX_STRATEGIES {
                return Err(Error::Config(
                    "strategy count exceeds 2^32; restrict the strategy class (fewer local states or actions per user)"
                        .into(),
                ));
            }
        }
    }
    Ok(f)
}

/// Canonical enumeration of the pure strategies of a game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpace {
    actions: ActionModel,
    states: ProductStateSpace,
    count: usize,
    // places[i][w]: place value of the digit s_i(w)
    places: Vec<Vec<usize>>,
}

impl StrategySpace {
    pub fn new(actions: ActionModel, states: ProductStateSpace) -> Result<Self> {
        let count = strategy_count(&actions, &states)? as usize;
        let mut places: Vec<Vec<usize>> = states.cardinalities().iter().map(|&w| vec![0; w]).collect();
        let mut place = 1usize;
        for i in (0..states.users()).rev() {
            for w in (0..states.cardinalities()[i]).rev() {
                places[i][w] = place;
                place *= actions.counts()[i];
            }
        }
        Ok(Self {
            actions,
            states,
            count,
            places,
        })
    }

    /// `F`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn actions(&self) -> &ActionModel {
        &self.actions
    }

    pub fn states(&self) -> &ProductStateSpace {
        &self.states
    }

    pub fn decode(&self, m: usize) -> Result<PureStrategy> {
        self.check_index(m)?;
        let tables = (0..self.states.users())
            .map(|i| {
                (0..self.states.cardinalities()[i])
                    .map(|w| self.local_action(m, i, w))
                    .collect()
            })
            .collect();
        Ok(PureStrategy { tables })
    }

    pub fn encode(&self, s: &PureStrategy) -> Result<usize> {
        if s.tables.len() != self.states.users() {
            return Err(Error::Dimension {
                what: "strategy tables",
                expected: self.states.users(),
                got: s.tables.len(),
            });
        }
        let mut m = 0;
        for (i, table) in s.tables.iter().enumerate() {
            if table.len() != self.states.cardinalities()[i] {
                return Err(Error::Dimension {
                    what: "strategy table length",
                    expected: self.states.cardinalities()[i],
                    got: table.len(),
                });
            }
            for (w, &a) in table.iter().enumerate() {
                if a >= self.actions.counts()[i] {
                    return Err(Error::OutOfRange {
                        index: a,
                        limit: self.actions.counts()[i],
                    });
                }
                m += a * self.places[i][w];
            }
        }
        Ok(m)
    }

    fn check_index(&self, m: usize) -> Result<()> {
        if m >= self.count {
            return Err(Error::OutOfRange {
                index: m,
                limit: self.count,
            });
        }
        Ok(())
    }

    /// `s_i(ω_i)` of strategy `m`. Only user `i`'s own state enters, which is
    /// what makes the decision distributed.
    #[inline]
    pub fn local_action(&self, m: usize, user: usize, local_state: usize) -> usize {
        (m / self.places[user][local_state]) % self.actions.counts()[user]
    }

    /// Joint action id `S^m(ω)`.
    #[inline]
    pub fn joint_action(&self, m: usize, omega: usize) -> usize {
        let mut id = 0;
        for i in 0..self.states.users() {
            let a = self.local_action(m, i, self.states.component(omega, i));
            id = id * self.actions.counts()[i] + a;
        }
        id
    }

    /// Applies a decoded strategy to joint state `omega`.
    pub fn apply(&self, s: &PureStrategy, omega: usize) -> Result<usize> {
        let local = self.states.decode(omega)?;
        let acts: Vec<usize> = local.iter().enumerate().map(|(i, &w)| s.action(i, w)).collect();
        self.actions.encode(&acts)
    }
}

/// Dense tables `p_k(α, ω)` for `k = 0..=K` and constraint levels `c_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    n_actions: usize,
    n_states: usize,
    // tables[k][a * n_states + ω]
    tables: Vec<Vec<f64>>,
    c: Vec<f64>,
    p_max: Vec<f64>,
    p_min: Vec<f64>,
}

impl CostModel {
    /// `tables[k]` is row-major over (joint action, joint state); `c` holds
    /// `c_1..c_K`, so `tables.len() == c.len() + 1`.
    pub fn new(n_actions: usize, n_states: usize, tables: Vec<Vec<f64>>, c: Vec<f64>) -> Result<Self> {
        if tables.len() != c.len() + 1 {
            return Err(Error::Dimension {
                what: "cost tables (K + 1)",
                expected: c.len() + 1,
                got: tables.len(),
            });
        }
        for t in &tables {
            if t.len() != n_actions * n_states {
                return Err(Error::Dimension {
                    what: "cost table entries",
                    expected: n_actions * n_states,
                    got: t.len(),
                });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("cost tables must be finite".into()));
            }
        }
        if let Some(bad) = c.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("constraint level {bad} is not finite")));
        }
        let p_max = tables
            .iter()
            .map(|t| t.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let p_min = tables
            .iter()
            .map(|t| t.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        Ok(Self {
            n_actions,
            n_states,
            tables,
            c,
            p_max,
            p_min,
        })
    }

    /// `K`.
    pub fn penalties(&self) -> usize {
        self.c.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// `c_1..c_K`.
    pub fn constraints(&self) -> &[f64] {
        &self.c
    }

    #[inline]
    pub fn value(&self, k: usize, action: usize, omega: usize) -> f64 {
        self.tables[k][action * self.n_states + omega]
    }

    pub fn table(&self, k: usize) -> &[f64] {
        &self.tables[k]
    }

    pub fn p_max(&self, k: usize) -> f64 {
        self.p_max[k]
    }

    pub fn p_min(&self, k: usize) -> f64 {
        self.p_min[k]
    }

    /// `(Δp)_max,k = p_max,k − p_min,k`.
    pub fn delta_p_max(&self, k: usize) -> f64 {
        self.p_max[k] - self.p_min[k]
    }

    /// `b_max,k = max(|p_max,k|, |p_min,k|)`.
    pub fn b_max(&self, k: usize) -> f64 {
        self.p_max[k].abs().max(self.p_min[k].abs())
    }

    /// `ρ = Σ_k (p_max,k − c_k)²`.
    pub fn rho(&self) -> f64 {
        (1..=self.penalties())
            .map(|k| (self.p_max[k] - self.c[k - 1]).powi(2))
            .sum()
    }

    /// Distinct values table `k` takes (`μ_k`).
    pub fn distinct_values(&self, k: usize) -> usize {
        let mut v: Vec<u64> = self.tables[k].iter().map(|x| x.to_bits()).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

/// Per-strategy averages `r_k^{(m)}` for one state distribution, stored
/// column-wise (`cols[k][m]`).
#[derive(Clone, Debug, PartialEq)]
pub struct RTable {
    cols: Vec<Vec<f64>>,
}

impl RTable {
    pub fn strategies(&self) -> usize {
        self.cols[0].len()
    }

    /// `K + 1`.
    pub fn width(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.cols[k]
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.cols[k][m]
    }

    pub fn row(&self, m: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[m]).collect()
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        self.cols
    }
}

/// States, strategies and costs of one problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionModel {
    strategies: StrategySpace,
    cost: CostModel,
}

impl DecisionModel {
    pub fn new(actions: ActionModel, states: ProductStateSpace, cost: CostModel) -> Result<Self> {
        if cost.n_actions() != actions.total() || cost.n_states() != states.total() {
            return Err(Error::Config(format!(
                "cost tables are {}x{} but the spaces are {}x{}",
                cost.n_actions(),
                cost.n_states(),
                actions.total(),
                states.total()
            )));
        }
        let strategies = StrategySpace::new(actions, states)?;
        Ok(Self { strategies, cost })
    }

    pub fn strategies(&self) -> &StrategySpace {
        &self.strategies
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn states(&self) -> &ProductStateSpace {
        self.strategies.states()
    }

    pub fn actions(&self) -> &ActionModel {
        self.strategies.actions()
    }

    /// `F`.
    pub fn strategy_count(&self) -> usize {
        self.strategies.count()
    }

    /// `K`.
    pub fn penalties(&self) -> usize {
        self.cost.penalties()
    }

    /// `p_k(S^m(ω), ω)`.
    #[inline]
    pub fn p(&self, k: usize, m: usize, omega: usize) -> f64 {
        self.cost.value(k, self.strategies.joint_action(m, omega), omega)
    }

    fn check_dist(&self, lambda: &FiniteDistribution) -> Result<()> {
        if lambda.len() != self.states().total() {
            return Err(Error::Dimension {
                what: "distribution over joint states",
                expected: self.states().total(),
                got: lambda.len(),
            });
        }
        Ok(())
    }

    /// `r_k^{(m)} = Σ_ω λ(ω) p_k(S^m(ω), ω)` for `k = 0..=K`.
    pub fn r_vector(&self, m: usize, lambda: &FiniteDistribution) -> Result<Vec<f64>> {
        self.check_dist(lambda)?;
        if m >= self.strategy_count() {
            return Err(Error::OutOfRange {
                index: m,
                limit: self.strategy_count(),
            });
        }
        Ok(self.r_unchecked(m, lambda))
    }

    fn r_unchecked(&self, m: usize, lambda: &FiniteDistribution) -> Vec<f64> {
        let mut r = vec![0.0; self.penalties() + 1];
        for (omega, &l) in lambda.probs().iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let a = self.strategies.joint_action(m, omega);
            for (k, rk) in r.iter_mut().enumerate() {
                *rk += l * self.cost.value(k, a, omega);
            }
        }
        r
    }

    /// `r_vector` for every strategy.
    pub fn r_table(&self, lambda: &FiniteDistribution) -> Result<RTable> {
        self.check_dist(lambda)?;
        let f = self.strategy_count();
        let mut cols = vec![Vec::with_capacity(f); self.penalties() + 1];
        for m in 0..f {
            for (k, v) in self.r_unchecked(m, lambda).into_iter().enumerate() {
                cols[k].push(v);
            }
        }
        Ok(RTable { cols })
    }

    /// Per-strategy `½ Σ_k Σ_ω λ(ω) |p_k(S^m(ω), ω) − c_k|²`.
    pub fn b_moments(&self, lambda: &FiniteDistribution) -> Result<Vec<f64>> {
        self.check_dist(lambda)?;
        let c = self.cost.constraints();
        Ok((0..self.strategy_count())
            .map(|m| {
                let mut acc = 0.0;
                for (omega, &l) in lambda.probs().iter().enumerate() {
                    if l == 0.0 {
                        continue;
                    }
                    let a = self.strategies.joint_action(m, omega);
                    for (k, ck) in c.iter().enumerate() {
                        acc += l * (self.cost.value(k + 1, a, omega) - ck).powi(2);
                    }
                }
                0.5 * acc
            })
            .collect())
    }

    /// `B_t = max_m ½ Σ_k Σ_ω π_t(ω) |p_k(S^m(ω), ω) − c_k|²`.
    pub fn b_t(&self, pi_t: &FiniteDistribution) -> Result<f64> {
        Ok(self.b_moments(pi_t)?.into_iter().fold(0.0, f64::max))
    }

    /// Loose cap `½ Σ_k max(|p_max,k − c_k|, |p_min,k − c_k|)²` on `B_t`.
    pub fn b_cap(&self) -> f64 {
        let c = self.cost.constraints();
        0.5 * (1..=self.penalties())
            .map(|k| {
                let hi = (self.cost.p_max(k) - c[k - 1]).abs();
                let lo = (self.cost.p_min(k) - c[k - 1]).abs();
                hi.max(lo).powi(2)
            })
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(actions: &[usize], states: &[usize]) -> StrategySpace {
        StrategySpace::new(
            ActionModel::new(actions.to_vec()).unwrap(),
            ProductStateSpace::new(states.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn strategy_count_examples() {
        let c = |a: &[usize], w: &[usize]| {
            strategy_count(
                &ActionModel::new(a.to_vec()).unwrap(),
                &ProductStateSpace::new(w.to_vec()).unwrap(),
            )
        };
        assert_eq!(c(&[1], &[5]).unwrap(), 1);
        assert_eq!(c(&[2, 2, 2], &[4, 4, 4]).unwrap(), 4096);
        assert_eq!(c(&[2, 3], &[2, 1]).unwrap(), 12);
        let err = c(&[2, 2], &[20, 20]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn decode_extremes_and_round_trip() {
        let s = space(&[2, 3], &[2, 1]);
        assert_eq!(s.count(), 12);
        assert_eq!(s.decode(0).unwrap().tables, vec![vec![0, 0], vec![0]]);
        assert_eq!(s.decode(11).unwrap().tables, vec![vec![1, 1], vec![2]]);
        for m in 0..12 {
            assert_eq!(s.encode(&s.decode(m).unwrap()).unwrap(), m);
        }
        assert!(s.decode(12).is_err());
    }

    #[test]
    fn exhaustive_bijection_sensor_space() {
        let s = space(&[2, 2, 2], &[4, 4, 4]);
        let mut seen = vec![false; s.count()];
        for m in 0..s.count() {
            let st = s.decode(m).unwrap();
            let back = s.encode(&st).unwrap();
            assert_eq!(back, m);
            assert!(!seen[back]);
            seen[back] = true;
        }
    }

    #[test]
    fn apply_examples() {
        let one = space(&[3], &[3]);
        let st = PureStrategy {
            tables: vec![vec![2, 0, 1]],
        };
        let m = one.encode(&st).unwrap();
        for w in 0..3 {
            assert_eq!(one.apply(&st, w).unwrap(), st.tables[0][w]);
            assert_eq!(one.joint_action(m, w), st.tables[0][w]);
        }

        let sensors = space(&[2, 2, 2], &[4, 4, 4]);
        let transmit_on_3 = PureStrategy {
            tables: vec![vec![0, 0, 0, 1]; 3],
        };
        let omega = sensors.states().encode(&[3, 0, 3]).unwrap();
        let a = sensors.apply(&transmit_on_3, omega).unwrap();
        assert_eq!(sensors.actions().decode(a).unwrap(), vec![1, 0, 1]);
        let m = sensors.encode(&transmit_on_3).unwrap();
        assert_eq!(sensors.joint_action(m, omega), a);
    }

    fn unit_model(k: usize, value: impl Fn(usize, usize, usize) -> f64, c: Vec<f64>) -> DecisionModel {
        let actions = ActionModel::new(vec![2, 2]).unwrap();
        let states = ProductStateSpace::new(vec![2, 2]).unwrap();
        let tables = (0..=k)
            .map(|kk| {
                (0..4)
                    .flat_map(|a| (0..4).map(move |w| (a, w)))
                    .map(|(a, w)| value(kk, a, w))
                    .collect()
            })
            .collect();
        DecisionModel::new(actions, states, CostModel::new(4, 4, tables, c).unwrap()).unwrap()
    }

    #[test]
    fn r_vector_examples() {
        let model = unit_model(1, |k, a, w| (k * 100 + a * 10 + w) as f64, vec![0.5]);
        let pm = FiniteDistribution::point_mass(4, 2).unwrap();
        for m in 0..model.strategy_count() {
            let r = model.r_vector(m, &pm).unwrap();
            let a = model.strategies().joint_action(m, 2);
            assert_eq!(r, vec![model.cost().value(0, a, 2), model.cost().value(1, a, 2)]);
        }
        let constant = unit_model(2, |_, _, _| 5.0, vec![1.0, 1.0]);
        let u = FiniteDistribution::uniform(4).unwrap();
        for m in 0..constant.strategy_count() {
            for v in constant.r_vector(m, &u).unwrap() {
                assert!((v - 5.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn b_t_examples() {
        // K = 0
        let m0 = unit_model(0, |_, a, w| (a + w) as f64, vec![]);
        assert_eq!(m0.b_t(&FiniteDistribution::uniform(4).unwrap()).unwrap(), 0.0);
        // p_1 ≡ c_1
        let eq = unit_model(1, |_, _, _| 0.25, vec![0.25]);
        assert_eq!(eq.b_t(&FiniteDistribution::uniform(4).unwrap()).unwrap(), 0.0);
        // p_1 ∈ {0, 1} by state parity, c = 0, uniform over the two states
        // that differ in it: ½ E[p²] = ¼
        let par = unit_model(1, |k, _, w| if k == 1 { (w % 2) as f64 } else { 0.0 }, vec![0.0]);
        let two = FiniteDistribution::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((par.b_t(&two).unwrap() - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn r_vector_within_bounds_and_affine(
            seed_vals in prop::collection::vec(-3.0f64..3.0, 2 * 16),
            l1 in prop::collection::vec(0.01f64..1.0, 4),
            l2 in prop::collection::vec(0.01f64..1.0, 4),
            a in 0.0f64..1.0,
            m in 0usize..16,
        ) {
            let model = unit_model(1, |k, act, w| seed_vals[k * 16 + act * 4 + w], vec![0.0]);
            let norm = |v: &[f64]| {
                let s: f64 = v.iter().sum();
                let mut p: Vec<f64> = v.iter().map(|x| x / s).collect();
                let rest: f64 = p[1..].iter().sum();
                p[0] = 1.0 - rest;
                FiniteDistribution::new(p).unwrap()
            };
            let (d1, d2) = (norm(&l1), norm(&l2));
            let mix = d1.mix(&d2, 1.0 - a).unwrap();
            let r1 = model.r_vector(m, &d1).unwrap();
            let r2 = model.r_vector(m, &d2).unwrap();
            let rm = model.r_vector(m, &mix).unwrap();
            for k in 0..2 {
                prop_assert!(rm[k] >= model.cost().p_min(k) - 1e-12);
                prop_assert!(rm[k] <= model.cost().p_max(k) + 1e-12);
                prop_assert!((rm[k] - (a * r1[k] + (1.0 - a) * r2[k])).abs() < 1e-12);
            }
            prop_assert!(model.b_t(&mix).unwrap() <= model.b_cap() + 1e-12);
        }
    }
}
