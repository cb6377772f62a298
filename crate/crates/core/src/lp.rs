//! Exact solution of the stationary-equivalent linear program
//!
//! ```text
//! min_θ  Σ_m θ_m r_0^{(m)}
//! s.t.   Σ_m θ_m r_k^{(m)} ≤ c_k + x,   k = 1..K
//!        Σ_m θ_m = 1,  θ ≥ 0
//! ```
//!
//! solved by a dense two-phase simplex with Bland's rule. Instances are
//! small in the constraint dimension (K + 1 rows) and at most a few thousand
//! columns, so a dense tableau is the simplest correct choice and keeps the
//! solve deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decision::{ActionModel, CostModel, DecisionModel, RTable};
use crate::error::{Error, Result};
use crate::prob::{l1_distance, CoveringSet, FiniteDistribution, ProductStateSpace};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

/// A strategy-mixing linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct LpInstance {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    x: f64,
}

impl LpInstance {
    /// `objective[m] = r_0^{(m)}`, `rows[k-1][m] = r_k^{(m)}`, `rhs[k-1] = c_k`.
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if objective.is_empty() {
            return Err(Error::Config("LP needs at least one strategy".into()));
        }
        if rows.len() != rhs.len() {
            return Err(Error::Dimension {
                what: "LP right-hand sides",
                expected: rows.len(),
                got: rhs.len(),
            });
        }
        for r in &rows {
            if r.len() != objective.len() {
                return Err(Error::Dimension {
                    what: "LP constraint row",
                    expected: objective.len(),
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            objective,
            rows,
            rhs,
            x: 0.0,
        })
    }

    /// The LP of a strategy table under constraint levels `c`.
    pub fn from_table(table: &RTable, c: &[f64]) -> Result<Self> {
        if table.width() != c.len() + 1 {
            return Err(Error::Dimension {
                what: "constraint levels",
                expected: table.width() - 1,
                got: c.len(),
            });
        }
        Self::new(
            table.column(0).to_vec(),
            (1..table.width()).map(|k| table.column(k).to_vec()).collect(),
            c.to_vec(),
        )
    }

    /// The LP of `model` under state distribution `lambda`.
    pub fn for_distribution(model: &DecisionModel, lambda: &FiniteDistribution) -> Result<Self> {
        Self::from_table(&model.r_table(lambda)?, model.cost().constraints())
    }

    /// Same program with right-hand sides `c_k + x`.
    pub fn perturbed(&self, x: f64) -> Result<Self> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("perturbation x = {x} must be >= 0")));
        }
        Ok(Self { x, ..self.clone() })
    }

    pub fn strategies(&self) -> usize {
        self.objective.len()
    }

    pub fn constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn perturbation(&self) -> f64 {
        self.x
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// `c_k + x`.
    pub fn bound(&self, k: usize) -> f64 {
        self.rhs[k] + self.x
    }

    /// Reorders strategies: column `m` of the result is column `perm[m]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let pick = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            objective: pick(&self.objective),
            rows: self.rows.iter().map(|r| pick(r)).collect(),
            rhs: self.rhs.clone(),
            x: self.x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Cannot happen for a bounded simplex; kept as a guard.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub theta: Vec<f64>,
    /// Objective value; `+inf` unless optimal.
    pub value: f64,
    /// Dual multipliers of the K inequality rows (all ≤ 0 at optimum).
    pub duals: Vec<f64>,
    /// Dual multiplier of `Σ θ = 1`.
    pub simplex_dual: f64,
}

impl LpSolution {
    fn infeasible(inst: &LpInstance, status: LpStatus) -> Self {
        Self {
            status,
            theta: vec![0.0; inst.strategies()],
            value: f64::INFINITY,
            duals: vec![0.0; inst.constraints()],
            simplex_dual: 0.0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `c_k + x − Σ_m θ_m r_k^{(m)}` per constraint.
    pub fn slacks(&self, inst: &LpInstance) -> Vec<f64> {
        (0..inst.constraints())
            .map(|k| inst.bound(k) - dot(&self.theta, inst.row(k)))
            .collect()
    }

    /// Reduced cost of each strategy column at the returned basis.
    pub fn reduced_costs(&self, inst: &LpInstance) -> Vec<f64> {
        (0..inst.strategies())
            .map(|m| {
                let mut d = inst.objective[m] - self.simplex_dual;
                for (k, y) in self.duals.iter().enumerate() {
                    d -= y * inst.rows[k][m];
                }
                d
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Tableau {
    n_rows: usize,
    n_cols: usize,
    // row-major, n_rows x (n_cols + 1); last column is the rhs
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.n_cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.n_cols)
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.n_cols + 1;
        let p = self.at(r, c);
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        for i in 0..self.n_rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[r * w + j];
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (o, x) in obj.iter_mut().zip(&self.t[r * w..(r + 1) * w]) {
                *o -= f * x;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for `cost`; the last entry is minus the objective.
    fn objective_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj: Vec<f64> = cost.to_vec();
        obj.push(0.0);
        for r in 0..self.n_rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (j, o) in obj.iter_mut().enumerate() {
                    *o -= cb * self.at(r, j);
                }
            }
        }
        obj
    }

    /// Bland's rule simplex. Returns `false` if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> Result<bool> {
        let mut obj = self.objective_row(cost);
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.n_cols).find(|&j| allowed(j) && obj[j] < -COST_EPS);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.n_rows {
                let a = self.at(r, c);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tol = 1e-12 * (1.0 + bratio.abs());
                            if ratio < bratio - tol || (ratio <= bratio + tol && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, c, &mut obj);
        }
        Err(Error::Domain("simplex pivot limit reached".into()))
    }
}

/// Solves the LP; deterministic for a given instance.
pub fn solve_lp(inst: &LpInstance) -> Result<LpSolution> {
    let f = inst.strategies();
    let k = inst.constraints();
    let n_rows = k + 1;

    // columns: θ (f) | slacks (k) | artificials
    let mut sign = vec![1.0; n_rows];
    let mut art_row = Vec::new();
    for (i, s) in sign.iter_mut().enumerate().take(k) {
        if inst.bound(i) < 0.0 {
            *s = -1.0;
            art_row.push(i);
        }
    }
    art_row.push(k);
    let n_art = art_row.len();
    let n_cols = f + k + n_art;
    let w = n_cols + 1;
    let mut t = vec![0.0; n_rows * w];
    let mut basis = vec![0; n_rows];
    // identity column per row, for reading B^{-1} back
    let mut unit_col = vec![0; n_rows];
    for i in 0..k {
        for m in 0..f {
            t[i * w + m] = sign[i] * inst.rows[i][m];
        }
        t[i * w + f + i] = sign[i];
        t[i * w + n_cols] = sign[i] * inst.bound(i);
        basis[i] = f + i;
        unit_col[i] = f + i;
    }
    for m in 0..f {
        t[k * w + m] = 1.0;
    }
    t[k * w + n_cols] = 1.0;
    for (a, &row) in art_row.iter().enumerate() {
        let col = f + k + a;
        t[row * w + col] = 1.0;
        basis[row] = col;
        unit_col[row] = col;
    }
    let mut tab = Tableau {
        n_rows,
        n_cols,
        t,
        basis,
    };
    let is_art = |j: usize| j >= f + k;

    // phase 1
    let mut cost1 = vec![0.0; n_cols];
    for c in cost1.iter_mut().skip(f + k) {
        *c = 1.0;
    }
    tab.optimize(&cost1, |_| true)?;
    let infeas: f64 = (0..n_rows).filter(|&r| is_art(tab.basis[r])).map(|r| tab.rhs(r)).sum();
    if infeas > FEAS_EPS {
        return Ok(LpSolution::infeasible(inst, LpStatus::Infeasible));
    }
    // drive zero-level artificials out where possible
    let mut dummy = vec![0.0; w];
    for r in 0..n_rows {
        if is_art(tab.basis[r]) {
            if let Some(c) = (0..f + k).find(|&j| tab.at(r, j).abs() > PIVOT_EPS) {
                tab.pivot(r, c, &mut dummy);
            }
        }
    }

    // phase 2
    let mut cost2 = vec![0.0; n_cols];
    cost2[..f].copy_from_slice(&inst.objective);
    if !tab.optimize(&cost2, |j| !is_art(j))? {
        return Ok(LpSolution::infeasible(inst, LpStatus::Unbounded));
    }

    let mut theta = vec![0.0; f];
    for r in 0..n_rows {
        if tab.basis[r] < f {
            theta[tab.basis[r]] = tab.rhs(r);
        }
    }
    // y_i = Σ_r c_B(r) (B^{-1})_{r,i}, then undo the row sign flips
    let mut y = vec![0.0; n_rows];
    for (i, yi) in y.iter_mut().enumerate() {
        let col = unit_col[i];
        let mut acc = 0.0;
        for r in 0..n_rows {
            acc += cost2[tab.basis[r]] * tab.at(r, col);
        }
        *yi = acc * sign[i];
    }
    let value = dot(&theta, &inst.objective);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        theta,
        value,
        duals: y[..k].to_vec(),
        simplex_dual: y[k],
    })
}

/// `G(x)`: optimal value with right-hand sides `c_k + x`, `+inf` when the
/// perturbed program is infeasible.
pub fn g_of_x(x: f64, base: &LpInstance) -> Result<f64> {
    Ok(solve_lp(&base.perturbed(x)?)?.value)
}

/// Empirical Lipschitz constant `ĉ` of `G` over a sorted grid: the largest
/// adjacent-pair slope. It is a lower bound on the true constant.
pub fn lipschitz_probe(grid: &[f64], base: &LpInstance) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::Domain("Lipschitz probe needs at least two grid points".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("Lipschitz probe grid must be strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        let g = g_of_x(x, base)?;
        if !g.is_finite() {
            return Err(Error::Domain(format!("G is infeasible at grid point x = {x}")));
        }
        values.push(g);
    }
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, g)| (g[1] - g[0]).abs() / (x[1] - x[0]))
        .fold(0.0, f64::max))
}

/// Probe grid for `G`: dyadic points accumulating at the origin plus a
/// uniform sweep up to `x_max`.
pub fn default_probe_grid(x_max: f64) -> Vec<f64> {
    let mut g: Vec<f64> = vec![0.0];
    g.extend((0..=24).rev().map(|j| x_max * 0.5f64.powi(j)));
    g.extend((1..=32).map(|i| x_max * i as f64 / 32.0));
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    g
}

/// Smallest perturbation that makes every constraint slack for every
/// strategy, `max_k (p_max,k − c_k)`, floored at a tiny positive value.
pub fn slack_perturbation(cost: &CostModel) -> f64 {
    let c = cost.constraints();
    (1..=cost.penalties())
        .map(|k| cost.p_max(k) - c[k - 1])
        .fold(1e-6, f64::max)
}

/// `Δ_{π,P_i*} = max_k b_max,k (d_{π,P_i*} + ν)`.
pub fn gap_delta(pi: &FiniteDistribution, covering: &CoveringSet, cost: &CostModel, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("ν = {nu} must be positive")));
    }
    let (_, d) = covering.nearest_member(pi)?;
    Ok(max_b(cost) * (d + nu))
}

fn max_b(cost: &CostModel) -> f64 {
    (0..=cost.penalties()).map(|k| cost.b_max(k)).fold(0.0, f64::max)
}

/// One evaluated instance of the approximation-gap inequality
/// `p_opt(P_i*) ≤ p_opt(π) + (ĉ + 1) Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapCheck {
    pub opt_member: f64,
    pub opt_pi: f64,
    pub c_hat: f64,
    pub delta_gap: f64,
    pub distance: f64,
}

impl GapCheck {
    pub fn rhs(&self) -> f64 {
        self.opt_pi + (self.c_hat + 1.0) * self.delta_gap
    }

    pub fn slack(&self) -> f64 {
        self.rhs() - self.opt_member
    }

    pub fn holds(&self) -> bool {
        self.opt_member <= self.rhs()
    }
}

/// Evaluates the gap inequality for a stationary `π`. `None` when either LP
/// is infeasible.
pub fn check_gap(
    model: &DecisionModel,
    pi: &FiniteDistribution,
    covering: &CoveringSet,
    nu: f64,
) -> Result<Option<GapCheck>> {
    let (istar, distance) = covering.nearest_member(pi)?;
    let member_lp = LpInstance::for_distribution(model, covering.member(istar))?;
    let opt_member = solve_lp(&member_lp)?;
    let opt_pi = solve_lp(&LpInstance::for_distribution(model, pi)?)?;
    if !opt_member.is_optimal() || !opt_pi.is_optimal() {
        return Ok(None);
    }
    let grid = default_probe_grid(slack_perturbation(model.cost()));
    let c_hat = lipschitz_probe(&grid, &member_lp)?;
    Ok(Some(GapCheck {
        opt_member: opt_member.value,
        opt_pi: opt_pi.value,
        c_hat,
        delta_gap: gap_delta(pi, covering, model.cost(), nu)?,
        distance,
    }))
}

/// How the random instances place `π` relative to the covering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiPlacement {
    /// Independent random `π`.
    Random,
    /// `π` is one of the covering members.
    Member,
    /// `π` sits just inside the covering radius of a member.
    NearBoundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapPropertyReport {
    pub checked: usize,
    pub regenerated: usize,
    pub failures: Vec<GapCheck>,
    pub min_slack: f64,
}

impl GapPropertyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> FiniteDistribution {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    normalized(raw)
}

fn normalized(raw: Vec<f64>) -> FiniteDistribution {
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let rest: f64 = p[1..].iter().sum();
    p[0] = 1.0 - rest;
    FiniteDistribution::new(p).expect("positive normalized vector")
}

/// A random small decision model with `F ≤ 32` and `K ≤ 3`.
pub fn random_small_model(rng: &mut ChaCha8Rng) -> Result<DecisionModel> {
    loop {
        let users = rng.random_range(1..=2usize);
        let states: Vec<usize> = (0..users).map(|_| rng.random_range(1..=3)).collect();
        let actions: Vec<usize> = (0..users).map(|_| rng.random_range(1..=3)).collect();
        let f: usize = actions.iter().zip(&states).map(|(&a, &w)| a.pow(w as u32)).product();
        if !(2..=32).contains(&f) {
            continue;
        }
        let k = rng.random_range(0..=3usize);
        let sp = ProductStateSpace::new(states)?;
        let ap = ActionModel::new(actions)?;
        let cells = sp.total() * ap.total();
        let tables = (0..=k)
            .map(|_| (0..cells).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let c = (0..k).map(|_| rng.random_range(-0.3..0.8)).collect();
        let cost = CostModel::new(ap.total(), sp.total(), tables, c)?;
        return DecisionModel::new(ap, sp, cost);
    }
}

/// Checks the gap inequality on `n` random instances with stationary `π`.
/// Instances where either LP is infeasible are regenerated, not counted.
pub fn gap_property_check(n: usize, seed: u64, placement: PiPlacement, nu: f64) -> Result<GapPropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GapPropertyReport {
        checked: 0,
        regenerated: 0,
        failures: Vec::new(),
        min_slack: f64::INFINITY,
    };
    while report.checked < n {
        let model = random_small_model(&mut rng)?;
        let omega = model.states().total();
        let m = rng.random_range(1..=4usize);
        let members: Vec<FiniteDistribution> = (0..m).map(|_| random_positive(&mut rng, omega)).collect();
        let pi = match placement {
            PiPlacement::Random => random_positive(&mut rng, omega),
            PiPlacement::Member => members[rng.random_range(0..m)].clone(),
            PiPlacement::NearBoundary => {
                let anchor = &members[rng.random_range(0..m)];
                let far = random_positive(&mut rng, omega);
                // walk toward `far` until just under an L1 radius of 0.3
                let full = l1_distance(anchor, &far)?;
                let wgt = if full > 0.0 {
                    (0.3 * (1.0 - 1e-6) / full).min(1.0)
                } else {
                    0.0
                };
                anchor.mix(&far, wgt)?
            }
        };
        let nearest = members
            .iter()
            .map(|mm| l1_distance(mm, &pi))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let delta = if placement == PiPlacement::NearBoundary {
            0.3
        } else {
            nearest + 0.01
        };
        let covering = CoveringSet::with_tight_support(members, delta.max(1e-6))?;
        match check_gap(&model, &pi, &covering, nu)? {
            None => report.regenerated += 1,
            Some(g) => {
                report.checked += 1;
                report.min_slack = report.min_slack.min(g.slack());
                if !g.holds() {
                    report.failures.push(g);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(obj: &[f64], rows: &[&[f64]], rhs: &[f64]) -> LpInstance {
        LpInstance::new(obj.to_vec(), rows.iter().map(|r| r.to_vec()).collect(), rhs.to_vec()).unwrap()
    }

    #[test]
    fn trivial_programs() {
        let s = solve_lp(&inst(&[0.0, 1.0], &[], &[])).unwrap();
        assert!(s.is_optimal());
        assert_eq!(s.theta, vec![1.0, 0.0]);
        assert_eq!(s.value, 0.0);

        let s = solve_lp(&inst(&[3.5], &[&[0.2]], &[1.0])).unwrap();
        assert_eq!(s.theta, vec![1.0]);
        assert_eq!(s.value, 3.5);
    }

    #[test]
    fn infeasible_when_levels_below_every_strategy() {
        let s = solve_lp(&inst(&[0.0, 1.0], &[&[1.0, 2.0]], &[0.5])).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert_eq!(s.value, f64::INFINITY);
        // negative right-hand side goes through the artificial row
        let s = solve_lp(&inst(&[0.0, 1.0], &[&[-1.0, -3.0]], &[-2.0])).unwrap();
        assert!(s.is_optimal());
        assert!((s.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mixing_two_strategies() {
        // r_0 = (0, 1), r_1 = (1, 0), c = 0: G(x) = max(0, 1 − x) on [0, 1]
        let base = inst(&[0.0, 1.0], &[&[1.0, 0.0]], &[0.0]);
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let g = g_of_x(x, &base).unwrap();
            assert!((g - (1.0 - x).max(0.0)).abs() < 1e-12, "x = {x}: {g}");
        }
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let c = lipschitz_probe(&grid, &base).unwrap();
        assert!((c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probe_rejects_infeasible_points() {
        let base = inst(&[0.0, 1.0], &[&[1.0, 2.0]], &[0.0]);
        let err = lipschitz_probe(&[0.0, 2.0], &base).unwrap_err();
        assert!(err.to_string().contains("x = 0"));
        let flat = inst(&[1.0, 1.0], &[&[0.0, 0.0]], &[0.0]);
        assert_eq!(lipschitz_probe(&[0.0, 0.5, 1.0], &flat).unwrap(), 0.0);
    }

    #[test]
    fn gap_delta_examples() {
        let u = FiniteDistribution::new(vec![0.5, 0.5]).unwrap();
        let v = FiniteDistribution::new(vec![0.6, 0.4]).unwrap();
        let cov = CoveringSet::with_tight_support(vec![u.clone(), v], 0.5).unwrap();
        // b_max = 1 everywhere
        let cost = CostModel::new(1, 2, vec![vec![1.0, -1.0], vec![0.5, 1.0]], vec![0.5]).unwrap();
        assert!((gap_delta(&u, &cov, &cost, 1e-12).unwrap()).abs() < 1e-11);
        let pi = FiniteDistribution::new(vec![0.6, 0.4]).unwrap().mix(&u, 0.0).unwrap();
        let off = FiniteDistribution::new(vec![0.4, 0.6]).unwrap();
        // nearest is u at distance 0.2
        let g = gap_delta(&off, &cov, &cost, 0.1).unwrap();
        assert!((g - 0.3).abs() < 1e-12);
        assert!(gap_delta(&pi, &cov, &cost, 0.0).is_err());
    }

    #[test]
    fn optimality_certificate_on_random_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let f = rng.random_range(1..40usize);
            let k = rng.random_range(0..4usize);
            let obj: Vec<f64> = (0..f).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..f).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let rhs: Vec<f64> = (0..k).map(|_| rng.random_range(-0.5..0.5)).collect();
            let lp = LpInstance::new(obj, rows, rhs).unwrap();
            let s = solve_lp(&lp).unwrap();
            if !s.is_optimal() {
                continue;
            }
            assert!(s.theta.iter().all(|&t| t >= -1e-9));
            assert!((s.theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(s.slacks(&lp).iter().all(|&sl| sl >= -1e-9));
            assert!(s.reduced_costs(&lp).iter().all(|&d| d >= -1e-9));
            assert!(s.duals.iter().all(|&y| y <= 1e-9));
            // strong duality
            let dual_obj: f64 = s.simplex_dual + s.duals.iter().enumerate().map(|(i, y)| y * lp.bound(i)).sum::<f64>();
            assert!((dual_obj - s.value).abs() < 1e-9);

            let mut perm: Vec<usize> = (0..f).collect();
            perm.reverse();
            let sp = solve_lp(&lp.permuted(&perm)).unwrap();
            assert!((sp.value - s.value).abs() < 1e-9);
        }
    }

    #[test]
    fn no_constraints_gives_minimum() {
        let obj = [0.3, -0.2, 0.9, -0.2];
        let s = solve_lp(&inst(&obj, &[], &[])).unwrap();
        assert_eq!(s.value, -0.2);
        assert_eq!(s.theta, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn g_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let model = random_small_model(&mut rng).unwrap();
            let pi = random_positive(&mut rng, model.states().total());
            let base = LpInstance::for_distribution(&model, &pi).unwrap();
            let grid = default_probe_grid(slack_perturbation(model.cost()));
            let vals: Vec<f64> = grid.iter().map(|&x| g_of_x(x, &base).unwrap()).collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 || !w[0].is_finite());
            }
            let last = *vals.last().unwrap();
            let min_r0 = base.objective().iter().copied().fold(f64::INFINITY, f64::min);
            assert!((last - min_r0).abs() < 1e-9);
        }
    }

    #[test]
    fn member_placement_has_nu_slack() {
        let r = gap_property_check(20, 3, PiPlacement::Member, 0.05).unwrap();
        assert!(r.passed());
        assert!(r.min_slack > 0.0);
    }
}
