//! Oracle checks shared by the oracle tests and the acceptance target. Each
//! returns a one-line summary on success and the first disagreement
//! otherwise.

use adpp_core::bounds::{mcdiarmid_tail, pac_rhs, BoundInputs, PacExponent, PacInputs};
use adpp_core::config::sensor3;
use adpp_core::decision::{ActionModel, CostModel, DecisionModel};
use adpp_core::prob::{FiniteDistribution, ProductStateSpace};
use adpp_core::sim::select_strategy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Objective of every strategy evaluated straight from the cost tables.
fn exhaustive(model: &DecisionModel, lambda: &FiniteDistribution, q: &[f64], v: f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for m in 0..model.strategy_count() {
        let mut r = vec![0.0; model.penalties() + 1];
        for (omega, &l) in lambda.probs().iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            for (k, rk) in r.iter_mut().enumerate() {
                *rk += l * model.p(k, m, omega);
            }
        }
        let mut obj = v * r[0];
        for (qk, rk) in q.iter().zip(&r[1..]) {
            obj += qk * rk;
        }
        if obj < best.1 {
            best = (m, obj);
        }
    }
    best.0
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> FiniteDistribution {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    let rest: f64 = p[1..].iter().sum();
    p[0] = 1.0 - rest;
    FiniteDistribution::new(p).unwrap()
}

/// `select_strategy` against a scan over all strategies: 400 probes on the
/// benchmark model, the rest on small integer-valued models where ties are
/// frequent.
pub fn selection_vs_exhaustive(total: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = sensor3().map_err(|e| e.to_string())?;
    let mut scratch = Vec::new();
    let mut probes = 0;
    for round in 0..4 {
        let lambda = if round == 0 {
            cfg.schedule.limit().clone()
        } else {
            random_dist(&mut rng, 64)
        };
        let cols = cfg.model.r_table(&lambda).unwrap().into_columns();
        for _ in 0..100 {
            let q: Vec<f64> = (0..3)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0.0..30.0)
                    }
                })
                .collect();
            let v = [0.0, 1.0, 2.0, 20.0, rng.random_range(0.0..50.0)][rng.random_range(0..5)];
            let (a, b) = (
                select_strategy(&q, v, &cols, &mut scratch),
                exhaustive(&cfg.model, &lambda, &q, v),
            );
            if a != b {
                return Err(format!("sensor3 probe q = {q:?}, V = {v}: picked {a}, scan {b}"));
            }
            probes += 1;
        }
    }
    while probes < total {
        let states: Vec<usize> = (0..rng.random_range(1..3)).map(|_| rng.random_range(1..4)).collect();
        let actions: Vec<usize> = states.iter().map(|_| rng.random_range(1..3)).collect();
        let sp = ProductStateSpace::new(states).unwrap();
        let ap = ActionModel::new(actions).unwrap();
        let k = rng.random_range(0..3);
        let tables = (0..=k)
            .map(|_| {
                (0..ap.total() * sp.total())
                    .map(|_| rng.random_range(-2..3) as f64)
                    .collect()
            })
            .collect();
        let n_states = sp.total();
        let cost = CostModel::new(ap.total(), n_states, tables, vec![0.5; k]).unwrap();
        let model = DecisionModel::new(ap, sp, cost).unwrap();
        let lambda = if rng.random_bool(0.3) {
            FiniteDistribution::uniform(n_states).unwrap()
        } else {
            random_dist(&mut rng, n_states)
        };
        let cols = model.r_table(&lambda).unwrap().into_columns();
        for _ in 0..10 {
            let q: Vec<f64> = (0..k).map(|_| rng.random_range(0..4) as f64).collect();
            let v = rng.random_range(0..3) as f64;
            let (a, b) = (
                select_strategy(&q, v, &cols, &mut scratch),
                exhaustive(&model, &lambda, &q, v),
            );
            if a != b {
                return Err(format!("small model probe {probes}: picked {a}, scan {b}"));
            }
            probes += 1;
        }
    }
    Ok(format!("{probes} probes, exact match"))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `P(mean of n Bernoulli(p) − p ≥ ε)` by enumeration.
fn exact_upper_tail(n: u64, p: f64, eps: f64) -> f64 {
    (0..=n)
        .filter(|&b| b as f64 / n as f64 - p >= eps - 1e-12)
        .map(|b| (ln_choose(n, b) + b as f64 * p.ln() + (n - b) as f64 * (1.0 - p).ln()).exp())
        .sum()
}

/// McDiarmid tails against exact binomial tails for every `n ≤ 20` and
/// `ε ∈ {0, 0.05, …, 1}`.
pub fn mcdiarmid_vs_binomial() -> Check {
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for n in 1..=20u64 {
        let c = vec![1.0 / n as f64; n as usize];
        let coins = vec![2.0 / n as f64; n as usize];
        for step in 0..=20 {
            let eps = step as f64 * 0.05;
            let bound = mcdiarmid_tail(eps, &c).unwrap();
            for p in [0.05, 0.1, 0.25, 0.5, 0.7, 0.9] {
                let exact = exact_upper_tail(n, p, eps);
                if bound < exact {
                    return Err(format!("n = {n}, ε = {eps}, p = {p}: bound {bound} < exact {exact}"));
                }
                tightest = tightest.min(bound - exact);
                checked += 1;
            }
            // ±1 coins: each flip moves the mean by 2/n
            let bound = mcdiarmid_tail(eps, &coins).unwrap();
            let exact = exact_upper_tail(n, 0.5, eps / 2.0);
            if bound < exact {
                return Err(format!("±1 coins n = {n}, ε = {eps}: bound {bound} < exact {exact}"));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} (n, ε, p) cells dominated; smallest margin {tightest:.3e}"
    ))
}

/// Second evaluator of `(J̄, H̄, ψ, Γ, Q_up)`, accumulating the series in
/// reverse order and grouping the terms differently.
fn psi_stack(b: &BoundInputs) -> [f64; 5] {
    let t = b.t as f64;
    let k = b.c.len();
    let j_cap = b.p_max.iter().cloned().fold(f64::MIN, f64::max);
    let drift_avg = b.drift[..b.t].iter().rev().sum::<f64>() / t;
    let jbar = j_cap * drift_avg + j_cap * b.delta;
    let two_d_plus_one = (2 * b.delay + 1) as f64;
    let hbar = two_d_plus_one * b.b[..b.t].iter().rev().sum::<f64>() / t;
    let rho: f64 = (1..=k)
        .map(|i| (b.p_max[i] - b.c[i - 1]) * (b.p_max[i] - b.c[i - 1]))
        .sum();
    let bpe: f64 = (0..b.t).rev().map(|s| b.b[s] * b.pe[s]).sum();
    let pe: f64 = (0..b.t).rev().map(|s| b.pe[s]).sum();
    let spe: f64 = (0..b.t).rev().map(|s| s as f64 * b.pe[s]).sum();
    let weighted = two_d_plus_one * bpe + b.p_max[0] * pe + rho * spe;
    let psi = (b.c_hat + 1.0) * jbar
        + (hbar + b.c_init / t) / b.v
        + (weighted - b.p_max[0] * pe) / (t * b.v)
        + b.p_max[0] * pe / t;
    let gamma = b.v * (b.c_hat + 1.0) * b.gap_delta + b.v * (b.c_hat + 1.0) * jbar + hbar + b.c_init + weighted;
    let q_up = ((b.v * b.f as f64 * t + gamma) / (t * t)).sqrt();
    [jbar, hbar, psi, gamma, q_up]
}

/// Second evaluator of the block-concentration right-hand side.
fn pac_direct(p: &PacInputs, strict: bool) -> f64 {
    let n = (p.t - p.alpha) as f64;
    let gap = p.eps_k - (p.mean_k - p.c_k);
    let eps_bar = p.t as f64 / n * gap - p.alpha as f64 / n * p.delta_p;
    let v = p.v as f64;
    let power = if strict { v } else { v * v };
    let block = p.u as f64 * (-2.0 * eps_bar * eps_bar * power / (p.delta_p * p.delta_p)).exp();
    block + p.pe_sum + n * p.beta
}

/// Library bound evaluators against the second implementations above on
/// `cases` random input vectors, to relative tolerance 1e-12.
pub fn dual_evaluators(cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut track = |a: f64, b: f64| {
        if a != b {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
        rel_close(a, b, 1e-12)
    };
    for case in 0..cases {
        let t = rng.random_range(2..400);
        let k = rng.random_range(0..4);
        let inputs = BoundInputs {
            t,
            v: rng.random_range(0.1..100.0),
            delay: rng.random_range(0..5),
            c_init: if case % 3 == 0 {
                0.0
            } else {
                rng.random_range(0.0..10.0)
            },
            c_hat: rng.random_range(0.0..5.0),
            f: rng.random_range(1..5000),
            gap_delta: rng.random_range(0.0..0.5),
            delta: rng.random_range(0.0..0.5),
            p_max: (0..=k).map(|_| rng.random_range(0.0..3.0)).collect(),
            c: (0..k).map(|_| rng.random_range(0.0..1.0)).collect(),
            drift: (0..t).map(|_| rng.random_range(0.0..2.0)).collect(),
            b: (0..t).map(|_| rng.random_range(0.0..4.0)).collect(),
            pe: (0..t).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect(),
        };
        let got = inputs.psi_q_gamma().map_err(|e| e.to_string())?;
        let want = psi_stack(&inputs);
        for (name, a, b) in [
            ("jbar", got.jbar, want[0]),
            ("hbar", got.hbar, want[1]),
            ("psi", got.psi, want[2]),
            ("gamma", got.gamma, want[3]),
            ("q_up", got.q_up, want[4]),
        ] {
            if !track(a, b) {
                return Err(format!("case {case} {name}: {a} vs {b}"));
            }
        }

        let (u, v) = (rng.random_range(1..80), rng.random_range(1..80));
        let alpha = rng.random_range(0..60);
        let delta_p = rng.random_range(0.1..3.0);
        let (mean_k, c_k) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let floor = mean_k - c_k + alpha as f64 * delta_p / (u * v) as f64;
        let pac = PacInputs {
            t: u * v + alpha,
            alpha,
            u,
            v,
            delta_p,
            eps_k: floor + rng.random_range(1e-3..1.0),
            c_k,
            mean_k,
            beta: rng.random_range(0.0..1e-3),
            pe_sum: rng.random_range(0.0..5.0),
        };
        for (mode, strict) in [(PacExponent::Printed, false), (PacExponent::Strict, true)] {
            let a = pac_rhs(&pac, mode).map_err(|e| e.to_string())?.raw();
            let b = pac_direct(&pac, strict);
            if !track(a, b) {
                return Err(format!("case {case} pac {mode:?}: {a} vs {b}"));
            }
        }
    }
    Ok(format!("{cases} random inputs, worst relative difference {worst:.2e}"))
}
