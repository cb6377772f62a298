//! Closed-form guarantees: concentration tails, detection-error bounds, the
//! optimality/queue bound stack and the β₁-mixing bounds.
//!
//! Probabilities are returned raw; several of them exceed one for small `t`
//! and are only meaningful once they cross below it. [`clamp_prob`] gives the
//! reported value.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decision::DecisionModel;
use crate::error::{Error, Result};
use crate::prob::{divergence, CoveringSet, NonstationarySchedule};
use crate::sim::WindowSchedule;

/// How the detection-error exponent uses `ζ_δ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionExponent {
    /// `exp(−2 D² w / ζ + ln M)`, matching a Hoeffding step with log-ratio
    /// range `ln(α/β)`.
    #[default]
    Hoeffding,
    /// `exp(−2 ζ D² w + ln M)`.
    Literal,
}

/// Exponent of the block concentration term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacExponent {
    /// `v²` in the exponent.
    #[default]
    Printed,
    /// `v`, from McDiarmid with `v` terms of range `Δp / v`.
    Strict,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundModes {
    pub detection: DetectionExponent,
    pub pac_exponent: PacExponent,
}

impl BoundModes {
    /// `--mode literal`: the `2ζD²w` detection exponent.
    pub fn literal() -> Self {
        Self {
            detection: DetectionExponent::Literal,
            pac_exponent: PacExponent::Printed,
        }
    }

    pub fn is_literal(&self) -> bool {
        self.detection == DetectionExponent::Literal
    }
}

impl fmt::Display for BoundModes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.detection {
            DetectionExponent::Hoeffding => "default",
            DetectionExponent::Literal => "literal",
        };
        let p = match self.pac_exponent {
            PacExponent::Printed => "printed",
            PacExponent::Strict => "strict",
        };
        write!(
            f,
            "mode={l} detection={} pac_exponent={p}",
            if l == "literal" { "literal" } else { "hoeffding" }
        )
    }
}

pub fn clamp_prob(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// `exp(−2ε² / Σ c_i²)`.
pub fn mcdiarmid_tail(eps: f64, c: &[f64]) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("McDiarmid deviation ε = {eps} must be >= 0")));
    }
    if c.is_empty() || c.iter().any(|&ci| !(ci > 0.0)) {
        return Err(Error::Domain("McDiarmid bounded differences must be positive".into()));
    }
    let s: f64 = c.iter().map(|ci| ci * ci).sum();
    Ok((-2.0 * eps * eps / s).exp())
}

fn detection_rate(zeta: f64, d: f64, w: f64, mode: DetectionExponent) -> f64 {
    match mode {
        DetectionExponent::Hoeffding => 2.0 * d * d * w / zeta,
        DetectionExponent::Literal => 2.0 * zeta * d * d * w,
    }
}

/// Detection-error bound `P_e,up^{(τ)}`: `1/M` in warmup slots, else the
/// exponential form selected by `mode`. `d_tau` is the divergence margin.
pub fn pe_upper(
    tau: usize,
    delay: usize,
    w_tau: usize,
    zeta: f64,
    d_tau: f64,
    m_delta: usize,
    mode: DetectionExponent,
) -> Result<f64> {
    if m_delta == 0 {
        return Err(Error::Config("covering set has no members".into()));
    }
    if tau < delay + w_tau {
        return Ok(1.0 / m_delta as f64);
    }
    if !(zeta > 0.0) {
        return Err(Error::Domain(format!("ζ_δ = {zeta} must be positive")));
    }
    // M·e^{−φ} equals exp(−φ + ln M) and keeps M exact when φ = 0
    Ok(m_delta as f64 * (-detection_rate(zeta, d_tau, w_tau as f64, mode)).exp())
}

/// `S_{t,δ} = exp(−φ + ln M)` with `φ` built from the smallest margin and
/// smallest window over `[α_t, t]`.
pub fn s_t_delta(
    zeta: f64,
    min_divergence: f64,
    n_window: usize,
    m_delta: usize,
    mode: DetectionExponent,
) -> Result<f64> {
    if n_window == 0 {
        return Err(Error::Domain("window minimum N must be >= 1".into()));
    }
    if m_delta == 0 {
        return Err(Error::Config("covering set has no members".into()));
    }
    Ok(m_delta as f64 * (-detection_rate(zeta, min_divergence, n_window as f64, mode)).exp())
}

/// `(t − α_t) S_{t,δ}`, the bound on the summed error probabilities.
pub fn s_sum_bound(t: usize, alpha: usize, s: f64) -> f64 {
    (t - alpha.min(t)) as f64 * s
}

/// Per-slot divergence margins of the detector.
///
/// Slot `τ` averages `E_{π_s} ln(P_j/P_{i*})` over the window samples
/// `s ∈ [τ−D−w+1, τ−D]` and reports `min_{j≠i*} max(−avg_j, 0)`; warmup slots
/// get `None`.
pub fn divergence_margins(
    schedule: &NonstationarySchedule,
    covering: &CoveringSet,
    istar: usize,
    delay: usize,
    window: &WindowSchedule,
    horizon: usize,
) -> Result<Vec<Option<f64>>> {
    let m = covering.len();
    let reference = covering.member(istar);
    // per-slot divergences dv[s*m + j]
    let mut prefix = vec![0.0; (horizon + 1) * m];
    for s in 0..horizon {
        for j in 0..m {
            let mut acc = 0.0;
            if j != istar {
                for (wgt, comp) in schedule.components_at(s) {
                    if wgt != 0.0 {
                        acc += wgt * divergence(comp, covering.member(j), reference)?;
                    }
                }
            }
            prefix[(s + 1) * m + j] = prefix[s * m + j] + acc;
        }
    }
    Ok((0..horizon)
        .map(|tau| {
            let w = window.at(tau);
            if tau < delay + w {
                return None;
            }
            let (lo, hi) = (tau - delay + 1 - w, tau - delay + 1);
            let margin = (0..m)
                .filter(|&j| j != istar)
                .map(|j| {
                    let avg = (prefix[hi * m + j] - prefix[lo * m + j]) / w as f64;
                    (-avg).max(0.0)
                })
                .fold(f64::INFINITY, f64::min);
            Some(if margin.is_finite() { margin } else { f64::INFINITY })
        })
        .collect())
}

/// `P_e,up^{(τ)}` for `τ = 0..horizon` from precomputed margins.
pub fn pe_series(
    margins: &[Option<f64>],
    delay: usize,
    window: &WindowSchedule,
    zeta: f64,
    m_delta: usize,
    mode: DetectionExponent,
) -> Result<Vec<f64>> {
    margins
        .iter()
        .enumerate()
        .map(|(tau, d)| match d {
            // a single-member covering never errs
            Some(d) if d.is_infinite() => Ok(0.0),
            Some(d) => pe_upper(tau, delay, window.at(tau), zeta, *d, m_delta, mode),
            None => Ok(1.0 / m_delta as f64),
        })
        .collect()
}

/// `B_τ` for `τ = 0..horizon`.
pub fn b_series(model: &DecisionModel, schedule: &NonstationarySchedule, horizon: usize) -> Result<Vec<f64>> {
    if model.penalties() == 0 {
        return Ok(vec![0.0; horizon]);
    }
    match schedule {
        NonstationarySchedule::Geometric { limit, initial, .. } => {
            // B moments are linear in the distribution
            let lim = model.b_moments(limit)?;
            let ini = model.b_moments(initial)?;
            Ok((0..horizon)
                .map(|tau| {
                    let comps = schedule.components_at(tau);
                    let (wl, wi) = (comps[0].0, comps[1].0);
                    lim.iter().zip(&ini).map(|(a, b)| wl * a + wi * b).fold(0.0, f64::max)
                })
                .collect())
        }
        NonstationarySchedule::Piecewise { dists, switch_times } => {
            let per: Vec<f64> = dists.iter().map(|d| model.b_t(d)).collect::<Result<_>>()?;
            Ok((0..horizon)
                .map(|tau| per[switch_times.partition_point(|&s| s <= tau)])
                .collect())
        }
    }
}

/// `‖π_τ − π‖₁` for `τ = 0..horizon`.
pub fn drift_series(schedule: &NonstationarySchedule, horizon: usize) -> Vec<f64> {
    (0..horizon).map(|tau| schedule.distance_to_limit(tau)).collect()
}

/// `(J̄_t, H̄_t)`.
pub fn jbar_ht(
    t: usize,
    schedule: &NonstationarySchedule,
    covering: &CoveringSet,
    model: &DecisionModel,
    delay: usize,
) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::Domain("J̄_t and H̄_t need t >= 1".into()));
    }
    let drift = drift_series(schedule, t);
    let b = b_series(model, schedule, t)?;
    let p_max_all = max_p_max(model);
    Ok((jbar(t, &drift, covering.delta(), p_max_all), hbar(t, &b, delay)))
}

fn max_p_max(model: &DecisionModel) -> f64 {
    (0..=model.penalties())
        .map(|k| model.cost().p_max(k))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn jbar(t: usize, drift: &[f64], delta: f64, p_max_all: f64) -> f64 {
    let avg = drift[..t].iter().sum::<f64>() / t as f64;
    p_max_all * (avg + delta)
}

fn hbar(t: usize, b: &[f64], delay: usize) -> f64 {
    (1.0 + 2.0 * delay as f64) / t as f64 * b[..t].iter().sum::<f64>()
}

/// `θ = max{(e^{κ·max(D,1)} − 1)/2, 1/2}`, rejected unless `θ < 1`.
pub fn theta(kappa: f64, delay: usize) -> Result<f64> {
    if !(kappa >= 0.0) {
        return Err(Error::Domain(format!("κ = {kappa} must be >= 0")));
    }
    let scale = delay.max(1) as f64;
    if kappa * scale >= 3f64.ln() {
        let th = ((kappa * scale).exp() - 1.0) / 2.0;
        return Err(Error::Domain(format!(
            "κ·max(D,1) = {} >= ln 3 gives θ = {th} >= 1; the mixing bound does not apply",
            kappa * scale
        )));
    }
    Ok((((kappa * scale).exp() - 1.0) / 2.0).max(0.5))
}

/// β₁ bound as a function of `µ = F|Ω|(K+1)`.
pub fn beta_bound_mu(s: usize, delay: usize, kappa: f64, mu: f64) -> Result<f64> {
    let th = theta(kappa, delay)?;
    if delay == 0 {
        if s < 1 {
            return Err(Error::Domain("β₁ bound with D = 0 needs s >= 1".into()));
        }
        Ok(th.powf((s as f64 - 1.0) / 2.0) / 2f64.sqrt() * mu.ln())
    } else {
        if s < 2 * delay + 1 {
            return Err(Error::Domain(format!(
                "β₁ bound with D = {delay} needs s >= 2D+1 = {}, got {s}",
                2 * delay + 1
            )));
        }
        let d = delay as f64;
        Ok(th.powf((s as f64 - d + 1.0) / (2.0 * d)) / 2f64.sqrt() * (d * mu).ln())
    }
}

pub fn beta_bound(s: usize, delay: usize, kappa: f64, f: usize, omega: usize, k: usize) -> Result<f64> {
    beta_bound_mu(s, delay, kappa, f as f64 * omega as f64 * (k + 1) as f64)
}

/// `(t − α_t)(β + S_{t,δ})`.
pub fn beta_star(t: usize, alpha: usize, beta: f64, s: f64) -> f64 {
    (t - alpha.min(t)) as f64 * (beta + s)
}

/// Whether `t` lies in the threshold set for confidence `γ`.
pub fn threshold_check(
    t: usize,
    alpha: usize,
    u: usize,
    eps: f64,
    gamma: f64,
    beta_star: f64,
    delta_p0: f64,
) -> Result<bool> {
    if !(gamma > beta_star) {
        return Err(Error::Domain(format!(
            "confidence γ = {gamma} must exceed β* = {beta_star}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be positive")));
    }
    // a negative log term means any t > α_t qualifies
    let lg = (u as f64 / (gamma - beta_star)).ln().max(0.0);
    let rhs = delta_p0 * u as f64 / (2f64.sqrt() * eps) * lg.sqrt();
    Ok(t as f64 - alpha as f64 > rhs)
}

/// Inputs of the block-concentration bound for one `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PacInputs {
    pub t: usize,
    pub alpha: usize,
    pub u: usize,
    pub v: usize,
    /// `Δp_max,k`.
    pub delta_p: f64,
    pub eps_k: f64,
    /// `c_k`, or `p_opt` for `k = 0`.
    pub c_k: f64,
    /// `(1/t) Σ E p_k(τ)`.
    pub mean_k: f64,
    pub beta: f64,
    pub pe_sum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacValue {
    pub block: f64,
    pub errors: f64,
    pub mixing: f64,
}

impl PacValue {
    pub fn raw(&self) -> f64 {
        self.block + self.errors + self.mixing
    }
}

/// `u exp(−2 ε̄² v^a / Δp²) + Σ P_e + (t − α) β` with `a` set by `mode`.
pub fn pac_rhs(p: &PacInputs, mode: PacExponent) -> Result<PacValue> {
    if p.u * p.v + p.alpha != p.t || p.u == 0 || p.v == 0 {
        return Err(Error::Domain(format!(
            "blocking needs u·v = t − α with u, v >= 1 (t = {}, α = {}, u = {}, v = {})",
            p.t, p.alpha, p.u, p.v
        )));
    }
    let span = (p.t - p.alpha) as f64;
    let floor = p.mean_k - p.c_k + p.alpha as f64 * p.delta_p / span;
    if !(p.eps_k > floor) {
        return Err(Error::Domain(format!(
            "ε_k = {} must exceed mean − c_k + α Δp/(t − α) = {floor}",
            p.eps_k
        )));
    }
    let eps_t = p.eps_k + p.c_k - p.mean_k;
    let eps_bar = (p.t as f64 * eps_t - p.alpha as f64 * p.delta_p) / span;
    let block = if p.delta_p == 0.0 {
        0.0
    } else {
        let v = p.v as f64;
        let c = match mode {
            PacExponent::Printed => vec![p.delta_p / v],
            PacExponent::Strict => vec![p.delta_p / v; p.v],
        };
        p.u as f64 * mcdiarmid_tail(eps_bar, &c)?
    };
    Ok(PacValue {
        block,
        errors: p.pe_sum,
        mixing: span * p.beta,
    })
}

/// Everything the optimality and queue bounds consume at one `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub t: usize,
    pub v: f64,
    pub delay: usize,
    /// Initial Lyapunov cap `C`.
    pub c_init: f64,
    pub c_hat: f64,
    pub f: usize,
    /// `Δ_{π,P_i*}`.
    pub gap_delta: f64,
    pub delta: f64,
    /// `p_max,k` for `k = 0..=K`.
    pub p_max: Vec<f64>,
    /// `c_k` for `k = 1..=K`.
    pub c: Vec<f64>,
    /// `‖π_τ − π‖₁`, `τ < t`.
    pub drift: Vec<f64>,
    /// `B_τ`, `τ < t`.
    pub b: Vec<f64>,
    /// `P_e,up^{(τ)}`, `τ < t`.
    pub pe: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiGamma {
    pub jbar: f64,
    pub hbar: f64,
    pub psi: f64,
    pub gamma: f64,
    pub q_up: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Domain("bounds need t >= 1".into()));
        }
        if !(self.v > 0.0) {
            return Err(Error::Domain(format!("V = {} must be positive in ψ_t", self.v)));
        }
        for (what, len) in [
            ("drift series", self.drift.len()),
            ("B series", self.b.len()),
            ("P_e series", self.pe.len()),
        ] {
            if len < self.t {
                return Err(Error::Dimension {
                    what,
                    expected: self.t,
                    got: len,
                });
            }
        }
        if self.p_max.len() != self.c.len() + 1 {
            return Err(Error::Dimension {
                what: "p_max entries",
                expected: self.c.len() + 1,
                got: self.p_max.len(),
            });
        }
        Ok(())
    }

    /// `ρ = Σ_k (p_max,k − c_k)²`.
    pub fn rho(&self) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(k, ck)| (self.p_max[k + 1] - ck).powi(2))
            .sum()
    }

    pub fn psi_q_gamma(&self) -> Result<PsiGamma> {
        self.validate()?;
        let t = self.t;
        let tf = t as f64;
        let v = self.v;
        let d1 = 1.0 + 2.0 * self.delay as f64;
        let p_max_all = self.p_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let jb = jbar(t, &self.drift, self.delta, p_max_all);
        let hb = hbar(t, &self.b, self.delay);
        let mut sum_bpe = 0.0;
        let mut sum_pe = 0.0;
        let mut sum_tpe = 0.0;
        for tau in 0..t {
            sum_bpe += self.b[tau] * self.pe[tau];
            sum_pe += self.pe[tau];
            sum_tpe += tau as f64 * self.pe[tau];
        }
        let rho = self.rho();
        let psi = (v * (self.c_hat + 1.0) * jb + hb + self.c_init / tf) / v
            + d1 / (tf * v) * sum_bpe
            + self.p_max[0] / tf * sum_pe
            + rho / (v * tf) * sum_tpe;
        let gamma = v * (self.c_hat + 1.0) * (self.gap_delta + jb)
            + hb
            + self.c_init
            + d1 * sum_bpe
            + self.p_max[0] * sum_pe
            + rho * sum_tpe;
        let q_up = (v * self.f as f64 / tf + gamma / (tf * tf)).sqrt();
        Ok(PsiGamma {
            jbar: jb,
            hbar: hb,
            psi,
            gamma,
            q_up,
        })
    }
}

/// `(α_t, u_t, v_t)` with `u_t = ⌊√t⌋`, `v_t = ⌊(t−1)/u_t⌋` and
/// `α_t = t − u_t v_t`, so all three are `O(√t)`.
pub fn blocking(t: usize) -> (usize, usize, usize) {
    let u = ((t as f64).sqrt() as usize).max(1);
    let v = (t.saturating_sub(1) / u).max(1);
    let alpha = t.saturating_sub(u * v);
    (alpha, u, v)
}

/// One row of the bound table.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub t: usize,
    pub alpha: usize,
    pub u: usize,
    pub v_blocks: usize,
    pub pe_up: f64,
    pub s_t: f64,
    pub s_sum: f64,
    pub pe_sum: f64,
    pub jbar: f64,
    pub hbar: f64,
    pub psi: f64,
    pub gamma: f64,
    pub q_up: f64,
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub beta_star0: Option<f64>,
    pub beta_star1: Option<f64>,
    pub pac0: Option<f64>,
    pub pac1: Option<f64>,
    pub in_t0: Option<bool>,
    pub in_t1: Option<bool>,
}

impl BoundReport {
    pub const COLUMNS: &'static [&'static str] = &[
        "t",
        "alpha",
        "u",
        "v",
        "pe_up_raw",
        "pe_up",
        "s_t_raw",
        "s_t",
        "s_sum_bound",
        "pe_sum",
        "jbar",
        "hbar",
        "psi",
        "gamma",
        "q_up",
        "theta",
        "beta_bound",
        "beta_star0",
        "beta_star1",
        "pac0_raw",
        "pac0",
        "pac1_raw",
        "pac1",
        "in_t0",
        "in_t1",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{ActionModel, CostModel};
    use crate::prob::{FiniteDistribution, ProductStateSpace};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn mcdiarmid_examples() {
        assert_eq!(mcdiarmid_tail(0.0, &[1.0]).unwrap(), 1.0);
        assert!(close(mcdiarmid_tail(1.0, &[1.0]).unwrap(), (-2f64).exp(), 1e-15));
        assert!(mcdiarmid_tail(-1.0, &[1.0]).is_err());
        assert!(mcdiarmid_tail(1.0, &[0.0]).is_err());
    }

    #[test]
    fn pe_upper_examples() {
        assert_eq!(
            pe_upper(0, 0, 5, 1.0, 0.3, 8, DetectionExponent::Hoeffding).unwrap(),
            0.125
        );
        assert_eq!(
            pe_upper(100, 0, 5, 1.0, 0.0, 8, DetectionExponent::Hoeffding).unwrap(),
            8.0
        );
        let v = pe_upper(100, 0, 40, 1.0, 0.5, 2, DetectionExponent::Hoeffding).unwrap();
        assert!(close(v, 2.0 * (-20f64).exp(), 1e-14));
        let lit = pe_upper(100, 0, 40, 4.0, 0.5, 2, DetectionExponent::Literal).unwrap();
        assert!(close(lit, 2.0 * (-80f64).exp(), 1e-14));
        assert!(pe_upper(0, 0, 1, 1.0, 0.5, 0, DetectionExponent::Hoeffding).is_err());
        // decreasing in w past warmup
        let mut prev = f64::INFINITY;
        for w in 1..60 {
            let p = pe_upper(500, 2, w, 3.0, 0.2, 8, DetectionExponent::Hoeffding).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn s_t_log_linearity() {
        assert_eq!(s_t_delta(2.0, 0.0, 10, 8, DetectionExponent::Hoeffding).unwrap(), 8.0);
        let m = 5;
        let a = s_t_delta(2.0, 0.3, 10, m, DetectionExponent::Hoeffding).unwrap() / m as f64;
        let b = s_t_delta(2.0, 0.3, 20, m, DetectionExponent::Hoeffding).unwrap() / m as f64;
        assert!(close(b, a * a, 1e-12));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(0.0, 0).unwrap(), 0.5);
        assert!(close(theta(2f64.ln(), 1).unwrap(), 0.5, 1e-15));
        assert!(theta(3f64.ln(), 0).is_err());
        assert!(theta(3f64.ln(), 1).is_err());
        assert!(theta(0.6, 2).is_err());
        let th = theta(1.0, 0).unwrap();
        assert!(close(th, (1f64.exp() - 1.0) / 2.0, 1e-15) && th < 1.0);
    }

    #[test]
    fn beta_bound_examples() {
        let mu = 4096.0 * 64.0 * 4.0;
        assert!(close(
            beta_bound_mu(1, 0, 0.3, mu).unwrap(),
            mu.ln() / 2f64.sqrt(),
            1e-15
        ));
        let e = 1f64.exp();
        for s in 1..20 {
            let want = 0.5f64.powf((s as f64 - 1.0) / 2.0) / 2f64.sqrt();
            assert!(close(beta_bound_mu(s, 0, 0.0, e).unwrap(), want, 1e-15));
        }
        assert!(beta_bound_mu(0, 0, 0.0, e).is_err());
        assert!(beta_bound_mu(2, 1, 0.1, e).is_err());
        let mut prev = f64::INFINITY;
        for s in 3..80 {
            let b = beta_bound(s, 1, 0.5, 4096, 64, 3).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert_eq!(beta_star(100, 10, 0.0, 0.0), 0.0);
        assert!(close(
            beta_star(100, 10, 0.2, 0.4),
            2.0 * beta_star(100, 10, 0.1, 0.2),
            1e-15
        ));
    }

    #[test]
    fn threshold_examples() {
        assert!(threshold_check(100, 10, 5, 0.1, 0.5, 0.4, 1.0).is_ok());
        assert!(!threshold_check(1_000_000, 10, 5, 1e-5, 1e-300, 0.0, 1.0).unwrap());
        assert!(threshold_check(11, 10, 5, 1e12, 0.5, 0.1, 1.0).unwrap());
        assert!(!threshold_check(10, 10, 5, 1e12, 0.5, 0.1, 1.0).unwrap());
        assert!(threshold_check(100, 10, 5, 0.1, 0.2, 0.3, 1.0).is_err());
        // hand evaluation: 1.0·5/(√2·0.5)·√ln(5/0.4) = 11.2384...
        let rhs = 5.0 / (2f64.sqrt() * 0.5) * (5.0f64 / 0.4).ln().sqrt();
        assert!(threshold_check(10 + rhs.ceil() as usize, 10, 5, 0.5, 0.5, 0.1, 1.0).unwrap());
        assert!(!threshold_check(10 + rhs.floor() as usize, 10, 5, 0.5, 0.5, 0.1, 1.0).unwrap());
    }

    fn pac(u: usize, v: usize, alpha: usize, eps: f64) -> PacInputs {
        PacInputs {
            t: u * v + alpha,
            alpha,
            u,
            v,
            delta_p: 1.0,
            eps_k: eps,
            c_k: 0.3,
            mean_k: 0.3,
            beta: 0.0,
            pe_sum: 0.0,
        }
    }

    #[test]
    fn pac_structure() {
        let big = pac(3, 10, 2, 1e6);
        assert_eq!(pac_rhs(&big, PacExponent::Printed).unwrap().raw(), 0.0);
        // one block: a single McDiarmid tail
        let p = pac(1, 40, 4, 0.2);
        let eb = (44.0 * 0.2 - 4.0) / 40.0;
        let one = mcdiarmid_tail(eb, &[1.0 / 40.0]).unwrap();
        assert!(close(pac_rhs(&p, PacExponent::Printed).unwrap().block, one, 1e-15));
        let iid = (-2.0 * eb * eb * 40.0).exp();
        assert!(close(pac_rhs(&p, PacExponent::Strict).unwrap().block, iid, 1e-13));
        // u blocks of one slot
        let q = pac(40, 1, 4, 0.2);
        assert!(close(
            pac_rhs(&q, PacExponent::Printed).unwrap().block,
            40.0 * (-2.0 * eb * eb).exp(),
            1e-14
        ));
        // below the floor
        assert!(pac_rhs(&pac(1, 40, 4, 0.05), PacExponent::Printed).is_err());
        let mut bad = pac(2, 3, 1, 1.0);
        bad.t += 1;
        assert!(pac_rhs(&bad, PacExponent::Printed).is_err());
    }

    #[test]
    fn blocking_identity() {
        for t in 1..3000 {
            let (a, u, v) = blocking(t);
            assert_eq!(a + u * v, t, "t = {t}");
            assert!(u >= 1 && v >= 1);
        }
        assert_eq!(blocking(5000), (30, 70, 71));
    }

    #[test]
    fn psi_reduces_when_errors_vanish() {
        let inp = BoundInputs {
            t: 50,
            v: 7.0,
            delay: 0,
            c_init: 0.0,
            c_hat: 1.5,
            f: 4,
            gap_delta: 0.1,
            delta: 0.2,
            p_max: vec![0.5, 1.0],
            c: vec![0.3],
            drift: vec![0.0; 50],
            b: vec![0.0; 50],
            pe: vec![0.0; 50],
        };
        let r = inp.psi_q_gamma().unwrap();
        assert!(close(r.jbar, 0.2, 1e-15));
        assert!(close(r.psi, 2.5 * r.jbar, 1e-15));
        let mut big = inp.clone();
        big.v = 700.0;
        let rb = big.psi_q_gamma().unwrap();
        assert!(rb.q_up > r.q_up);
        assert!(rb.q_up >= (700.0 * 4.0 / 50.0f64).sqrt());
    }

    fn tiny_model() -> DecisionModel {
        let cost = CostModel::new(
            2,
            2,
            vec![vec![0.0, 0.0, -1.0, -0.5], vec![0.0, 0.0, 1.0, 1.0]],
            vec![0.25],
        )
        .unwrap();
        DecisionModel::new(
            ActionModel::new(vec![2]).unwrap(),
            ProductStateSpace::new(vec![2]).unwrap(),
            cost,
        )
        .unwrap()
    }

    #[test]
    fn jbar_ht_examples() {
        let model = tiny_model();
        let pi = FiniteDistribution::new(vec![0.4, 0.6]).unwrap();
        let cov = CoveringSet::with_tight_support(vec![pi.clone()], 0.05).unwrap();
        let st = NonstationarySchedule::stationary(pi.clone());
        let (j, _) = jbar_ht(30, &st, &cov, &model, 0).unwrap();
        assert!(close(j, 1.0 * 0.05, 1e-15));
        let k0 = DecisionModel::new(
            ActionModel::new(vec![1]).unwrap(),
            ProductStateSpace::new(vec![2]).unwrap(),
            CostModel::new(1, 2, vec![vec![0.3, 0.1]], vec![]).unwrap(),
        )
        .unwrap();
        assert_eq!(jbar_ht(30, &st, &cov, &k0, 2).unwrap().1, 0.0);

        let init = FiniteDistribution::new(vec![0.9, 0.1]).unwrap();
        let geo = NonstationarySchedule::geometric(pi.clone(), init.clone(), 0.9).unwrap();
        let t = 200;
        let (j, h) = jbar_ht(t, &geo, &cov, &model, 1).unwrap();
        let d0 = 1.0;
        let closed = d0 * (1.0 - 0.9f64.powi(t as i32)) / (1.0 - 0.9) / t as f64;
        assert!(close(j, closed + 0.05, 1e-9));
        let direct: f64 = (0..t).map(|tau| model.b_t(&geo.at(tau)).unwrap()).sum();
        assert!(close(h, 3.0 / t as f64 * direct, 1e-12));
    }

    #[test]
    fn margins_on_stationary_member() {
        let a = FiniteDistribution::new(vec![0.5, 0.5]).unwrap();
        let b = FiniteDistribution::new(vec![0.25, 0.75]).unwrap();
        let cov = CoveringSet::with_tight_support(vec![a.clone(), b.clone()], 0.6).unwrap();
        let st = NonstationarySchedule::stationary(a.clone());
        let w = WindowSchedule::constant(3);
        let m = divergence_margins(&st, &cov, 0, 1, &w, 10).unwrap();
        assert!(m[..4].iter().all(Option::is_none));
        let kl = -(0.5 * 0.5f64.ln() + 0.5 * 1.5f64.ln());
        for x in &m[4..] {
            assert!(close(x.unwrap(), kl, 1e-12));
        }
        let one = CoveringSet::with_tight_support(vec![a.clone()], 0.6).unwrap();
        let m1 = divergence_margins(&st, &one, 0, 0, &w, 10).unwrap();
        let pe = pe_series(&m1, 0, &w, one.zeta().max(1e-3), 1, DetectionExponent::Hoeffding).unwrap();
        assert!(pe.iter().all(|&p| p <= 1.0));
        assert_eq!(pe[9], 0.0);
    }

    #[test]
    fn mode_labels() {
        assert_eq!(
            BoundModes::default().to_string(),
            "mode=default detection=hoeffding pac_exponent=printed"
        );
        assert_eq!(
            BoundModes::literal().to_string(),
            "mode=literal detection=literal pac_exponent=printed"
        );
    }
}
