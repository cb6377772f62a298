//! The ADPP control loop: delayed feedback, covering-set detection,
//! drift-plus-penalty strategy selection and virtual queues.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::DecisionModel;
use crate::error::{Error, Result};
use crate::prob::{run_rng, window_loglik, CoveringSet, NonstationarySchedule};

/// Detection window size as a function of the slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowSchedule {
    Constant {
        w: usize,
    },
    /// `w_t = max(floor, ⌊scale·√t⌋)`.
    Sqrt {
        scale: f64,
        floor: usize,
    },
}

impl WindowSchedule {
    pub fn constant(w: usize) -> Self {
        WindowSchedule::Constant { w }
    }

    pub fn at(&self, t: usize) -> usize {
        match *self {
            WindowSchedule::Constant { w } => w,
            WindowSchedule::Sqrt { scale, floor } => floor.max((scale * (t as f64).sqrt()) as usize),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowSchedule::Constant { w: 0 } => Err(Error::Config("window size must be >= 1".into())),
            WindowSchedule::Sqrt { scale, floor } if floor == 0 || !(scale >= 0.0) => Err(Error::Config(format!(
                "sqrt window needs floor >= 1 and scale >= 0, got floor {floor}, scale {scale}"
            ))),
            _ => Ok(()),
        }
    }

    /// Smallest window over `[from, to]`.
    pub fn min_over(&self, from: usize, to: usize) -> usize {
        match self {
            WindowSchedule::Constant { w } => *w,
            // non-decreasing in t
            WindowSchedule::Sqrt { .. } => self.at(from.min(to)),
        }
    }
}

/// Everything one run needs.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub v: f64,
    pub delay: usize,
    pub window: WindowSchedule,
    pub horizon: usize,
    pub seed: u64,
    pub schedule: NonstationarySchedule,
    pub covering: CoveringSet,
    pub model: Arc<DecisionModel>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.v >= 0.0 && self.v.is_finite()) {
            problems.push(format!("V = {} must be finite and >= 0", self.v));
        }
        if self.horizon == 0 {
            problems.push("horizon must be >= 1".to_string());
        }
        if let Err(e) = self.window.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.schedule.validate() {
            problems.push(e.to_string());
        }
        let omega = self.model.states().total();
        if self.schedule.outcomes() != omega {
            problems.push(format!(
                "schedule is over {} outcomes but the state space has {omega}",
                self.schedule.outcomes()
            ));
        }
        if self.covering.outcomes() != omega {
            problems.push(format!(
                "covering members are over {} outcomes but the state space has {omega}",
                self.covering.outcomes()
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Index `i*` of the covering member nearest the schedule's limit.
    pub fn reference_member(&self) -> Result<usize> {
        Ok(self.covering.nearest_member(self.schedule.limit())?.0)
    }
}

/// `argmax_j` of the window log-likelihood, lowest index on ties.
pub fn detect(window: &[usize], covering: &CoveringSet) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, m) in covering.members().iter().enumerate() {
        let ll = window_loglik(m, window)?;
        if j == 0 || ll > best.1 {
            best = (j, ll);
        }
    }
    Ok(best.0)
}

/// Uniform pick of a covering member from the run's stream.
pub fn warmup_detect<R: Rng + ?Sized>(covering: &CoveringSet, rng: &mut R) -> usize {
    rng.random_range(0..covering.len())
}

/// Whether slot `t` has a full delayed window.
#[inline]
pub fn window_available(t: usize, delay: usize, w: usize) -> bool {
    t + 1 > delay + w
}

/// `argmin_m V r_0^{(m)} + Σ_k Q_k r_k^{(m)}` over a column-major table,
/// lowest index on ties. `scratch` is resized to `F`.
pub fn select_strategy(q: &[f64], v: f64, cols: &[Vec<f64>], scratch: &mut Vec<f64>) -> usize {
    let f = cols[0].len();
    scratch.clear();
    scratch.extend(cols[0].iter().map(|r0| v * r0));
    for (qk, col) in q.iter().zip(&cols[1..]) {
        for (o, r) in scratch.iter_mut().zip(col) {
            *o += qk * r;
        }
    }
    let mut best = 0;
    let mut best_val = scratch[0];
    for (m, &o) in scratch.iter().enumerate().take(f).skip(1) {
        if o < best_val {
            best = m;
            best_val = o;
        }
    }
    best
}

/// `Q_k ← max(Q_k + p_k − c_k, 0)` in place.
pub fn update_queues(q: &mut [f64], p_delayed: &[f64], c: &[f64]) {
    for ((qk, pk), ck) in q.iter_mut().zip(p_delayed).zip(c) {
        *qk = (*qk + pk - ck).max(0.0);
    }
}

/// `(L_before, L_after, L_after − L_before)` with `L = ½‖Q‖²`.
pub fn lyapunov_drift(before: &[f64], after: &[f64]) -> (f64, f64, f64) {
    let l = |q: &[f64]| 0.5 * q.iter().map(|x| x * x).sum::<f64>();
    let (a, b) = (l(before), l(after));
    (a, b, b - a)
}

/// Per-slot log of one run, stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    k: usize,
    pub omega: Vec<u32>,
    /// `None` in warmup slots.
    pub jstar: Vec<Option<u32>>,
    /// The member actually used (detected or warmup pick).
    pub used: Vec<u32>,
    pub m: Vec<u32>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl Trace {
    fn with_capacity(t: usize, k: usize) -> Self {
        Self {
            k,
            omega: Vec::with_capacity(t),
            jstar: Vec::with_capacity(t),
            used: Vec::with_capacity(t),
            m: Vec::with_capacity(t),
            p: Vec::with_capacity(t * (k + 1)),
            q: Vec::with_capacity(t * k),
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn penalties(&self) -> usize {
        self.k
    }

    /// Realized `(p_0(t), …, p_K(t))`.
    pub fn p(&self, t: usize) -> &[f64] {
        &self.p[t * (self.k + 1)..(t + 1) * (self.k + 1)]
    }

    pub fn p_series(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.p.iter().skip(k).step_by(self.k + 1).copied()
    }

    /// Queue vector after the update in slot `t`, i.e. `Q(t+1)`.
    pub fn q_after(&self, t: usize) -> &[f64] {
        &self.q[t * self.k..(t + 1) * self.k]
    }

    /// `Q(t)`, zero at `t = 0`.
    pub fn q_before(&self, t: usize) -> Vec<f64> {
        if t == 0 {
            vec![0.0; self.k]
        } else {
            self.q_after(t - 1).to_vec()
        }
    }

    /// `(1/(t+1)) Σ_{τ≤t} p_k(τ)` for every slot and `k`, flattened like `p`.
    pub fn running_averages(&self) -> Vec<f64> {
        let w = self.k + 1;
        let mut acc = vec![0.0; w];
        let mut out = Vec::with_capacity(self.p.len());
        for t in 0..self.len() {
            for (a, x) in acc.iter_mut().zip(self.p(t)) {
                *a += x;
            }
            out.extend(acc.iter().map(|a| a / (t + 1) as f64));
        }
        out
    }

    /// Time average of `p_k` over the whole run.
    pub fn average(&self, k: usize) -> f64 {
        self.p_series(k).sum::<f64>() / self.len() as f64
    }

    /// Rebuilds `p` and the queues from the logged states and strategies.
    pub fn replay(
        model: &DecisionModel,
        delay: usize,
        omega: Vec<u32>,
        jstar: Vec<Option<u32>>,
        used: Vec<u32>,
        m: Vec<u32>,
    ) -> Result<Self> {
        let t_len = omega.len();
        if jstar.len() != t_len || m.len() != t_len || used.len() != t_len {
            return Err(Error::Dimension {
                what: "replayed trace columns",
                expected: t_len,
                got: m.len().min(jstar.len()).min(used.len()),
            });
        }
        let k = model.penalties();
        let mut tr = Trace::with_capacity(t_len, k);
        let c = model.cost().constraints().to_vec();
        let mut q = vec![0.0; k];
        let zeros = vec![0.0; k];
        for t in 0..t_len {
            let (w, mm) = (omega[t] as usize, m[t] as usize);
            if w >= model.states().total() || mm >= model.strategy_count() {
                return Err(Error::OutOfRange {
                    index: w.max(mm),
                    limit: model.states().total().min(model.strategy_count()),
                });
            }
            for kk in 0..=k {
                tr.p.push(model.p(kk, mm, w));
            }
            let delayed = if t >= delay {
                tr.p((t - delay).min(t))[1..].to_vec()
            } else {
                zeros.clone()
            };
            update_queues(&mut q, &delayed, &c);
            tr.q.extend_from_slice(&q);
        }
        tr.omega = omega;
        tr.jstar = jstar;
        tr.used = used;
        tr.m = m;
        Ok(tr)
    }
}

/// A configured run loop with per-member tables precomputed.
pub struct Simulator {
    cfg: SimConfig,
    // tables[j][k][m] = r_k^{(m)} under member j
    tables: Vec<Vec<Vec<f64>>>,
    // logs[j][ω] = ln P_j(ω)
    logs: Vec<Vec<f64>>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let tables = cfg
            .covering
            .members()
            .iter()
            .map(|mem| Ok(cfg.model.r_table(mem)?.into_columns()))
            .collect::<Result<Vec<_>>>()?;
        let logs = cfg
            .covering
            .members()
            .iter()
            .map(|mem| {
                mem.probs()
                    .iter()
                    .map(|p| if *p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect();
        Ok(Self { cfg, tables, logs })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Column-major `r` table of member `j`.
    pub fn member_table(&self, j: usize) -> &[Vec<f64>] {
        &self.tables[j]
    }

    /// Same arithmetic as [`detect`], on precomputed logs.
    fn detect_fast(&self, window: &[u32]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, logs) in self.logs.iter().enumerate() {
            let mut total = 0.0;
            for &w in window {
                total += logs[w as usize];
                if total == f64::NEG_INFINITY {
                    break;
                }
            }
            let ll = total / window.len() as f64;
            if j == 0 || ll > best.1 {
                best = (j, ll);
            }
        }
        best.0
    }

    /// One run on the stream of `run_index`.
    pub fn run(&self, run_index: u64) -> Trace {
        let mut rng = run_rng(self.cfg.seed, run_index);
        self.run_with(&mut rng)
    }

    pub fn run_with(&self, rng: &mut ChaCha8Rng) -> Trace {
        let cfg = &self.cfg;
        let model = &*cfg.model;
        let k = model.penalties();
        let c = model.cost().constraints();
        let mut tr = Trace::with_capacity(cfg.horizon, k);
        let mut q = vec![0.0; k];
        let mut scratch = Vec::with_capacity(model.strategy_count());
        let mut delayed = vec![0.0; k];
        for t in 0..cfg.horizon {
            let omega = cfg.schedule.sample_at(t, rng);
            tr.omega.push(omega as u32);
            let w = cfg.window.at(t);
            let (jstar, used) = if window_available(t, cfg.delay, w) {
                let end = t - cfg.delay + 1;
                let j = self.detect_fast(&tr.omega[end - w..end]);
                (Some(j as u32), j)
            } else {
                (None, warmup_detect(&cfg.covering, rng))
            };
            tr.jstar.push(jstar);
            tr.used.push(used as u32);
            let m = select_strategy(&q, cfg.v, &self.tables[used], &mut scratch);
            tr.m.push(m as u32);
            let a = model.strategies().joint_action(m, omega);
            for kk in 0..=k {
                tr.p.push(model.cost().value(kk, a, omega));
            }
            if t >= cfg.delay {
                let s = (t - cfg.delay) * (k + 1);
                delayed.copy_from_slice(&tr.p[s + 1..s + 1 + k]);
            }
            update_queues(&mut q, &delayed, c);
            tr.q.extend_from_slice(&q);
        }
        tr
    }

    pub fn run_ensemble(&self, n_runs: usize, keep_traces: bool) -> Result<EnsembleResult> {
        if n_runs == 0 {
            return Err(Error::Config("ensemble needs at least one run".into()));
        }
        let istar = self.cfg.reference_member()? as u32;
        let traces: Vec<Trace> = (0..n_runs as u64).into_par_iter().map(|r| self.run(r)).collect();
        EnsembleResult::from_traces(traces, istar, &self.cfg.model, keep_traces)
    }
}

/// What an ensemble keeps about a run when full traces are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// `(1/T) Σ p_k(t)`.
    pub final_avg: Vec<f64>,
    /// Slots where the member used differs from `i*`.
    pub error_slots: Vec<u32>,
    pub queue_violations: usize,
}

impl RunSummary {
    pub fn of(tr: &Trace, istar: u32, model: &DecisionModel) -> Self {
        Self {
            final_avg: (0..=tr.penalties()).map(|k| tr.average(k)).collect(),
            error_slots: (0..tr.len() as u32).filter(|&t| tr.used[t as usize] != istar).collect(),
            queue_violations: queue_violations(tr, model),
        }
    }
}

/// Slots and queues breaking `0 ≤ Q_k(t) ≤ t·max(p_max,k − c_k, 0)`.
///
/// `Q(t+1)` is compared with `(t+1)` times the per-slot excess; a relative
/// slack of 1e-9 absorbs accumulated rounding in the running sums.
pub fn queue_violations(tr: &Trace, model: &DecisionModel) -> usize {
    let c = model.cost().constraints();
    let excess: Vec<f64> = (0..tr.penalties())
        .map(|k| (model.cost().p_max(k + 1) - c[k]).max(0.0))
        .collect();
    let mut bad = 0;
    for t in 0..tr.len() {
        for (k, &qk) in tr.q_after(t).iter().enumerate() {
            let cap = (t + 1) as f64 * excess[k];
            if !(qk >= 0.0) || qk > cap + 1e-9 * (1.0 + cap) {
                bad += 1;
            }
        }
    }
    bad
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    k: usize,
    horizon: usize,
    pub reference: u32,
    /// Per-slot mean of `p_k(t)` across runs, `T × (K+1)` row-major.
    mean_p: Vec<f64>,
    pub runs: Vec<RunSummary>,
    /// Empty unless traces were kept.
    pub traces: Vec<Trace>,
}

impl EnsembleResult {
    /// Summarizes complete runs of equal length, in run-index order.
    pub fn from_traces(traces: Vec<Trace>, reference: u32, model: &DecisionModel, keep_traces: bool) -> Result<Self> {
        let Some(first) = traces.first() else {
            return Err(Error::Config("ensemble needs at least one run".into()));
        };
        let (k, t_len) = (first.penalties(), first.len());
        if let Some(bad) = traces.iter().find(|t| t.len() != t_len || t.penalties() != k) {
            return Err(Error::Dimension {
                what: "run length",
                expected: t_len,
                got: bad.len(),
            });
        }
        let runs: Vec<RunSummary> = traces
            .par_iter()
            .map(|tr| RunSummary::of(tr, reference, model))
            .collect();
        let mut sum = vec![0.0; t_len * (k + 1)];
        for tr in &traces {
            for (s, x) in sum.iter_mut().zip(&tr.p) {
                *s += x;
            }
        }
        let n = traces.len() as f64;
        Ok(EnsembleResult {
            k,
            horizon: t_len,
            reference,
            mean_p: sum.into_iter().map(|s| s / n).collect(),
            runs,
            traces: if keep_traces { traces } else { Vec::new() },
        })
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn penalties(&self) -> usize {
        self.k
    }

    pub fn mean_p(&self, t: usize) -> &[f64] {
        &self.mean_p[t * (self.k + 1)..(t + 1) * (self.k + 1)]
    }

    /// Mean over slots `[from, T)` of the per-slot ensemble mean of `p_k`.
    pub fn tail_mean(&self, k: usize, from: usize) -> f64 {
        let n = self.horizon - from;
        (from..self.horizon).map(|t| self.mean_p(t)[k]).sum::<f64>() / n as f64
    }

    pub fn total_queue_violations(&self) -> usize {
        self.runs.iter().map(|r| r.queue_violations).sum()
    }
}
