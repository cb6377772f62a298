//! Experiment orchestration: `simulate → empirics → bounds → compare`, plus
//! the LP report. Every command writes CSV files into `cfg.out`; each file
//! starts with a `# ...` line naming the configuration and the bound modes,
//! followed by a column header.
//!
//! Trace files hold only what the controller decided (`ω`, `j*`, the member
//! used, `m`); penalties and queues are rebuilt by replay when read back.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bounds::{
    b_series, beta_bound, beta_star, blocking, clamp_prob, divergence_margins, drift_series, pac_rhs, pe_series,
    s_sum_bound, s_t_delta, theta, threshold_check, BoundInputs, BoundReport, PacInputs,
};
use crate::config::ExperimentConfig;
use crate::empirics::{
    binomial_half_width, error_rate, estimate_beta1, estimate_kappa, first_error_from, gap_report, Beta1Estimate,
    Beta1Options, GapReport, KappaEstimate, RunSeries,
};
use crate::error::{Error, Result};
use crate::format::{column, fmt_flag, fmt_num, fmt_opt, io_err, read_csv, CsvOut};
use crate::lp::{check_gap, gap_property_check, solve_lp, GapCheck, GapPropertyReport, LpInstance, PiPlacement};
use crate::sim::{window_available, EnsembleResult, Simulator, Trace, WindowSchedule};

/// Tolerance on the LP utility against a declared reference optimum.
pub const LP_TOLERANCE: f64 = 1e-3;
/// Allowed shortfall of the tail utility below the reference.
pub const UTILITY_BELOW: f64 = 0.03;
/// Allowed excess of the tail utility above the reference.
pub const UTILITY_ABOVE: f64 = 0.01;
/// Allowed excess of a tail penalty average over its budget.
pub const POWER_SLACK: f64 = 0.01;

/// One simulated configuration of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub v: f64,
    pub delay: usize,
    pub window: WindowSchedule,
}

impl SweepPoint {
    pub fn label(&self) -> String {
        let w = match &self.window {
            WindowSchedule::Constant { w } => w.to_string(),
            WindowSchedule::Sqrt { scale, floor } => format!("sqrt{}-{floor}", fmt_num(*scale)),
        };
        format!("V{}_D{}_w{w}", fmt_num(self.v), self.delay)
    }

    pub fn traces_path(&self, out: &Path) -> PathBuf {
        out.join(format!("traces_{}.csv", self.label()))
    }

    /// Slots whose detection window is complete.
    pub fn post_warmup(&self, t: usize) -> bool {
        window_available(t, self.delay, self.window.at(t))
    }
}

/// The primary point first, then the V, w and D sweeps around it, without
/// repeats.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let primary = SweepPoint {
        v: cfg.v,
        delay: cfg.delay,
        window: cfg.window.clone(),
    };
    let mut pts = vec![primary.clone()];
    pts.extend(cfg.v_list.iter().map(|&v| SweepPoint { v, ..primary.clone() }));
    pts.extend(cfg.w_list.iter().map(|&w| SweepPoint {
        window: WindowSchedule::constant(w),
        ..primary.clone()
    }));
    pts.extend(cfg.d_list.iter().map(|&delay| SweepPoint {
        delay,
        ..primary.clone()
    }));
    let mut seen = Vec::new();
    pts.retain(|p| {
        let l = p.label();
        if seen.contains(&l) {
            false
        } else {
            seen.push(l);
            true
        }
    });
    pts
}

fn w_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut ws = cfg.w_list.clone();
    ws.sort_unstable();
    ws.dedup();
    ws.into_iter()
        .map(|w| SweepPoint {
            v: cfg.v,
            delay: cfg.delay,
            window: WindowSchedule::constant(w),
        })
        .collect()
}

fn describe(cfg: &ExperimentConfig, what: &str, point: Option<&SweepPoint>) -> String {
    let mut s = format!(
        "adpp {what} config={} seed={} runs={} horizon={}",
        cfg.name, cfg.seed, cfg.runs, cfg.horizon
    );
    if let Some(p) = point {
        let _ = write!(s, " point={}", p.label());
    }
    let _ = write!(s, " {}", cfg.modes);
    s
}

fn ensure_out(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))
}

fn indexed(prefix: &str, from: usize, to: usize) -> Vec<String> {
    (from..=to).map(|k| format!("{prefix}{k}")).collect()
}

// ---------------------------------------------------------------- LP

#[derive(Clone, Debug, PartialEq)]
pub struct LpReport {
    /// Optimal cost under the limit distribution.
    pub value: f64,
    /// Nonzero strategy weights `(m, θ_m)`.
    pub support: Vec<(usize, f64)>,
    pub slacks: Vec<f64>,
    pub duals: Vec<f64>,
    /// Gap check against the nearest covering member, with `ĉ` and `Δ`.
    pub gap: Option<GapCheck>,
    pub reference: usize,
    /// Optimal cost of each covering member (`NaN` if infeasible).
    pub member_values: Vec<f64>,
}

impl LpReport {
    pub fn utility(&self) -> f64 {
        -self.value
    }
}

pub fn lp_report(cfg: &ExperimentConfig) -> Result<LpReport> {
    let limit = cfg.schedule.limit();
    let inst = LpInstance::for_distribution(&cfg.model, limit)?;
    let sol = solve_lp(&inst)?;
    if !sol.is_optimal() {
        return Err(Error::Domain(format!(
            "the LP under the limit distribution is {:?}",
            sol.status
        )));
    }
    let member_values = cfg
        .covering
        .members()
        .par_iter()
        .map(|m| {
            let s = solve_lp(&LpInstance::for_distribution(&cfg.model, m)?)?;
            Ok(if s.is_optimal() { s.value } else { f64::NAN })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LpReport {
        value: sol.value,
        support: sol
            .theta
            .iter()
            .enumerate()
            .filter(|(_, x)| **x > 0.0)
            .map(|(m, x)| (m, *x))
            .collect(),
        slacks: sol.slacks(&inst),
        duals: sol.duals.clone(),
        gap: check_gap(&cfg.model, limit, &cfg.covering, cfg.nu)?,
        reference: cfg.covering.nearest_member(limit)?.0,
        member_values,
    })
}

/// Writes `lp.csv`.
pub fn cmd_lp(cfg: &ExperimentConfig) -> Result<LpReport> {
    ensure_out(cfg)?;
    let rep = lp_report(cfg)?;
    let mut w = CsvOut::create(
        &cfg.out.join("lp.csv"),
        &describe(cfg, "lp", None),
        &["kind", "problem", "index", "value"],
    )?;
    let mut put =
        |kind: &str, problem: &str, index: String, value: f64| w.row([kind, problem, &index, &fmt_num(value)]);
    put("value", "limit", "NA".into(), rep.value)?;
    put("utility", "limit", "NA".into(), rep.utility())?;
    for (m, x) in &rep.support {
        put("theta", "limit", m.to_string(), *x)?;
    }
    for (k, s) in rep.slacks.iter().enumerate() {
        put("slack", "limit", (k + 1).to_string(), *s)?;
    }
    for (k, d) in rep.duals.iter().enumerate() {
        put("dual", "limit", (k + 1).to_string(), *d)?;
    }
    put("reference_member", "limit", "NA".into(), rep.reference as f64)?;
    if let Some(g) = &rep.gap {
        put("c_hat", "limit", "NA".into(), g.c_hat)?;
        put("gap_delta", "limit", "NA".into(), g.delta_gap)?;
        put("member_distance", "limit", "NA".into(), g.distance)?;
        put("gap_rhs", "limit", "NA".into(), g.rhs())?;
        put("gap_slack", "limit", "NA".into(), g.slack())?;
    }
    for (j, v) in rep.member_values.iter().enumerate() {
        put("value", &format!("member{j}"), "NA".into(), *v)?;
    }
    w.finish()?;
    Ok(rep)
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub label: String,
    pub tail_utility: f64,
    pub tail_penalty: Vec<f64>,
    pub queue_violations: usize,
}

/// Runs every sweep point and writes its trace, run and ensemble files, plus
/// `trace_run0.csv` for the primary point.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<PointSummary>> {
    ensure_out(cfg)?;
    let mut out = Vec::new();
    for (i, pt) in sweep_points(cfg).iter().enumerate() {
        let sim = Simulator::new(cfg.sim_config(pt.v, pt.delay, pt.window.clone()))?;
        let ens = sim.run_ensemble(cfg.runs, true)?;
        log::info!("simulated {} ({} runs)", pt.label(), cfg.runs);
        write_traces(cfg, pt, &ens)?;
        write_runs(cfg, pt, &ens)?;
        write_ensemble(cfg, pt, &ens)?;
        if i == 0 {
            write_run0(cfg, pt, &ens.traces[0])?;
        }
        let tail_from = cfg.horizon.saturating_sub(cfg.tail.max(1));
        out.push(PointSummary {
            label: pt.label(),
            tail_utility: -ens.tail_mean(0, tail_from),
            tail_penalty: (1..=ens.penalties()).map(|k| ens.tail_mean(k, tail_from)).collect(),
            queue_violations: ens.total_queue_violations(),
        });
    }
    Ok(out)
}

fn write_traces(cfg: &ExperimentConfig, pt: &SweepPoint, ens: &EnsembleResult) -> Result<()> {
    let mut w = CsvOut::create(
        &pt.traces_path(&cfg.out),
        &describe(cfg, "traces", Some(pt)),
        &["run", "t", "omega", "jstar", "used", "m"],
    )?;
    for (r, tr) in ens.traces.iter().enumerate() {
        let run = r.to_string();
        for t in 0..tr.len() {
            let j = tr.jstar[t].map_or_else(|| "NA".to_string(), |j| j.to_string());
            w.row([
                run.as_str(),
                &t.to_string(),
                &tr.omega[t].to_string(),
                &j,
                &tr.used[t].to_string(),
                &tr.m[t].to_string(),
            ])?;
        }
    }
    w.finish()
}

fn write_runs(cfg: &ExperimentConfig, pt: &SweepPoint, ens: &EnsembleResult) -> Result<()> {
    let k = ens.penalties();
    let mut cols = vec!["run".to_string()];
    cols.extend(indexed("avg_p", 0, k));
    cols.extend(["error_slots".into(), "queue_violations".into()]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let path = cfg.out.join(format!("runs_{}.csv", pt.label()));
    let mut w = CsvOut::create(&path, &describe(cfg, "runs", Some(pt)), &cols)?;
    for (r, s) in ens.runs.iter().enumerate() {
        let mut row = vec![r.to_string()];
        row.extend(s.final_avg.iter().map(|x| fmt_num(*x)));
        row.push(s.error_slots.len().to_string());
        row.push(s.queue_violations.to_string());
        w.row(&row)?;
    }
    w.finish()
}

fn write_ensemble(cfg: &ExperimentConfig, pt: &SweepPoint, ens: &EnsembleResult) -> Result<()> {
    let k = ens.penalties();
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("mean_p", 0, k));
    cols.push("error_rate".into());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let path = cfg.out.join(format!("ensemble_{}.csv", pt.label()));
    let mut w = CsvOut::create(&path, &describe(cfg, "ensemble", Some(pt)), &cols)?;
    let slots: Vec<Vec<u32>> = ens.runs.iter().map(|r| r.error_slots.clone()).collect();
    let rate = error_rate(&slots, ens.horizon());
    for (t, r) in rate.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(ens.mean_p(t).iter().map(|x| fmt_num(*x)));
        row.push(fmt_num(*r));
        w.row(&row)?;
    }
    w.finish()
}

fn write_run0(cfg: &ExperimentConfig, pt: &SweepPoint, tr: &Trace) -> Result<()> {
    let k = tr.penalties();
    let mut cols: Vec<String> = ["t", "omega", "jstar", "used", "m"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(indexed("p", 0, k));
    cols.extend(indexed("Q", 1, k));
    cols.extend(indexed("avg_p", 0, k));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut w = CsvOut::create(
        &cfg.out.join("trace_run0.csv"),
        &describe(cfg, "trace_run0", Some(pt)),
        &cols,
    )?;
    let avg = tr.running_averages();
    for t in 0..tr.len() {
        let mut row = vec![
            t.to_string(),
            tr.omega[t].to_string(),
            tr.jstar[t].map_or_else(|| "NA".to_string(), |j| j.to_string()),
            tr.used[t].to_string(),
            tr.m[t].to_string(),
        ];
        row.extend(tr.p(t).iter().map(|x| fmt_num(*x)));
        row.extend(tr.q_after(t).iter().map(|x| fmt_num(*x)));
        row.extend(avg[t * (k + 1)..(t + 1) * (k + 1)].iter().map(|x| fmt_num(*x)));
        w.row(&row)?;
    }
    w.finish()
}

/// `(ω, j*, used member, m)` of one run.
type TraceColumns = (Vec<u32>, Vec<Option<u32>>, Vec<u32>, Vec<u32>);

/// Reads a trace file back and replays it into an ensemble.
pub fn load_point(cfg: &ExperimentConfig, pt: &SweepPoint, keep_traces: bool) -> Result<EnsembleResult> {
    let path = pt.traces_path(&cfg.out);
    if !path.exists() {
        return Err(Error::Io(format!(
            "missing trace file {}; run `adpp simulate` with this configuration first",
            path.display()
        )));
    }
    let (header, rows) = read_csv(&path)?;
    let col = |n: &str| column(&header, n, &path);
    let (c_run, c_t, c_om, c_j, c_used, c_m) = (
        col("run")?,
        col("t")?,
        col("omega")?,
        col("jstar")?,
        col("used")?,
        col("m")?,
    );
    let bad = |what: &str, line: usize| Error::Io(format!("{}: bad {what} in record {line}", path.display()));
    let int = |rec: &csv::StringRecord, c: usize, what: &str, i: usize| -> Result<u64> {
        rec.get(c).and_then(|s| s.parse().ok()).ok_or_else(|| bad(what, i))
    };
    let mut cols: Vec<TraceColumns> = Vec::new();
    for (i, rec) in rows.iter().enumerate() {
        let run = int(rec, c_run, "run", i)? as usize;
        let t = int(rec, c_t, "t", i)? as usize;
        if run == cols.len() {
            cols.push(Default::default());
        }
        if run + 1 != cols.len() || t != cols[run].0.len() {
            return Err(bad("run/slot order", i));
        }
        let j = match rec.get(c_j) {
            Some("NA") => None,
            _ => Some(int(rec, c_j, "jstar", i)? as u32),
        };
        let c = &mut cols[run];
        c.0.push(int(rec, c_om, "omega", i)? as u32);
        c.1.push(j);
        c.2.push(int(rec, c_used, "used", i)? as u32);
        c.3.push(int(rec, c_m, "m", i)? as u32);
    }
    if cols.len() != cfg.runs || cols.iter().any(|c| c.0.len() != cfg.horizon) {
        return Err(Error::Io(format!(
            "{} holds {} runs of {} slots but the configuration asks for {} runs of {}; rerun `adpp simulate`",
            path.display(),
            cols.len(),
            cols.first().map_or(0, |c| c.0.len()),
            cfg.runs,
            cfg.horizon
        )));
    }
    let traces = cols
        .into_par_iter()
        .map(|(om, js, used, m)| Trace::replay(&cfg.model, pt.delay, om, js, used, m))
        .collect::<Result<Vec<_>>>()?;
    let reference = cfg.covering.nearest_member(cfg.schedule.limit())?.0 as u32;
    EnsembleResult::from_traces(traces, reference, &cfg.model, keep_traces)
}

// ---------------------------------------------------------------- empirics

#[derive(Clone, Debug)]
pub struct BetaCell {
    pub k: usize,
    pub s: usize,
    pub estimate: std::result::Result<Beta1Estimate, String>,
}

#[derive(Clone, Debug)]
pub struct MixingEstimates {
    pub alpha: usize,
    pub kappa: KappaEstimate,
    pub beta: Vec<BetaCell>,
}

impl MixingEstimates {
    pub fn beta(&self, k: usize, s: usize) -> Option<&BetaCell> {
        self.beta.iter().find(|c| c.k == k && c.s == s)
    }
}

#[derive(Clone, Debug)]
pub struct PointEmpirics {
    pub point: SweepPoint,
    pub runs: usize,
    /// Per-slot fraction of runs with a wrong detection.
    pub rate: Vec<f64>,
    /// Mean of `rate` over post-warmup slots.
    pub post_warmup_rate: f64,
    pub gap: GapReport,
    pub queue_violations: usize,
    /// Only for the primary point.
    pub mixing: Option<MixingEstimates>,
}

pub fn point_empirics(
    cfg: &ExperimentConfig,
    pt: &SweepPoint,
    ens: &EnsembleResult,
    lp_value: f64,
    mixing: bool,
) -> Result<PointEmpirics> {
    let slots: Vec<Vec<u32>> = ens.runs.iter().map(|r| r.error_slots.clone()).collect();
    let rate = error_rate(&slots, ens.horizon());
    let post: Vec<f64> = (0..ens.horizon())
        .filter(|&t| pt.post_warmup(t))
        .map(|t| rate[t])
        .collect();
    let post_warmup_rate = if post.is_empty() {
        f64::NAN
    } else {
        post.iter().sum::<f64>() / post.len() as f64
    };
    let mixing = if mixing && !ens.traces.is_empty() {
        Some(mixing_estimates(cfg, pt, ens)?)
    } else {
        None
    };
    Ok(PointEmpirics {
        point: pt.clone(),
        runs: ens.run_count(),
        rate,
        post_warmup_rate,
        gap: gap_report(ens, lp_value, cfg.model.cost().constraints(), cfg.tail)?,
        queue_violations: ens.total_queue_violations(),
        mixing,
    })
}

fn mixing_estimates(cfg: &ExperimentConfig, pt: &SweepPoint, ens: &EnsembleResult) -> Result<MixingEstimates> {
    let obs: Vec<(u32, Vec<u64>)> = ens
        .traces
        .iter()
        .flat_map(|tr| {
            (0..tr.len())
                .filter(|&t| pt.post_warmup(t))
                .map(move |t| (tr.m[t], tr.p(t).iter().map(|x| (x + 0.0).to_bits()).collect()))
        })
        .collect();
    let kappa = estimate_kappa(&obs, cfg.kappa_floor);
    drop(obs);
    let alpha = cfg.beta_alpha();
    let opts = Beta1Options {
        alpha,
        anchors: cfg.beta_anchors,
        min_runs: cfg.beta_min_runs,
    };
    let mut cells = Vec::new();
    for k in 0..=ens.penalties() {
        let series: Vec<RunSeries> = ens
            .traces
            .iter()
            .zip(&ens.runs)
            .map(|(tr, r)| RunSeries {
                values: tr.p_series(k).collect(),
                first_error: first_error_from(&r.error_slots, alpha),
            })
            .collect();
        for &s in &cfg.s_list {
            cells.push(BetaCell {
                k,
                s,
                estimate: estimate_beta1(&series, s, &opts).map_err(|e| e.to_string()),
            });
        }
    }
    Ok(MixingEstimates {
        alpha,
        kappa,
        beta: cells,
    })
}

/// Empirical estimates for every sweep point, read from the trace files.
pub fn empirics(cfg: &ExperimentConfig, lp_value: f64) -> Result<Vec<PointEmpirics>> {
    sweep_points(cfg)
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let ens = load_point(cfg, pt, i == 0)?;
            point_empirics(cfg, pt, &ens, lp_value, i == 0)
        })
        .collect()
}

/// Writes `empirics.csv`, `detection.csv` and `empirics_summary.txt`;
/// returns the summary text.
pub fn cmd_empirics(cfg: &ExperimentConfig) -> Result<(Vec<PointEmpirics>, String)> {
    ensure_out(cfg)?;
    let lp = lp_report(cfg)?;
    let pts = empirics(cfg, lp.value)?;
    let mut w = CsvOut::create(
        &cfg.out.join("empirics.csv"),
        &describe(cfg, "empirics", None),
        &["point", "quantity", "k", "s", "value", "ci", "note"],
    )?;
    for pe in &pts {
        let label = pe.point.label();
        let mut put = |q: &str, k: Option<usize>, s: Option<usize>, v: f64, ci: Option<f64>, note: &str| {
            w.row([
                label.as_str(),
                q,
                &k.map_or("NA".into(), |k| k.to_string()),
                &s.map_or("NA".into(), |s| s.to_string()),
                &fmt_num(v),
                &fmt_opt(ci),
                note,
            ])
        };
        let g = &pe.gap;
        put("post_warmup_error_rate", None, None, pe.post_warmup_rate, None, "")?;
        put(
            "avg_cost",
            Some(0),
            None,
            g.avg_cost.mean,
            Some(g.avg_cost.half_width),
            "",
        )?;
        put("cost_gap", Some(0), None, g.cost_gap, None, "avg_cost - lp_value")?;
        put(
            "tail_cost",
            Some(0),
            None,
            g.tail_cost,
            None,
            &format!("slots {}..", g.tail_from),
        )?;
        for (k, a) in g.avg_penalty.iter().enumerate() {
            put("avg_penalty", Some(k + 1), None, a.mean, Some(a.half_width), "")?;
            put("excess", Some(k + 1), None, g.excess[k], None, "")?;
            put("tail_penalty", Some(k + 1), None, g.tail_penalty[k], None, "")?;
        }
        put("queue_violations", None, None, pe.queue_violations as f64, None, "")?;
        if let Some(mx) = &pe.mixing {
            let kn = format!(
                "pooled post-warmup slots; {} strategies, {} cells used, {} below floor",
                mx.kappa.strategies, mx.kappa.cells_used, mx.kappa.cells_excluded
            );
            match mx.kappa.value {
                Some(v) => put("kappa", None, None, v, None, &kn)?,
                None => put("kappa", None, None, f64::NAN, None, &format!("undefined; {kn}"))?,
            }
            for c in &mx.beta {
                match &c.estimate {
                    Ok(b) => put(
                        "beta1",
                        Some(c.k),
                        Some(c.s),
                        b.value,
                        Some(b.ci_half_width),
                        &format!(
                            "alpha {}; anchor {}; {} anchors used, {} skipped; min survivors {}",
                            mx.alpha,
                            b.anchor,
                            b.anchors_used.len(),
                            b.anchors_skipped.len(),
                            b.min_survivors
                        ),
                    )?,
                    Err(e) => put("beta1", Some(c.k), Some(c.s), f64::NAN, None, e)?,
                }
            }
        }
    }
    w.finish()?;
    write_detection(cfg, &pts)?;
    let summary = empirics_summary(cfg, &pts);
    std::fs::write(cfg.out.join("empirics_summary.txt"), &summary).map_err(|e| io_err(&cfg.out, e))?;
    Ok((pts, summary))
}

fn write_detection(cfg: &ExperimentConfig, pts: &[PointEmpirics]) -> Result<()> {
    let mut cols = vec!["t".to_string()];
    for p in pts {
        cols.push(format!("rate_{}", p.point.label()));
        cols.push(format!("ci_{}", p.point.label()));
    }
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut w = CsvOut::create(&cfg.out.join("detection.csv"), &describe(cfg, "detection", None), &cols)?;
    for t in 0..cfg.horizon {
        let mut row = vec![t.to_string()];
        for p in pts {
            row.push(fmt_num(p.rate[t]));
            row.push(fmt_num(binomial_half_width(p.rate[t], p.runs)));
        }
        w.row(&row)?;
    }
    w.finish()
}

fn empirics_summary(cfg: &ExperimentConfig, pts: &[PointEmpirics]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "empirics for {} ({} runs x {} slots, {})",
        cfg.name, cfg.runs, cfg.horizon, cfg.modes
    );
    for p in pts {
        let g = &p.gap;
        let _ = writeln!(
            s,
            "  {:<18} tail cost {:>10}  gap {:>10}  tail penalties [{}]  error rate {:>8}  queue violations {}",
            p.point.label(),
            fmt_num(g.tail_cost),
            fmt_num(g.tail_cost - g.lp_value),
            g.tail_penalty
                .iter()
                .map(|x| fmt_num(*x))
                .collect::<Vec<_>>()
                .join(", "),
            fmt_num(p.post_warmup_rate),
            p.queue_violations
        );
        if let Some(mx) = &p.mixing {
            let _ = writeln!(s, "  kappa_hat = {}", fmt_opt(mx.kappa.value));
            for c in &mx.beta {
                match &c.estimate {
                    Ok(b) => {
                        let _ = writeln!(
                            s,
                            "  beta1_hat(k={}, s={}) = {} +- {}",
                            c.k,
                            c.s,
                            fmt_num(b.value),
                            fmt_num(b.ci_half_width)
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(s, "  beta1_hat(k={}, s={}) unavailable: {e}", c.k, c.s);
                    }
                }
            }
        }
    }
    s
}

// ---------------------------------------------------------------- bounds

/// `P_e,up` for every slot of a point.
pub fn detection_bound(cfg: &ExperimentConfig, pt: &SweepPoint) -> Result<Vec<f64>> {
    let istar = cfg.covering.nearest_member(cfg.schedule.limit())?.0;
    let margins = divergence_margins(&cfg.schedule, &cfg.covering, istar, pt.delay, &pt.window, cfg.horizon)?;
    pe_series(
        &margins,
        pt.delay,
        &pt.window,
        cfg.covering.zeta(),
        cfg.covering.len(),
        cfg.modes.detection,
    )
}

/// The bound table of a point at `cfg.bound_grid()`.
///
/// `means` supplies `(1/t) Σ E p_k` for the concentration terms and `kappa`
/// the channel constant; without them those columns stay empty.
pub fn bound_table(
    cfg: &ExperimentConfig,
    pt: &SweepPoint,
    lp: &LpReport,
    means: Option<&EnsembleResult>,
    kappa: Option<f64>,
) -> Result<Vec<BoundReport>> {
    let horizon = cfg.horizon;
    let istar = lp.reference;
    let margins = divergence_margins(&cfg.schedule, &cfg.covering, istar, pt.delay, &pt.window, horizon)?;
    let zeta = cfg.covering.zeta();
    let m_delta = cfg.covering.len();
    let pe = pe_series(&margins, pt.delay, &pt.window, zeta, m_delta, cfg.modes.detection)?;
    let drift = drift_series(&cfg.schedule, horizon);
    let b = b_series(&cfg.model, &cfg.schedule, horizon)?;
    let cost = cfg.model.cost();
    let k_pen = cfg.model.penalties();
    let (c_hat, gap_delta) = lp.gap.as_ref().map_or((f64::NAN, f64::NAN), |g| (g.c_hat, g.delta_gap));
    let f = cfg.model.strategy_count();
    let omega = cfg.model.states().total();
    let mut cum = vec![0.0; k_pen + 1];
    let mut cum_t = 0;
    let mut out = Vec::new();
    for t in cfg.bound_grid().into_iter().filter(|&t| t >= 2 && t <= horizon) {
        let (alpha, u, v_blocks) = blocking(t);
        let d_min = margins[alpha..t]
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let s_t = if d_min.is_infinite() && margins[alpha..t].iter().any(Option::is_some) {
            0.0
        } else {
            let d = if d_min.is_finite() { d_min } else { 0.0 };
            s_t_delta(zeta, d, pt.window.min_over(alpha, t - 1), m_delta, cfg.modes.detection)?
        };
        let pe_sum: f64 = pe[..t].iter().sum();
        let pg = BoundInputs {
            t,
            v: pt.v,
            delay: pt.delay,
            c_init: cfg.c_init,
            c_hat,
            f,
            gap_delta,
            delta: cfg.covering.delta(),
            p_max: (0..=k_pen).map(|k| cost.p_max(k)).collect(),
            c: cost.constraints().to_vec(),
            drift: drift[..t].to_vec(),
            b: b[..t].to_vec(),
            pe: pe[..t].to_vec(),
        }
        .psi_q_gamma()
        .ok();
        let th = kappa.and_then(|kp| theta(kp, pt.delay).ok());
        let beta = kappa.and_then(|kp| beta_bound(u, pt.delay, kp, f, omega, k_pen).ok());
        let bstar = beta.map(|bb| beta_star(t, alpha, bb, s_t));
        let mut pac = vec![None; k_pen + 1];
        if let (Some(ens), Some(bb)) = (means, beta) {
            while cum_t < t {
                for (c, x) in cum.iter_mut().zip(ens.mean_p(cum_t)) {
                    *c += x;
                }
                cum_t += 1;
            }
            for (k, slot) in pac.iter_mut().enumerate() {
                let inp = PacInputs {
                    t,
                    alpha,
                    u,
                    v: v_blocks,
                    delta_p: cost.delta_p_max(k),
                    eps_k: cfg.epsilon,
                    c_k: if k == 0 { lp.value } else { cost.constraints()[k - 1] },
                    mean_k: cum[k] / t as f64,
                    beta: bb,
                    pe_sum,
                };
                *slot = pac_rhs(&inp, cfg.modes.pac_exponent).ok().map(|p| p.raw());
            }
        }
        let pac1 = pac[1..]
            .iter()
            .copied()
            .try_fold(None::<f64>, |acc, p| p.map(|x| Some(acc.map_or(x, |a: f64| a.max(x)))));
        let membership = |bs: Option<f64>| {
            bs.and_then(|bs| threshold_check(t, alpha, u, cfg.epsilon, cfg.gamma, bs, cost.delta_p_max(0)).ok())
        };
        out.push(BoundReport {
            t,
            alpha,
            u,
            v_blocks,
            pe_up: pe[t - 1],
            s_t,
            s_sum: s_sum_bound(t, alpha, s_t),
            pe_sum,
            jbar: pg.map_or(f64::NAN, |p| p.jbar),
            hbar: pg.map_or(f64::NAN, |p| p.hbar),
            psi: pg.map_or(f64::NAN, |p| p.psi),
            gamma: pg.map_or(f64::NAN, |p| p.gamma),
            q_up: pg.map_or(f64::NAN, |p| p.q_up),
            theta: th,
            beta,
            beta_star0: bstar,
            beta_star1: if k_pen > 0 { bstar } else { None },
            pac0: pac[0],
            pac1: pac1.flatten(),
            in_t0: membership(bstar),
            in_t1: if k_pen > 0 { membership(bstar) } else { None },
        });
    }
    Ok(out)
}

fn bound_row(r: &BoundReport) -> Vec<String> {
    vec![
        r.t.to_string(),
        r.alpha.to_string(),
        r.u.to_string(),
        r.v_blocks.to_string(),
        fmt_num(r.pe_up),
        fmt_num(clamp_prob(r.pe_up)),
        fmt_num(r.s_t),
        fmt_num(clamp_prob(r.s_t)),
        fmt_num(r.s_sum),
        fmt_num(r.pe_sum),
        fmt_num(r.jbar),
        fmt_num(r.hbar),
        fmt_num(r.psi),
        fmt_num(r.gamma),
        fmt_num(r.q_up),
        fmt_opt(r.theta),
        fmt_opt(r.beta),
        fmt_opt(r.beta_star0),
        fmt_opt(r.beta_star1),
        fmt_opt(r.pac0),
        fmt_opt(r.pac0.map(clamp_prob)),
        fmt_opt(r.pac1),
        fmt_opt(r.pac1.map(clamp_prob)),
        fmt_flag(r.in_t0),
        fmt_flag(r.in_t1),
    ]
}

/// κ to use in the bounds: configured, else estimated from the primary
/// traces when they exist.
fn kappa_for_bounds(cfg: &ExperimentConfig, mixing: Option<&MixingEstimates>) -> Option<f64> {
    cfg.kappa.or_else(|| mixing.and_then(|m| m.kappa.value))
}

/// Writes `bounds.csv` (primary point) and `pe.csv` (detection bound per
/// slot for the primary point and the window sweep).
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    ensure_out(cfg)?;
    let lp = lp_report(cfg)?;
    let primary = sweep_points(cfg).remove(0);
    let ens = if primary.traces_path(&cfg.out).exists() {
        Some(load_point(cfg, &primary, true)?)
    } else {
        log::warn!("no primary traces; bound columns needing ensemble means or an estimated κ are left empty");
        None
    };
    let mixing = match &ens {
        Some(e) => Some(mixing_estimates(cfg, &primary, e)?),
        None => None,
    };
    let table = bound_table(cfg, &primary, &lp, ens.as_ref(), kappa_for_bounds(cfg, mixing.as_ref()))?;
    write_bounds(cfg, &primary, &table)?;
    let mut pts = vec![primary];
    pts.extend(w_points(cfg));
    pts.dedup_by_key(|p| p.label());
    let series = pts
        .iter()
        .map(|p| detection_bound(cfg, p))
        .collect::<Result<Vec<_>>>()?;
    let mut cols = vec!["t".to_string()];
    cols.extend(pts.iter().map(|p| format!("pe_up_{}", p.label())));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut w = CsvOut::create(&cfg.out.join("pe.csv"), &describe(cfg, "pe", None), &cols)?;
    for t in 0..cfg.horizon {
        let mut row = vec![t.to_string()];
        row.extend(series.iter().map(|s| fmt_num(s[t])));
        w.row(&row)?;
    }
    w.finish()?;
    Ok(table)
}

fn write_bounds(cfg: &ExperimentConfig, pt: &SweepPoint, table: &[BoundReport]) -> Result<()> {
    let mut w = CsvOut::create(
        &cfg.out.join("bounds.csv"),
        &describe(cfg, "bounds", Some(pt)),
        BoundReport::COLUMNS,
    )?;
    for r in table {
        w.row(bound_row(r))?;
    }
    w.finish()
}

// ---------------------------------------------------------------- compare

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound's preconditions do not hold, so there is nothing to check.
    Inapplicable,
    /// An estimate needed for the check could not be formed.
    Unavailable,
    Info,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "true",
            Verdict::Fail => "false",
            Verdict::Inapplicable => "inapplicable",
            Verdict::Unavailable => "unavailable",
            Verdict::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    /// Acceptance criterion number, 0 for informational rows.
    pub criterion: u8,
    pub check: String,
    pub point: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub ci: Option<f64>,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub lp: LpReport,
    pub points: Vec<PointEmpirics>,
    pub bounds: Vec<BoundReport>,
    pub gap_property: GapPropertyReport,
}

impl CompareReport {
    pub fn criterion(&self, n: u8) -> Vec<&CompareRow> {
        self.rows.iter().filter(|r| r.criterion == n).collect()
    }

    /// No failed or unavailable row for criterion `n`.
    pub fn criterion_ok(&self, n: u8) -> bool {
        let rows = self.criterion(n);
        !rows.is_empty()
            && rows
                .iter()
                .all(|r| matches!(r.verdict, Verdict::Pass | Verdict::Inapplicable | Verdict::Info))
    }
}

struct Rows(Vec<CompareRow>);

impl Rows {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        criterion: u8,
        check: impl Into<String>,
        point: &str,
        value: f64,
        lower: Option<f64>,
        upper: Option<f64>,
        ci: Option<f64>,
        verdict: Verdict,
        note: impl Into<String>,
    ) {
        self.0.push(CompareRow {
            criterion,
            check: check.into(),
            point: point.into(),
            value,
            lower,
            upper,
            ci,
            verdict,
            note: note.into(),
        });
    }
}

/// Joins the LP, empirical estimates and bounds into one table of checks.
/// Needs the trace files of every sweep point.
pub fn compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    let lp = lp_report(cfg)?;
    let pts = empirics(cfg, lp.value)?;
    let primary = &pts[0];
    let label0 = primary.point.label();
    let mut rows = Rows(Vec::new());

    // 1: LP optimum
    let util = lp.utility();
    match cfg.reference_utility {
        Some(r) => rows.push(
            1,
            "lp_utility",
            "limit",
            util,
            Some(r - LP_TOLERANCE),
            Some(r + LP_TOLERANCE),
            None,
            Verdict::of((util - r).abs() <= LP_TOLERANCE),
            format!("reference {}", fmt_num(r)),
        ),
        None => rows.push(
            1,
            "lp_utility",
            "limit",
            util,
            None,
            None,
            None,
            Verdict::Info,
            "no reference optimum",
        ),
    }

    // 2: convergence at the primary point
    let target = cfg.reference_utility.unwrap_or(util);
    let tail_util = -primary.gap.tail_cost;
    rows.push(
        2,
        "tail_utility",
        &label0,
        tail_util,
        Some(target - UTILITY_BELOW),
        Some(target + UTILITY_ABOVE),
        None,
        Verdict::of(tail_util >= target - UTILITY_BELOW && tail_util <= target + UTILITY_ABOVE),
        format!("mean over slots {}..{}", primary.gap.tail_from, cfg.horizon),
    );
    for (k, (tp, ck)) in primary
        .gap
        .tail_penalty
        .iter()
        .zip(cfg.model.cost().constraints())
        .enumerate()
    {
        rows.push(
            2,
            format!("tail_penalty_{}", k + 1),
            &label0,
            *tp,
            None,
            Some(ck + POWER_SLACK),
            None,
            Verdict::of(*tp <= ck + POWER_SLACK),
            format!("budget {}", fmt_num(*ck)),
        );
    }

    // 3: V tradeoff
    let at_v = |v: f64| {
        pts.iter()
            .find(|p| p.point.v == v && p.point.delay == cfg.delay && p.point.window == cfg.window)
    };
    let mut vs = cfg.v_list.clone();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    for &v in &vs {
        if let Some(p) = at_v(v) {
            rows.push(
                3,
                "tail_gap",
                &p.point.label(),
                p.gap.tail_cost - lp.value,
                None,
                None,
                None,
                Verdict::Info,
                "tail cost - LP value",
            );
        }
    }
    match (vs.first().and_then(|&v| at_v(v)), vs.last().and_then(|&v| at_v(v))) {
        (Some(lo), Some(hi)) if vs.len() >= 2 => {
            let diff = (lo.gap.tail_cost - lp.value) - (hi.gap.tail_cost - lp.value);
            rows.push(
                3,
                "gap_shrinks_with_V",
                &format!("{} vs {}", lo.point.label(), hi.point.label()),
                diff,
                Some(0.0),
                None,
                None,
                Verdict::of(diff > 0.0),
                "gap(V_min) - gap(V_max), must be > 0",
            );
        }
        _ => rows.push(
            3,
            "gap_shrinks_with_V",
            "",
            f64::NAN,
            None,
            None,
            None,
            Verdict::Unavailable,
            "needs two V values",
        ),
    }

    // 4: queue invariant across all points
    let viol: usize = pts.iter().map(|p| p.queue_violations).sum();
    rows.push(
        4,
        "queue_violations",
        "all",
        viol as f64,
        None,
        Some(0.0),
        None,
        Verdict::of(viol == 0),
        format!("{} points x {} runs x {} slots", pts.len(), cfg.runs, cfg.horizon),
    );

    // 5: detection error against its bound
    let wpts = w_points(cfg);
    let mut common_rates = Vec::new();
    let from = cfg.delay + cfg.w_list.iter().copied().max().unwrap_or(0);
    for wp in &wpts {
        let Some(p) = pts.iter().find(|p| p.point == *wp) else {
            continue;
        };
        let pe = detection_bound(cfg, wp)?;
        let mut worst = f64::NEG_INFINITY;
        let mut bad = 0usize;
        let mut min_pe = f64::INFINITY;
        for t in (0..cfg.horizon).filter(|&t| wp.post_warmup(t)) {
            let slack = pe[t] + 3.0 * binomial_half_width(p.rate[t], p.runs) - p.rate[t];
            worst = worst.max(-slack);
            min_pe = min_pe.min(pe[t]);
            if slack < 0.0 {
                bad += 1;
            }
        }
        let label = wp.label();
        let vacuous = if min_pe >= 1.0 {
            format!("; bound >= 1 on every post-warmup slot (min {})", fmt_num(min_pe))
        } else {
            String::new()
        };
        rows.push(
            5,
            "rate_exceeds_bound_slots",
            &label,
            bad as f64,
            None,
            Some(0.0),
            None,
            Verdict::of(bad == 0),
            format!(
                "slots with rate > pe_up + 3 CI; worst margin {}; min pe_up {}{vacuous}",
                fmt_num(worst),
                fmt_num(min_pe)
            ),
        );
        rows.push(
            5,
            "post_warmup_error_rate",
            &label,
            p.post_warmup_rate,
            None,
            None,
            None,
            Verdict::Info,
            "",
        );
        let common: Vec<f64> = p.rate[from.min(cfg.horizon)..].to_vec();
        let mean = common.iter().sum::<f64>() / common.len().max(1) as f64;
        common_rates.push((label, mean));
    }
    for pair in common_rates.windows(2) {
        let diff = pair[0].1 - pair[1].1;
        rows.push(
            5,
            "rate_decreases_in_w",
            &format!("{} vs {}", pair[0].0, pair[1].0),
            diff,
            Some(0.0),
            None,
            None,
            Verdict::of(diff > 0.0),
            format!(
                "mean rate over slots {from}.. : {} then {}",
                fmt_num(pair[0].1),
                fmt_num(pair[1].1)
            ),
        );
    }
    if common_rates.len() < 2 {
        rows.push(
            5,
            "rate_decreases_in_w",
            "",
            f64::NAN,
            None,
            None,
            None,
            Verdict::Unavailable,
            "needs two window sizes",
        );
    }

    // 6: approximation gap on random instances
    let t1 = gap_property_check(100, cfg.seed, PiPlacement::Random, cfg.nu)?;
    rows.push(
        6,
        "gap_inequality_failures",
        "random",
        t1.failures.len() as f64,
        None,
        Some(0.0),
        None,
        Verdict::of(t1.passed()),
        format!("{} instances; min slack {}", t1.checked, fmt_num(t1.min_slack)),
    );

    // 7: mixing
    let mixing = primary.mixing.as_ref();
    let kappa = kappa_for_bounds(cfg, mixing);
    let primary_ens = load_point(cfg, &primary.point, false)?;
    let bounds = bound_table(cfg, &primary.point, &lp, Some(&primary_ens), kappa)?;
    drop(primary_ens);
    let kappa_note = match (cfg.kappa, mixing) {
        (Some(_), _) => "configured".to_string(),
        (None, Some(m)) => format!(
            "estimated; {} cells used, {} below floor {}",
            m.kappa.cells_used, m.kappa.cells_excluded, cfg.kappa_floor
        ),
        (None, None) => "unavailable".into(),
    };
    rows.push(
        7,
        "kappa",
        &label0,
        kappa.unwrap_or(f64::NAN),
        None,
        Some(3f64.ln()),
        None,
        Verdict::Info,
        kappa_note,
    );
    let applicable = kappa.map(|kp| theta(kp, primary.point.delay));
    let (s_lo, s_hi) = (
        cfg.s_list.iter().copied().min().unwrap_or(1),
        cfg.s_list.iter().copied().max().unwrap_or(1),
    );
    let f = cfg.model.strategy_count();
    let omega = cfg.model.states().total();
    let k_pen = cfg.model.penalties();
    for k in 0..=k_pen.min(1) {
        let cell = |s| mixing.and_then(|m| m.beta(k, s)).map(|c| &c.estimate);
        match (cell(s_hi), &applicable) {
            (_, None) => rows.push(
                7,
                format!("beta1_le_bound_k{k}"),
                &label0,
                f64::NAN,
                None,
                None,
                None,
                Verdict::Unavailable,
                "κ unavailable",
            ),
            (_, Some(Err(e))) => rows.push(
                7,
                format!("beta1_le_bound_k{k}"),
                &label0,
                cell(s_hi).and_then(|c| c.as_ref().ok()).map_or(f64::NAN, |b| b.value),
                None,
                None,
                None,
                Verdict::Inapplicable,
                format!("s = {s_hi}: {e}"),
            ),
            (Some(Ok(b)), Some(Ok(_))) => {
                let bound = beta_bound(s_hi, primary.point.delay, kappa.unwrap_or(0.0), f, omega, k_pen)?;
                rows.push(
                    7,
                    format!("beta1_le_bound_k{k}"),
                    &label0,
                    b.value,
                    None,
                    Some(bound + 3.0 * b.ci_half_width),
                    Some(b.ci_half_width),
                    Verdict::of(b.value <= bound + 3.0 * b.ci_half_width),
                    format!("s = {s_hi}; bound {}", fmt_num(bound)),
                );
            }
            (other, Some(Ok(_))) => rows.push(
                7,
                format!("beta1_le_bound_k{k}"),
                &label0,
                f64::NAN,
                None,
                None,
                None,
                Verdict::Unavailable,
                other
                    .and_then(|c| c.as_ref().err())
                    .cloned()
                    .unwrap_or_else(|| "no estimate".into()),
            ),
        }
        match (cell(s_lo), cell(s_hi)) {
            (Some(Ok(a)), Some(Ok(b))) if s_lo < s_hi => {
                let ci = a.ci_half_width.hypot(b.ci_half_width);
                rows.push(
                    7,
                    format!("beta1_decreases_k{k}"),
                    &label0,
                    b.value - a.value,
                    None,
                    Some(ci),
                    Some(ci),
                    Verdict::of(b.value - a.value <= ci),
                    format!(
                        "beta1(s={s_hi}) - beta1(s={s_lo}) = {} - {}",
                        fmt_num(b.value),
                        fmt_num(a.value)
                    ),
                );
            }
            (x, y) => {
                let why = [x, y]
                    .into_iter()
                    .flatten()
                    .find_map(|c| c.as_ref().err().cloned())
                    .unwrap_or_else(|| "needs two lags".into());
                rows.push(
                    7,
                    format!("beta1_decreases_k{k}"),
                    &label0,
                    f64::NAN,
                    None,
                    None,
                    None,
                    Verdict::Unavailable,
                    why,
                );
            }
        }
    }

    // informational bound values at the horizon
    if let Some(last) = bounds.last() {
        let lbl = format!("{label0} t={}", last.t);
        rows.push(0, "q_up", &lbl, last.q_up, None, None, None, Verdict::Info, "");
        rows.push(0, "psi", &lbl, last.psi, None, None, None, Verdict::Info, "");
        rows.push(0, "pe_sum", &lbl, last.pe_sum, None, None, None, Verdict::Info, "");
        rows.push(0, "s_sum_bound", &lbl, last.s_sum, None, None, None, Verdict::Info, "");
        rows.push(
            0,
            "pac0",
            &lbl,
            last.pac0.unwrap_or(f64::NAN),
            None,
            None,
            None,
            Verdict::Info,
            "raw",
        );
        rows.push(
            0,
            "pac1",
            &lbl,
            last.pac1.unwrap_or(f64::NAN),
            None,
            None,
            None,
            Verdict::Info,
            "raw",
        );
    }

    let rows = rows.0;
    let mut w = CsvOut::create(
        &cfg.out.join("compare.csv"),
        &describe(cfg, "compare", None),
        &[
            "criterion",
            "check",
            "point",
            "value",
            "lower",
            "upper",
            "ci",
            "pass",
            "mode",
            "note",
        ],
    )?;
    let mode = cfg.modes.to_string();
    for r in &rows {
        w.row([
            r.criterion.to_string(),
            r.check.clone(),
            r.point.clone(),
            fmt_num(r.value),
            fmt_opt(r.lower),
            fmt_opt(r.upper),
            fmt_opt(r.ci),
            r.verdict.as_str().to_string(),
            mode.clone(),
            r.note.clone(),
        ])?;
    }
    w.finish()?;
    Ok(CompareReport {
        rows,
        lp,
        points: pts,
        bounds,
        gap_property: t1,
    })
}

/// Writes `compare.csv`.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    ensure_out(cfg)?;
    compare(cfg)
}

/// Human-readable rendering of a comparison.
pub fn render_compare(rep: &CompareReport) -> String {
    let mut by: BTreeMap<u8, Vec<&CompareRow>> = BTreeMap::new();
    for r in &rep.rows {
        by.entry(r.criterion).or_default().push(r);
    }
    let mut s = String::new();
    for (c, rows) in by
        .iter()
        .filter(|(c, _)| **c > 0)
        .chain(by.iter().filter(|(c, _)| **c == 0))
    {
        let head = if *c == 0 {
            "info".to_string()
        } else {
            format!("criterion {c}")
        };
        let _ = writeln!(s, "{head}");
        for r in rows {
            let _ = writeln!(
                s,
                "  [{:<12}] {:<28} {:<22} value {:<16} {}",
                r.verdict.as_str(),
                r.check,
                r.point,
                fmt_num(r.value),
                r.note
            );
        }
    }
    s
}

/// Runs `lp`, `simulate`, `empirics`, `bounds` and `compare` in order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<CompareReport> {
    cmd_lp(cfg)?;
    cmd_simulate(cfg)?;
    cmd_empirics(cfg)?;
    cmd_bounds(cfg)?;
    cmd_compare(cfg)
}
