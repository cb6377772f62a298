//! Experiment configuration documents (JSON).
//!
//! A document either spells out the model or starts from a preset:
//!
//! ```json
//! { "preset": "sensor3", "V": 20, "runs": 200 }
//! ```
//!
//! Every problem found is reported, each with the line of the offending key
//! when it can be located.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::bounds::{BoundModes, DetectionExponent, PacExponent};
use crate::decision::{ActionModel, CostModel, DecisionModel};
use crate::error::{Error, Result};
use crate::preset;
use crate::prob::{CoveringSet, FiniteDistribution, NonstationarySchedule, ProductStateSpace};
use crate::sim::{SimConfig, WindowSchedule};

/// A fully validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: Arc<DecisionModel>,
    pub schedule: NonstationarySchedule,
    pub covering: CoveringSet,
    pub v: f64,
    pub v_list: Vec<f64>,
    pub delay: usize,
    pub d_list: Vec<usize>,
    pub window: WindowSchedule,
    pub w_list: Vec<usize>,
    pub s_list: Vec<usize>,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub modes: BoundModes,
    /// Initial Lyapunov cap `C`.
    pub c_init: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Channel constant for the mixing bounds; estimated when absent.
    pub kappa: Option<f64>,
    /// Slots at which the bound table is evaluated; empty means a default grid.
    pub bound_times: Vec<usize>,
    pub tail: usize,
    /// First slot `α` of the error-free conditioning window for `β̂₁`.
    pub beta_alpha: Option<usize>,
    pub beta_anchors: usize,
    pub beta_min_runs: usize,
    pub kappa_floor: usize,
    /// Reference optimum utility when the preset declares one.
    pub reference_utility: Option<f64>,
}

impl ExperimentConfig {
    pub fn sim_config(&self, v: f64, delay: usize, window: WindowSchedule) -> SimConfig {
        SimConfig {
            v,
            delay,
            window,
            horizon: self.horizon,
            seed: self.seed,
            schedule: self.schedule.clone(),
            covering: self.covering.clone(),
            model: self.model.clone(),
        }
    }

    pub fn primary_sim(&self) -> SimConfig {
        self.sim_config(self.v, self.delay, self.window.clone())
    }

    /// `α` for `β̂₁`: the configured value, else the later of the end of
    /// warmup for the widest window and the first slot where `π_t` is within
    /// `δ/2` of its limit.
    pub fn beta_alpha(&self) -> usize {
        if let Some(a) = self.beta_alpha {
            return a;
        }
        let w_max = self.w_list.iter().copied().max().unwrap_or(0).max(self.window.at(0));
        let settle = (0..self.horizon)
            .find(|&t| self.schedule.distance_to_limit(t) <= self.covering.delta() / 2.0)
            .unwrap_or(self.horizon);
        (self.delay + w_max).max(settle)
    }

    pub fn bound_grid(&self) -> Vec<usize> {
        if !self.bound_times.is_empty() {
            return self.bound_times.clone();
        }
        let mut g: Vec<usize> = crate::empirics::anchor_grid(1, self.horizon, 12);
        g.retain(|&t| t >= 2);
        g
    }
}

impl ExperimentConfig {
    /// The fully expanded document: parsing it back yields this
    /// configuration, minus the preset's reference optimum.
    pub fn to_json(&self) -> Value {
        let dist = |d: &FiniteDistribution| json!(d.probs());
        let cost = self.model.cost();
        let schedule = match &self.schedule {
            NonstationarySchedule::Piecewise { dists, .. } if dists.len() == 1 => {
                json!({"kind": "stationary", "pi": dist(&dists[0])})
            }
            NonstationarySchedule::Piecewise { dists, switch_times } => json!({
                "kind": "piecewise",
                "dists": dists.iter().map(dist).collect::<Vec<_>>(),
                "switch_times": switch_times,
            }),
            NonstationarySchedule::Geometric { limit, initial, rho } => json!({
                "kind": "geometric", "limit": dist(limit), "initial": dist(initial), "rho": rho,
            }),
        };
        let window = match &self.window {
            WindowSchedule::Constant { w } => json!({"kind": "constant", "w": w}),
            WindowSchedule::Sqrt { scale, floor } => json!({"kind": "sqrt", "scale": scale, "floor": floor}),
        };
        let modes = self.modes;
        json!({
            "name": self.name,
            "states": self.model.states().cardinalities(),
            "actions": self.model.actions().counts(),
            "cost": {
                "tables": (0..=cost.penalties()).map(|k| cost.table(k).to_vec()).collect::<Vec<_>>(),
                "c": cost.constraints(),
            },
            "schedule": schedule,
            "covering": {
                "members": self.covering.members().iter().map(dist).collect::<Vec<_>>(),
                "delta": self.covering.delta(),
                "alpha": self.covering.alpha_delta(),
                "beta": self.covering.beta_delta(),
            },
            "V": self.v,
            "V_list": self.v_list,
            "D": self.delay,
            "D_list": self.d_list,
            "window": window,
            "w_list": self.w_list,
            "s_list": self.s_list,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "out": self.out.display().to_string(),
            "mode": if modes.is_literal() { "literal" } else { "default" },
            "pac_exponent": match modes.pac_exponent { PacExponent::Printed => "printed", PacExponent::Strict => "strict" },
            "C": self.c_init,
            "nu": self.nu,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "bound_times": self.bound_times,
            "tail": self.tail,
            "beta_alpha": self.beta_alpha,
            "beta_anchors": self.beta_anchors,
            "beta_min_runs": self.beta_min_runs,
            "kappa_floor": self.kappa_floor,
        })
    }
}

/// One problem in a configuration document.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// All problems found in a document.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.len();
        writeln!(f, "{n} configuration problem{}:", if n == 1 { "" } else { "s" })?;
        for i in &self.0 {
            writeln!(f, "  {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string().trim_end().to_string())
    }
}

const TOP_KEYS: &[&str] = &[
    "name",
    "preset",
    "states",
    "actions",
    "cost",
    "schedule",
    "covering",
    "V",
    "V_list",
    "D",
    "D_list",
    "w",
    "window",
    "w_list",
    "s_list",
    "horizon",
    "runs",
    "seed",
    "out",
    "mode",
    "pac_exponent",
    "C",
    "nu",
    "epsilon",
    "gamma",
    "kappa",
    "bound_times",
    "tail",
    "beta_alpha",
    "beta_anchors",
    "beta_min_runs",
    "kappa_floor",
];
const COST_KEYS: &[&str] = &["tables", "c"];
const COVERING_KEYS: &[&str] = &["members", "delta", "alpha", "beta"];
const SCHEDULE_KEYS: &[&str] = &["kind", "pi", "limit", "initial", "rho", "dists", "switch_times"];
const WINDOW_KEYS: &[&str] = &["kind", "w", "scale", "floor"];

/// Closest known key, if any is plausibly meant.
pub fn suggest(key: &str, known: &[&str]) -> Option<String> {
    known
        .iter()
        .map(|k| (strsim::levenshtein(&key.to_lowercase(), &k.to_lowercase()), *k))
        .filter(|(d, k)| *d <= 2.max(k.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, k)| k.to_string())
}

struct Ctx<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl Ctx<'_> {
    fn line_of(&self, key: &str) -> Option<usize> {
        let needle = format!("\"{key}\"");
        self.text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
    }

    fn push(&mut self, key: &str, message: impl Into<String>) {
        let line = self.line_of(key);
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn check_keys(&mut self, obj: &Map<String, Value>, known: &[&str], scope: &str) {
        for k in obj.keys() {
            if !known.contains(&k.as_str()) {
                let hint = suggest(k, known)
                    .map(|s| format!(" (did you mean \"{s}\"?)"))
                    .unwrap_or_default();
                self.push(k, format!("unknown key \"{k}\"{scope}{hint}"));
            }
        }
    }

    fn number(&mut self, obj: &Map<String, Value>, key: &str) -> Option<f64> {
        let v = obj.get(key)?;
        match parse_real(v) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(key, format!("\"{key}\" must be a finite number"));
                None
            }
        }
    }

    fn count(&mut self, obj: &Map<String, Value>, key: &str) -> Option<usize> {
        let v = obj.get(key)?;
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.push(key, format!("\"{key}\" must be a non-negative integer"));
                None
            }
        }
    }

    fn counts(&mut self, obj: &Map<String, Value>, key: &str) -> Option<Vec<usize>> {
        let v = obj.get(key)?;
        let parsed = v.as_array().and_then(|a| {
            a.iter()
                .map(|x| x.as_u64().map(|u| u as usize))
                .collect::<Option<Vec<_>>>()
        });
        if parsed.is_none() {
            self.push(key, format!("\"{key}\" must be a list of non-negative integers"));
        }
        parsed
    }

    fn reals(&mut self, obj: &Map<String, Value>, key: &str) -> Option<Vec<f64>> {
        let v = obj.get(key)?;
        let parsed = v
            .as_array()
            .and_then(|a| a.iter().map(parse_real).collect::<Option<Vec<_>>>());
        if parsed.is_none() {
            self.push(key, format!("\"{key}\" must be a list of numbers"));
        }
        parsed
    }

    fn dist(&mut self, v: &Value, key: &str, name: &str) -> Option<FiniteDistribution> {
        let probs = v
            .as_array()
            .and_then(|a| a.iter().map(parse_real).collect::<Option<Vec<_>>>());
        let Some(probs) = probs else {
            self.push(key, format!("distribution `{name}` must be a list of probabilities"));
            return None;
        };
        match FiniteDistribution::named(name, probs) {
            Ok(d) => Some(d),
            Err(e) => {
                self.push(key, e.to_string());
                None
            }
        }
    }
}

/// Numbers, or decimal strings parsed with round-to-nearest.
fn parse_real(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        ConfigErrors(vec![ConfigIssue {
            line: Some(e.line()),
            message: format!("invalid JSON: {e}"),
        }])
    })?;
    let Some(obj) = root.as_object() else {
        return Err(ConfigErrors(vec![ConfigIssue {
            line: Some(1),
            message: "configuration must be a JSON object".into(),
        }]));
    };
    let mut cx = Ctx {
        text,
        issues: Vec::new(),
    };
    cx.check_keys(obj, TOP_KEYS, "");
    let cfg = build(&mut cx, obj);
    match cfg {
        Some(c) if cx.issues.is_empty() => Ok(c),
        _ => {
            if cx.issues.is_empty() {
                cx.issues.push(ConfigIssue {
                    line: None,
                    message: "configuration is incomplete".into(),
                });
            }
            Err(ConfigErrors(cx.issues))
        }
    }
}

/// Defaults for the sensor3 benchmark.
pub fn sensor3() -> Result<ExperimentConfig> {
    let members = preset::members()?;
    let schedule = preset::schedule(&members)?;
    let horizon = 5000;
    let delta = preset::covering_radius(&members, &schedule, horizon)?;
    Ok(ExperimentConfig {
        name: "sensor3".into(),
        model: Arc::new(preset::model()?),
        covering: CoveringSet::with_tight_support(members, delta)?,
        schedule,
        v: 20.0,
        v_list: vec![2.0, 5.0, 20.0],
        delay: 0,
        d_list: vec![0],
        window: WindowSchedule::constant(40),
        w_list: vec![10, 40],
        s_list: vec![5, 40],
        horizon,
        runs: 1000,
        seed: 1,
        out: PathBuf::from("out"),
        modes: BoundModes::default(),
        c_init: 0.0,
        nu: 0.01,
        epsilon: 0.05,
        gamma: 0.1,
        kappa: None,
        bound_times: Vec::new(),
        tail: 500,
        beta_alpha: Some(300),
        beta_anchors: 20,
        beta_min_runs: 100,
        kappa_floor: 50,
        reference_utility: Some(preset::OPT_UTILITY),
    })
}

pub fn preset_by_name(name: &str) -> Result<ExperimentConfig> {
    match name {
        "sensor3" => sensor3(),
        other => Err(Error::Config(format!(
            "unknown preset \"{other}\" (available: sensor3)"
        ))),
    }
}

fn build(cx: &mut Ctx<'_>, obj: &Map<String, Value>) -> Option<ExperimentConfig> {
    let base = match obj.get("preset") {
        Some(Value::String(name)) => match preset_by_name(name) {
            Ok(c) => Some(c),
            Err(e) => {
                cx.push("preset", e.to_string());
                return None;
            }
        },
        Some(_) => {
            cx.push("preset", "\"preset\" must be a string");
            return None;
        }
        None => None,
    };

    // model
    let states = cx.counts(obj, "states");
    let actions = cx.counts(obj, "actions");
    let model = match (&base, states, actions) {
        (_, Some(s), Some(a)) => model_from(cx, obj, s, a),
        (Some(b), None, None) => {
            if obj.contains_key("cost") {
                cx.push("cost", "\"cost\" needs \"states\" and \"actions\" alongside it");
            }
            Some(b.model.clone())
        }
        _ => {
            cx.push("states", "the model needs \"states\" and \"actions\" (or a \"preset\")");
            None
        }
    };

    let horizon = cx.count(obj, "horizon").or(base.as_ref().map(|b| b.horizon));
    let schedule = match obj.get("schedule") {
        Some(v) => schedule_from(cx, v),
        None => base.as_ref().map(|b| b.schedule.clone()),
    };
    if schedule.is_none() && !obj.contains_key("schedule") {
        cx.push("schedule", "missing \"schedule\"");
    }
    let covering = match obj.get("covering") {
        Some(v) => covering_from(cx, v),
        None => base.as_ref().map(|b| b.covering.clone()),
    };
    if covering.is_none() && !obj.contains_key("covering") {
        cx.push("covering", "missing \"covering\"");
    }

    let window = if let Some(w) = obj.get("window") {
        window_from(cx, w)
    } else if obj.contains_key("w") {
        cx.count(obj, "w").map(WindowSchedule::constant)
    } else {
        Some(base.as_ref().map_or(WindowSchedule::constant(40), |b| b.window.clone()))
    };
    if let Some(w) = &window {
        if let Err(e) = w.validate() {
            cx.push("w", e.to_string());
        }
    }

    let def = base.clone();
    let get = |f: fn(&ExperimentConfig) -> f64, fallback: f64| def.as_ref().map_or(fallback, f);

    let v = cx.number(obj, "V").unwrap_or(get(|b| b.v, 1.0));
    let v_list = cx
        .reals(obj, "V_list")
        .unwrap_or_else(|| def.as_ref().map_or(vec![v], |b| b.v_list.clone()));
    let delay = cx.count(obj, "D").unwrap_or(def.as_ref().map_or(0, |b| b.delay));
    let d_list = cx
        .counts(obj, "D_list")
        .unwrap_or_else(|| def.as_ref().map_or(vec![delay], |b| b.d_list.clone()));
    let w_list = cx
        .counts(obj, "w_list")
        .unwrap_or_else(|| def.as_ref().map_or(vec![], |b| b.w_list.clone()));
    let s_list = cx
        .counts(obj, "s_list")
        .unwrap_or_else(|| def.as_ref().map_or(vec![1], |b| b.s_list.clone()));
    let runs = cx.count(obj, "runs").unwrap_or(def.as_ref().map_or(100, |b| b.runs));
    let seed = obj.get("seed").map_or(def.as_ref().map_or(1, |b| b.seed), |s| {
        s.as_u64().unwrap_or_else(|| {
            cx.push("seed", "\"seed\" must be a non-negative integer");
            0
        })
    });
    let out = match obj.get("out") {
        Some(Value::String(s)) => PathBuf::from(s),
        Some(_) => {
            cx.push("out", "\"out\" must be a path string");
            PathBuf::new()
        }
        None => def.as_ref().map_or(PathBuf::from("out"), |b| b.out.clone()),
    };
    let mut modes = def.as_ref().map_or(BoundModes::default(), |b| b.modes);
    match obj.get("mode").map(|m| m.as_str()) {
        None => {}
        Some(Some("default")) => modes.detection = DetectionExponent::Hoeffding,
        Some(Some("literal")) => modes.detection = DetectionExponent::Literal,
        Some(_) => cx.push("mode", "\"mode\" must be \"default\" or \"literal\""),
    }
    match obj.get("pac_exponent").map(|m| m.as_str()) {
        None => {}
        Some(Some("printed")) => modes.pac_exponent = PacExponent::Printed,
        Some(Some("strict")) => modes.pac_exponent = PacExponent::Strict,
        Some(_) => cx.push("pac_exponent", "\"pac_exponent\" must be \"printed\" or \"strict\""),
    }
    let c_init = cx.number(obj, "C").unwrap_or(get(|b| b.c_init, 0.0));
    let nu = cx.number(obj, "nu").unwrap_or(get(|b| b.nu, 0.01));
    let epsilon = cx.number(obj, "epsilon").unwrap_or(get(|b| b.epsilon, 0.05));
    let gamma = cx.number(obj, "gamma").unwrap_or(get(|b| b.gamma, 0.1));
    let kappa = match obj.get("kappa") {
        None => def.as_ref().and_then(|b| b.kappa),
        Some(Value::Null) => None,
        Some(_) => cx.number(obj, "kappa"),
    };
    let bound_times = cx
        .counts(obj, "bound_times")
        .unwrap_or_else(|| def.as_ref().map_or(vec![], |b| b.bound_times.clone()));
    let tail = cx.count(obj, "tail").unwrap_or(def.as_ref().map_or(500, |b| b.tail));
    let beta_alpha = match obj.get("beta_alpha") {
        None => def.as_ref().and_then(|b| b.beta_alpha),
        Some(Value::Null) => None,
        Some(_) => cx.count(obj, "beta_alpha"),
    };
    let beta_anchors = cx
        .count(obj, "beta_anchors")
        .unwrap_or(def.as_ref().map_or(20, |b| b.beta_anchors));
    let beta_min_runs = cx
        .count(obj, "beta_min_runs")
        .unwrap_or(def.as_ref().map_or(100, |b| b.beta_min_runs));
    let kappa_floor = cx
        .count(obj, "kappa_floor")
        .unwrap_or(def.as_ref().map_or(50, |b| b.kappa_floor));
    let name = match obj.get("name") {
        Some(Value::String(s)) => s.clone(),
        _ => def.as_ref().map_or("custom".into(), |b| b.name.clone()),
    };

    // range checks
    if !(v >= 0.0) {
        cx.push("V", format!("\"V\" = {v} must be >= 0"));
    }
    if v_list.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        cx.push("V_list", "\"V_list\" entries must be finite and >= 0");
    }
    if runs == 0 {
        cx.push("runs", "\"runs\" must be >= 1");
    }
    if w_list.contains(&0) {
        cx.push("w_list", "\"w_list\" entries must be >= 1");
    }
    if !(nu > 0.0) {
        cx.push("nu", format!("\"nu\" = {nu} must be positive"));
    }
    if !(epsilon > 0.0) {
        cx.push("epsilon", format!("\"epsilon\" = {epsilon} must be positive"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        cx.push("gamma", format!("\"gamma\" = {gamma} must lie in (0, 1)"));
    }
    if kappa.is_some_and(|k| !(k >= 0.0)) {
        cx.push("kappa", "\"kappa\" must be >= 0");
    }
    if c_init < 0.0 {
        cx.push("C", "\"C\" must be >= 0");
    }
    let horizon = horizon.unwrap_or(1000);
    if horizon == 0 {
        cx.push("horizon", "\"horizon\" must be >= 1");
    }

    let (model, schedule, covering, window) = (model?, schedule?, covering?, window?);
    let omega = model.states().total();
    if schedule.outcomes() != omega {
        cx.push(
            "schedule",
            format!(
                "schedule distributions have {} outcomes, the state space has {omega}",
                schedule.outcomes()
            ),
        );
    }
    if covering.outcomes() != omega {
        cx.push(
            "covering",
            format!(
                "covering members have {} outcomes, the state space has {omega}",
                covering.outcomes()
            ),
        );
    }
    let reference_utility = base.as_ref().and_then(|b| {
        let same_model = !obj.contains_key("states") && !obj.contains_key("schedule");
        if same_model {
            b.reference_utility
        } else {
            None
        }
    });
    Some(ExperimentConfig {
        name,
        model,
        schedule,
        covering,
        v,
        v_list,
        delay,
        d_list,
        window,
        w_list,
        s_list,
        horizon,
        runs,
        seed,
        out,
        modes,
        c_init,
        nu,
        epsilon,
        gamma,
        kappa,
        bound_times,
        tail,
        beta_alpha,
        beta_anchors,
        beta_min_runs,
        kappa_floor,
        reference_utility,
    })
}

fn model_from(
    cx: &mut Ctx<'_>,
    obj: &Map<String, Value>,
    states: Vec<usize>,
    actions: Vec<usize>,
) -> Option<Arc<DecisionModel>> {
    let Some(cost) = obj.get("cost").and_then(Value::as_object) else {
        cx.push("cost", "missing \"cost\" object with \"tables\" and \"c\"");
        return None;
    };
    cx.check_keys(cost, COST_KEYS, " in \"cost\"");
    let sp = ProductStateSpace::new(states)
        .map_err(|e| cx.push("states", e.to_string()))
        .ok();
    let ap = ActionModel::new(actions)
        .map_err(|e| cx.push("actions", e.to_string()))
        .ok();
    let c = cx.reals(cost, "c").unwrap_or_default();
    let tables: Option<Vec<Vec<f64>>> = cost.get("tables").and_then(Value::as_array).and_then(|rows| {
        rows.iter()
            .map(|r| {
                r.as_array()
                    .and_then(|a| a.iter().map(parse_real).collect::<Option<Vec<_>>>())
            })
            .collect()
    });
    let Some(tables) = tables else {
        cx.push("tables", "\"cost.tables\" must be a list of numeric tables");
        return None;
    };
    let (sp, ap) = (sp?, ap?);
    let built = CostModel::new(ap.total(), sp.total(), tables, c).and_then(|cm| DecisionModel::new(ap, sp, cm));
    match built {
        Ok(m) => Some(Arc::new(m)),
        Err(e) => {
            cx.push("cost", e.to_string());
            None
        }
    }
}

fn schedule_from(cx: &mut Ctx<'_>, v: &Value) -> Option<NonstationarySchedule> {
    let Some(obj) = v.as_object() else {
        cx.push("schedule", "\"schedule\" must be an object");
        return None;
    };
    cx.check_keys(obj, SCHEDULE_KEYS, " in \"schedule\"");
    let kind = obj.get("kind").and_then(Value::as_str).unwrap_or("");
    let made = match kind {
        "stationary" => {
            let pi = obj.get("pi").and_then(|p| cx.dist(p, "pi", "schedule.pi"));
            pi.map(|p| Ok(NonstationarySchedule::stationary(p)))
        }
        "geometric" => {
            let limit = obj.get("limit").and_then(|p| cx.dist(p, "limit", "schedule.limit"));
            let initial = obj
                .get("initial")
                .and_then(|p| cx.dist(p, "initial", "schedule.initial"));
            let rho = cx.number(obj, "rho");
            match (limit, initial, rho) {
                (Some(l), Some(i), Some(r)) => Some(NonstationarySchedule::geometric(l, i, r)),
                _ => {
                    cx.push(
                        "schedule",
                        "geometric schedule needs \"limit\", \"initial\" and \"rho\"",
                    );
                    None
                }
            }
        }
        "piecewise" => {
            let dists: Option<Vec<FiniteDistribution>> = obj.get("dists").and_then(Value::as_array).map(|a| {
                a.iter()
                    .enumerate()
                    .filter_map(|(i, d)| cx.dist(d, "dists", &format!("schedule.dists[{i}]")))
                    .collect()
            });
            let switches = cx.counts(obj, "switch_times").unwrap_or_default();
            dists.map(|d| NonstationarySchedule::piecewise(d, switches))
        }
        other => {
            cx.push(
                "kind",
                format!("schedule kind \"{other}\" is not one of stationary, geometric, piecewise"),
            );
            None
        }
    };
    match made? {
        Ok(s) => Some(s),
        Err(e) => {
            cx.push("schedule", e.to_string());
            None
        }
    }
}

fn covering_from(cx: &mut Ctx<'_>, v: &Value) -> Option<CoveringSet> {
    let Some(obj) = v.as_object() else {
        cx.push("covering", "\"covering\" must be an object");
        return None;
    };
    cx.check_keys(obj, COVERING_KEYS, " in \"covering\"");
    let members: Vec<FiniteDistribution> = obj
        .get("members")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .enumerate()
                .filter_map(|(i, d)| cx.dist(d, "members", &format!("covering.members[{i}]")))
                .collect()
        })
        .unwrap_or_default();
    let delta = cx.number(obj, "delta");
    let alpha = cx.number(obj, "alpha");
    let beta = cx.number(obj, "beta");
    let Some(delta) = delta else {
        cx.push("covering", "covering needs a radius \"delta\"");
        return None;
    };
    if members.is_empty() {
        cx.push("members", "covering needs at least one valid member");
        return None;
    }
    let made = match (alpha, beta) {
        (Some(a), Some(b)) => CoveringSet::new(members, delta, a, b),
        (None, None) => CoveringSet::with_tight_support(members, delta),
        _ => {
            cx.push("covering", "give both \"alpha\" and \"beta\" or neither");
            return None;
        }
    };
    made.map_err(|e| cx.push("covering", e.to_string())).ok()
}

fn window_from(cx: &mut Ctx<'_>, v: &Value) -> Option<WindowSchedule> {
    let Some(obj) = v.as_object() else {
        cx.push("window", "\"window\" must be an object");
        return None;
    };
    cx.check_keys(obj, WINDOW_KEYS, " in \"window\"");
    match obj.get("kind").and_then(Value::as_str) {
        Some("constant") => cx.count(obj, "w").map(WindowSchedule::constant),
        Some("sqrt") => {
            let scale = cx.number(obj, "scale");
            let floor = cx.count(obj, "floor");
            match (scale, floor) {
                (Some(scale), Some(floor)) => Some(WindowSchedule::Sqrt { scale, floor }),
                _ => {
                    cx.push("window", "sqrt window needs \"scale\" and \"floor\"");
                    None
                }
            }
        }
        _ => {
            cx.push("window", "window kind must be \"constant\" or \"sqrt\"");
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_reference_expands() {
        let c = parse_config(r#"{"preset": "sensor3"}"#).unwrap();
        assert_eq!(c.model.strategy_count(), 4096);
        assert_eq!(c.covering.len(), 8);
        assert_eq!(c.window, WindowSchedule::constant(40));
        assert_eq!((c.delay, c.horizon, c.runs, c.v), (0, 5000, 1000, 20.0));
        assert_eq!(c.v_list, vec![2.0, 5.0, 20.0]);
        assert_eq!(c.schedule.limit().get(0), 0.001);
    }

    #[test]
    fn overrides_apply() {
        let c = parse_config(r#"{"preset": "sensor3", "V": 5, "runs": 3, "mode": "literal", "w": 10}"#).unwrap();
        assert_eq!((c.v, c.runs), (5.0, 3));
        assert!(c.modes.is_literal());
        assert_eq!(c.window, WindowSchedule::constant(10));
    }

    #[test]
    fn unknown_key_gets_suggestion() {
        let text = "{\n  \"preset\": \"sensor3\",\n  \"Vee\": 3\n}";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].line, Some(3));
        assert!(e.0[0].message.contains("did you mean \"V\""), "{}", e.0[0].message);
    }

    #[test]
    fn bad_distribution_is_named() {
        let text = r#"{
  "states": [2], "actions": [1],
  "cost": {"tables": [[0.0, 1.0]], "c": []},
  "schedule": {"kind": "stationary", "pi": ["0.5", "0.49"]},
  "covering": {"members": [[0.5, 0.5]], "delta": 0.1}
}"#;
        let e = parse_config(text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("schedule.pi"), "{msg}");
        assert!(msg.contains("sum to 0.99"), "{msg}");
        assert_eq!(e.0[0].line, Some(4));
    }

    #[test]
    fn all_errors_reported() {
        let text = r#"{"preset": "sensor3", "runs": 0, "gamma": 2, "Vee": 1, "horizn": 4}"#;
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.0.len(), 4, "{e}");
        assert!(e.to_string().contains("did you mean \"horizon\""));
    }

    #[test]
    fn dense_model_round_trip() {
        let text = r#"{
  "states": [2], "actions": [2],
  "cost": {"tables": [[0, 0, -1, -0.5], [0, 0, 1, 1]], "c": ["0.25"]},
  "schedule": {"kind": "geometric", "limit": [0.4, 0.6], "initial": [0.9, 0.1], "rho": 0.9},
  "covering": {"members": [[0.4, 0.6], [0.9, 0.1]], "delta": 0.6},
  "V": 3, "horizon": 50, "runs": 2, "seed": 4, "window": {"kind": "sqrt", "scale": 1.0, "floor": 2}
}"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.model.strategy_count(), 4);
        assert_eq!(c.model.cost().constraints(), &[0.25]);
        assert_eq!(c.window, WindowSchedule::Sqrt { scale: 1.0, floor: 2 });
        assert_eq!(c.reference_utility, None);
        assert!(parse_config("{ nope").unwrap_err().0[0].line.is_some());
        assert!(parse_config(r#"{"preset": "sensor4"}"#).is_err());
        let back = parse_config(&c.to_json().to_string()).unwrap();
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn expanded_preset_parses_back() {
        let c = sensor3().unwrap();
        let text = serde_json::to_string_pretty(&c.to_json()).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back.to_json(), c.to_json());
        assert_eq!(back.schedule, c.schedule);
        assert_eq!(back.covering.members(), c.covering.members());
        assert_eq!(back.model.cost().table(1), c.model.cost().table(1));
    }
}
