//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Every
//! key must be known and may appear once. Numbers accept scientific notation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::{logspace, SolverChoice, SweepParameter, TimeGrid};
use crate::hilbert::{MachineParams, MachineSpec};

use super::CliError;

/// Every key a config file may contain, in canonical order.
pub const KEYS: [&str; 24] = [
    "label",
    "kind",
    "E_C",
    "E_H",
    "T_C",
    "T_R",
    "T_H",
    "p_C",
    "p_R",
    "p_H",
    "g",
    "grid",
    "t_first",
    "t_final",
    "n_samples",
    "t_max",
    "sweep_parameter",
    "sweep_values",
    "variants",
    "solver",
    "dt",
    "max_steps",
    "out_dir",
    "fit",
];

const MACHINE_KEYS: [&str; 9] = ["E_C", "E_H", "T_C", "T_R", "T_H", "p_C", "p_R", "p_H", "g"];
const REQUIRED: [&str; 5] = ["kind", "p_C", "p_R", "p_H", "g"];

/// Horizon of the transient-minimum search when not configured and the run
/// has no time grid of its own.
pub const DEFAULT_T_MAX: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Timeseries,
    Sweep,
    Spectrum,
    Summary,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Timeseries => "timeseries",
            RunKind::Sweep => "sweep",
            RunKind::Spectrum => "spectrum",
            RunKind::Summary => "summary",
        }
    }
}

impl FromStr for RunKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [RunKind::Timeseries, RunKind::Sweep, RunKind::Spectrum, RunKind::Summary]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind '{s}' (expected timeseries, sweep, spectrum or summary)"))
    }
}

/// A named set of machine-parameter overrides, run as an extra sweep series.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub overrides: Vec<(String, f64)>,
}

impl Variant {
    pub fn label(&self) -> String {
        self.overrides
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_float(*v)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn apply(&self, base: &MachineParams) -> MachineParams {
        let mut p = *base;
        for (k, v) in &self.overrides {
            set_machine_key(&mut p, k, *v);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    /// The value list as written, echoed back in outputs.
    pub values_text: String,
    pub values: Vec<f64>,
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub kind: RunKind,
    pub machine: MachineParams,
    pub grid: Option<TimeGrid>,
    pub t_max: Option<f64>,
    pub sweep: Option<SweepConfig>,
    pub solver: SolverChoice,
    pub dt: Option<f64>,
    pub max_steps: Option<u64>,
    pub out_dir: PathBuf,
    /// Whether to fit the long-time decay of the trace distance.
    pub fit: bool,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

fn set_machine_key(p: &mut MachineParams, key: &str, value: f64) -> bool {
    let slot = match key {
        "E_C" => &mut p.e_c,
        "E_H" => &mut p.e_h,
        "T_C" => &mut p.t_c,
        "T_R" => &mut p.t_r,
        "T_H" => &mut p.t_h,
        "p_C" => &mut p.p_c,
        "p_R" => &mut p.p_r,
        "p_H" => &mut p.p_h,
        "g" => &mut p.g,
        _ => return false,
    };
    *slot = value;
    true
}

fn machine_value(p: &MachineParams, key: &str) -> f64 {
    match key {
        "E_C" => p.e_c,
        "E_H" => p.e_h,
        "T_C" => p.t_c,
        "T_R" => p.t_r,
        "T_H" => p.t_h,
        "p_C" => p.p_c,
        "p_R" => p.p_r,
        "p_H" => p.p_h,
        _ => p.g,
    }
}

fn parse_float(key: &str, text: &str) -> Result<f64, String> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("{key}: '{text}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{key}: value must be finite"));
    }
    Ok(v)
}

fn parse_count(key: &str, text: &str) -> Result<u64, String> {
    let text = text.trim();
    if let Ok(n) = text.parse::<u64>() {
        return Ok(n);
    }
    // Allow integral scientific notation such as 1e6.
    let v = parse_float(key, text)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("{key}: '{text}' is not a non-negative integer"))
    }
}

/// `logspace(a, b, n)`, `linspace(a, b, n)` or a comma-separated list.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let t = text.trim();
    for (name, log) in [("logspace", true), ("linspace", false)] {
        if let Some(inner) = t.strip_prefix(name) {
            let inner = inner
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| format!("sweep_values: expected {name}(start, stop, count)"))?;
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 3 {
                return Err(format!("sweep_values: {name} takes three arguments"));
            }
            let a = parse_float("sweep_values", parts[0])?;
            let b = parse_float("sweep_values", parts[1])?;
            let n = parse_count("sweep_values", parts[2])? as usize;
            if n == 0 {
                return Err("sweep_values: count must be positive".into());
            }
            return Ok(if log {
                logspace(a, b, n)
            } else if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            });
        }
    }
    let values = t
        .split(',')
        .map(|s| parse_float("sweep_values", s))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("sweep_values: empty list".into());
    }
    Ok(values)
}

/// `key=value,key=value; key=value`: one variant per `;`-separated group.
pub fn parse_variants(text: &str) -> Result<Vec<Variant>, String> {
    let mut out = Vec::new();
    for group in text.split(';').map(str::trim).filter(|g| !g.is_empty()) {
        let mut overrides = Vec::new();
        for item in group.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("variants: expected key=value, got '{}'", item.trim()))?;
            let k = k.trim();
            if !MACHINE_KEYS.contains(&k) {
                return Err(format!("variants: '{k}' is not a machine parameter"));
            }
            if overrides.iter().any(|(seen, _): &(String, f64)| seen == k) {
                return Err(format!("variants: '{k}' repeated in one variant"));
            }
            overrides.push((k.to_string(), parse_float(k, v)?));
        }
        out.push(Variant { overrides });
    }
    Ok(out)
}

impl RunConfig {
    /// Parses and validates a config file's contents.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| CliError::Config(format!("line {}: unknown key '{key}'", n + 1)))?;
            if entries.insert(known, value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", n + 1)));
            }
        }
        Self::from_entries(&entries).map_err(CliError::Config)
    }

    fn from_entries(e: &BTreeMap<&str, String>) -> Result<Self, String> {
        for key in REQUIRED {
            if !e.contains_key(key) {
                return Err(format!("missing required key '{key}'"));
            }
        }
        let float = |k: &str| e.get(k).map(|v| parse_float(k, v)).transpose();
        let kind: RunKind = e["kind"].parse()?;

        let mut machine = MachineParams::reference(0.0, 0.0, 0.0, 0.0);
        for key in MACHINE_KEYS {
            if let Some(v) = float(key)? {
                set_machine_key(&mut machine, key, v);
            }
        }
        MachineSpec::new(machine).map_err(|err| err.to_string())?;

        let t_final = float("t_final")?;
        let t_first = float("t_first")?;
        let n_samples = e.get("n_samples").map(|v| parse_count("n_samples", v)).transpose()?;
        let grid = match (e.get("grid").map(String::as_str), kind) {
            (None, RunKind::Timeseries) => return Err("timeseries runs need 'grid' (linear or log)".into()),
            (None, _) => {
                if t_final.is_some() || t_first.is_some() || n_samples.is_some() {
                    return Err("'t_first', 't_final' and 'n_samples' require 'grid'".into());
                }
                None
            }
            (Some(g), _) => {
                let t_final = t_final.ok_or("grid needs 't_final'")?;
                let samples = n_samples.ok_or("grid needs 'n_samples'")? as usize;
                let grid = match g {
                    "linear" => {
                        if t_first.is_some() {
                            return Err("'t_first' only applies to log grids".into());
                        }
                        TimeGrid::Linear { t_final, samples }
                    }
                    "log" => TimeGrid::Log {
                        t_first: t_first.ok_or("log grid needs 't_first'")?,
                        t_final,
                        samples,
                    },
                    other => return Err(format!("unknown grid '{other}' (expected linear or log)")),
                };
                grid.points().map_err(|err| err.to_string())?;
                Some(grid)
            }
        };

        let t_max = float("t_max")?;
        if let Some(t) = t_max {
            if !(t > 0.0) {
                return Err("t_max must be positive".into());
            }
        }

        let sweep = match (kind, e.get("sweep_parameter"), e.get("sweep_values")) {
            (RunKind::Sweep, Some(p), Some(v)) => Some(SweepConfig {
                parameter: p.parse().map_err(|err: crate::Error| err.to_string())?,
                values_text: v.clone(),
                values: parse_values(v)?,
                variants: e
                    .get("variants")
                    .map(|s| parse_variants(s))
                    .transpose()?
                    .unwrap_or_default(),
            }),
            (RunKind::Sweep, _, _) => return Err("sweep runs need 'sweep_parameter' and 'sweep_values'".into()),
            (_, None, None) if !e.contains_key("variants") => None,
            _ => return Err("'sweep_parameter', 'sweep_values' and 'variants' only apply to sweep runs".into()),
        };

        if let Some(sw) = &sweep {
            for v in &sw.variants {
                MachineSpec::new(v.apply(&machine)).map_err(|err| format!("variant {}: {err}", v.label()))?;
            }
        }

        let solver = match e.get("solver") {
            Some(s) => s.parse().map_err(|err: crate::Error| err.to_string())?,
            None => SolverChoice::Auto,
        };
        let dt = float("dt")?;
        if let Some(dt) = dt {
            if !(dt > 0.0) {
                return Err("dt must be positive".into());
            }
        }
        let max_steps = e.get("max_steps").map(|v| parse_count("max_steps", v)).transpose()?;
        let fit = match e.get("fit").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => return Err(format!("fit: expected true or false, got '{other}'")),
        };
        if fit && kind != RunKind::Timeseries {
            return Err("'fit' only applies to timeseries runs".into());
        }
        let label = e.get("label").cloned().unwrap_or_else(|| kind.name().to_string());
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(format!(
                "label '{label}' must be non-empty ASCII letters, digits, '_' or '-'"
            ));
        }

        Ok(RunConfig {
            label,
            kind,
            machine,
            grid,
            t_max,
            sweep,
            solver,
            dt,
            max_steps,
            out_dir: PathBuf::from(e.get("out_dir").cloned().unwrap_or_else(|| ".".into())),
            fit,
        })
    }

    pub fn spec(&self) -> MachineSpec {
        // Validated in `parse`; presets are checked by their own tests.
        MachineSpec::new(self.machine).expect("run config holds a valid machine")
    }

    /// Horizon of the transient-minimum search.
    pub fn search_horizon(&self) -> f64 {
        match (self.t_max, self.grid) {
            (Some(t), _) => t,
            (None, Some(TimeGrid::Linear { t_final, .. } | TimeGrid::Log { t_final, .. })) => t_final,
            (None, None) => DEFAULT_T_MAX,
        }
    }

    /// Canonical `(key, value)` pairs; parsing [`RunConfig::render`] gives
    /// back an equal config.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("label", self.label.clone()), ("kind", self.kind.name().to_string())];
        for key in MACHINE_KEYS {
            out.push((key, fmt_float(machine_value(&self.machine, key))));
        }
        match self.grid {
            Some(TimeGrid::Linear { t_final, samples }) => {
                out.push(("grid", "linear".into()));
                out.push(("t_final", fmt_float(t_final)));
                out.push(("n_samples", samples.to_string()));
            }
            Some(TimeGrid::Log {
                t_first,
                t_final,
                samples,
            }) => {
                out.push(("grid", "log".into()));
                out.push(("t_first", fmt_float(t_first)));
                out.push(("t_final", fmt_float(t_final)));
                out.push(("n_samples", samples.to_string()));
            }
            None => {}
        }
        if let Some(t) = self.t_max {
            out.push(("t_max", fmt_float(t)));
        }
        if let Some(s) = &self.sweep {
            out.push(("sweep_parameter", s.parameter.name().to_string()));
            out.push(("sweep_values", s.values_text.clone()));
            if !s.variants.is_empty() {
                out.push((
                    "variants",
                    s.variants.iter().map(Variant::label).collect::<Vec<_>>().join("; "),
                ));
            }
        }
        out.push(("solver", self.solver.to_string()));
        if let Some(dt) = self.dt {
            out.push(("dt", fmt_float(dt)));
        }
        if let Some(n) = self.max_steps {
            out.push(("max_steps", n.to_string()));
        }
        out.push(("out_dir", self.out_dir.display().to_string()));
        if self.fit {
            out.push(("fit", "true".into()));
        }
        out
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
