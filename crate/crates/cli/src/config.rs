//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key has a kind and
//! either a default or is required. Overrides given as `key=value` replace
//! file values. [`Config::canonical`] prints all keys sorted, one per line,
//! and parses back to the same configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use hmfdamp::damping::DampingModel;
use hmfdamp::dynamics::{EtaSpec, Perturbation, RunConfig, SchemeSpec, SplittingVariant};
use hmfdamp::spectral::{PhaseGrid, WeightedNormSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Line in the config file; `None` for overrides and cross-key checks.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// Integer >= 1.
    Count,
    /// Integer >= 0.
    Index,
    Positive,
    NonNegative,
    Flag,
    Choice(&'static [&'static str]),
    Path,
    /// Comma-separated nonnegative reals, possibly empty.
    Times,
    /// Comma-separated positive reals.
    Steps,
    /// `a, b` with `0 <= a < b`.
    Window,
    /// Positive real or `auto`.
    AutoPositive,
    Variants,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Real(f64),
    Flag(bool),
    Text(String),
    Reals(Vec<f64>),
    Auto,
    Words(Vec<String>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v:?}"),
            Value::Flag(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
            Value::Reals(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                f.write_str(&parts.join(", "))
            }
            Value::Auto => f.write_str("auto"),
            Value::Words(v) => f.write_str(&v.join(", ")),
        }
    }
}

struct KeyDef {
    key: &'static str,
    kind: Kind,
    /// `None` marks a required key.
    default: Option<&'static str>,
}

const VARIANTS: &[&str] = &["lie_tp", "lie_pt", "strang", "strang_ptp"];

const KEYS: &[KeyDef] = &[
    KeyDef { key: "grid.n_x", kind: Kind::Count, default: None },
    KeyDef { key: "grid.n_v", kind: Kind::Count, default: None },
    KeyDef { key: "grid.L", kind: Kind::Positive, default: None },
    KeyDef { key: "scheme.variant", kind: Kind::Choice(VARIANTS), default: None },
    KeyDef { key: "scheme.h", kind: Kind::Positive, default: None },
    KeyDef { key: "sim.epsilon", kind: Kind::NonNegative, default: Some("0.01") },
    KeyDef { key: "sim.T", kind: Kind::Positive, default: Some("25") },
    KeyDef { key: "sim.snapshot_times", kind: Kind::Times, default: Some("") },
    KeyDef { key: "sim.interaction", kind: Kind::Flag, default: Some("true") },
    KeyDef { key: "sim.perturbation", kind: Kind::Choice(&["single_mode", "multi_mode"]), default: Some("single_mode") },
    KeyDef { key: "sim.recurrence_safety", kind: Kind::Positive, default: Some("0.5") },
    KeyDef { key: "sim.blowup_factor", kind: Kind::Positive, default: Some("1000000") },
    KeyDef { key: "seed", kind: Kind::Index, default: Some("0") },
    KeyDef { key: "eta.kind", kind: Kind::Choice(&["maxwellian", "two_bump", "file"]), default: Some("maxwellian") },
    KeyDef { key: "eta.temperature", kind: Kind::Positive, default: Some("1") },
    KeyDef { key: "eta.separation", kind: Kind::Positive, default: Some("2") },
    KeyDef { key: "eta.file", kind: Kind::Path, default: Some("") },
    KeyDef { key: "output.dir", kind: Kind::Path, default: Some("out") },
    KeyDef { key: "analysis.s", kind: Kind::Count, default: Some("5") },
    KeyDef { key: "analysis.r", kind: Kind::Index, default: Some("1") },
    KeyDef { key: "analysis.nu", kind: Kind::NonNegative, default: Some("1") },
    KeyDef { key: "analysis.fit_window", kind: Kind::Window, default: Some("1, 24") },
    KeyDef { key: "analysis.fit_model", kind: Kind::Choice(&["exponential", "algebraic"]), default: Some("exponential") },
    KeyDef { key: "analysis.series", kind: Kind::Path, default: Some("") },
    KeyDef { key: "analysis.checkpoints", kind: Kind::Times, default: Some("5, 10, 20, 40") },
    KeyDef { key: "analysis.ladder", kind: Kind::Steps, default: Some("0.2, 0.1, 0.05, 0.025") },
    KeyDef { key: "analysis.ladder_T", kind: Kind::Positive, default: Some("10") },
    KeyDef { key: "analysis.limit_T", kind: Kind::Positive, default: Some("40") },
    KeyDef { key: "analysis.reference_h", kind: Kind::AutoPositive, default: Some("auto") },
    KeyDef { key: "analysis.variants", kind: Kind::Variants, default: Some("lie_tp, strang") },
    KeyDef { key: "analysis.studies", kind: Kind::Variants, default: Some("order, limit, growth") },
    KeyDef { key: "analysis.growth_sigma", kind: Kind::Index, default: Some("0") },
    KeyDef { key: "analysis.kappa0", kind: Kind::Positive, default: Some("0.1") },
    KeyDef { key: "analysis.volterra_T", kind: Kind::Positive, default: Some("10") },
    KeyDef { key: "analysis.volterra_dt", kind: Kind::Positive, default: Some("0.0025") },
];

const STUDIES: &[&str] = &["order", "limit", "growth"];

fn def(key: &str) -> Option<&'static KeyDef> {
    KEYS.iter().find(|d| d.key == key)
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if !v.is_finite() {
        return Err(format!("`{}` is not finite", s.trim()));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_real).collect()
}

fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    match kind {
        Kind::Count | Kind::Index => {
            let v: u64 = raw
                .parse()
                .map_err(|_| format!("`{raw}` is not a nonnegative integer"))?;
            if kind == Kind::Count && v == 0 {
                return Err("must be at least 1".into());
            }
            Ok(Value::Int(v))
        }
        Kind::Positive | Kind::NonNegative => {
            let v = parse_real(raw)?;
            if kind == Kind::Positive && !(v > 0.0) {
                return Err(format!("must be positive, got {v}"));
            }
            if v < 0.0 {
                return Err(format!("must be nonnegative, got {v}"));
            }
            Ok(Value::Real(v))
        }
        Kind::Flag => match raw {
            "true" => Ok(Value::Flag(true)),
            "false" => Ok(Value::Flag(false)),
            _ => Err(format!("`{raw}` is not true or false")),
        },
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("`{raw}` is not one of {}", options.join(", ")))
            }
        }
        Kind::Path => Ok(Value::Text(raw.to_string())),
        Kind::Times => {
            let v = parse_list(raw)?;
            if let Some(x) = v.iter().find(|&&x| x < 0.0) {
                return Err(format!("time {x} is negative"));
            }
            Ok(Value::Reals(v))
        }
        Kind::Steps => {
            let v = parse_list(raw)?;
            if let Some(x) = v.iter().find(|&&x| !(x > 0.0)) {
                return Err(format!("step {x} is not positive"));
            }
            Ok(Value::Reals(v))
        }
        Kind::Window => {
            let v = parse_list(raw)?;
            if v.len() != 2 || !(v[0] >= 0.0 && v[1] > v[0]) {
                return Err(format!("expected `a, b` with 0 <= a < b, got `{raw}`"));
            }
            Ok(Value::Reals(v))
        }
        Kind::AutoPositive => {
            if raw == "auto" {
                return Ok(Value::Auto);
            }
            parse_value(Kind::Positive, raw)
        }
        Kind::Variants => Ok(Value::Words(
            raw.split(',')
                .map(|w| w.trim().to_string())
                .filter(|w| !w.is_empty())
                .collect(),
        )),
    }
}

/// Validated configuration: every known key has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<&'static str, Value>,
}

fn split_line(line: &str) -> Option<Result<(&str, &str), String>> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return None;
    }
    Some(match content.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => Err(format!("expected `key = value`, got `{content}`")),
    })
}

impl Config {
    /// Parses file text, then applies `key=value` overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut raw: BTreeMap<&'static str, (String, Option<usize>)> = BTreeMap::new();
        let mut seen: BTreeMap<&'static str, usize> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let Some(parsed) = split_line(line) else { continue };
            let (key, value) = parsed.map_err(|message| ConfigError {
                line: Some(lineno),
                key: line.trim().to_string(),
                message,
            })?;
            let d = def(key).ok_or_else(|| ConfigError {
                line: Some(lineno),
                key: key.to_string(),
                message: "unknown key".into(),
            })?;
            if let Some(prev) = seen.insert(d.key, lineno) {
                return Err(ConfigError {
                    line: Some(lineno),
                    key: key.to_string(),
                    message: format!("duplicate key, first set on line {prev}"),
                });
            }
            raw.insert(d.key, (value.to_string(), Some(lineno)));
        }
        for o in overrides {
            let (key, value) = o.split_once('=').ok_or_else(|| ConfigError {
                line: None,
                key: o.clone(),
                message: "override must be `key=value`".into(),
            })?;
            let key = key.trim();
            let d = def(key).ok_or_else(|| ConfigError {
                line: None,
                key: key.to_string(),
                message: "unknown key".into(),
            })?;
            raw.insert(d.key, (value.trim().to_string(), None));
        }
        let mut values = BTreeMap::new();
        for d in KEYS {
            let (text, line) = match raw.get(d.key) {
                Some((t, l)) => (t.as_str(), *l),
                None => match d.default {
                    Some(t) => (t, None),
                    None => {
                        return Err(ConfigError {
                            line: None,
                            key: d.key.to_string(),
                            message: "missing required key".into(),
                        })
                    }
                },
            };
            let v = parse_value(d.kind, text).map_err(|message| ConfigError {
                line,
                key: d.key.to_string(),
                message,
            })?;
            values.insert(d.key, v);
        }
        let cfg = Config { values };
        cfg.cross_check(&raw)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, crate::CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Ok(Config::parse(&text, overrides)?)
    }

    fn cross_check(&self, raw: &BTreeMap<&'static str, (String, Option<usize>)>) -> Result<(), ConfigError> {
        let at = |key: &'static str, message: String| ConfigError {
            line: raw.get(key).and_then(|r| r.1),
            key: key.to_string(),
            message,
        };
        for w in self.words("analysis.variants") {
            if !VARIANTS.contains(&w.as_str()) {
                return Err(at("analysis.variants", format!("unknown variant `{w}`")));
            }
        }
        if self.words("analysis.variants").is_empty() {
            return Err(at("analysis.variants", "no variants given".into()));
        }
        for w in self.words("analysis.studies") {
            if !STUDIES.contains(&w.as_str()) {
                return Err(at("analysis.studies", format!("unknown study `{w}` ({})", STUDIES.join(", "))));
            }
        }
        if self.text("eta.kind") == "file" && self.text("eta.file").is_empty() {
            return Err(at("eta.file", "required when eta.kind = file".into()));
        }
        let ladder = self.reals("analysis.ladder");
        if ladder.len() < 3 {
            return Err(at(
                "analysis.ladder",
                format!("{} step sizes given, at least 3 required", ladder.len()),
            ));
        }
        if self.analysis_s() < 4 {
            return Err(at("analysis.s", "must be at least 4".into()));
        }
        Ok(())
    }

    /// All keys sorted, `key = value` per line.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    fn get(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("config key {key} is not registered"))
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Int(v) => *v,
            other => panic!("{key} is not an integer: {other:?}"),
        }
    }

    pub fn real(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Real(v) => *v,
            other => panic!("{key} is not a real: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Flag(v) => *v,
            other => panic!("{key} is not a flag: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(v) => v,
            other => panic!("{key} is not text: {other:?}"),
        }
    }

    pub fn reals(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::Reals(v) => v,
            other => panic!("{key} is not a list: {other:?}"),
        }
    }

    pub fn words(&self, key: &str) -> &[String] {
        match self.get(key) {
            Value::Words(v) => v,
            other => panic!("{key} is not a word list: {other:?}"),
        }
    }

    pub fn auto_real(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Value::Auto => None,
            Value::Real(v) => Some(*v),
            other => panic!("{key} is not real or auto: {other:?}"),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.text("output.dir"))
    }

    pub fn analysis_s(&self) -> u32 {
        self.int("analysis.s") as u32
    }

    pub fn nu(&self) -> f64 {
        self.real("analysis.nu")
    }

    pub fn grid(&self) -> Result<PhaseGrid, hmfdamp::Error> {
        PhaseGrid::new(
            self.int("grid.n_x") as usize,
            self.int("grid.n_v") as usize,
            self.real("grid.L"),
        )
    }

    pub fn variant(&self) -> SplittingVariant {
        SplittingVariant::from_name(self.text("scheme.variant")).expect("validated choice")
    }

    pub fn variants(&self) -> Vec<SplittingVariant> {
        self.words("analysis.variants")
            .iter()
            .map(|w| SplittingVariant::from_name(w).expect("validated choice"))
            .collect()
    }

    pub fn studies(&self) -> &[String] {
        self.words("analysis.studies")
    }

    pub fn fit_window(&self) -> (f64, f64) {
        let w = self.reals("analysis.fit_window");
        (w[0], w[1])
    }

    pub fn fit_model(&self) -> DampingModel {
        DampingModel::from_name(self.text("analysis.fit_model")).expect("validated choice")
    }

    /// Norms recorded by `run` and `scatter`: `H^1_ν`, `H^s_ν`, `H^{s-4}_ν`
    /// and `H^r_ν`, without repeats.
    pub fn norm_specs(&self) -> Result<Vec<WeightedNormSpec>, hmfdamp::Error> {
        let nu = self.nu();
        let s = self.analysis_s();
        let mut out: Vec<WeightedNormSpec> = Vec::new();
        for order in [1, s, s - 4, self.int("analysis.r") as u32] {
            let spec = WeightedNormSpec::new(order, nu)?;
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
        Ok(out)
    }

    pub fn eta_spec(&self) -> Result<EtaSpec, crate::CliError> {
        Ok(match self.text("eta.kind") {
            "maxwellian" => EtaSpec::Maxwellian {
                temperature: self.real("eta.temperature"),
            },
            "two_bump" => EtaSpec::TwoBump {
                separation: self.real("eta.separation"),
                temperature: self.real("eta.temperature"),
            },
            _ => {
                let path = self.text("eta.file");
                let text = std::fs::read_to_string(path)
                    .map_err(|e| crate::CliError::Input(format!("cannot read eta.file {path}: {e}")))?;
                let mut profile = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let content = line.split('#').next().unwrap_or("").trim();
                    if content.is_empty() {
                        continue;
                    }
                    profile.push(parse_real(content).map_err(|m| {
                        crate::CliError::Input(format!("{path}: line {}: {m}", i + 1))
                    })?);
                }
                EtaSpec::Samples {
                    profile,
                    label: path.to_string(),
                }
            }
        })
    }

    /// Simulation settings of this config, recording [`Config::norm_specs`].
    pub fn run_config(&self) -> Result<RunConfig, crate::CliError> {
        let grid = self.grid()?;
        let scheme = SchemeSpec::new(self.variant(), self.real("scheme.h"))?;
        let mut rc = RunConfig::new(grid, scheme, self.real("sim.epsilon"), self.real("sim.T"));
        rc.snapshot_times = self.reals("sim.snapshot_times").to_vec();
        rc.eta = self.eta_spec()?;
        rc.perturbation = match self.text("sim.perturbation") {
            "single_mode" => Perturbation::SingleMode,
            _ => Perturbation::MultiMode {
                seed: self.int("seed"),
            },
        };
        rc.interaction = self.flag("sim.interaction");
        rc.norms = self.norm_specs()?;
        rc.recurrence_safety_factor = self.real("sim.recurrence_safety");
        rc.blowup_factor = self.real("sim.blowup_factor");
        Ok(rc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "grid.n_x = 16\ngrid.n_v = 64\ngrid.L = 8\nscheme.variant = strang\nscheme.h = 0.1\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = Config::parse(MINIMAL, &[]).unwrap();
        assert_eq!(c.real("sim.epsilon"), 0.01);
        assert_eq!(c.text("eta.kind"), "maxwellian");
        assert_eq!(c.fit_window(), (1.0, 24.0));
        assert!(c.run_config().is_ok());
    }

    #[test]
    fn canonical_round_trip() {
        let c = Config::parse(MINIMAL, &["sim.snapshot_times=1, 2.5".into()]).unwrap();
        let text = c.canonical();
        let back = Config::parse(&text, &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.canonical(), text);
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = Config::parse(&format!("{MINIMAL}\nscheme.h = -0.1"), &[]).unwrap_err();
        assert_eq!(e.key, "scheme.h");
        assert_eq!(e.line, Some(7));
        let e = Config::parse(&format!("{MINIMAL}bogus = 1\n"), &[]).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("bogus", Some(6)));
        let e = Config::parse("grid.n_x = 16\n", &[]).unwrap_err();
        assert_eq!(e.message, "missing required key");
        let e = Config::parse(&format!("{MINIMAL}grid.n_x = 1.5\n"), &[]).unwrap_err();
        assert_eq!(e.key, "grid.n_x");
        let e = Config::parse(MINIMAL, &["analysis.ladder=0.2, 0.1".into()]).unwrap_err();
        assert_eq!(e.key, "analysis.ladder");
    }

    #[test]
    fn override_wins() {
        let c = Config::parse(&format!("{MINIMAL}sim.epsilon = 0.01\n"), &["sim.epsilon=0.02".into()]).unwrap();
        assert_eq!(c.real("sim.epsilon"), 0.02);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = Config::parse(&format!("# header\n\n{MINIMAL}sim.T = 3 # short\n"), &[]).unwrap();
        assert_eq!(c.real("sim.T"), 3.0);
    }
}
