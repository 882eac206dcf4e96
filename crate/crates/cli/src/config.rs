//! Experiment configuration: a TOML document with one table per model family.
//!
//! ```toml
//! model = "ks"
//! seed = 7
//! replicas = 100
//!
//! [rb]
//! dim = 2
//! densities = [0.05, 0.1, 0.2, 0.4]
//! t_max = 500.0
//! blue_rate = 1.0
//!
//! [analysis]
//! burn_in = 0.5
//! bound = { model = "rb", delta = 0.5 }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use rbfront_core::bounds::VelocityBound;
use rbfront_core::kawasaki::{EventSpec, KawasakiConfig, LambdaFn};
use rbfront_core::kernels::{BlueProcessSpec, SeedRule};
use rbfront_core::rb::{FieldMode, SampleGrid};
use rbfront_core::{BoxSpec, Dim, RbConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Frog,
    Ks,
    RbCustom,
    Rbk,
    KawasakiTwoBox,
}

impl Model {
    pub fn is_rb(self) -> bool {
        matches!(self, Model::Frog | Model::Ks | Model::RbCustom)
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Frog => "frog",
            Model::Ks => "ks",
            Model::RbCustom => "rb-custom",
            Model::Rbk => "rbk",
            Model::KawasakiTwoBox => "kawasaki-two-box",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub seed: u64,
    pub replicas: u64,
    /// Run directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<RbSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kawasaki: Option<KawasakiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_box: Option<TwoBoxSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbSection {
    pub dim: Dim,
    pub densities: Vec<f64>,
    pub t_max: f64,
    /// Blue walk rate for `ks` (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blue_rate: Option<f64>,
    /// Blue process for `rb-custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blue: Option<BlueProcessSpec>,
    #[serde(default = "lazy_field")]
    pub field: FieldMode,
    #[serde(default)]
    pub seed_rule: SeedRule,
    #[serde(default)]
    pub grid: SampleGrid,
    #[serde(default = "default_budget")]
    pub particle_budget: usize,
}

fn lazy_field() -> FieldMode {
    FieldMode::Lazy
}

fn default_budget() -> usize {
    20_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KawasakiSection {
    pub betas: Vec<f64>,
    pub u: f64,
    pub delta: f64,
    pub theta: f64,
    /// Defaults to `delta / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub lambda: LambdaFn,
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoBoxSection {
    pub box1: BoxSpec,
    pub box2: BoxSpec,
    pub event1: EventSpec,
    pub event2: EventSpec,
    /// Observation horizon; defaults to `kawasaki.t_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Velocity fits use samples with `t >= burn_in * t_max`.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<VelocityBound>,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn default_burn_in() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            burn_in: default_burn_in(),
            bound: None,
            plots: true,
        }
    }
}

/// A schema or validation failure, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Dotted key path, e.g. `rb.densities`.
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, " at line {l}, column {c}")?,
            (Some(l), None) => write!(f, " at line {l}")?,
            _ => {}
        }
        if let Some(field) = &self.field {
            write!(f, " (field `{field}`)")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn at(src: &str, field: &str, message: impl Into<String>) -> Self {
        let pos = locate_key(src, field);
        ConfigError {
            line: pos.map(|p| p.0),
            column: pos.map(|p| p.1),
            field: Some(field.to_string()),
            message: message.into(),
        }
    }
}

/// 1-based line and column of byte offset `idx`.
fn line_col(src: &str, idx: usize) -> (usize, usize) {
    let idx = idx.min(src.len());
    let before = &src[..idx];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

fn table_header(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .map(|s| s.trim_matches(|c| c == '[' || c == ']').trim())
}

fn key_of(line: &str) -> Option<&str> {
    let t = line.trim();
    if t.starts_with('#') || t.starts_with('[') {
        return None;
    }
    t.split_once('=').map(|(k, _)| k.trim())
}

/// Dotted key assigned on (1-based) `line`, with its enclosing table.
fn field_at_line(src: &str, line: usize) -> Option<String> {
    let lines: Vec<&str> = src.lines().collect();
    let text = lines.get(line.checked_sub(1)?)?;
    if let Some(h) = table_header(text) {
        return Some(h.to_string());
    }
    let key = key_of(text)?;
    let table = lines[..line - 1].iter().rev().find_map(|l| table_header(l));
    Some(match table {
        Some(t) => format!("{t}.{key}"),
        None => key.to_string(),
    })
}

/// Position of a dotted key (`table.key` or top-level `key`) in the source.
fn locate_key(src: &str, field: &str) -> Option<(usize, usize)> {
    let (table, key) = match field.rsplit_once('.') {
        Some((t, k)) => (Some(t), k),
        None => (None, field),
    };
    let mut current: Option<&str> = None;
    let mut table_line = None;
    for (i, line) in src.lines().enumerate() {
        if let Some(h) = table_header(line) {
            current = Some(h);
            if Some(h) == Some(field) {
                return Some((i + 1, 1));
            }
            if Some(h) == table {
                table_line = Some(i + 1);
            }
            continue;
        }
        if current == table && key_of(line) == Some(key) {
            let col = line.find(key).unwrap_or(0) + 1;
            return Some((i + 1, col));
        }
    }
    table_line.map(|l| (l, 1))
}

fn quoted_field(message: &str) -> Option<&str> {
    for prefix in ["unknown field `", "missing field `"] {
        if let Some(rest) = message.split(prefix).nth(1) {
            return rest.split('`').next();
        }
    }
    None
}

impl ExperimentConfig {
    /// Parses and validates a configuration document.
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let pos = e.span().map(|s| line_col(src, s.start));
            let mut field = pos.and_then(|(l, _)| field_at_line(src, l));
            if let Some(q) = quoted_field(e.message()).filter(|_| e.message().starts_with("missing")) {
                field = Some(match field {
                    Some(t) if !t.contains('=') && pos.is_some_and(|(l, _)| src.lines().nth(l - 1).and_then(table_header).is_some()) => format!("{t}.{q}"),
                    _ => q.to_string(),
                });
            }
            ConfigError {
                line: pos.map(|p| p.0),
                column: pos.map(|p| p.1),
                field,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            column: None,
            field: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml(&src)
    }

    /// The fully resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Semantic checks; `src` is only used to locate offending keys.
    pub fn validate(&self, src: &str) -> Result<(), ConfigError> {
        let err = |field: &str, msg: String| Err(ConfigError::at(src, field, msg));
        if self.replicas == 0 {
            return err("replicas", "replicas must be >= 1".into());
        }
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.burn_in) {
            return err("analysis.burn_in", format!("burn-in fraction must lie in [0, 1), got {}", a.burn_in));
        }
        if let Some(b) = a.bound {
            if !(b.delta() > 0.0 && b.delta().is_finite()) {
                return err("analysis.bound", format!("bound delta must be > 0, got {}", b.delta()));
            }
        }
        if self.model.is_rb() {
            let Some(rb) = &self.rb else {
                return err("rb", format!("model `{}` needs an [rb] table", self.model.name()));
            };
            if self.kawasaki.is_some() || self.two_box.is_some() {
                return err("kawasaki", format!("model `{}` takes no Kawasaki tables", self.model.name()));
            }
            if rb.densities.is_empty() {
                return err("rb.densities", "at least one density is required".into());
            }
            match self.model {
                Model::Frog if rb.blue.is_some() || rb.blue_rate.is_some() => {
                    return err("rb.blue", "the frog model has frozen blues; drop `blue`/`blue_rate`".into());
                }
                Model::Ks if rb.blue.is_some() => {
                    return err("rb.blue", "`ks` takes `blue_rate`; use model = \"rb-custom\" for other blue laws".into());
                }
                Model::RbCustom if rb.blue.is_none() => {
                    return err("rb", "model `rb-custom` needs a `blue` process".into());
                }
                _ => {}
            }
            for &rho in &rb.densities {
                if let Err(e) = rb.core_config(self.model, rho).validate() {
                    let field = match e.to_string() {
                        s if s.contains("density") => "rb.densities",
                        s if s.contains("t_max") => "rb.t_max",
                        s if s.contains("grid") => "rb.grid",
                        s if s.contains("seed rule") => "rb.seed_rule",
                        _ => "rb.blue",
                    };
                    return err(field, e.to_string());
                }
            }
        } else {
            let Some(k) = &self.kawasaki else {
                return err("kawasaki", format!("model `{}` needs a [kawasaki] table", self.model.name()));
            };
            if self.rb.is_some() {
                return err("rb", format!("model `{}` takes no [rb] table", self.model.name()));
            }
            if k.betas.is_empty() {
                return err("kawasaki.betas", "at least one beta is required".into());
            }
            for &beta in &k.betas {
                if let Err(e) = k.core_config(beta).validate() {
                    return err("kawasaki", e.to_string());
                }
            }
            match (self.model, &self.two_box) {
                (Model::KawasakiTwoBox, None) => {
                    return err("two_box", "model `kawasaki-two-box` needs a [two_box] table".into());
                }
                (Model::Rbk, Some(_)) => return err("two_box", "model `rbk` takes no [two_box] table".into()),
                (Model::KawasakiTwoBox, Some(tb)) => {
                    for (name, b) in [("two_box.box1", &tb.box1), ("two_box.box2", &tb.box2)] {
                        if b.side == 0 {
                            return err(name, "box side must be >= 1".into());
                        }
                    }
                    if let Some(h) = tb.horizon {
                        if !(h >= 0.0 && h.is_finite()) {
                            return err("two_box.horizon", format!("horizon must be finite and >= 0, got {h}"));
                        }
                    }
                    for &beta in &k.betas {
                        let side = k.core_config(beta).side();
                        if rbfront_core::kawasaki::box_distance(&tb.box1, &tb.box2, side) == 0.0 {
                            return err("two_box", format!("the boxes overlap on the side-{side} torus"));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Number of grid points (densities or betas).
    pub fn points(&self) -> usize {
        match (&self.rb, &self.kawasaki) {
            (Some(rb), _) if self.model.is_rb() => rb.densities.len(),
            (_, Some(k)) => k.betas.len(),
            _ => 0,
        }
    }
}

impl RbSection {
    pub fn core_config(&self, model: Model, rho: f64) -> RbConfig {
        let blue = match model {
            Model::Frog => BlueProcessSpec::Frozen,
            Model::Ks => BlueProcessSpec::SimpleWalk {
                rate: self.blue_rate.unwrap_or(1.0),
            },
            _ => self.blue.clone().unwrap_or(BlueProcessSpec::Frozen),
        };
        let mut cfg = RbConfig::new(self.dim, rho, blue, self.t_max);
        cfg.field = self.field;
        cfg.seed_rule = self.seed_rule;
        cfg.grid = self.grid;
        cfg.particle_budget = self.particle_budget;
        cfg
    }
}

impl KawasakiSection {
    pub fn core_config(&self, beta: f64) -> KawasakiConfig {
        let mut cfg = KawasakiConfig::new(beta, self.u, self.delta, self.theta, self.t_max);
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        cfg.lambda = self.lambda;
        cfg.side_override = self.side;
        cfg.n_override = self.particles;
        cfg.check_every = self.check_every;
        cfg
    }
}
