//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # comment
//! field.type = "uniform_e"
//! field.vector = [0, 0.02, 0]
//! packet.l = 2
//! integrator.method = "rk4"
//! ```
//!
//! Values are integers, floats, quoted strings, booleans, or bracketed
//! arrays of numbers. Unknown keys are errors; absent keys take defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::Vector3;
use thiserror::Error;

use crate::dynamics::{EquationForm, IntegratorConfig, Method, OamModel, PacketDynamics, PacketState};
use crate::error::Error;
use crate::fields::{FieldConfig, DEFAULT_G_FACTOR};
use crate::modes::ModeSpec;
use crate::units::UnitSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("{reason} at {key}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i128),
    Float(f64),
    Str(String),
    Bool(bool),
    Array(Vec<Value>),
}

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "units.hbar",
    "units.mass",
    "units.charge",
    "field.type",
    "field.vector",
    "field.g_factor",
    "packet.l",
    "packet.m_radial",
    "packet.n_long",
    "packet.waist",
    "packet.long_length",
    "packet.p0",
    "packet.r0",
    "packet.oam_model",
    "integrator.method",
    "integrator.step",
    "integrator.rtol",
    "integrator.atol",
    "integrator.t_final",
    "integrator.output_stride",
    "integrator.equations",
    "integrator.validity_threshold",
    "scenario.l_values",
    "scenario.g_values",
    "scenario.m_radial",
    "scenario.grid_n",
    "scenario.extent",
    "scenario.e0",
    "scenario.p0",
    "scenario.b0",
    "scenario.t_final",
    "scenario.periods",
    "scenario.colatitudes",
    "scenario.loop_samples",
];

/// Tokenize and check keys; no semantic validation.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, (usize, Value)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line, reason: "expected `key = value`".into() })?;
        let key = key.trim();
        if !valid_key(key) {
            return Err(ConfigError::Parse { line, reason: format!("malformed key `{key}`") });
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        let value = parse_value(value.trim()).map_err(|reason| ConfigError::Parse { line, reason })?;
        if out.insert(key.to_string(), (line, value)).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_string => escaped = true,
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|part| {
            let mut chars = part.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

fn parse_value(s: &str) -> Result<Value, String> {
    if s.is_empty() {
        return Err("missing value".into());
    }
    if let Some(rest) = s.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = rest.chars();
        loop {
            match chars.next() {
                None => return Err("unterminated string".into()),
                Some('"') => break,
                Some('\\') => match chars.next() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    other => return Err(format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default())),
                },
                Some(c) => out.push(c),
            }
        }
        if !chars.as_str().trim().is_empty() {
            return Err("trailing characters after string".into());
        }
        return Ok(Value::Str(out));
    }
    if let Some(inner) = s.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or("unterminated array")?.trim();
        if inner.is_empty() {
            return Ok(Value::Array(Vec::new()));
        }
        return inner
            .split(',')
            .map(|item| parse_scalar(item.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Array);
    }
    parse_scalar(s)
}

fn parse_scalar(s: &str) -> Result<Value, String> {
    match s {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        "" => return Err("empty array element".into()),
        _ => {}
    }
    let looks_float = s.contains(['.', 'e', 'E']) || s.chars().any(|c| c.is_ascii_alphabetic());
    if !looks_float {
        if let Ok(i) = s.parse::<i128>() {
            return Ok(Value::Int(i));
        }
    }
    match s.parse::<f64>() {
        Ok(f) if f.is_finite() => Ok(Value::Float(f)),
        Ok(_) => Err(format!("non-finite number `{s}`")),
        Err(_) => Err(format!("cannot parse value `{s}`")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldType {
    Free,
    UniformE,
    UniformB,
}

impl FieldType {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldType::Free => "free",
            FieldType::UniformE => "uniform_e",
            FieldType::UniformB => "uniform_b",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldBlock {
    pub kind: FieldType,
    pub vector: [f64; 3],
    pub g_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PacketBlock {
    pub l: i32,
    pub m_radial: u32,
    pub n_long: u32,
    /// `None` uses `10 hbar / |p0|`.
    pub waist: Option<f64>,
    /// `None` uses `10 * waist`.
    pub long_length: Option<f64>,
    pub p0: [f64; 3],
    pub r0: [f64; 3],
    pub oam_model: OamModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioBlock {
    pub l_values: Vec<i32>,
    pub g_values: Vec<f64>,
    pub m_radial: u32,
    pub grid_n: usize,
    /// Grid half-width in units of the waist.
    pub extent: f64,
    pub e0: f64,
    pub p0: f64,
    pub b0: f64,
    pub t_final: f64,
    /// Cyclotron periods for the magnetic scenarios.
    pub periods: f64,
    pub colatitudes: Vec<f64>,
    pub loop_samples: usize,
}

impl Default for ScenarioBlock {
    fn default() -> Self {
        ScenarioBlock {
            l_values: vec![-3, -2, -1, 0, 1, 2, 3],
            g_values: vec![0.0, 1.0, 2.0],
            m_radial: 0,
            grid_n: 256,
            extent: 8.0,
            e0: 0.02,
            p0: 1.0,
            b0: 1.0,
            t_final: 400.0,
            periods: 20.0,
            colatitudes: vec![0.5, std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_2, 2.5],
            loop_samples: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub units: UnitSystem,
    pub field: FieldBlock,
    pub packet: PacketBlock,
    pub integrator: IntegratorConfig,
    pub scenario: ScenarioBlock,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            units: UnitSystem::default(),
            field: FieldBlock { kind: FieldType::Free, vector: [0.0; 3], g_factor: DEFAULT_G_FACTOR },
            packet: PacketBlock {
                l: 0,
                m_radial: 0,
                n_long: 0,
                waist: None,
                long_length: None,
                p0: [0.0, 0.0, 1.0],
                r0: [0.0; 3],
                oam_model: OamModel::Slaved,
            },
            integrator: IntegratorConfig::default(),
            scenario: ScenarioBlock::default(),
            seed: 0,
        }
    }
}

struct Entries(BTreeMap<String, (usize, Value)>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key).map(|(_, v)| v)
    }

    fn float(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_float(key)?.unwrap_or(default))
    }

    fn opt_float(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Int(i)) => Ok(Some(i as f64)),
            Some(Value::Float(f)) => Ok(Some(f)),
            Some(_) => Err(invalid(key, "number required")),
        }
    }

    fn int_in<T: TryFrom<i128>>(&mut self, key: &str, default: T, what: &str) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Int(i)) => T::try_from(i).map_err(|_| invalid(key, format!("{what} required"))),
            Some(_) => Err(invalid(key, "integer required")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s)),
            Some(_) => Err(invalid(key, "string required")),
        }
    }

    fn float_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::Int(i) => Ok(i as f64),
                    Value::Float(f) => Ok(f),
                    _ => Err(invalid(key, "array of numbers required")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(invalid(key, "array of numbers required")),
        }
    }

    fn int_list(&mut self, key: &str) -> Result<Option<Vec<i32>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::Int(i) => i32::try_from(i).map_err(|_| invalid(key, "32-bit integer required")),
                    _ => Err(invalid(key, "array of integers required")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(invalid(key, "array of integers required")),
        }
    }

    fn vector(&mut self, key: &str, default: [f64; 3]) -> Result<[f64; 3], ConfigError> {
        match self.float_list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
            Some(_) => Err(invalid(key, "3-vector required")),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, "positive number required"))
    }
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut e = Entries(parse_entries(text)?);
    let d = RunConfig::default();

    let seed = e.int_in("seed", d.seed, "non-negative integer")?;

    let hbar = e.float("units.hbar", d.units.hbar)?;
    let mass = e.float("units.mass", d.units.mass)?;
    let charge = e.float("units.charge", d.units.charge)?;
    let units = UnitSystem::new(hbar, mass, charge).map_err(|err| match err {
        Error::InvalidParameter { name, reason } => invalid(&format!("units.{name}"), reason),
        other => invalid("units", other.to_string()),
    })?;

    let kind = match e.string("field.type")?.as_deref() {
        None | Some("free") => FieldType::Free,
        Some("uniform_e") => FieldType::UniformE,
        Some("uniform_b") => FieldType::UniformB,
        Some(other) => {
            return Err(invalid("field.type", format!("expected \"free\", \"uniform_e\" or \"uniform_b\", got \"{other}\"")))
        }
    };
    let field = FieldBlock {
        kind,
        vector: e.vector("field.vector", d.field.vector)?,
        g_factor: e.float("field.g_factor", d.field.g_factor)?,
    };

    let l = e.int_in("packet.l", d.packet.l, "32-bit integer")?;
    let m_radial = e.int_in("packet.m_radial", d.packet.m_radial, "non-negative integer")?;
    let n_long = e.int_in("packet.n_long", d.packet.n_long, "non-negative integer")?;
    let waist = e.opt_float("packet.waist")?.map(|v| positive("packet.waist", v)).transpose()?;
    let long_length =
        e.opt_float("packet.long_length")?.map(|v| positive("packet.long_length", v)).transpose()?;
    let p0 = e.vector("packet.p0", d.packet.p0)?;
    if Vector3::from(p0).norm() <= crate::berry::DEFAULT_P_MIN {
        return Err(invalid("packet.p0", "nonzero momentum required"));
    }
    let r0 = e.vector("packet.r0", d.packet.r0)?;
    let oam_model = match e.string("packet.oam_model")?.as_deref() {
        None | Some("slaved") => OamModel::Slaved,
        Some("precessing") => OamModel::Precessing,
        Some(other) => {
            return Err(invalid("packet.oam_model", format!("expected \"slaved\" or \"precessing\", got \"{other}\"")))
        }
    };
    let packet = PacketBlock { l, m_radial, n_long, waist, long_length, p0, r0, oam_model };

    let di = IntegratorConfig::default();
    let method = match e.string("integrator.method")?.as_deref() {
        None | Some("rk4") => Method::Rk4,
        Some("dopri45") => Method::DormandPrince,
        Some(other) => {
            return Err(invalid("integrator.method", format!("expected \"rk4\" or \"dopri45\", got \"{other}\"")))
        }
    };
    let equations = match e.string("integrator.equations")?.as_deref() {
        None | Some("exact") => EquationForm::Exact,
        Some("first_order") => EquationForm::FirstOrder,
        Some(other) => {
            return Err(invalid(
                "integrator.equations",
                format!("expected \"exact\" or \"first_order\", got \"{other}\""),
            ))
        }
    };
    let integrator = IntegratorConfig {
        method,
        step: e.opt_float("integrator.step")?,
        rtol: e.float("integrator.rtol", di.rtol)?,
        atol: e.float("integrator.atol", di.atol)?,
        oam_model,
        t_final: e.float("integrator.t_final", di.t_final)?,
        output_stride: e.int_in("integrator.output_stride", di.output_stride, "positive integer")?,
        equations,
        validity_threshold: e.float("integrator.validity_threshold", di.validity_threshold)?,
    };
    integrator.validate().map_err(|err| match err {
        Error::InvalidParameter { name, reason } => invalid(&format!("integrator.{name}"), reason),
        other => invalid("integrator", other.to_string()),
    })?;

    let ds = ScenarioBlock::default();
    let scenario = ScenarioBlock {
        l_values: e.int_list("scenario.l_values")?.unwrap_or(ds.l_values),
        g_values: e.float_list("scenario.g_values")?.unwrap_or(ds.g_values),
        m_radial: e.int_in("scenario.m_radial", ds.m_radial, "non-negative integer")?,
        grid_n: e.int_in("scenario.grid_n", ds.grid_n, "positive integer")?,
        extent: positive("scenario.extent", e.float("scenario.extent", ds.extent)?)?,
        e0: positive("scenario.e0", e.float("scenario.e0", ds.e0)?)?,
        p0: positive("scenario.p0", e.float("scenario.p0", ds.p0)?)?,
        b0: positive("scenario.b0", e.float("scenario.b0", ds.b0)?)?,
        t_final: positive("scenario.t_final", e.float("scenario.t_final", ds.t_final)?)?,
        periods: positive("scenario.periods", e.float("scenario.periods", ds.periods)?)?,
        colatitudes: e.float_list("scenario.colatitudes")?.unwrap_or(ds.colatitudes),
        loop_samples: e.int_in("scenario.loop_samples", ds.loop_samples, "positive integer")?,
    };
    if crate::grid::check_grid_n(scenario.grid_n).is_err() {
        return Err(invalid("scenario.grid_n", "power of two >= 32 required"));
    }
    if scenario.loop_samples < 3 {
        return Err(invalid("scenario.loop_samples", "at least 3 required"));
    }
    if scenario.colatitudes.iter().any(|t| !(*t > 0.0 && *t < std::f64::consts::PI)) {
        return Err(invalid("scenario.colatitudes", "angles in (0, pi) required"));
    }
    debug_assert!(e.0.is_empty(), "unconsumed keys: {:?}", e.0.keys());

    Ok(RunConfig { units, field, packet, integrator, scenario, seed })
}

fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let inner: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", inner.join(", "))
}

impl RunConfig {
    /// Canonical text form; parsing it yields an identical configuration.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let v3 = |v: &[f64; 3]| fmt_list(v, |x| fmt_float(*x));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "units.hbar = {}", fmt_float(self.units.hbar));
        let _ = writeln!(s, "units.mass = {}", fmt_float(self.units.mass));
        let _ = writeln!(s, "units.charge = {}", fmt_float(self.units.charge));
        let _ = writeln!(s, "field.type = \"{}\"", self.field.kind.as_str());
        let _ = writeln!(s, "field.vector = {}", v3(&self.field.vector));
        let _ = writeln!(s, "field.g_factor = {}", fmt_float(self.field.g_factor));
        let p = &self.packet;
        let _ = writeln!(s, "packet.l = {}", p.l);
        let _ = writeln!(s, "packet.m_radial = {}", p.m_radial);
        let _ = writeln!(s, "packet.n_long = {}", p.n_long);
        if let Some(w) = p.waist {
            let _ = writeln!(s, "packet.waist = {}", fmt_float(w));
        }
        if let Some(lz) = p.long_length {
            let _ = writeln!(s, "packet.long_length = {}", fmt_float(lz));
        }
        let _ = writeln!(s, "packet.p0 = {}", v3(&p.p0));
        let _ = writeln!(s, "packet.r0 = {}", v3(&p.r0));
        let model = match p.oam_model {
            OamModel::Slaved => "slaved",
            OamModel::Precessing => "precessing",
        };
        let _ = writeln!(s, "packet.oam_model = \"{model}\"");
        let i = &self.integrator;
        let method = match i.method {
            Method::Rk4 => "rk4",
            Method::DormandPrince => "dopri45",
        };
        let _ = writeln!(s, "integrator.method = \"{method}\"");
        if let Some(h) = i.step {
            let _ = writeln!(s, "integrator.step = {}", fmt_float(h));
        }
        let _ = writeln!(s, "integrator.rtol = {}", fmt_float(i.rtol));
        let _ = writeln!(s, "integrator.atol = {}", fmt_float(i.atol));
        let _ = writeln!(s, "integrator.t_final = {}", fmt_float(i.t_final));
        let _ = writeln!(s, "integrator.output_stride = {}", i.output_stride);
        let eq = match i.equations {
            EquationForm::Exact => "exact",
            EquationForm::FirstOrder => "first_order",
        };
        let _ = writeln!(s, "integrator.equations = \"{eq}\"");
        let _ = writeln!(s, "integrator.validity_threshold = {}", fmt_float(i.validity_threshold));
        let sc = &self.scenario;
        let _ = writeln!(s, "scenario.l_values = {}", fmt_list(&sc.l_values, |x| x.to_string()));
        let _ = writeln!(s, "scenario.g_values = {}", fmt_list(&sc.g_values, |x| fmt_float(*x)));
        let _ = writeln!(s, "scenario.m_radial = {}", sc.m_radial);
        let _ = writeln!(s, "scenario.grid_n = {}", sc.grid_n);
        let _ = writeln!(s, "scenario.extent = {}", fmt_float(sc.extent));
        let _ = writeln!(s, "scenario.e0 = {}", fmt_float(sc.e0));
        let _ = writeln!(s, "scenario.p0 = {}", fmt_float(sc.p0));
        let _ = writeln!(s, "scenario.b0 = {}", fmt_float(sc.b0));
        let _ = writeln!(s, "scenario.t_final = {}", fmt_float(sc.t_final));
        let _ = writeln!(s, "scenario.periods = {}", fmt_float(sc.periods));
        let _ = writeln!(s, "scenario.colatitudes = {}", fmt_list(&sc.colatitudes, |x| fmt_float(*x)));
        let _ = writeln!(s, "scenario.loop_samples = {}", sc.loop_samples);
        s
    }

    pub fn field_config(&self) -> FieldConfig {
        let v = Vector3::from(self.field.vector);
        let cfg = match self.field.kind {
            FieldType::Free => FieldConfig::free(),
            FieldType::UniformE => FieldConfig::uniform_electric(v),
            FieldType::UniformB => FieldConfig::uniform_magnetic(v),
        };
        cfg.with_g_factor(self.field.g_factor)
    }

    pub fn initial_state(&self) -> PacketState {
        PacketState::new(Vector3::from(self.packet.r0), Vector3::from(self.packet.p0), self.packet.l)
    }

    pub fn dynamics(&self) -> PacketDynamics {
        PacketDynamics::new(self.units, self.field_config(), self.packet.l)
    }

    pub fn mode_spec(&self) -> Result<ModeSpec, Error> {
        let p = &self.packet;
        let pc = Vector3::from(p.p0).norm();
        let waist = p.waist.unwrap_or(10.0 * self.units.hbar / pc);
        let long_length = p.long_length.unwrap_or(10.0 * waist);
        ModeSpec::new(p.l, p.m_radial, p.n_long, waist, long_length, pc)
    }
}
