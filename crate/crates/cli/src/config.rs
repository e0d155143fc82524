//! Flat `key = value` configuration files.
//!
//! Keys are the field names of [`ModelParams`] and [`GridSpec`]. Blank lines
//! and lines starting with `#` are ignored. Floats are written with Rust's
//! shortest round-trip formatting, so a config survives a write/read cycle
//! bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crossmf_core::{AxisScale, GridSpec, ModelParams, PresetConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("grid key {0:?} given but the config has no grid")]
    NoGrid(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub const PARAM_KEYS: [&str; 14] = [
    "kappa", "theta", "a1", "a2", "b1", "b2", "dt", "t_end", "n_agents", "lambda1", "lambda2",
    "s0", "seed", "dt_cross",
];

pub const GRID_KEYS: [&str; 8] = [
    "m_lo", "m_hi", "n_m", "c_lo", "c_hi", "n_c", "m_scale", "recenter",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

/// Sets one parameter from its textual value. Returns `Ok(false)` if the key
/// is not a parameter key.
pub fn set_param(p: &mut ModelParams, key: &str, value: &str) -> Result<bool, ConfigError> {
    match key {
        "kappa" => p.kappa = parse(key, value)?,
        "theta" => p.theta = parse(key, value)?,
        "a1" => p.a1 = parse(key, value)?,
        "a2" => p.a2 = parse(key, value)?,
        "b1" => p.b1 = parse(key, value)?,
        "b2" => p.b2 = parse(key, value)?,
        "dt" => p.dt = parse(key, value)?,
        "t_end" => p.t_end = parse(key, value)?,
        "n_agents" => p.n_agents = parse(key, value)?,
        "lambda1" => p.lambda1 = parse(key, value)?,
        "lambda2" => p.lambda2 = parse(key, value)?,
        "s0" => p.s0 = parse(key, value)?,
        "seed" => p.seed = parse(key, value)?,
        "dt_cross" => p.dt_cross = parse(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub fn set_grid(g: &mut GridSpec, key: &str, value: &str) -> Result<bool, ConfigError> {
    match key {
        "m_lo" => g.m_lo = parse(key, value)?,
        "m_hi" => g.m_hi = parse(key, value)?,
        "n_m" => g.n_m = parse(key, value)?,
        "c_lo" => g.c_lo = parse(key, value)?,
        "c_hi" => g.c_hi = parse(key, value)?,
        "n_c" => g.n_c = parse(key, value)?,
        "m_scale" => {
            g.m_scale = match value {
                "linear" => AxisScale::Linear,
                "log" => AxisScale::Log,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        value: value.into(),
                    })
                }
            }
        }
        "recenter" => g.recenter = parse(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Applies one `key = value` override to a config.
pub fn apply(cfg: &mut PresetConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    if set_param(&mut cfg.params, key, value)? {
        return Ok(());
    }
    if GRID_KEYS.contains(&key) {
        let g = cfg
            .grid
            .as_mut()
            .ok_or_else(|| ConfigError::NoGrid(key.to_string()))?;
        set_grid(g, key, value)?;
        return Ok(());
    }
    Err(ConfigError::UnknownKey(key.to_string()))
}

/// Splits `key=value` (spaces around `=` allowed).
pub fn split_pair(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

/// Parses a config on top of `base`. A file mentioning any grid key gets a
/// grid even if `base` has none (missing grid keys then come from the
/// meanfield preset).
pub fn parse_config(text: &str, base: PresetConfig) -> Result<PresetConfig, ConfigError> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = split_pair(line).ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        if cfg.grid.is_none() && GRID_KEYS.contains(&k) {
            cfg.grid = crossmf_core::Preset::MeanField.config().grid;
        }
        apply(&mut cfg, k, v)?;
    }
    Ok(cfg)
}

pub fn write_config(cfg: &PresetConfig) -> String {
    let p = &cfg.params;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("kappa", p.kappa.to_string());
    put("theta", p.theta.to_string());
    put("a1", p.a1.to_string());
    put("a2", p.a2.to_string());
    put("b1", p.b1.to_string());
    put("b2", p.b2.to_string());
    put("dt", p.dt.to_string());
    put("t_end", p.t_end.to_string());
    put("n_agents", p.n_agents.to_string());
    put("lambda1", p.lambda1.to_string());
    put("lambda2", p.lambda2.to_string());
    put("s0", p.s0.to_string());
    put("seed", p.seed.to_string());
    put("dt_cross", p.dt_cross.to_string());
    if let Some(g) = &cfg.grid {
        put("m_lo", g.m_lo.to_string());
        put("m_hi", g.m_hi.to_string());
        put("n_m", g.n_m.to_string());
        put("c_lo", g.c_lo.to_string());
        put("c_hi", g.c_hi.to_string());
        put("n_c", g.n_c.to_string());
        put("m_scale", g.m_scale.name().to_string());
        put("recenter", g.recenter.to_string());
    }
    out
}

pub fn load_config(path: &Path, base: PresetConfig) -> Result<PresetConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, base)
}
