//! Text configuration files.
//!
//! A config file has three sections, `[physical]`, `[controller]` and
//! `[simulation]`, each holding `key = value` lines whose keys mirror the
//! parameter struct fields. Files may be partial: missing keys keep the value
//! of the base preset. Unknown sections or keys are rejected.

use std::path::Path;

use toml::{Table, Value};

use crate::error::ConfigError;
use crate::params::SimConfig;

fn to_table(cfg: &SimConfig) -> Table {
    Table::try_from(cfg).expect("SimConfig always serializes to a table")
}

fn from_table(table: Table) -> Result<SimConfig, ConfigError> {
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))
}

/// Copies every key of `overrides` onto `base`, rejecting keys `base` lacks.
fn merge(base: &mut Table, overrides: Table) -> Result<(), ConfigError> {
    for (section, value) in overrides {
        let Some(Value::Table(target)) = base.get_mut(&section) else {
            return Err(ConfigError::UnknownKey(section));
        };
        let Value::Table(entries) = value else {
            return Err(ConfigError::Parse(format!("`{section}` must be a section")));
        };
        for (key, v) in entries {
            if !target.contains_key(&key) {
                return Err(ConfigError::UnknownKey(format!("{section}.{key}")));
            }
            target.insert(key, v);
        }
    }
    Ok(())
}

/// Parses config text on top of `base`.
pub fn parse_over(base: &SimConfig, text: &str) -> Result<SimConfig, ConfigError> {
    let overrides: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    let mut table = to_table(base);
    merge(&mut table, overrides)?;
    from_table(table)
}

/// Parses a complete or partial config over the default parameter set.
pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
    parse_over(&SimConfig::default(), text)
}

pub fn load_over(base: &SimConfig, path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_over(base, &text)
}

/// Renders every field. Floats use the shortest representation that parses
/// back to the same bits.
pub fn serialize(cfg: &SimConfig) -> String {
    toml::to_string(cfg).expect("SimConfig always serializes")
}

fn parse_scalar(raw: &str) -> Value {
    let raw = raw.trim();
    if let Ok(i) = raw.parse::<i64>() {
        Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        Value::Float(f)
    } else if let Ok(b) = raw.parse::<bool>() {
        Value::Boolean(b)
    } else {
        Value::String(raw.to_string())
    }
}

/// Applies a `section.key=value` override.
pub fn apply_override(cfg: &SimConfig, assignment: &str) -> Result<SimConfig, ConfigError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        ConfigError::Parse(format!("expected section.key=value, got `{assignment}`"))
    })?;
    apply_value(cfg, path.trim(), raw)
}

/// Sets `section.key` to the scalar parsed from `raw`.
pub fn apply_value(cfg: &SimConfig, path: &str, raw: &str) -> Result<SimConfig, ConfigError> {
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| ConfigError::UnknownKey(path.to_string()))?;
    let mut entries = Table::new();
    entries.insert(key.to_string(), parse_scalar(raw));
    let mut overrides = Table::new();
    overrides.insert(section.to_string(), Value::Table(entries));
    let mut table = to_table(cfg);
    merge(&mut table, overrides)?;
    from_table(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use proptest::prelude::*;

    #[test]
    fn partial_file_overrides_only_named_fields() {
        let cfg = parse("[controller]\nKp = 0\nKd = 0.0\n").unwrap();
        assert_eq!(cfg.controller.kp, 0.0);
        assert_eq!(cfg.controller.kd, 0.0);
        assert_eq!(cfg.physical, SimConfig::default().physical);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse("[physical]\nstiffness = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "physical.stiffness"));
        let err = parse("[plant]\nk = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "plant"));
    }

    #[test]
    fn type_mismatch_is_a_parse_error() {
        assert!(matches!(
            parse("[simulation]\nmax_steps = \"many\"\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn override_sets_nested_value() {
        let base = Preset::WithFeedback.config();
        let cfg = apply_override(&base, "physical.k=-5").unwrap();
        assert_eq!(cfg.physical.k, -5.0);
        assert_eq!(
            cfg.validate().unwrap_err().to_string(),
            "k must be positive"
        );
        let cfg = apply_override(&base, "controller.mu_feedback = true").unwrap();
        assert!(cfg.controller.mu_feedback);
        assert!(matches!(
            apply_override(&base, "physical.kk=1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(apply_override(&base, "physical.k").is_err());
    }

    #[test]
    fn shipped_example_matches_default() {
        let text = include_str!("../../../configs/with-feedback.toml");
        assert_eq!(parse(text).unwrap(), SimConfig::default());
    }

    proptest! {
        #[test]
        fn serialize_parse_is_bit_exact(
            m in 1e-3f64..1e4, k in 1.0f64..1e6, c in 0.0f64..1e3,
            gamma in 1e-3f64..1.5, eps in 0.0f64..20.0, kp in 0.0f64..2.0,
            t0 in 1e-2f64..3.0, beta in 0.01f64..0.5, dt in 1e-7f64..1e-2,
            steps in 0u64..100_000, vx0 in -10.0f64..10.0,
        ) {
            let mut cfg = SimConfig::default();
            cfg.physical.m = m;
            cfg.physical.k = k;
            cfg.physical.c = c;
            cfg.physical.gamma_td = gamma;
            cfg.controller.epsilon = eps;
            cfg.controller.kp = kp;
            cfg.controller.t0_e = t0;
            cfg.controller.beta = beta;
            cfg.simulation.dt = dt;
            cfg.simulation.max_steps = steps;
            cfg.simulation.vx0 = vx0;
            let validated = cfg.validate().unwrap();
            let back = parse(&serialize(validated.get())).unwrap();
            prop_assert_eq!(back, cfg);
            prop_assert_eq!(back.physical.gamma_td.to_bits(), gamma.to_bits());
        }
    }
}
