//! Run configuration: one TOML file with a section per stage, every key
//! optional. `DHG_<SECTION>_<KEY>` environment variables override the file,
//! e.g. `DHG_TTA_STEPS=200` or `DHG_ENERGY_MAX_ITERS=50`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contact::ContactConfig;
use crate::ddpm::DdpmConfig;
use crate::error::{Error, Result};
use crate::losses::LossConfig;
use crate::metrics::MetricsConfig;
use crate::symopt::EnergyConfig;
use crate::tta::TtaConfig;

pub const ENV_PREFIX: &str = "DHG_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub energy: EnergyConfig,
    pub loss: LossConfig,
    pub tta: TtaConfig,
    pub ddpm: DdpmConfig,
    pub contact: ContactConfig,
    pub metrics: MetricsConfig,
}

fn defaults_table() -> toml::Table {
    toml::Table::try_from(Config::default()).expect("default config serializes")
}

/// Rejects sections or keys the defaults do not have.
fn check_keys(table: &toml::Table) -> Result<()> {
    let defaults = defaults_table();
    for (section, value) in table {
        let Some(known) = defaults.get(section).and_then(|v| v.as_table()) else {
            return Err(Error::Config(format!("unknown section [{section}]")));
        };
        let Some(keys) = value.as_table() else {
            return Err(Error::Config(format!("[{section}] must be a table")));
        };
        if let Some(k) = keys.keys().find(|k| !known.contains_key(*k)) {
            return Err(Error::Config(format!("unknown key {section}.{k}")));
        }
    }
    Ok(())
}

/// TOML literal if it parses as one, else a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_overrides(
    table: &mut toml::Table,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<Vec<String>> {
    let defaults = defaults_table();
    let mut applied = Vec::new();
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name[ENV_PREFIX.len()..].to_lowercase();
        let Some((section, key)) = rest.split_once('_') else {
            return Err(Error::Config(format!(
                "{name}: expected {ENV_PREFIX}<SECTION>_<KEY>"
            )));
        };
        let known = defaults.get(section).and_then(|v| v.as_table());
        let Some(default) = known.and_then(|t| t.get(key)) else {
            return Err(Error::Config(format!("{name}: no key {section}.{key}")));
        };
        let mut value = parse_value(&raw);
        // 5 for a float key
        if let (toml::Value::Float(_), toml::Value::Integer(i)) = (default, &value) {
            value = toml::Value::Float(*i as f64);
        }
        table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("[{section}] must be a table")))?
            .insert(key.to_string(), value);
        applied.push(format!("{section}.{key}"));
    }
    Ok(applied)
}

impl Config {
    /// Parses TOML text, then applies `DHG_` overrides from `vars`.
    pub fn from_toml_with(
        text: &str,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        check_keys(&table)?;
        apply_overrides(&mut table, vars)?;
        let cfg: Config = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, std::iter::empty())
    }

    /// Reads `path` (defaults when None) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::file(p, e))?,
            None => String::new(),
        };
        Self::from_toml_with(&text, std::env::vars())
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.loss.validate()?;
        self.tta.validate()?;
        self.ddpm.validate()?;
        self.metrics.validate()?;
        if !(self.contact.sharpness > 0.0) || !(0.0..=1.0).contains(&self.contact.threshold) {
            return Err(Error::Config(
                "contact needs sharpness > 0 and threshold in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the effective configuration's canonical TOML.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
        let round = Config::from_toml(&Config::default().to_toml()).unwrap();
        assert_eq!(round, Config::default());
    }

    #[test]
    fn sections_and_overrides() {
        let text = "[tta]\nsteps = 40\n[energy]\nlr = 0.01\n";
        let cfg = Config::from_toml_with(
            text,
            vars(&[
                ("DHG_TTA_STEPS", "80"),
                ("DHG_ENERGY_MAX_ITERS", "12"),
                ("DHG_TTA_LR", "1"),
                ("HOME", "/x"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.tta.steps, 80);
        assert_eq!(cfg.tta.lr, 1.0);
        assert_eq!(cfg.energy.lr, 0.01);
        assert_eq!(cfg.energy.max_iters, 12);
        let cfg = Config::from_toml_with("", vars(&[("DHG_TTA_TRANS_LR_SCALE", "0.5")])).unwrap();
        assert_eq!(cfg.tta.trans_lr_scale, 0.5);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(Config::from_toml("[nope]\nx = 1\n").is_err());
        assert!(Config::from_toml("[tta]\nstepz = 1\n").is_err());
        assert!(Config::from_toml("[tta]\nlr = -1.0\n").is_err());
        assert!(Config::from_toml("[tta\n").is_err());
        assert!(Config::from_toml_with("", vars(&[("DHG_TTA_NOPE", "1")])).is_err());
        assert!(Config::from_toml_with("", vars(&[("DHG_TTA_STEPS", "many")])).is_err());
    }

    #[test]
    fn digest_depends_only_on_content() {
        let a = Config::from_toml("[tta]\nsteps = 40\n").unwrap();
        let b = Config::from_toml("[tta]\n# comment\nsteps    = 40\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), Config::default().digest());
        assert_eq!(a.digest().len(), 64);
    }
}
