//! The run configuration file: one TOML tree for every subcommand.

use serde::{Deserialize, Serialize};

use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::train::{Phase, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    /// Fine-tuning settings per λ; `lambda` inside is replaced.
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory with train/, val/ and test/ subdirectories.
    pub data_dir: String,
    pub synthetic: SyntheticSpec,
    pub model: ModelConfig,
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
    pub rd_sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::desk();
        let mut sweep = TrainConfig::for_phase(Phase::Finetune);
        // the λ trade-off needs a trainable encoder; see README
        sweep.freeze_encoder = false;
        Self {
            data_dir: "data".into(),
            synthetic: SyntheticSpec::desk(model.channels, model.height, model.width, 0),
            model,
            pretrain: TrainConfig::pretrain(),
            finetune: TrainConfig::finetune(),
            rd_sweep: SweepConfig {
                lambdas: vec![0.1, 1.0, 10.0],
                train: sweep,
            },
        }
    }
}

/// Sets `path` (dot separated) in `root` to `raw`, parsed as a TOML value
/// when possible and as a string otherwise.
pub fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut keys = path.split('.').peekable();
    let mut node = root;
    while let Some(key) = keys.next() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{path}: {key} is not inside a table")))?;
        if keys.peek().is_none() {
            if !table.contains_key(key) {
                return Err(Error::Config(format!("unknown configuration key {path}")));
            }
            table.insert(key.to_string(), value);
            return Ok(());
        }
        node = table
            .get_mut(key)
            .ok_or_else(|| Error::Config(format!("unknown configuration key {path}")))?;
    }
    Err(Error::Config("empty override key".into()))
}

impl RunConfig {
    /// Defaults, then the file (if any), then `key=value` overrides.
    pub fn resolve(file: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut root = toml::Value::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(text) = file {
            let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            merge(&mut root, toml::Value::Table(user), "")?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            apply_override(&mut root, k.trim(), v.trim())?;
        }
        let cfg: Self = root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.model.validate()?;
        cfg.synthetic.validate()?;
        for t in [&cfg.pretrain, &cfg.finetune, &cfg.rd_sweep.train] {
            t.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

/// Recursively overlays `src` on `dst`; keys absent from `dst` are errors.
fn merge(dst: &mut toml::Value, src: toml::Value, prefix: &str) -> Result<()> {
    match (dst, src) {
        (toml::Value::Table(d), toml::Value::Table(s)) => {
            for (k, v) in s {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                let slot = d
                    .get_mut(&k)
                    .ok_or_else(|| Error::Config(format!("unknown configuration key {path}")))?;
                merge(slot, v, &path)?;
            }
            Ok(())
        }
        (d, s) => {
            *d = s;
            Ok(())
        }
    }
}
