//! Config file loading: defaults, then the JSON file, then flags.

use std::path::Path;

use scissor::embed::{BlobSpec, SyntheticSpec};
use scissor::pipeline::ExperimentConfig;
use serde_json::Value;

use crate::CliError;

/// Bundled planted-bias benchmark.
pub const PLANTED_BIAS: &str = include_str!("../../../configs/planted_bias.json");

/// Default config with every optional section filled in, so nested keys can be checked.
fn template() -> Value {
    let mut cfg = ExperimentConfig::default();
    let blob = BlobSpec { dispersion: 1.0, std_dev: 0.05, size: 200, skew: 1.0 };
    cfg.synthetic = Some(SyntheticSpec::uniform_blobs(32, 2, 1, blob, 0));
    cfg.cluster.sparsify_top_k = Some(0);
    cfg.train.hopkins_probes = Some(0);
    serde_json::to_value(cfg).expect("config serializes")
}

fn unknown_keys(user: &Value, template: &Value, path: &str, out: &mut Vec<String>) {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match (user, template) {
        (Value::Object(u), Value::Object(t)) => {
            for (k, v) in u {
                match t.get(k) {
                    Some(tv) => unknown_keys(v, tv, &join(k), out),
                    None => out.push(join(k)),
                }
            }
        }
        (Value::Array(u), Value::Array(t)) if !t.is_empty() => {
            for (i, v) in u.iter().enumerate() {
                unknown_keys(v, &t[0], &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

/// Parses a config document, listing every unknown key at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("config is not valid JSON: {e}")))?;
    if !value.is_object() {
        return Err(CliError::config("config must be a JSON object".into()));
    }
    let mut keys = Vec::new();
    unknown_keys(&value, &template(), "", &mut keys);
    if !keys.is_empty() {
        return Err(CliError::Config { message: format!("unknown config keys: {}", keys.join(", ")), keys });
    }
    serde_json::from_value(value).map_err(|e| CliError::config(format!("invalid config: {e}")))
}

/// Overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub remap: Option<String>,
}

pub fn resolve(path: Option<&Path>, flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(b) = &flags.backend {
        cfg.cluster.backend = b.parse().map_err(|e: scissor::Error| CliError::config(e.to_string()))?;
    }
    if let Some(r) = &flags.remap {
        cfg.remap.backend = r.parse().map_err(|e: scissor::Error| CliError::config(e.to_string()))?;
    }
    cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(ExperimentConfig { synthetic: cfg.resolved_synthetic(), ..cfg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses() {
        let cfg = parse_config(PLANTED_BIAS).unwrap();
        assert_eq!(cfg.synthetic.unwrap().blobs.len(), 6);
        assert_eq!(cfg.cluster.sparsify_top_k, Some(20));
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let text = r#"{"seed": 1, "colour": 2, "train": {"lr": 0.1, "lrr": 3}, "synthetic": {"dim": 4,
            "label_count": 2, "seed": 0, "blobs": [{"dispersion": 1, "std_dev": 0.1, "size": 5, "skew": 1, "tilt": 0}]}}"#;
        match parse_config(text).unwrap_err() {
            CliError::Config { keys, .. } => assert_eq!(keys, ["colour", "synthetic.blobs[0].tilt", "train.lrr"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(parse_config("{}").unwrap(), ExperimentConfig::default());
    }
}
