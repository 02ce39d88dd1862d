//! JSON training configuration. Every documented key must be present; the
//! error for a missing key names the value it would default to.

use hasoc_core::corpus::SplitMode;
use hasoc_core::model::EncoderKind;
use hasoc_core::train::ModelSettings;
use hasoc_core::{OptimHyper, Task, TrainConfig, WeightScheme};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

/// Required keys and their default values, in documentation order.
pub fn defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("seed", json!(42)),
        ("train_fraction", json!(0.9)),
        ("batch_size", json!(8)),
        ("epochs", json!(4)),
        ("lr", json!(2e-5)),
        ("beta1", json!(0.9)),
        ("beta2", json!(0.999)),
        ("eps", json!(1e-8)),
        ("weight_decay", json!(0.01)),
        ("weight_scheme", json!("inverse_frequency_normalized")),
        ("lowercase", json!(true)),
        ("min_token_freq", json!(2)),
        ("max_len_percentile", json!(99)),
        ("max_len", Value::Null),
        ("embed_dim", json!(32)),
        ("encoder", json!("bag")),
        ("num_heads", json!(2)),
        ("ffn_dim", json!(64)),
    ]
}

/// Keys that may be omitted.
const OPTIONAL: &[(&str, &str)] = &[("split", "stratified")];

pub fn default_document() -> Value {
    let mut map: Map<String, Value> = defaults().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    for (k, v) in OPTIONAL {
        map.insert(k.to_string(), json!(v));
    }
    Value::Object(map)
}

struct Keys<'a> {
    map: &'a Map<String, Value>,
    defaults: Vec<(&'static str, Value)>,
}

impl Keys<'_> {
    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<T, String> {
        let value = self.map.get(key).ok_or_else(|| {
            let default = self
                .defaults
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default();
            format!("missing config key `{key}` (default: {default})")
        })?;
        serde_json::from_value(value.clone()).map_err(|e| format!("config key `{key}`: {e}"))
    }

    fn get_or<T: DeserializeOwned>(&self, key: &str, default: &str) -> Result<T, String> {
        match self.map.get(key) {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| format!("config key `{key}`: {e}")),
            None => serde_json::from_value(json!(default)).map_err(|e| e.to_string()),
        }
    }
}

pub fn parse(text: &str, task: Task) -> Result<TrainConfig, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let map = doc.as_object().ok_or("config must be a JSON object")?;
    let keys = Keys { map, defaults: defaults() };
    for k in map.keys() {
        let known = keys.defaults.iter().any(|(d, _)| d == k) || OPTIONAL.iter().any(|(o, _)| o == k);
        if !known {
            return Err(format!("unknown config key `{k}`"));
        }
    }

    let percentile: f64 = keys.get("max_len_percentile")?;
    let config = TrainConfig {
        task,
        seed: keys.get("seed")?,
        train_fraction: keys.get("train_fraction")?,
        split: keys.get_or::<SplitMode>("split", "stratified")?,
        batch_size: keys.get("batch_size")?,
        epochs: keys.get("epochs")?,
        optimizer: OptimHyper {
            lr: keys.get("lr")?,
            beta1: keys.get("beta1")?,
            beta2: keys.get("beta2")?,
            eps: keys.get("eps")?,
            weight_decay: keys.get("weight_decay")?,
        },
        weight_scheme: keys.get::<WeightScheme>("weight_scheme")?,
        lowercase: keys.get("lowercase")?,
        min_token_freq: keys.get("min_token_freq")?,
        max_len_percentile: percentile,
        max_len: keys.get("max_len")?,
        model: ModelSettings {
            embed_dim: keys.get("embed_dim")?,
            encoder: keys.get::<EncoderKind>("encoder")?,
            num_heads: keys.get("num_heads")?,
            ffn_dim: keys.get("ffn_dim")?,
        },
        execution: Default::default(),
    };
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}
