//! Run configuration: one JSON file layered over built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::eval::{LogRegHyper, SplitPlan, DEFAULT_TOP_K};
use crate::pipelines::ApiWeighting;
use crate::pv::Hyperparams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("malformed config: key {key}: {message}")]
    Malformed { key: String, message: String },
    #[error("unknown config key {0}")]
    UnknownKey(String),
    #[error("missing value for key {0}")]
    MissingValue(String),
}

impl ConfigError {
    fn malformed(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Malformed {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Output locations, relative paths being resolved against the run's output
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub raw_dir: PathBuf,
    pub corpus_dir: PathBuf,
    pub model_dir: PathBuf,
    pub vectors_dir: PathBuf,
    pub report_dir: PathBuf,
    /// Labeled developer list (`{developer_id, role}` lines) used when no
    /// fixture directory is given.
    pub developers: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            raw_dir: "raw".into(),
            corpus_dir: "corpus".into(),
            model_dir: "models".into(),
            vectors_dir: "vectors".into(),
            report_dir: "reports".into(),
            developers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerSettings {
    pub requests_per_second: f64,
    pub burst: u32,
    pub max_retries: u32,
    pub max_file_bytes: usize,
    /// Fetch only commits after this ISO-8601 timestamp.
    pub since: Option<String>,
}

impl Default for MinerSettings {
    fn default() -> Self {
        MinerSettings {
            requests_per_second: 1.0,
            burst: 5,
            max_retries: 5,
            max_file_bytes: crate::miner::DEFAULT_MAX_FILE_BYTES,
            since: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub repos: Hyperparams,
    pub issues: Hyperparams,
    pub apis: Hyperparams,
    /// Inference passes for unseen developers; the training epochs if unset.
    pub infer_epochs: Option<usize>,
    pub api_weighting: ApiWeighting,
    /// Use the trained API document vector for developers the API model saw.
    pub api_direct_fetch: bool,
    pub split: SplitPlan,
    pub classifier: LogRegHyper,
    pub tfidf_top_k: usize,
    pub pca_dims: Vec<usize>,
    /// Copied into every stage's seed.
    pub seed: u64,
    /// Copied into every model's worker count.
    pub workers: usize,
    pub miner: MinerSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            repos: Hyperparams::repos(),
            issues: Hyperparams::issues(),
            apis: Hyperparams::apis(),
            infer_epochs: None,
            api_weighting: ApiWeighting::Frequency,
            api_direct_fetch: false,
            split: SplitPlan::default(),
            classifier: LogRegHyper::default(),
            tfidf_top_k: DEFAULT_TOP_K,
            pca_dims: vec![50, 100, 200, 250, 300],
            seed: 1,
            workers: 1,
            miner: MinerSettings::default(),
        }
    }
}

impl RunConfig {
    /// Copies the run-wide seed and worker count into each stage.
    pub fn propagate(&mut self) {
        for h in [&mut self.repos, &mut self.issues, &mut self.apis] {
            h.seed = self.seed;
            h.workers = self.workers;
        }
        self.split.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, h) in [("repos", &self.repos), ("issues", &self.issues), ("apis", &self.apis)] {
            h.validate().map_err(|e| {
                let msg = e.to_string();
                let field = msg
                    .split_whitespace()
                    .find_map(|w| {
                        let w = w.trim_matches(|c: char| !c.is_ascii_alphanumeric() && c != '_');
                        serde_json::to_value(h).ok()?.get(w).map(|_| w.to_string())
                    })
                    .map_or(key.to_string(), |f| format!("{key}.{f}"));
                ConfigError::malformed(&field, msg)
            })?;
        }
        self.split
            .validate()
            .map_err(|e| ConfigError::malformed("split.ratios", e.to_string()))?;
        self.classifier
            .validate()
            .map_err(|e| ConfigError::malformed("classifier", e.to_string()))?;
        if self.tfidf_top_k == 0 {
            return Err(ConfigError::malformed("tfidf_top_k", "must be positive"));
        }
        if self.pca_dims.contains(&0) {
            return Err(ConfigError::malformed("pca_dims", "dimensions must be positive"));
        }
        if self.workers == 0 {
            return Err(ConfigError::malformed("workers", "must be positive"));
        }
        if self.infer_epochs == Some(0) {
            return Err(ConfigError::malformed("infer_epochs", "must be positive"));
        }
        if !(self.miner.requests_per_second > 0.0) || self.miner.burst == 0 {
            return Err(ConfigError::malformed("miner", "rate and burst must be positive"));
        }
        Ok(())
    }
}

/// Parses `text` over the defaults. With `strict`, keys that don't exist in
/// the configuration are errors; otherwise they are ignored with a warning.
pub fn parse_config(text: &str, strict: bool) -> Result<RunConfig, ConfigError> {
    let user: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(user) = user else {
        return Err(ConfigError::Syntax {
            line: 1,
            column: 1,
            message: "top level must be an object".into(),
        });
    };
    let defaults = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    let mut merged = defaults.clone();
    let mut leaves = Vec::new();
    merge(&mut merged, &defaults, &user, "", strict, &mut leaves)?;

    let mut config: RunConfig = match serde_json::from_value(merged) {
        Ok(c) => c,
        Err(e) => {
            // Name the first user key whose value alone fails to deserialize.
            for (key, value) in &leaves {
                let mut probe = defaults.clone();
                set_path(&mut probe, key, value.clone());
                if let Err(err) = serde_json::from_value::<RunConfig>(probe) {
                    return Err(ConfigError::malformed(key, err.to_string()));
                }
            }
            return Err(ConfigError::malformed("<root>", e.to_string()));
        }
    };
    config.propagate();
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, strict: bool) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, strict)
}

fn merge(
    target: &mut Value,
    defaults: &Value,
    user: &Map<String, Value>,
    prefix: &str,
    strict: bool,
    leaves: &mut Vec<(String, Value)>,
) -> Result<(), ConfigError> {
    for (k, v) in user {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let Some(default) = defaults.get(k) else {
            if strict {
                return Err(ConfigError::UnknownKey(key));
            }
            log::warn!("ignoring unknown config key {key}");
            continue;
        };
        match (v, default) {
            (Value::Null, d) if !d.is_null() => return Err(ConfigError::MissingValue(key)),
            (Value::Object(inner), Value::Object(_)) => {
                merge(&mut target[k.as_str()], default, inner, &key, strict, leaves)?;
            }
            _ => {
                target[k.as_str()] = v.clone();
                leaves.push((key, v.clone()));
            }
        }
    }
    Ok(())
}

fn set_path(root: &mut Value, dotted: &str, value: Value) {
    let mut node = root;
    let mut parts = dotted.split('.').peekable();
    while let Some(p) = parts.next() {
        if parts.peek().is_none() {
            node[p] = value;
            return;
        }
        node = &mut node[p];
    }
}
