//! Run configuration: a TOML file of `key = value` pairs plus command-line
//! overrides, where the overrides win.
//!
//! ```toml
//! corpus = "data/corpus.jsonl"
//! split = "test"
//! backend = "stub"            # or "service"
//! endpoint = "http://localhost:8000"   # falls back to INQPIPE_ENDPOINT
//! seed = 13
//! out = "runs/seed13"
//! strategies = ["base", "span", "type_s", "type_r", "type_o"]
//! workers = 4
//!
//! [decode]
//! top_k = 5
//! min_tokens = 5
//! max_tokens = 30
//! length_penalty = 2.0
//! ```
//!
//! Relative paths are resolved against the working directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{DecodeParams, Split};
use crate::modelio::{HttpBackend, HttpConfig, ModelBackend, StubBackend, ENDPOINT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("usage error: {0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Stub,
    Service,
}

impl FromStr for BackendKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stub" => Ok(BackendKind::Stub),
            "service" => Ok(BackendKind::Service),
            other => Err(ConfigError::Usage(format!("unknown backend {other:?} (stub | service)"))),
        }
    }
}

/// Generation and selection strategies.
///
/// `per_type` only generates (one question per generatable type); the three
/// `type_*` strategies choose among those generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Base,
    Span,
    TypeS,
    TypeR,
    TypeO,
    #[serde(alias = "per-type")]
    PerType,
}

impl StrategyName {
    pub const ALL: [StrategyName; 6] = [
        StrategyName::Base,
        StrategyName::Span,
        StrategyName::TypeS,
        StrategyName::TypeR,
        StrategyName::TypeO,
        StrategyName::PerType,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Base => "base",
            StrategyName::Span => "span",
            StrategyName::TypeS => "type_s",
            StrategyName::TypeR => "type_r",
            StrategyName::TypeO => "type_o",
            StrategyName::PerType => "per_type",
        }
    }

    /// Whether the strategy needs the six per-type generations.
    pub fn needs_typed(self) -> bool {
        matches!(
            self,
            StrategyName::TypeS | StrategyName::TypeR | StrategyName::TypeO | StrategyName::PerType
        )
    }

    pub fn selects(self) -> bool {
        self != StrategyName::PerType
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        StrategyName::ALL
            .into_iter()
            .find(|n| n.as_str() == norm)
            .ok_or_else(|| {
                ConfigError::Usage(format!(
                    "unknown strategy {s:?} (base | span | type_s | type_r | type_o | per_type)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Corpus split the commands operate on.
    pub split: Split,
    /// Use at most this many instances of the split.
    pub limit: Option<usize>,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub strategies: Vec<StrategyName>,
    pub workers: usize,
    /// In-flight request cap per service endpoint.
    pub max_concurrent: usize,
    pub timeout_secs: u64,
    pub retries: u32,
    pub decode: DecodeParams,
    /// Generations to select from; defaults to `<out>/generations.jsonl`.
    pub generations: Option<PathBuf>,
    /// Selection runs to evaluate; defaults to `<out>/selections.jsonl`.
    pub selections: Vec<PathBuf>,
    /// Tab-separated `model<TAB>score` lines from an external BERTScore run.
    pub f_bert: Option<PathBuf>,
    pub type_labels: Option<PathBuf>,
    pub rankings: Option<PathBuf>,
    pub human_eval: Option<PathBuf>,
    /// Share of ranker examples used for training (rounded up).
    pub train_fraction: f64,
    pub epochs: u64,
    pub batch_size: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            split: Split::Test,
            limit: None,
            backend: BackendKind::Stub,
            endpoint: None,
            seed: 0,
            out: PathBuf::from("out"),
            strategies: vec![
                StrategyName::Base,
                StrategyName::Span,
                StrategyName::TypeS,
                StrategyName::TypeR,
                StrategyName::TypeO,
            ],
            workers: 4,
            max_concurrent: 8,
            timeout_secs: 60,
            retries: 3,
            decode: DecodeParams::default(),
            generations: None,
            selections: Vec::new(),
            f_bert: None,
            type_labels: None,
            rankings: None,
            human_eval: None,
            train_fraction: 0.9,
            epochs: 20,
            batch_size: 8,
        }
    }
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub strategies: Vec<StrategyName>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(b) = o.backend {
            self.backend = b;
        }
        if !o.strategies.is_empty() {
            self.strategies = o.strategies.clone();
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.decode
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be >= 1".into()));
        }
        if self.max_concurrent == 0 {
            return Err(ConfigError::Invalid("max_concurrent must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(ConfigError::Invalid("train_fraction must be in (0, 1]".into()));
        }
        if let Some(c) = &self.corpus {
            if !c.exists() {
                return Err(ConfigError::Invalid(format!("corpus {} does not exist", c.display())));
            }
        }
        Ok(())
    }

    /// Fails with a usage error when no strategy is configured.
    pub fn require_strategies(&self) -> Result<&[StrategyName], ConfigError> {
        if self.strategies.is_empty() {
            return Err(ConfigError::Usage("strategy list is empty".into()));
        }
        Ok(&self.strategies)
    }

    pub fn require_corpus(&self) -> Result<&Path, ConfigError> {
        let c = self
            .corpus
            .as_deref()
            .ok_or_else(|| ConfigError::Usage("no corpus configured".into()))?;
        if !c.exists() {
            return Err(ConfigError::Invalid(format!("corpus {} does not exist", c.display())));
        }
        Ok(c)
    }

    /// Endpoint from the configuration, else from [`ENDPOINT_ENV`].
    pub fn endpoint_url(&self) -> Option<String> {
        self.endpoint.clone().or_else(|| std::env::var(ENDPOINT_ENV).ok())
    }

    pub fn backend(&self) -> Result<Box<dyn ModelBackend>, ConfigError> {
        match self.backend {
            BackendKind::Stub => Ok(Box::new(StubBackend::new(self.seed))),
            BackendKind::Service => {
                let url = self.endpoint_url().ok_or_else(|| {
                    ConfigError::Invalid(format!("service backend needs `endpoint` or {ENDPOINT_ENV}"))
                })?;
                let mut http = HttpConfig::new(url);
                http.timeout = Duration::from_secs(self.timeout_secs);
                http.retries = self.retries;
                http.max_concurrent = self.max_concurrent;
                Ok(Box::new(HttpBackend::new(http)))
            }
        }
    }

    pub fn generations_path(&self) -> PathBuf {
        self.generations
            .clone()
            .unwrap_or_else(|| self.out.join("generations.jsonl"))
    }

    pub fn selection_paths(&self) -> Vec<PathBuf> {
        if self.selections.is_empty() {
            vec![self.out.join("selections.jsonl")]
        } else {
            self.selections.clone()
        }
    }
}
