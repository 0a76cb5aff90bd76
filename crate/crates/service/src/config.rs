use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use posiqueue::actions::{ActionConfig, ActionLog, Period, ReasonStore, DEFAULT_FLAIRS, DEFAULT_REASONS, HIGHLIGHT_CAPACITY};
use posiqueue::engine::{Engine, EngineConfig, Models};
use posiqueue::model::GbdtModel;
use posiqueue::queue::DEFAULT_NEWCOMER_DAYS;
use posiqueue::textfeat::{FeatureConfig, DEFAULT_EMBEDDING_DIM};
use posiqueue::Corpus;
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "POSIQUEUE_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Service settings. Relative paths are resolved against the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub corpus_dir: PathBuf,
    pub post_model: PathBuf,
    pub comment_model: PathBuf,
    pub action_log: PathBuf,
    pub reasons_file: PathBuf,
    #[serde(default)]
    pub lexicon_dir: Option<PathBuf>,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_newcomer_days")]
    pub newcomer_threshold_days: f64,
    #[serde(default)]
    pub bestof_period: Period,
    #[serde(default = "default_flairs")]
    pub flairs: Vec<String>,
    #[serde(default = "default_reasons")]
    pub default_reasons: Vec<String>,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_moderator")]
    pub moderator: String,
    /// Static bearer token; unset disables authentication.
    #[serde(default)]
    pub auth_token: Option<String>,
    /// Allowed console origins; empty allows any origin.
    #[serde(default)]
    pub cors_origins: Vec<String>,
}

fn default_embedding_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

fn default_newcomer_days() -> f64 {
    DEFAULT_NEWCOMER_DAYS
}

fn default_flairs() -> Vec<String> {
    DEFAULT_FLAIRS.iter().map(|s| s.to_string()).collect()
}

fn default_reasons() -> Vec<String> {
    DEFAULT_REASONS.iter().map(|s| s.to_string()).collect()
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

fn default_port() -> u16 {
    8080
}

fn default_moderator() -> String {
    "posiqueue_mod".into()
}

impl ServiceConfig {
    /// Minimal config for a data directory laid out by the CLI.
    pub fn for_dir(dir: &Path) -> Self {
        ServiceConfig {
            corpus_dir: dir.join("corpus"),
            post_model: dir.join("post.model.json"),
            comment_model: dir.join("comment.model.json"),
            action_log: dir.join("actions.jsonl"),
            reasons_file: dir.join("reasons.jsonl"),
            lexicon_dir: None,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            newcomer_threshold_days: DEFAULT_NEWCOMER_DAYS,
            bestof_period: Period::Weekly,
            flairs: default_flairs(),
            default_reasons: default_reasons(),
            bind: default_bind(),
            port: default_port(),
            moderator: default_moderator(),
            auth_token: None,
            cors_origins: Vec::new(),
        }
    }

    /// `POSIQUEUE_CONFIG` wins over `given` when set.
    pub fn resolve_path(given: Option<&Path>) -> Option<PathBuf> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Some(PathBuf::from(p)),
            _ => given.map(Path::to_path_buf),
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ServiceConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: base_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.rebase(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg: ServiceConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_dir);
        fix(&mut self.post_model);
        fix(&mut self.comment_model);
        fix(&mut self.action_log);
        fix(&mut self.reasons_file);
        if let Some(d) = &mut self.lexicon_dir {
            fix(d);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let must_exist = [
            ("corpus_dir", &self.corpus_dir),
            ("post_model", &self.post_model),
            ("comment_model", &self.comment_model),
        ];
        for (name, p) in must_exist {
            if !p.exists() {
                return Err(ConfigError::Invalid(format!("{name} {} does not exist", p.display())));
            }
        }
        if let Some(d) = &self.lexicon_dir {
            if !d.is_dir() {
                return Err(ConfigError::Invalid(format!("lexicon_dir {} is not a directory", d.display())));
            }
        }
        if self.moderator.trim().is_empty() {
            return Err(ConfigError::Invalid("moderator must not be empty".into()));
        }
        if self.flairs.is_empty() {
            return Err(ConfigError::Invalid("flairs must not be empty".into()));
        }
        if matches!(&self.auth_token, Some(t) if t.trim().is_empty()) {
            return Err(ConfigError::Invalid("auth_token must not be blank".into()));
        }
        self.addr()?;
        Ok(())
    }

    pub fn addr(&self) -> Result<SocketAddr, ConfigError> {
        format!("{}:{}", self.bind, self.port)
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("bind address {}:{}: {e}", self.bind, self.port)))
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            features: FeatureConfig {
                embedding_dim: self.embedding_dim,
                lexicon_dir: self.lexicon_dir.clone(),
                ..FeatureConfig::default()
            },
            actions: ActionConfig {
                period: self.bestof_period,
                flairs: self.flairs.clone(),
                highlight_capacity: HIGHLIGHT_CAPACITY,
            },
            newcomer_threshold_days: self.newcomer_threshold_days,
        }
    }

    /// Loads the corpus, models, reasons and log, and replays the log.
    pub fn build_engine(&self) -> posiqueue::Result<Engine> {
        let engine_config = self.engine_config();
        let lexicons = engine_config.features.load_lexicons()?;
        let corpus = Corpus::load_dir(&self.corpus_dir)?;
        let models = Models {
            post: GbdtModel::load(&self.post_model)?,
            comment: GbdtModel::load(&self.comment_model)?,
        };
        let log = ActionLog::open(&self.action_log)?;
        let reasons = ReasonStore::open(&self.default_reasons, &self.reasons_file)?;
        Engine::new(corpus, models, lexicons, engine_config, log, reasons)
    }
}
