//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use posiqueue::actions::{ActionConfig, ActionKind, ActionLog, ActionRecord, ReasonStore, DEFAULT_REASONS};
use posiqueue::engine::{Engine as CoreEngine, EngineConfig, Models, DEFAULT_PAGE_SIZE};
use posiqueue::model::{score_from_probability, train_and_evaluate, GbdtModel, TrainConfig};
use posiqueue::queue::{FilterSpec, SortKey, DEFAULT_NEWCOMER_DAYS};
use posiqueue::textfeat::{extract_all, extract_text, feature_names, FeatureCache, FeatureConfig};
use posiqueue::{generate_synthetic_corpus, Kind, SyntheticConfig};
use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn err(e: posiqueue::Error) -> PyErr {
    let msg = format!("{}: {e}", e.code());
    match e {
        posiqueue::Error::Io { .. } => PyIOError::new_err(msg),
        posiqueue::Error::NotFound { .. } => PyKeyError::new_err(msg),
        posiqueue::Error::UndefinedAuc(_) | posiqueue::Error::ModelFormat(_) => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_kind(kind: &str) -> PyResult<Kind> {
    match kind {
        "post" => Ok(Kind::Post),
        "comment" => Ok(Kind::Comment),
        other => Err(PyValueError::new_err(format!("kind must be post or comment, got {other:?}"))),
    }
}

#[pyclass(module = "posiqueue_py")]
#[derive(Clone)]
struct Corpus {
    inner: posiqueue::Corpus,
}

#[pymethods]
impl Corpus {
    #[staticmethod]
    fn load_dir(path: PathBuf) -> PyResult<Self> {
        Ok(Corpus { inner: posiqueue::Corpus::load_dir(&path).map_err(err)? })
    }

    #[staticmethod]
    fn ingest(contributions: PathBuf, authors: PathBuf) -> PyResult<Self> {
        Ok(Corpus { inner: posiqueue::Corpus::ingest(&contributions, &authors).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n_posts=200, seed=0, signal_strength=0.0))]
    fn synthetic(n_posts: usize, seed: u64, signal_strength: f64) -> PyResult<Self> {
        let cfg = SyntheticConfig { n_posts, seed, signal_strength, ..Default::default() };
        Ok(Corpus { inner: generate_synthetic_corpus(&cfg).map_err(err)? })
    }

    fn write_dir(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_dir(&path).map_err(err)
    }

    #[getter]
    fn n_posts(&self) -> usize {
        self.inner.count(Kind::Post)
    }

    #[getter]
    fn n_comments(&self) -> usize {
        self.inner.count(Kind::Comment)
    }

    #[getter]
    fn n_authors(&self) -> usize {
        self.inner.authors().len()
    }

    fn post_ids(&self) -> Vec<String> {
        self.inner.posts().map(|p| p.id.clone()).collect()
    }

    fn get(&self, py: Python<'_>, id: &str) -> PyResult<PyObject> {
        to_py(py, self.inner.contribution(id).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.contributions().len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus(posts={}, comments={}, authors={})", self.n_posts(), self.n_comments(), self.n_authors())
    }
}

#[pyclass(module = "posiqueue_py")]
struct Features {
    cache: FeatureCache,
    config: FeatureConfig,
}

#[pymethods]
impl Features {
    fn __len__(&self) -> usize {
        self.cache.len()
    }

    fn vector(&self, id: &str) -> PyResult<Vec<f64>> {
        self.cache
            .get(id)
            .map(|f| f.to_vec())
            .ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }

    #[getter]
    fn embedding_dim(&self) -> usize {
        self.config.embedding_dim
    }
}

/// Extracts the feature vector of every contribution.
#[pyfunction]
#[pyo3(signature = (corpus, embedding_dim=None, lexicon_dir=None))]
fn extract_features(corpus: &Corpus, embedding_dim: Option<usize>, lexicon_dir: Option<PathBuf>) -> PyResult<Features> {
    let mut config = FeatureConfig { lexicon_dir, ..FeatureConfig::default() };
    if let Some(d) = embedding_dim {
        config.embedding_dim = d;
    }
    config.validate().map_err(err)?;
    let lex = config.load_lexicons().map_err(err)?;
    Ok(Features { cache: extract_all(&corpus.inner, &lex, &config), config })
}

#[pyclass(module = "posiqueue_py")]
#[derive(Clone)]
struct Model {
    inner: GbdtModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model { inner: GbdtModel::load(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn feature_order(&self) -> Vec<String> {
        self.inner.feature_order.clone()
    }

    fn predict_probability(&self, features: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_probability(&features).map_err(err)
    }

    /// Desirability score (0-100) of a raw text.
    #[pyo3(signature = (text, lexicon_dir=None))]
    fn score_text(&self, text: &str, lexicon_dir: Option<PathBuf>) -> PyResult<u8> {
        let embedding_dim = self.inner.feature_order.iter().filter(|n| n.starts_with("emb:")).count();
        let config = FeatureConfig { embedding_dim, lexicon_dir, ..FeatureConfig::default() };
        let lex = config.load_lexicons().map_err(err)?;
        if feature_names(&lex, &config) != self.inner.feature_order {
            return Err(PyValueError::new_err("model features do not match the lexicons in use"));
        }
        let p = self.inner.predict_probability(&extract_text(text, &lex, &config).to_vec()).map_err(err)?;
        Ok(score_from_probability(p))
    }
}

/// Trains on the train split and evaluates on the held-out split.
/// Returns `(model, report)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (corpus, features, kind, rounds=None, max_depth=None, learning_rate=None, seed=None))]
fn train(
    py: Python<'_>,
    corpus: &Corpus,
    features: &Features,
    kind: &str,
    rounds: Option<usize>,
    max_depth: Option<usize>,
    learning_rate: Option<f64>,
    seed: Option<u64>,
) -> PyResult<(Model, PyObject)> {
    let mut cfg = TrainConfig::default();
    if let Some(r) = rounds {
        cfg.rounds = r;
    }
    if let Some(d) = max_depth {
        cfg.max_depth = d;
    }
    if let Some(lr) = learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let kind = parse_kind(kind)?;
    let (outcome, report) =
        py.allow_threads(|| train_and_evaluate(&corpus.inner, kind, &features.cache, &cfg)).map_err(err)?;
    Ok((Model { inner: outcome.model }, to_py(py, &report)?))
}

#[pyclass(module = "posiqueue_py", unsendable)]
struct Engine {
    inner: CoreEngine,
    moderator: String,
}

fn now_ts(now: Option<i64>) -> i64 {
    now.unwrap_or_else(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0)
    })
}

#[pymethods]
impl Engine {
    /// Without `action_log` and `reasons_file`, actions and custom reasons
    /// live in memory only.
    #[new]
    #[pyo3(signature = (corpus, post_model, comment_model, action_log=None, reasons_file=None, moderator="posiqueue_mod".to_string(), embedding_dim=None))]
    fn new(
        corpus: &Corpus,
        post_model: &Model,
        comment_model: &Model,
        action_log: Option<PathBuf>,
        reasons_file: Option<PathBuf>,
        moderator: String,
        embedding_dim: Option<usize>,
    ) -> PyResult<Self> {
        let embedding_dim = embedding_dim
            .unwrap_or_else(|| post_model.inner.feature_order.iter().filter(|n| n.starts_with("emb:")).count());
        let config = EngineConfig {
            features: FeatureConfig { embedding_dim, ..FeatureConfig::default() },
            actions: ActionConfig::default(),
            newcomer_threshold_days: DEFAULT_NEWCOMER_DAYS,
        };
        let lex = config.features.load_lexicons().map_err(err)?;
        let log = match action_log {
            Some(p) => ActionLog::open(&p).map_err(err)?,
            None => ActionLog::in_memory(),
        };
        let reasons = match reasons_file {
            Some(p) => ReasonStore::open(&DEFAULT_REASONS, &p).map_err(err)?,
            None => ReasonStore::with_defaults(),
        };
        let models = Models { post: post_model.inner.clone(), comment: comment_model.inner.clone() };
        let inner = CoreEngine::new(corpus.inner.clone(), models, lex, config, log, reasons).map_err(err)?;
        Ok(Engine { inner, moderator })
    }

    /// One page of the filtered, sorted queue.
    #[pyo3(signature = (filters=None, sort="newest", page=1, page_size=DEFAULT_PAGE_SIZE, now=None))]
    fn queue(
        &self,
        py: Python<'_>,
        filters: Option<&Bound<'_, PyDict>>,
        sort: &str,
        page: usize,
        page_size: usize,
        now: Option<i64>,
    ) -> PyResult<PyObject> {
        let spec: FilterSpec = match filters {
            Some(d) => from_py(py, d.as_any())?,
            None => FilterSpec::default(),
        };
        let sort: SortKey = sort.parse().map_err(err)?;
        let page = self.inner.queue_page(&spec, sort, page, page_size, now_ts(now)).map_err(err)?;
        to_py(py, &page)
    }

    fn score(&self, id: &str) -> PyResult<u8> {
        self.inner.score(id).map_err(err)
    }

    #[pyo3(signature = (post_id, now=None))]
    fn post_detail(&self, py: Python<'_>, post_id: &str, now: Option<i64>) -> PyResult<PyObject> {
        to_py(py, &self.inner.post_detail(post_id, now_ts(now)).map_err(err)?)
    }

    fn post_hover(&self, py: Python<'_>, post_id: &str) -> PyResult<PyObject> {
        to_py(py, &self.inner.post_hover(post_id).map_err(err)?)
    }

    fn comment_hover(&self, py: Python<'_>, comment_id: &str) -> PyResult<PyObject> {
        to_py(py, &self.inner.comment_hover(comment_id).map_err(err)?)
    }

    fn filter_meta(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, self.inner.filter_meta())
    }

    fn reasons(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.reasons().list())
    }

    /// Applies one of curate, uncurate, award, upvote, highlight,
    /// unhighlight or flair.
    #[pyo3(signature = (action, target_id, payload=None, now=None))]
    fn act(
        &mut self,
        py: Python<'_>,
        action: &str,
        target_id: &str,
        payload: Option<&Bound<'_, PyDict>>,
        now: Option<i64>,
    ) -> PyResult<PyObject> {
        let kind: ActionKind = action.parse().map_err(err)?;
        if kind == ActionKind::Explain {
            return Err(PyValueError::new_err("use explain() for explanations"));
        }
        let mut rec = ActionRecord::new(now_ts(now), self.moderator.clone(), kind, target_id);
        if let Some(p) = payload {
            rec = rec.with_payload(from_py(py, p.as_any())?);
        }
        to_py(py, &self.inner.perform(rec).map_err(err)?)
    }

    #[pyo3(signature = (target_id, reasons, custom=Vec::new()))]
    fn preview_explanation(&self, target_id: &str, reasons: Vec<String>, custom: Vec<String>) -> PyResult<String> {
        self.inner.preview_explanation(target_id, &reasons, &custom).map_err(err)
    }

    #[pyo3(signature = (target_id, reasons, custom=Vec::new(), now=None))]
    fn explain(
        &mut self,
        py: Python<'_>,
        target_id: &str,
        reasons: Vec<String>,
        custom: Vec<String>,
        now: Option<i64>,
    ) -> PyResult<PyObject> {
        let moderator = self.moderator.clone();
        let out = self
            .inner
            .explain(target_id, &reasons, &custom, &moderator, now_ts(now))
            .map_err(err)?;
        to_py(py, &out)
    }

    /// Best-of thread for the period containing `now`.
    #[pyo3(signature = (now=None))]
    fn bestof(&self, py: Python<'_>, now: Option<i64>) -> PyResult<PyObject> {
        to_py(py, &self.inner.bestof_at(now_ts(now)))
    }

    #[getter]
    fn log_len(&self) -> usize {
        self.inner.log().len()
    }
}

#[pymodule]
fn posiqueue_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<Features>()?;
    m.add_class::<Model>()?;
    m.add_class::<Engine>()?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add("SORT_KEYS", SortKey::ALL.iter().map(|k| k.token()).collect::<Vec<_>>())?;
    Ok(())
}
