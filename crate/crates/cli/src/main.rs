//! `posiqueue` command-line pipeline.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use posiqueue::actions::{parse_period, render_bestof, replay_log, ActionConfig, ActionLog, DEFAULT_FLAIRS};
use posiqueue::model::{
    build_labels, evaluate, render_table, score_from_probability, split_train_test, train_gbdt_traced, EvalReport,
    GbdtModel, TrainConfig, DECISION_THRESHOLD,
};
use posiqueue::textfeat::{
    extract_all, extract_text, feature_names, read_feature_cache, write_feature_cache, FeatureConfig,
    DEFAULT_EMBEDDING_DIM,
};
use posiqueue::{generate_synthetic_corpus, Corpus, Error, Kind, SyntheticConfig};
use posiqueue_service::{serve, shutdown_signal, ServiceConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "posiqueue", version, about = "Positive-moderation queue pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate contribution and author files and write a corpus directory.
    Ingest {
        #[arg(long)]
        contributions: PathBuf,
        #[arg(long)]
        authors: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus.
    Synth {
        /// TOML file with generator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_posts: Option<usize>,
        #[arg(long)]
        signal_strength: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract text features for every contribution.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        /// Lexicon directory; the built-in lexicons are used when omitted.
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EMBEDDING_DIM)]
        embedding_dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a desirability model for one kind.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_depth: usize,
        #[arg(long, default_value_t = 200)]
        rounds: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 10)]
        min_leaf: usize,
        #[arg(long, default_value_t = 0.8)]
        split_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Accuracy and AUC on the held-out split a model was trained beside.
    Eval {
        /// One model per kind; give the flag twice for posts and comments.
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Report file; defaults to the first model path with `.eval.json`.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Desirability score of one text.
    Score {
        #[arg(long)]
        model: PathBuf,
        /// File to read, or `-` for standard input.
        #[arg(long)]
        text: String,
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Render the best-of thread for a week (`2024-W05`) or month (`2024-03`).
    Bestof {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        period: String,
        /// Directory to write `bestof-<date>.md` into.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Flair names the log was recorded with.
        #[arg(long = "flair")]
        flairs: Vec<String>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn summary(corpus: &Corpus) -> String {
    format!(
        "posts={} comments={} authors={}",
        corpus.count(Kind::Post),
        corpus.count(Kind::Comment),
        corpus.authors().len()
    )
}

fn ingest(contributions: &Path, authors: &Path, out: &Path) -> CmdResult {
    let corpus = Corpus::ingest(contributions, authors)?;
    corpus.write_dir(out)?;
    println!("{}", summary(&corpus));
    Ok(())
}

fn synth(
    config: Option<&Path>,
    seed: Option<u64>,
    n_posts: Option<usize>,
    signal: Option<f64>,
    out: &Path,
) -> CmdResult {
    let mut cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            toml::from_str::<SyntheticConfig>(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => SyntheticConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = n_posts {
        cfg.n_posts = n;
    }
    if let Some(s) = signal {
        cfg.signal_strength = s;
    }
    let corpus = generate_synthetic_corpus(&cfg)?;
    corpus.write_dir(out)?;
    println!("{}", summary(&corpus));
    Ok(())
}

fn feature_config(lexicons: Option<&Path>, embedding_dim: usize) -> FeatureConfig {
    FeatureConfig {
        embedding_dim,
        lexicon_dir: lexicons.map(Path::to_path_buf),
        ..FeatureConfig::default()
    }
}

fn features(corpus: &Path, lexicons: Option<&Path>, embedding_dim: usize, out: &Path) -> CmdResult {
    let cfg = feature_config(lexicons, embedding_dim);
    cfg.validate()?;
    let lex = cfg.load_lexicons()?;
    let corpus = Corpus::load_dir(corpus)?;
    let cache = extract_all(&corpus, &lex, &cfg);
    write_feature_cache(out, &cache)?;
    println!("records={} features={}", cache.len(), feature_names(&lex, &cfg).len());
    Ok(())
}

fn train(corpus: &Path, features: &Path, kind: Kind, out: &Path, config: TrainConfig) -> CmdResult {
    config.validate()?;
    let corpus = Corpus::load_dir(corpus)?;
    let cache = read_feature_cache(features)?;
    let set = build_labels(&corpus, kind, &cache)?;
    let (train, test) = split_train_test(&set, &config)?;
    let outcome = train_gbdt_traced(&train, &config)?;
    outcome.model.save(out)?;
    let first = outcome.loss_trace.first().copied().unwrap_or(f64::NAN);
    let last = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "kind={kind} train={} test={} trees={} loss {first:.6} -> {last:.6}",
        train.len(),
        test.len(),
        outcome.model.trees.len()
    );
    Ok(())
}

fn eval_one(model_path: &Path, corpus: &Corpus, cache: &posiqueue::textfeat::FeatureCache) -> Result<EvalReport, Failure> {
    let model = GbdtModel::load(model_path)?;
    let set = build_labels(corpus, model.kind, cache)?;
    if set.feature_order != model.feature_order {
        return Err(Failure::Usage(format!(
            "{}: feature order does not match the feature cache",
            model_path.display()
        )));
    }
    let (_, test) = split_train_test(&set, &model.config)?;
    Ok(evaluate(&model, &test, DECISION_THRESHOLD)?)
}

fn eval(models: &[PathBuf], corpus_dir: &Path, features: &Path, report: Option<&Path>, as_json: bool) -> CmdResult {
    let corpus = Corpus::load_dir(corpus_dir)?;
    let cache = read_feature_cache(features)?;
    let mut posts = None;
    let mut comments = None;
    for m in models {
        let r = eval_one(m, &corpus, &cache)?;
        let slot = match r.kind {
            Kind::Post => &mut posts,
            Kind::Comment => &mut comments,
        };
        if slot.is_some() {
            return Err(Failure::Usage(format!("two {} models given", r.kind)));
        }
        *slot = Some(r);
    }
    let community = corpus
        .contributions()
        .first()
        .map(|c| c.subreddit.clone())
        .unwrap_or_else(|| "corpus".into());
    let reports: Vec<&EvalReport> = posts.iter().chain(comments.iter()).collect();
    let doc = json!({ "subreddit": community, "reports": reports });
    let report_path = match report {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = models[0].clone().into_os_string();
            p.push(".eval.json");
            PathBuf::from(p)
        }
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(&report_path, format!("{text}\n"))
        .map_err(|e| Failure::Runtime(format!("{}: {e}", report_path.display())))?;
    if as_json {
        println!("{text}");
    } else {
        print!("{}", render_table(&[(community, posts, comments)]));
    }
    Ok(())
}

fn read_text(source: &str) -> Result<String, Failure> {
    if source == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Runtime(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(source).map_err(|e| Failure::Usage(format!("{source}: {e}")))
    }
}

fn score(model_path: &Path, source: &str, lexicons: Option<&Path>, as_json: bool) -> CmdResult {
    let model = GbdtModel::load(model_path)?;
    let dim = model.feature_order.iter().filter(|n| n.starts_with("emb:")).count();
    let cfg = feature_config(lexicons, dim);
    let lex = cfg.load_lexicons()?;
    if feature_names(&lex, &cfg) != model.feature_order {
        return Err(Failure::Usage(format!(
            "{}: model features do not match the lexicons in use",
            model_path.display()
        )));
    }
    let text = read_text(source)?;
    let p = model.predict_probability(&extract_text(&text, &lex, &cfg).to_vec())?;
    let s = score_from_probability(p);
    if as_json {
        println!("{}", json!({ "kind": model.kind, "desirability_score": s, "probability": p }));
    } else {
        println!("{s}");
    }
    Ok(())
}

fn bestof(log: &Path, corpus: &Path, period: &str, out: Option<&Path>, flairs: &[String]) -> CmdResult {
    let (period, start) = parse_period(period)?;
    let corpus = Corpus::load_dir(corpus)?;
    let log = ActionLog::open(log)?;
    let config = ActionConfig {
        period,
        flairs: if flairs.is_empty() {
            DEFAULT_FLAIRS.iter().map(|s| s.to_string()).collect()
        } else {
            flairs.to_vec()
        },
        ..ActionConfig::default()
    };
    let state = replay_log(&corpus, &config, log.records())?;
    let thread = state.thread_at(start);
    let md = render_bestof(&thread);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            let path = dir.join(thread.file_name());
            std::fs::write(&path, &md).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
        None => print!("{md}"),
    }
    Ok(())
}

fn run_serve(config: Option<&Path>) -> CmdResult {
    let path = ServiceConfig::resolve_path(config)
        .ok_or_else(|| Failure::Usage("give --config or set POSIQUEUE_CONFIG".into()))?;
    let cfg = ServiceConfig::load(&path).map_err(|e| Failure::Usage(e.to_string()))?;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime
        .block_on(serve(cfg, shutdown_signal(), |addr| {
            println!("posiqueue listening on http://{addr}");
        }))
        .map_err(|e| match e {
            posiqueue_service::ServeError::Config(c) => Failure::Usage(c.to_string()),
            posiqueue_service::ServeError::Engine(err) => Failure::from(err),
            other => Failure::Runtime(other.to_string()),
        })?;
    println!("posiqueue stopped");
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Ingest {
            contributions,
            authors,
            out,
        } => ingest(&contributions, &authors, &out),
        Command::Synth {
            config,
            seed,
            n_posts,
            signal_strength,
            out,
        } => synth(config.as_deref(), seed, n_posts, signal_strength, &out),
        Command::Features {
            corpus,
            lexicons,
            embedding_dim,
            out,
        } => features(&corpus, lexicons.as_deref(), embedding_dim, &out),
        Command::Train {
            corpus,
            features,
            kind,
            out,
            max_depth,
            rounds,
            lr,
            min_leaf,
            split_ratio,
            seed,
        } => train(
            &corpus,
            &features,
            kind,
            &out,
            TrainConfig {
                max_depth,
                rounds,
                learning_rate: lr,
                min_leaf,
                split_ratio,
                seed,
                ..TrainConfig::default()
            },
        ),
        Command::Eval {
            model,
            corpus,
            features,
            report,
            json,
        } => eval(&model, &corpus, &features, report.as_deref(), json),
        Command::Score {
            model,
            text,
            lexicons,
            json,
        } => score(&model, &text, lexicons.as_deref(), json),
        Command::Bestof {
            log,
            corpus,
            period,
            out,
            flairs,
        } => bestof(&log, &corpus, &period, out.as_deref(), &flairs),
        Command::Serve { config } => run_serve(config.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
