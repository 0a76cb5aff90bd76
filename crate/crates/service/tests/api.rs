use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use posiqueue::engine::{FixedClock, SharedClock};
use posiqueue::model::{build_labels, train_gbdt, TrainConfig};
use posiqueue::queue::{quantile_linear, ceil_to_step};
use posiqueue::textfeat::{extract_all, FeatureConfig, LexiconSet};
use posiqueue::{generate_synthetic_corpus, Kind, SyntheticConfig};
use posiqueue_service::{app_state, router, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

// Wednesday 2024-01-31 12:00 UTC
const NOW: i64 = 1_706_702_400;

fn write_fixture(dir: &Path) -> ServiceConfig {
    let corpus = generate_synthetic_corpus(&SyntheticConfig {
        n_posts: 105,
        n_authors: 200,
        signal_strength: 1.0,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let feats = extract_all(&corpus, &LexiconSet::builtin(), &FeatureConfig::default());
    let tc = TrainConfig {
        rounds: 10,
        min_leaf: 3,
        ..Default::default()
    };
    let cfg = ServiceConfig::for_dir(dir);
    corpus.write_dir(&cfg.corpus_dir).unwrap();
    for (kind, path) in [(Kind::Post, &cfg.post_model), (Kind::Comment, &cfg.comment_model)] {
        let set = build_labels(&corpus, kind, &feats).unwrap();
        train_gbdt(&set, &tc).unwrap().save(path).unwrap();
    }
    cfg
}

fn app_with(cfg: &ServiceConfig, now: i64) -> Router {
    let clock: SharedClock = Arc::new(FixedClock(now));
    router(app_state(cfg, clock).unwrap(), &cfg.cors_origins)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, "GET", uri, None).await
}

fn assert_error(v: &Value, code: &str) {
    assert_eq!(v["error"], code, "{v}");
    assert!(v["detail"].as_str().is_some_and(|d| !d.is_empty()), "{v}");
}

async fn first_post_with_comments(app: &Router) -> (String, usize) {
    let (_, page) = get(app, "/api/queue?page_size=100").await;
    for item in page["items"].as_array().unwrap() {
        let id = item["post"]["id"].as_str().unwrap().to_string();
        let (_, detail) = get(app, &format!("/api/posts/{id}")).await;
        let n = detail["comments"].as_array().unwrap().len();
        if n >= 3 {
            return (id, n);
        }
    }
    panic!("no post with comments");
}

#[tokio::test]
async fn queue_defaults_filters_and_pagination() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);

    let (s, page) = get(&app, "/api/queue").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(page["total"], 105);
    assert_eq!(page["page_size"], 25);
    assert_eq!(page["sort"], "newest");
    let items = page["items"].as_array().unwrap();
    assert_eq!(items.len(), 25);
    let times: Vec<i64> = items.iter().map(|i| i["post"]["created_utc"].as_i64().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] >= w[1]));

    let (s, f) = get(&app, "/api/queue?sort=most_desirable&min_desirability=70&min_author_karma=17200").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(f["filters"]["min_desirability"], 70);
    let items = f["items"].as_array().unwrap();
    for i in items {
        assert!(i["desirability_score"].as_u64().unwrap() >= 70);
        assert!(i["author"]["karma"].as_u64().unwrap() >= 17_200);
    }
    let scores: Vec<u64> = items.iter().map(|i| i["desirability_score"].as_u64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let mut seen = Vec::new();
    for p in 1..=5 {
        let (s, page) = get(&app, &format!("/api/queue?sort=highest_karma&page={p}&page_size=25")).await;
        assert_eq!(s, StatusCode::OK);
        seen.extend(page["items"].as_array().unwrap().iter().map(|i| i["post"]["id"].clone()));
    }
    assert_eq!(seen.len(), 105);
    let (_, all) = get(&app, "/api/queue?sort=highest_karma&page_size=100").await;
    let (_, rest) = get(&app, "/api/queue?sort=highest_karma&page_size=100&page=2").await;
    let full: Vec<Value> = all["items"].as_array().unwrap().iter().chain(rest["items"].as_array().unwrap()).map(|i| i["post"]["id"].clone()).collect();
    assert_eq!(seen, full);

    let (s, v) = get(&app, "/api/queue?page=6").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&v, "page_out_of_range");
    for bad in ["min_desirability=101", "sort=hottest", "page_size=101", "min_author_karma=-1", "nonsense=1"] {
        let (s, v) = get(&app, &format!("/api/queue?{bad}")).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{bad}");
        assert!(v["error"].is_string());
    }
}

#[tokio::test]
async fn repeated_gets_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let a = get(&app, "/api/queue?sort=most_newcomer_commenters").await;
    let b = get(&app, "/api/queue?sort=most_newcomer_commenters").await;
    assert_eq!(a.1.to_string(), b.1.to_string());
}

#[tokio::test]
async fn post_detail_and_hovers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (post, n) = first_post_with_comments(&app).await;

    let (s, d) = get(&app, &format!("/api/posts/{post}")).await;
    assert_eq!(s, StatusCode::OK);
    let comment = d["comments"][0]["comment"]["id"].as_str().unwrap().to_string();
    for c in d["comments"].as_array().unwrap() {
        assert!(c["cue"].is_string());
        assert!(c["desirability_score"].as_u64().unwrap() <= 100);
    }

    let (s, h) = get(&app, &format!("/api/posts/{post}/hover")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h["desirability_score"], d["item"]["desirability_score"]);
    assert_eq!(h["category"], d["item"]["cue"]);
    let total: u64 = h["desirability_histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, n as u64);
    assert_eq!(h["score_histogram"]["bin_edges"].as_array().unwrap().len(), 11);

    let (s, ch) = get(&app, &format!("/api/comments/{comment}/hover")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ch["desirability_score"], d["comments"][0]["desirability_score"]);
    assert!(ch.get("desirability_histogram").is_none());

    let (s, v) = get(&app, &format!("/api/posts/{comment}/hover")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert!(v["detail"].as_str().unwrap().contains("/api/comments/"));
    let (s, v) = get(&app, "/api/posts/t3_nope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&v, "not_found");
    let (s, _) = get(&app, "/api/comments/t1_nope/hover").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn commentless_post_has_zero_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let corpus = posiqueue::Corpus::load_dir(&cfg.corpus_dir).unwrap();
    let id = corpus
        .posts()
        .find(|p| corpus.comment_section(&p.id).unwrap().is_empty())
        .expect("fixture has a commentless post")
        .id
        .clone();
    let app = app_with(&cfg, NOW);
    let (s, h) = get(&app, &format!("/api/posts/{id}/hover")).await;
    assert_eq!(s, StatusCode::OK);
    for k in ["desirability_histogram", "score_histogram"] {
        assert!(h[k]["counts"].as_array().unwrap().iter().all(|c| c == 0));
        assert_eq!(h[k]["value_range"], json!([0.0, 1.0]));
    }
}

#[tokio::test]
async fn filter_meta_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (s, meta) = get(&app, "/api/filters/meta").await;
    assert_eq!(s, StatusCode::OK);
    let (_, a) = get(&app, "/api/queue?page_size=100").await;
    let (_, b) = get(&app, "/api/queue?page_size=100&page=2").await;
    let karmas: Vec<f64> = a["items"]
        .as_array()
        .unwrap()
        .iter()
        .chain(b["items"].as_array().unwrap())
        .map(|i| i["author"]["karma"].as_f64().unwrap())
        .collect();
    let expected = ceil_to_step(quantile_linear(&karmas, 0.8).unwrap(), 1.0);
    for slider in meta["sliders"].as_array().unwrap() {
        let step = slider["step"].as_f64().unwrap();
        match slider["metric"].as_str().unwrap() {
            "desirability" => assert_eq!(slider["max"], 100.0),
            "author_karma" => assert_eq!(slider["max"].as_f64().unwrap(), expected),
            "author_age_days" => assert_eq!(step, 0.1),
            _ => assert_eq!(step, 1.0),
        }
        assert_eq!(slider["min"], 0.0);
    }
}

#[tokio::test]
async fn actions_round_trip_and_map_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (_, page) = get(&app, "/api/queue?page_size=7").await;
    let posts: Vec<String> = page["items"].as_array().unwrap().iter().map(|i| i["post"]["id"].as_str().unwrap().to_string()).collect();

    for p in &posts[..6] {
        let (s, _) = call(&app, "POST", "/api/actions/highlight", Some(json!({ "target_id": p }))).await;
        assert_eq!(s, StatusCode::OK);
    }
    let (s, v) = call(&app, "POST", "/api/actions/highlight", Some(json!({ "target_id": posts[6] }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_error(&v, "capacity");

    let (s, v) = call(&app, "POST", "/api/actions/upvote", Some(json!({ "target_id": posts[0] }))).await;
    assert_eq!(s, StatusCode::OK);
    let score = v["score"].as_i64().unwrap();
    let (s, v) = call(&app, "POST", "/api/actions/upvote", Some(json!({ "target_id": posts[0] }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_error(&v, "already_voted");
    let (_, d) = get(&app, &format!("/api/posts/{}", posts[0])).await;
    assert_eq!(d["item"]["post"]["score"].as_i64().unwrap(), score);

    let (s, v) = call(&app, "POST", "/api/actions/flair", Some(json!({ "target_id": posts[1], "payload": { "flair": "Mod Pick Flair" } }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["flair"], "Mod Pick Flair");
    let (s, v) = call(&app, "POST", "/api/actions/flair", Some(json!({ "target_id": posts[1], "payload": { "flair": "Gold" } }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&v, "invalid_flair");
    let (_, q) = get(&app, "/api/queue?page_size=7").await;
    let flaired = q["items"].as_array().unwrap().iter().find(|i| i["post"]["id"] == posts[1].as_str()).unwrap();
    assert_eq!(flaired["flair"], "Mod Pick Flair");
    assert_eq!(flaired["highlighted"], true);

    let (s, v) = call(&app, "POST", "/api/actions/award", Some(json!({ "target_id": "t3_ghost" }))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&v, "not_found");
    let (s, v) = call(&app, "POST", "/api/actions/promote", Some(json!({ "target_id": posts[0] }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_error(&v, "unknown_token");
    let (s, v) = call(&app, "POST", "/api/actions/award", Some(json!({ "target": posts[0] }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&v, "invalid_payload");
    let (s, v) = call(&app, "POST", "/api/actions/unhighlight", Some(json!({ "target_id": posts[6] }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_error(&v, "not_highlighted");
}

#[tokio::test]
async fn explain_creates_reply_with_templated_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (post, n) = first_post_with_comments(&app).await;
    let sentence = "The moderators like this post because it is creative, helpful, and supportive.";

    let (s, v) = call(&app, "POST", "/api/explanations/preview", Some(json!({ "target_id": post, "reasons": ["creative", "helpful"], "custom": ["supportive"] }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["text"], sentence);

    let (s, v) = call(&app, "POST", "/api/actions/explain", Some(json!({ "target_id": post, "payload": { "reasons": ["creative", "helpful"], "custom": ["supportive"] } }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["reply"]["body"], sentence);
    assert_eq!(v["reply"]["parent_id"], post.as_str());
    let (_, d) = get(&app, &format!("/api/posts/{post}")).await;
    let comments = d["comments"].as_array().unwrap();
    assert_eq!(comments.len(), n + 1);
    assert!(comments.iter().any(|c| c["comment"]["body"] == sentence));

    let (s, v) = call(&app, "POST", "/api/actions/explain", Some(json!({ "target_id": post }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&v, "empty_reasons");

    let (_, r) = get(&app, "/api/config/reasons").await;
    let labels: Vec<&str> = r["reasons"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels.len(), 12);
    assert_eq!(labels[11], "supportive");
}

#[tokio::test]
async fn reasons_persist_across_restart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (s, v) = call(&app, "PUT", "/api/config/reasons", Some(json!({ "label": "kind" }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["reasons"].as_array().unwrap().len(), 12);
    let (s, v) = call(&app, "PUT", "/api/config/reasons", Some(json!({ "label": "Creative" }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_error(&v, "duplicate");

    let restarted = app_with(&cfg, NOW);
    let (_, r) = get(&restarted, "/api/config/reasons").await;
    let list = r["reasons"].as_array().unwrap();
    assert_eq!(list.len(), 12);
    assert_eq!(list[11]["label"], "kind");
    assert_eq!(list[11]["origin"], "custom");
    assert_eq!(list[0]["origin"], "default");
}

#[tokio::test]
async fn bestof_curation_replay_and_rollover() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (_, page) = get(&app, "/api/queue?page_size=2").await;
    let post = page["items"][0]["post"]["id"].as_str().unwrap().to_string();
    let title = page["items"][0]["post"]["title"].as_str().unwrap().to_string();

    let (_, empty) = get(&app, "/api/bestof/current").await;
    assert!(empty["rendered_markdown"].as_str().unwrap().contains("## Submissions\n\n\u{2014}"));

    for _ in 0..2 {
        let (s, _) = call(&app, "POST", "/api/actions/curate", Some(json!({ "target_id": post }))).await;
        assert_eq!(s, StatusCode::OK);
    }
    let (_, b) = get(&app, "/api/bestof/current").await;
    assert_eq!(b["thread"]["submissions"].as_array().unwrap().len(), 1);
    assert_eq!(b["file_name"], "bestof-2024-01-29.md");
    let md = b["rendered_markdown"].as_str().unwrap();
    assert!(md.starts_with("# Best of the week\n"));
    assert!(md.contains(&format!("/comments/{post}/)")));
    assert!(md.contains(&title.replace('[', "\\[").replace(']', "\\]")));

    let restarted = app_with(&cfg, NOW);
    let (_, again) = get(&restarted, "/api/bestof/current").await;
    assert_eq!(again, b);
    let (_, health) = get(&restarted, "/api/health").await;
    assert_eq!(health["actions"], 2);

    // the following Monday starts a fresh thread
    let next_week = app_with(&cfg, 1_707_091_200);
    let (_, fresh) = get(&next_week, "/api/bestof/current").await;
    assert!(fresh["thread"]["submissions"].as_array().unwrap().is_empty());
    let (s, v) = call(&next_week, "POST", "/api/actions/uncurate", Some(json!({ "target_id": post }))).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["warning"].is_string());
}

#[tokio::test]
async fn bearer_token_guards_api() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = write_fixture(dir.path());
    cfg.auth_token = Some("s3cret".into());
    let app = app_with(&cfg, NOW);
    let (s, v) = get(&app, "/api/queue").await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_error(&v, "unauthorized");
    let (s, _) = get(&app, "/api/health").await;
    assert_eq!(s, StatusCode::OK);
    let req = Request::get("/api/queue").header("authorization", "Bearer s3cret").body(Body::empty()).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::OK);
}

#[tokio::test]
async fn unknown_route_is_json_404() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let app = app_with(&cfg, NOW);
    let (s, v) = get(&app, "/api/nothing").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&v, "not_found");
}
