use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use techrates::artifacts::Manifest;
use techrates::corpus::{generate_synthetic_corpus, write_corpus, SynthConfig};
use techrates::{pipeline, PipelineConfig, SearchEngine};
use tower::ServiceExt;

/// One pipeline run shared by every test in this file.
fn artifacts() -> &'static PathBuf {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("server-api");
        let _ = std::fs::remove_dir_all(&root);
        let store = generate_synthetic_corpus(&SynthConfig { patents: 1500, ..Default::default() }, 2).unwrap();
        write_corpus(&store, &root.join("input")).unwrap();
        let config = PipelineConfig {
            input_dir: root.join("input"),
            output_dir: root.join("out"),
            min_size: 20,
            replicates: 6,
            ..PipelineConfig::default()
        };
        pipeline::run(&config).unwrap();
        config.output_dir
    })
}

fn app() -> Router {
    let engine = SearchEngine::load(artifacts(), 0).unwrap();
    techrates_server::router(Arc::new(engine), None)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let status = resp.status();
    assert_eq!(resp.headers()["content-type"], "application/json", "{uri}");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap()
}

#[tokio::test]
async fn search_returns_ranked_domains_with_rates() {
    let app = app();
    let (s, v) = get(&app, "/search?q=solar%20cell").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["semantics"], "and");
    assert_eq!(v["tokens"], serde_json::json!(["cell", "solar"]));
    let results = v["results"].as_array().unwrap();
    assert!(!results.is_empty() && results.len() <= 5);
    let mut last = f64::INFINITY;
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r["rank"], i + 1);
        let mpr = r["mpr"].as_f64().unwrap();
        assert!(mpr > 0.0 && mpr <= 1.0 && mpr <= last);
        last = mpr;
        assert!(r["rate"]["k"].as_f64().unwrap() > 0.0);
        assert!(r["sample"]["top_central"].is_array() && r["sample"]["random"].is_array());
    }

    let (_, one) = get(&app, "/search?q=solar+cell&n=1").await;
    assert_eq!(one["results"].as_array().unwrap().len(), 1);
    assert_eq!(one["results"][0], results[0]);

    let (s, none) = get(&app, "/search?q=zzzz").await;
    assert_eq!(s, StatusCode::OK);
    assert!(none["results"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn malformed_requests_are_400() {
    let app = app();
    for (uri, code) in [
        ("/search?q=", "empty_query"),
        ("/search?q=%20--%20", "empty_query"),
        ("/search", "bad_parameter"),
        ("/search?q=solar&n=0", "bad_parameter"),
        ("/search?q=solar&n=-1", "bad_parameter"),
        ("/search?q=solar&n=abc", "bad_parameter"),
        ("/domains?sort=name", "bad_parameter"),
        ("/domains?limit=0", "bad_parameter"),
    ] {
        let (s, v) = get(&app, uri).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{uri}");
        assert_eq!(error_code(&v), code, "{uri}");
        assert!(!v["error"]["message"].as_str().unwrap().is_empty());
    }
    let (_, list) = get(&app, "/domains?limit=1").await;
    let code = list["domains"][0]["domain_code"].as_str().unwrap().to_string();
    let (s, v) = get(&app, &format!("/domains/{code}/patents?kind=best")).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "bad_parameter"));
    let (s, v) = get(&app, &format!("/domains/{code}/patents?kind=random&seed=x")).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "bad_parameter"));
}

#[tokio::test]
async fn unknown_domains_and_routes_are_404() {
    let app = app();
    for uri in ["/domains/123F02B", "/domains/123F02B/patents"] {
        let (s, v) = get(&app, uri).await;
        assert_eq!((s, error_code(&v)), (StatusCode::NOT_FOUND, "unknown_domain"), "{uri}");
    }
    let (s, v) = get(&app, "/nope").await;
    assert_eq!((s, error_code(&v)), (StatusCode::NOT_FOUND, "not_found"));
}

#[tokio::test]
async fn domain_listing_sorts_and_limits() {
    let app = app();
    let (s, by_k) = get(&app, "/domains").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(by_k["sort"], "k");
    let rows = by_k["domains"].as_array().unwrap();
    assert_eq!(rows.len() as u64, by_k["total"].as_u64().unwrap());
    let ks: Vec<f64> = rows.iter().filter_map(|d| d["rate"]["k"].as_f64()).collect();
    assert!(ks.windows(2).all(|w| w[0] >= w[1]));

    let (_, by_size) = get(&app, "/domains?sort=size&limit=3").await;
    let sizes: Vec<u64> = by_size["domains"].as_array().unwrap().iter().map(|d| d["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes.len(), rows.len().min(3));
    assert!(sizes.windows(2).all(|w| w[0] >= w[1]));

    let code = rows[0]["domain_code"].as_str().unwrap();
    let (s, one) = get(&app, &format!("/domains/{code}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(one["domain"]["domain_code"], code);
}

#[tokio::test]
async fn patent_samples_are_reproducible() {
    let app = app();
    let (_, list) = get(&app, "/domains?sort=size&limit=1").await;
    let code = list["domains"][0]["domain_code"].as_str().unwrap().to_string();
    let (s, a) = get(&app, &format!("/domains/{code}/patents?kind=random&seed=5")).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = get(&app, &format!("/domains/{code}/patents?kind=random&seed=5")).await;
    let (_, c) = get(&app, &format!("/domains/{code}/patents?kind=random&seed=6")).await;
    assert_eq!(a, b);
    assert_eq!(a["seed"], 5);
    assert_ne!(a["patents"], c["patents"]);

    let (_, top) = get(&app, &format!("/domains/{code}/patents")).await;
    assert_eq!(top["kind"], "top");
    let pct: Vec<f64> = top["patents"].as_array().unwrap().iter().filter_map(|p| p["percentile"].as_f64()).collect();
    assert!(!pct.is_empty());
    assert!(pct.windows(2).all(|w| w[0] >= w[1]));
    let (_, again) = get(&app, &format!("/domains/{code}/patents?kind=top&seed=99")).await;
    assert_eq!(top["patents"], again["patents"]);
}

#[tokio::test]
async fn health_reports_manifest_and_queries_leave_artifacts_untouched() {
    let dir = artifacts();
    let before = Manifest::read(dir).unwrap();
    let app = app();
    let (s, h) = get(&app, "/healthz").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h["status"], "ok");
    assert_eq!(h["config_hash"], before.config_hash);
    assert!(h["domains"].as_u64().unwrap() > 0);

    for q in ["solar", "engine", "cell%20battery", "optical", "", "memory", "zzz"] {
        get(&app, &format!("/search?q={q}")).await;
        get(&app, "/domains?sort=size").await;
    }
    before.verify(dir).unwrap();
    assert_eq!(Manifest::read(dir).unwrap(), before);
}
