use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use memdialog_core::corpus::{generate_corpus, write_corpus, Corpus, CorpusConfig};
use memdialog_core::dialogsim::{Speaker, TemplateLibrary};
use memdialog_core::memgraph::MemoryId;
use memdialog_core::Catalog;
use memdialog_service::*;
use serde_json::{json, Value};
use tower::ServiceExt;

fn corpus() -> Corpus {
    let cfg = CorpusConfig { n_graphs: 2, dialogs_per_graph: 5, seed: 11, ..Default::default() };
    generate_corpus(&Catalog::sample(), &TemplateLibrary::default(), &cfg).unwrap()
}

fn app(store: &Path, corpus: Corpus, media: Option<&Path>) -> Router {
    let (s, stored) = Store::open(store).unwrap();
    let state = AppState::new(corpus, s, stored, media.map(Path::to_path_buf)).unwrap();
    router(Arc::new(state), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>, Option<String>) {
    let mut req = Request::builder().method(method).uri(uri).header(ANNOTATOR_HEADER, "ann-1");
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let ct = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes, ct)
}

async fn json_of(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b, _) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap())
}

#[tokio::test]
async fn listing_filters_and_paginates() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), corpus(), None);
    let (s, list) = json_of(&app, Method::GET, "/tasks?status=pending", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(list["total"], 10);
    assert_eq!(list["tasks"].as_array().unwrap().len(), 10);
    let (_, list) = json_of(&app, Method::GET, "/tasks?status=complete", None).await;
    assert_eq!(list["tasks"], json!([]));
    let (s, body) = json_of(&app, Method::GET, "/tasks?status=bogus", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("bogus"));
    let (_, page) = json_of(&app, Method::GET, "/tasks?offset=8&limit=5", None).await;
    assert_eq!(page["total"], 10);
    assert_eq!(page["tasks"].as_array().unwrap().len(), 2);
    let (s, _) = json_of(&app, Method::GET, "/tasks?limit=x", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn visible_media_accumulates() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus();
    let app = app(dir.path(), c.clone(), None);
    for d in &c.dialogs {
        let (s, detail) = json_of(&app, Method::GET, &format!("/tasks/{}", d.dialog_id), None).await;
        assert_eq!(s, StatusCode::OK);
        let detail: TaskDetail = serde_json::from_value(detail).unwrap();
        let mut expected: BTreeSet<MemoryId> = BTreeSet::new();
        let mut prev: Vec<MemoryId> = Vec::new();
        for (turn, view) in d.turns.iter().zip(&detail.turns) {
            if turn.speaker == Speaker::Assistant {
                expected.extend(&turn.shown_memory_ids);
            }
            let ids: Vec<MemoryId> = view.visible.iter().map(|v| v.memory_id).collect();
            assert_eq!(ids.iter().copied().collect::<BTreeSet<_>>(), expected);
            assert_eq!(&ids[..prev.len()], &prev[..], "order of earlier photos is kept");
            for v in &view.visible {
                assert_eq!(v.url, format!("/media/{}", v.media_id));
                assert!(!v.activity.is_empty() && !v.place.is_empty() && v.date.len() == 10);
            }
            prev = ids;
        }
    }
    let (s, _) = json_of(&app, Method::GET, "/tasks/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn paraphrase_lifecycle_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus();
    let d = &c.dialogs[0];
    let n = d.turns.len();
    let uri = format!("/tasks/{}/paraphrases", d.dialog_id);
    {
        let app = app(dir.path(), c.clone(), None);
        let (s, sum) = json_of(&app, Method::POST, &uri, Some(json!({"0": "first turn"}))).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(sum["status"], "in_progress");
        assert_eq!(sum["annotator_id"], "ann-1");
        let (s, _) = json_of(&app, Method::POST, &uri, Some(json!({"99": "x"}))).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
        let (s, _) = json_of(&app, Method::POST, &uri, Some(json!({"1": "   "}))).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
        let (s, _) = json_of(&app, Method::POST, &uri, Some(json!({"one": "x"}))).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
        let (s, _, _) = call(&app, Method::POST, "/tasks/nope/paraphrases", Some(json!({"0": "x"}))).await;
        assert_eq!(s, StatusCode::NOT_FOUND);
        let all: BTreeMap<String, String> = (0..n).map(|i| (i.to_string(), format!("turn {i} reworded"))).collect();
        let (_, sum) = json_of(&app, Method::POST, &uri, Some(json!(all))).await;
        assert_eq!(sum["status"], "complete");
        assert_eq!(sum["paraphrased"], n);
    }
    let app = app(dir.path(), c.clone(), None);
    let (_, detail) = json_of(&app, Method::GET, &format!("/tasks/{}", d.dialog_id), None).await;
    assert_eq!(detail["status"], "complete");
    assert_eq!(detail["turns"][0]["paraphrase"], "turn 0 reworded");
    let (_, list) = json_of(&app, Method::GET, "/tasks?status=complete", None).await;
    assert_eq!(list["total"], 1);
}

#[tokio::test]
async fn report_excludes_from_pending() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus();
    let id = c.dialogs[3].dialog_id.clone();
    let app = app(dir.path(), c, None);
    let uri = format!("/tasks/{id}/report");
    let (s, _) = json_of(&app, Method::POST, &uri, Some(json!({"reason": ""}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = json_of(&app, Method::POST, &uri, Some(json!({}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, sum) = json_of(&app, Method::POST, &uri, Some(json!({"reason": "template reads wrong"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(sum["status"], "reported");
    let (_, list) = json_of(&app, Method::GET, "/tasks?status=pending", None).await;
    assert_eq!(list["total"], 9);
    assert!(list["tasks"].as_array().unwrap().iter().all(|t| t["dialog_id"] != id.as_str()));
    let (_, detail) = json_of(&app, Method::GET, &format!("/tasks/{id}"), None).await;
    assert_eq!(detail["report_reason"], "template reads wrong");
    let (s, _) = json_of(&app, Method::POST, &format!("/tasks/{id}/paraphrases"), Some(json!({"0": "x"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn media_assets_and_placeholders() {
    let dir = tempfile::tempdir().unwrap();
    let media = tempfile::tempdir().unwrap();
    let mut c = corpus();
    let first = c.catalog.media[0].media_id.clone();
    let second = c.catalog.media[1].media_id.clone();
    c.catalog.media[0].asset_ref = Some("img/first.png".into());
    c.catalog.media[1].asset_ref = Some("../outside.png".into());
    std::fs::create_dir_all(media.path().join("img")).unwrap();
    std::fs::write(media.path().join("img/first.png"), b"\x89PNG fake").unwrap();
    let label = c.catalog.media[1].activity_label.clone();
    let app = app(dir.path(), c, Some(media.path()));

    let (s, bytes, ct) = call(&app, Method::GET, &format!("/media/{first}"), None).await;
    assert_eq!((s, ct.as_deref()), (StatusCode::OK, Some("image/png")));
    assert_eq!(bytes, b"\x89PNG fake");
    let (s, bytes, ct) = call(&app, Method::GET, &format!("/media/{second}"), None).await;
    assert_eq!((s, ct.as_deref()), (StatusCode::OK, Some("image/svg+xml")));
    assert!(String::from_utf8(bytes).unwrap().contains(&label));
    let (s, bytes, ct) = call(&app, Method::HEAD, &format!("/media/{first}"), None).await;
    assert_eq!((s, ct.as_deref()), (StatusCode::OK, Some("image/png")));
    assert!(bytes.is_empty());
    let (s, _, ct) = call(&app, Method::GET, "/media/unknown-id", None).await;
    assert_eq!((s, ct.as_deref()), (StatusCode::OK, Some("image/svg+xml")));
}

#[tokio::test]
async fn concurrent_writes_keep_every_turn() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus();
    let d = c.dialogs[1].clone();
    let app = app(dir.path(), c.clone(), None);
    let uri = format!("/tasks/{}/paraphrases", d.dialog_id);
    let handles: Vec<_> = (0..d.turns.len())
        .map(|i| {
            let app = app.clone();
            let uri = uri.clone();
            tokio::spawn(async move { call(&app, Method::POST, &uri, Some(json!({ i.to_string(): format!("t{i}") }))).await })
        })
        .collect();
    for h in handles {
        assert_eq!(h.await.unwrap().0, StatusCode::OK);
    }
    let tasks = load_tasks(dir.path()).unwrap();
    assert_eq!(tasks[&d.dialog_id].status, TaskStatus::Complete);
    assert_eq!(tasks[&d.dialog_id].paraphrases.len(), d.turns.len());
}

#[test]
fn export_merges_and_is_idempotent() {
    let c = corpus();
    let mut tasks = BTreeMap::new();
    let d0 = &c.dialogs[0];
    let now = chrono::Utc::now();
    let texts: BTreeMap<usize, String> = (0..d0.turns.len()).map(|i| (i, format!("p{i}"))).collect();
    tasks.insert(d0.dialog_id.clone(), TaskState::pending(&d0.dialog_id).with_paraphrases(&texts, d0.turns.len(), None, now).unwrap());
    let d1 = &c.dialogs[1];
    let one: BTreeMap<usize, String> = [(0, "only".to_string())].into();
    tasks.insert(d1.dialog_id.clone(), TaskState::pending(&d1.dialog_id).with_paraphrases(&one, d1.turns.len(), None, now).unwrap());
    let d2 = &c.dialogs[2];
    tasks.insert(d2.dialog_id.clone(), TaskState::pending(&d2.dialog_id).with_report("bad", None, now).unwrap());

    let out = export_annotated(&c, &tasks).unwrap();
    assert_eq!(out.dialogs.len(), 9);
    assert_eq!(out.manifest.dialog_count, 9);
    assert_eq!(out.manifest.shards[0].dialogs, 9);
    assert!(out.dialogs.iter().all(|d| d.dialog_id != d2.dialog_id));
    assert!(out.dialogs[0].turns.iter().enumerate().all(|(i, t)| t.paraphrase.as_deref() == Some(format!("p{i}").as_str())));
    assert_eq!(out.dialogs[1].turns[0].paraphrase.as_deref(), Some("only"));
    assert!(out.dialogs[1].turns[1..].iter().all(|t| t.paraphrase.is_none()));
    assert_eq!(out.dialogs[1].turns[1].utterance(), out.dialogs[1].turns[1].template_utterance);
    assert_eq!(export_annotated(&out, &tasks).unwrap_err(), ExportError::UnknownDialog(d2.dialog_id.clone()));
    let mut kept = tasks.clone();
    kept.remove(&d2.dialog_id);
    assert_eq!(export_annotated(&out, &kept).unwrap(), out);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_corpus(&export_annotated(&c, &tasks).unwrap(), a.path()).unwrap();
    write_corpus(&export_annotated(&c, &tasks).unwrap(), b.path()).unwrap();
    for f in ["manifest.json", "dialogs/shard_00000.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }

    let mut bad = BTreeMap::new();
    let mut t = TaskState::pending(&d0.dialog_id);
    t.paraphrases.insert(500, "x".into());
    bad.insert(d0.dialog_id.clone(), t);
    assert!(matches!(export_annotated(&c, &bad), Err(ExportError::TurnMismatch { index: 500, .. })));
}

#[tokio::test]
async fn startup_rejects_foreign_store() {
    let dir = tempfile::tempdir().unwrap();
    {
        let (s, _) = Store::open(dir.path()).unwrap();
        s.append(&TaskState::pending("someone-else")).unwrap();
    }
    let corpus_dir = tempfile::tempdir().unwrap();
    write_corpus(&corpus(), corpus_dir.path()).unwrap();
    let cfg = ServiceConfig {
        corpus_dir: corpus_dir.path().to_path_buf(),
        store_dir: dir.path().to_path_buf(),
        addr: "127.0.0.1:0".parse().unwrap(),
        media_dir: None,
        ui_dir: None,
    };
    assert!(matches!(load_state(&cfg), Err(ServiceError::Mismatch(_))));
}
