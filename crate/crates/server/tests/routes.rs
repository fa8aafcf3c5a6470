use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use histwidget_core::demo::explorer::select_type;
use histwidget_core::fixtures::{G0_CANDIDATES_JSON, G0_JSON};
use histwidget_core::protocol::{codes, Envelope, MsgType};
use histwidget_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body.to_string())).await
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

fn g0() -> Value {
    serde_json::from_str(G0_JSON).unwrap()
}

async fn explorer(app: &Router) -> String {
    let (status, body) = post(
        app,
        "/widgets",
        json!({ "widget_type": "explorer", "widget_id": "ex", "graph": g0() }),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["widget_id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn graph_endpoints() {
    let app = router(AppState::new());
    let (status, body) = call(&app, Method::POST, "/graphs/validate", Some(G0_JSON.into())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "nodes": 4, "edges": 3, "node_types": 2 }));

    let (_, schema) = call(&app, Method::POST, "/graphs/schema", Some(G0_JSON.into())).await;
    assert_eq!(schema["type_nodes"], json!({ "Occupation": 2, "Skill": 2 }));
    assert_eq!(
        schema["type_edges"],
        json!([{ "src_type": "Occupation", "rel_type": "requires", "dst_type": "Skill", "count": 3 }])
    );

    let dangling =
        json!({ "nodes": [{"id": "a", "type": "T", "title": "a"}], "edges": [{"src": "a", "dst": "zz", "type": "r"}] });
    let (status, body) = post(&app, "/graphs/validate", dangling).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "format");
    assert!(body["error"]["message"].as_str().unwrap().contains("zz"));
}

#[tokio::test]
async fn widget_lifecycle_over_http() {
    let app = router(AppState::new());
    let id = explorer(&app).await;

    let (status, state) = post(
        &app,
        &format!("/widgets/{id}/actions"),
        serde_json::to_value(select_type("Skill")).unwrap(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["state_id"], 1);
    assert_eq!(
        state["payload"]["node_distribution"],
        json!([["cooking", 2], ["baking", 1]])
    );

    let (status, body) = post(
        &app,
        &format!("/widgets/{id}/actions"),
        serde_json::to_value(select_type("Tool")).unwrap(),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");

    let (status, _) = call(
        &app,
        Method::PUT,
        &format!("/widgets/{id}/overrides/get_node_distribution"),
        Some(json!({ "kind": "sort_by_label" }).to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, current) = get(&app, &format!("/widgets/{id}")).await;
    assert_eq!(
        current["payload"]["node_distribution"],
        json!([["baking", 1], ["cooking", 2]])
    );

    let (status, body) = call(
        &app,
        Method::PUT,
        &format!("/widgets/{id}/overrides/get_node_distribution"),
        Some(json!({ "kind": "fail", "message": "nope" }).to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "udf_error");

    let (_, restored) = post(&app, &format!("/widgets/{id}/restore"), json!({ "state_id": 0 })).await;
    assert_eq!(restored["state_id"], 3);
    let (_, export) = get(&app, &format!("/widgets/{id}/export?state_id=0")).await;
    assert_eq!(export["payload"], restored["payload"]);

    let (_, history) = get(&app, &format!("/widgets/{id}/history?from=1&to=2")).await;
    assert_eq!(history.as_array().unwrap().len(), 2);
    let (_, view) = get(&app, &format!("/widgets/{id}/history/view")).await;
    assert_eq!(view.as_array().unwrap().len(), 4);

    let (status, _) = call(&app, Method::DELETE, &format!("/widgets/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, body) = get(&app, &format!("/widgets/{id}")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "unknown_widget");
}

#[tokio::test]
async fn duplicate_widget_id_conflicts() {
    let app = router(AppState::new());
    explorer(&app).await;
    let (status, _) = post(
        &app,
        "/widgets",
        json!({ "widget_type": "explorer", "widget_id": "ex", "graph": g0() }),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, ids) = get(&app, "/widgets").await;
    assert_eq!(ids, json!(["ex"]));
}

#[tokio::test]
async fn comm_channel_follows_the_protocol() {
    let app = router(AppState::new());
    let id = explorer(&app).await;
    let frame = |seq, t, body| serde_json::to_value(Envelope::new(id.clone(), seq, t, body)).unwrap();

    let (_, replies) = post(
        &app,
        &format!("/widgets/{id}/comm"),
        frame(0, MsgType::Ready, json!({})),
    )
    .await;
    let replies: Vec<Envelope> = serde_json::from_value(replies).unwrap();
    assert_eq!(
        replies.iter().map(|e| e.msg_type).collect::<Vec<_>>(),
        [MsgType::RenderSpec, MsgType::StateUpdate]
    );

    let body = serde_json::to_value(select_type("Skill")).unwrap();
    let (_, replies) = post(
        &app,
        &format!("/widgets/{id}/comm"),
        frame(1, MsgType::ActionDispatch, body.clone()),
    )
    .await;
    assert_eq!(replies[0]["msg_type"], "state_update");
    assert_eq!(replies[1]["msg_type"], "history_update");

    let (_, replies) = post(
        &app,
        &format!("/widgets/{id}/comm"),
        frame(1, MsgType::ActionDispatch, body),
    )
    .await;
    assert_eq!(replies[0]["body"]["code"], codes::SEQ_ORDER);

    let (_, replies) = post(&app, "/widgets/ghost/comm", frame(2, MsgType::Ready, json!({}))).await;
    assert_eq!(replies[0]["body"]["code"], codes::UNKNOWN_WIDGET);

    let (status, _) = call(&app, Method::POST, &format!("/widgets/{id}/comm"), Some("{".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, current) = get(&app, &format!("/widgets/{id}")).await;
    assert_eq!(current["state_id"], 1);
}

#[tokio::test]
async fn alignment_widget_and_decisions() {
    let app = router(AppState::new());
    let candidates: Value = serde_json::from_str(G0_CANDIDATES_JSON).unwrap();
    let (status, created) = post(
        &app,
        "/widgets",
        json!({ "widget_type": "alignment", "graph": g0(), "candidates": candidates }),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["widget_id"].as_str().unwrap();
    assert!(id.starts_with("alignment-"));

    let (status, state) = post(
        &app,
        &format!("/widgets/{id}/decisions"),
        json!({ "candidate_id": "c1", "decision": "insert" }),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["payload"]["decisions"]["c1"], "insert");
    let (status, body) = post(
        &app,
        &format!("/widgets/{id}/decisions"),
        json!({ "candidate_id": "c1", "decision": "perhaps" }),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "contract");

    let (status, _) = post(&app, "/widgets", json!({ "widget_type": "alignment", "graph": g0() })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn replay_endpoint() {
    let app = router(AppState::new());
    let log = format!(
        "{}\n{{broken\n{}\n",
        serde_json::to_string(&select_type("Skill")).unwrap(),
        json!({ "interaction_type": "restore", "component_id": "history", "params": { "restored_from": 0 } })
    );
    let (status, out) = post(
        &app,
        "/replay",
        json!({ "widget_type": "explorer", "graph": G0_JSON, "log": log }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{out}");
    assert_eq!(out["report"]["actions_applied"], 2);
    assert_eq!(out["report"]["errors"][0]["line_no"], 2);
    assert_eq!(out["report"]["final_state_id"], 2);
    assert_eq!(out["export"]["state_id"], 2);
}
